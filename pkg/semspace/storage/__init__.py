"""存储模块
负责所有产物的读写：FMAT/CSV 矩阵、文本标注与词表、词向量、相似度矩阵、
核矩阵与核块、投影器、相关度矩阵，以及旁注与核缓存。
"""
from .fmat_codec import (
    encode_fmat, decode_fmat, read_fmat, write_fmat, read_csv_matrix, write_csv_matrix,
    load_feature_matrix, save_feature_matrix,
)
from .sidecar import sidecar_path, write_sidecar, read_sidecar
from .text_loader import (
    load_vocabulary, save_vocabulary, read_annotations, load_annotations, write_annotations,
    load_word_vectors, load_similarity, write_topn_tsv, read_topn_tsv,
)
from .artifact_store import (
    save_gram, load_gram, save_kernel_block, load_kernel_block,
    save_real_annotations, load_real_annotations, save_scores, load_scores,
)
from .projector_store import save_projector, load_projector
from .kernel_cache import KernelCache

__all__ = [
    "encode_fmat", "decode_fmat", "read_fmat", "write_fmat", "read_csv_matrix", "write_csv_matrix",
    "load_feature_matrix", "save_feature_matrix",
    "sidecar_path", "write_sidecar", "read_sidecar",
    "load_vocabulary", "save_vocabulary", "read_annotations", "load_annotations", "write_annotations",
    "load_word_vectors", "load_similarity", "write_topn_tsv", "read_topn_tsv",
    "save_gram", "load_gram", "save_kernel_block", "load_kernel_block",
    "save_real_annotations", "load_real_annotations", "save_scores", "load_scores",
    "save_projector", "load_projector",
    "KernelCache",
]
