"""核矩阵、核块、实值标注与相关度矩阵的持久化

数值以 64 位 FMAT 保存，读回所需的元数据（kernel_id、列标识、词表）写在旁注中。
"""
from pathlib import Path
from typing import Any

from loguru import logger

from ..exceptions import AppError
from ..model import AnnotationSet, GramMatrix, KernelBlock, RelevanceScores, Vocabulary
from .fmat_codec import read_fmat, write_fmat
from .sidecar import payload_of, write_sidecar


def save_gram(gram: GramMatrix, path: Path, inputs: dict[str, str] | None = None,
              config: dict[str, Any] | None = None) -> None:
    write_fmat(path, gram.values, gram.row_ids, "f64")
    write_sidecar(path, "gram", {"kernel_id": gram.kernel_id}, inputs, config)


def load_gram(path: Path) -> GramMatrix:
    """读取核矩阵；旁注缺失时 kernel_id 记为 unknown"""
    values, ids = read_fmat(path)
    payload = payload_of(path, ("gram", "kernel_block"), required=False)
    kernel_id = payload.get("kernel_id")
    if kernel_id is None:
        logger.opt(colors=True).warning("<y>Storage</y>:{} 没有旁注, kernel_id 记为 unknown", path)
        kernel_id = "unknown"
    col_ids = payload.get("col_ids")
    if col_ids is not None and tuple(col_ids) != ids:
        AppError.DimensionMismatch.raise_(f"{path} 是矩形核块, 不能作为核矩阵读取")
    return GramMatrix(values=values, kernel_id=kernel_id, row_ids=ids)


def save_kernel_block(block: KernelBlock, path: Path, inputs: dict[str, str] | None = None,
                      config: dict[str, Any] | None = None) -> None:
    write_fmat(path, block.values, block.row_ids, "f64")
    write_sidecar(path, "kernel_block", {"kernel_id": block.kernel_id, "col_ids": list(block.col_ids)},
                  inputs, config)


def load_kernel_block(path: Path) -> KernelBlock:
    """读取矩形核块；核矩阵文件同样可以作为（方形）核块读取"""
    values, ids = read_fmat(path)
    payload = payload_of(path, ("gram", "kernel_block"))
    if "kernel_id" not in payload:
        AppError.MatrixFormatError.raise_(f"{path} 的旁注缺少 kernel_id")
    col_ids = tuple(payload.get("col_ids") or ids)
    return KernelBlock(values=values, kernel_id=payload["kernel_id"], row_ids=ids, col_ids=col_ids)


def save_real_annotations(annotations: AnnotationSet, path: Path, inputs: dict[str, str] | None = None,
                          config: dict[str, Any] | None = None) -> None:
    """保存实值标注（如去噪后的标签向量）为 N×D 矩阵"""
    write_fmat(path, annotations.dense(), annotations.row_ids, "f64")
    write_sidecar(path, "annotations", {"vocabulary": list(annotations.vocabulary.labels)}, inputs, config)


def _vocabulary_from(path: Path, payload: dict[str, Any], vocab: Vocabulary | None) -> Vocabulary:
    stored = payload.get("vocabulary")
    if stored is None and vocab is None:
        AppError.MissingParameter.raise_(f"{path} 的旁注没有词表, 请显式提供词表")
    if stored is not None and vocab is not None and tuple(stored) != vocab.labels:
        AppError.VocabularyMismatch.raise_(f"{path} 的词表与提供的词表不一致")
    return vocab if vocab is not None else Vocabulary(labels=tuple(stored))


def load_real_annotations(path: Path, vocab: Vocabulary | None = None) -> AnnotationSet:
    values, ids = read_fmat(path)
    payload = payload_of(path, ("annotations", "scores"), required=vocab is None)
    return AnnotationSet.from_dense(_vocabulary_from(path, payload, vocab), values, ids)


def save_scores(scores: RelevanceScores, path: Path, inputs: dict[str, str] | None = None,
                config: dict[str, Any] | None = None) -> None:
    write_fmat(path, scores.values, scores.row_ids, "f64")
    write_sidecar(path, "scores", {"vocabulary": list(scores.vocabulary.labels)}, inputs, config)


def load_scores(path: Path, vocab: Vocabulary | None = None) -> RelevanceScores:
    values, ids = read_fmat(path)
    payload = payload_of(path, "scores", required=vocab is None)
    return RelevanceScores(row_ids=ids, vocabulary=_vocabulary_from(path, payload, vocab), values=values)
