"""semspace：KCCA 语义空间与标签迁移图像标注

视觉特征与（可能带噪的）标签通过正则化核典型相关分析投影到共同的语义空间，
在该空间中用近邻类方法或线性分类器为新图像预测标签。
"""
from .exceptions import AppError
from .mapping import EmbeddingSpace, KernelKind, NeighborMetric, TransferMethod
from .model import (
    AnnotationSet, FeatureMatrix, GramMatrix, KernelBlock, MetricReport, PipelineConfig, RelevanceScores,
    SemanticProjector, SynthSpec, Vocabulary,
)
from .core import (
    PipelineRunner, evaluate, fit_kcca, pre_propagate_tags, project, run_pipeline, synth_dataset,
)
from .core.kernels import compute_kernel

__version__ = "0.1.0"

__all__ = [
    "AppError",
    "EmbeddingSpace", "KernelKind", "NeighborMetric", "TransferMethod",
    "AnnotationSet", "FeatureMatrix", "GramMatrix", "KernelBlock", "MetricReport", "PipelineConfig",
    "RelevanceScores", "SemanticProjector", "SynthSpec", "Vocabulary",
    "PipelineRunner", "evaluate", "fit_kcca", "pre_propagate_tags", "project", "run_pipeline", "synth_dataset",
    "compute_kernel",
    "__version__",
]
