"""数据模型模块
该模块包含应用程序所需的所有数据模型定义，用于处理配置、核矩阵、标注与训练结果。
提供统一的接口来访问各种数据结构，确保数据的一致性和完整性。

导入的模块包括：
- data_model: 特征、标注、词表、核矩阵与投影器等数据容器
- result_model: PGSO因子、相关度、迁移模型与评估报告
- config_model: 流水线各阶段的配置模型
"""
from .data_model import (
    Vocabulary, FeatureMatrix, AnnotationSet, GramMatrix, KernelBlock,
    WordVectorTable, SimilarityMatrix, SemanticProjector,
)
from .result_model import PgsoFactor, RelevanceScores, TagPropModel, SvmModel, LabelMetrics, MetricReport, CvResult
from .config_model import (
    KernelSpec, DenoiseConfig, KccaConfig, TransferConfig, EvalConfig, SynthSpec,
    DataConfig, KernelsConfig, PipelineConfig, RuntimeOptions, WorkDir,
)

__all__ = [
    "Vocabulary", "FeatureMatrix", "AnnotationSet", "GramMatrix", "KernelBlock",
    "WordVectorTable", "SimilarityMatrix", "SemanticProjector",
    "PgsoFactor", "RelevanceScores", "TagPropModel", "SvmModel", "LabelMetrics", "MetricReport", "CvResult",
    "KernelSpec", "DenoiseConfig", "KccaConfig", "TransferConfig", "EvalConfig", "SynthSpec",
    "DataConfig", "KernelsConfig", "PipelineConfig", "RuntimeOptions", "WorkDir",
]
