"""核心计算模块
核函数、标签预传播、KCCA、标签迁移、评估、合成数据与流水线编排。
"""
from . import kernels
from .denoise import pre_propagate_tags, visual_neighbors
from .kcca import pgso, fit_kcca, project, dense_kcca_oracle, subsample_training
from . import transfer
from .evaluation import (
    prec_rec_at_n, map_labels, n_plus, jaccard, jaccard_neighborhood, evaluate, render_report_tsv,
)
from .synth import SynthDataset, synth_dataset, write_synth
from .pipeline import PipelineRunner, PipelineResult, STAGES, run_pipeline

__all__ = [
    "kernels",
    "pre_propagate_tags", "visual_neighbors",
    "pgso", "fit_kcca", "project", "dense_kcca_oracle", "subsample_training",
    "transfer",
    "prec_rec_at_n", "map_labels", "n_plus", "jaccard", "jaccard_neighborhood", "evaluate", "render_report_tsv",
    "SynthDataset", "synth_dataset", "write_synth",
    "PipelineRunner", "PipelineResult", "STAGES", "run_pipeline",
]
