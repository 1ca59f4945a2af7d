# 导入必要的模块
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..exceptions import AppError
from .data_model import Vocabulary, _check_finite, _readonly


class PgsoFactor(BaseModel):
    """部分 Gram-Schmidt 正交化（带主元的不完全 Cholesky）结果: K ≈ G·Gᵀ"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    G: np.ndarray
    pivots: tuple[int, ...]
    residual_trace: float = Field(ge=0.0)

    @field_validator("G", mode="before")
    @classmethod
    def convert_factor(cls, v: Any) -> np.ndarray:
        return _readonly(v, 2, "PGSO因子")

    @model_validator(mode="after")
    def check_pivots(self) -> "PgsoFactor":
        if len(self.pivots) != self.G.shape[1]:
            AppError.InvariantViolation.raise_(f"主元个数 {len(self.pivots)} 与因子秩 {self.G.shape[1]} 不一致")
        if len(set(self.pivots)) != len(self.pivots):
            AppError.InvariantViolation.raise_("PGSO主元存在重复")
        return self

    @property
    def rank(self) -> int:
        return self.G.shape[1]


class RelevanceScores(BaseModel):
    """相关度函数 f(I, t) 的输出：查询图像 × 标签"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    row_ids: tuple[str, ...]
    vocabulary: Vocabulary
    values: np.ndarray

    @field_validator("values", mode="before")
    @classmethod
    def convert_values(cls, v: Any) -> np.ndarray:
        return _readonly(v, 2, "相关度矩阵")

    @model_validator(mode="after")
    def check_alignment(self) -> "RelevanceScores":
        if self.values.shape != (len(self.row_ids), self.vocabulary.size):
            AppError.DimensionMismatch.raise_(
                f"相关度矩阵形状 {self.values.shape} 与 ({len(self.row_ids)}, {self.vocabulary.size}) 不一致")
        _check_finite(self.values, self.row_ids, "相关度矩阵")
        return self


class TagPropModel(BaseModel):
    """按近邻名次学习权重的 TagProp 模型"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    weights: np.ndarray
    trained: bool = False
    log_likelihoods: tuple[float, ...] = ()

    @field_validator("weights", mode="before")
    @classmethod
    def convert_weights(cls, v: Any) -> np.ndarray:
        return _readonly(v, 1, "TagProp权重")

    @model_validator(mode="after")
    def check_simplex(self) -> "TagPropModel":
        w = self.weights
        if w.size == 0:
            AppError.InvariantViolation.raise_("TagProp权重为空")
        _check_finite(w, None, "TagProp权重")
        if np.any(w < 0) or abs(float(w.sum()) - 1.0) > 1e-9:
            AppError.InvariantViolation.raise_(f"TagProp权重必须位于单纯形上, 和为 {w.sum()}")
        return self

    @property
    def k(self) -> int:
        return int(self.weights.size)


class SvmModel(BaseModel):
    """逐标签的 L2 正则最小二乘线性分类器

    直接作用于原始特征 ψ：f_t(ψ) = b_t + ⟨w_t, ψ⟩；weights 为 D×M，每行对应一个标签。
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    vocabulary: Vocabulary
    weights: np.ndarray
    intercepts: np.ndarray
    lam: float = Field(ge=0.0)

    @field_validator("weights", mode="before")
    @classmethod
    def convert_weights(cls, v: Any) -> np.ndarray:
        return _readonly(v, 2, "SVM权重")

    @field_validator("intercepts", mode="before")
    @classmethod
    def convert_vectors(cls, v: Any) -> np.ndarray:
        return _readonly(v, 1, "SVM向量")

    @model_validator(mode="after")
    def check_shapes(self) -> "SvmModel":
        d = self.weights.shape[0]
        if d != self.vocabulary.size or self.intercepts.size != d:
            AppError.InvariantViolation.raise_(f"SVM模型应为每个标签各有一组 (w_t, b_t), 词表大小 {self.vocabulary.size}")
        _check_finite(self.weights, None, "SVM权重")
        _check_finite(self.intercepts, None, "SVM截距")
        return self


class LabelMetrics(BaseModel):
    """单个标签的评估明细；未定义的量记为 None"""
    model_config = ConfigDict(frozen=True)

    label: str
    n_true: int
    n_predicted: int
    n_correct: int
    precision: float | None
    recall: float | None
    average_precision: float | None = None


class MetricReport(BaseModel):
    """评估报告：MAP、Prec@n、Rec@n、N+ 以及每个平均值实际纳入的标签数"""
    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1)
    map_score: float | None = Field(default=None, ge=0.0, le=1.0)
    prec_at_n: float = Field(ge=0.0, le=1.0)
    rec_at_n: float = Field(ge=0.0, le=1.0)
    n_plus: int = Field(ge=0)
    n_labels: int = Field(ge=0)
    n_labels_precision: int = Field(ge=0)
    n_labels_recall: int = Field(ge=0)
    n_labels_map: int = Field(default=0, ge=0)
    per_label: tuple[LabelMetrics, ...] | None = None

    @model_validator(mode="after")
    def check_n_plus(self) -> "MetricReport":
        if self.n_plus > self.n_labels:
            AppError.InvariantViolation.raise_(f"N+={self.n_plus} 超过词表大小 {self.n_labels}")
        return self


class CvResult(BaseModel):
    """交叉验证结果：搜索的超参数、候选值及各自的平均留出 MAP"""
    model_config = ConfigDict(frozen=True)

    method: str
    parameter: str
    grid: tuple[float, ...]
    scores: tuple[float | None, ...]
    best: float
    folds: int = Field(ge=2)

    @model_validator(mode="after")
    def check_grid(self) -> "CvResult":
        if len(self.grid) != len(self.scores):
            AppError.InvariantViolation.raise_("候选值与得分个数不一致")
        if self.best not in self.grid:
            AppError.InvariantViolation.raise_(f"最优值 {self.best} 不在候选列表中")
        return self
