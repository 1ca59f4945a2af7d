# 导入必要的模块
from functools import cached_property
from typing import Any, Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from ..exceptions import AppError

# 对角线与特征值的数值容差
DIAGONAL_TOL = 1e-10
CORRELATION_TOL = 1e-9


def _readonly(values: Any, ndim: int, name: str) -> np.ndarray:
    """复制为64位只读数组并检查维数"""
    try:
        arr = np.array(values, dtype=np.float64, copy=True)
    except (TypeError, ValueError) as e:
        AppError.InvalidParameter.raise_(f"{name} 无法转换为实数数组 —— {e}")
    if arr.ndim != ndim:
        AppError.DimensionMismatch.raise_(f"{name} 应为 {ndim} 维数组, 实际为 {arr.ndim} 维")
    arr.setflags(write=False)
    return arr


def _check_finite(values: np.ndarray, row_ids: Sequence[str] | None, name: str) -> None:
    """拒绝 NaN/Inf，并指出第一个非有限值所在的行与列"""
    bad = np.argwhere(~np.isfinite(values))
    if bad.size == 0:
        return
    position = tuple(int(i) for i in bad[0])
    if row_ids is not None and values.ndim == 2:
        AppError.NonFiniteValue.raise_(
            f"{name} 行 {row_ids[position[0]]!r}(#{position[0]}) 列 {position[1]} 的值为 {values[position]}")
    AppError.NonFiniteValue.raise_(f"{name} 位置 {position} 的值为 {values[position]}")


def _check_unique_ids(ids: Sequence[str], name: str) -> None:
    seen: set[str] = set()
    for identifier in ids:
        if identifier in seen:
            AppError.DuplicateIdentifier.raise_(f"{name} 中存在重复标识 {identifier!r}")
        seen.add(identifier)


class Vocabulary(BaseModel):
    """标签词表：有序、唯一、非空的标签字符串，位置即标签下标"""
    model_config = ConfigDict(frozen=True)

    labels: tuple[str, ...]

    @field_validator("labels")
    @classmethod
    def check_labels(cls, v: tuple[str, ...]) -> tuple[str, ...]:
        for label in v:
            if not label or not label.strip():
                AppError.InvariantViolation.raise_("词表中存在空标签")
        _check_unique_ids(v, "词表")
        return v

    @cached_property
    def index(self) -> dict[str, int]:
        """标签 -> 下标"""
        return {label: i for i, label in enumerate(self.labels)}

    @property
    def size(self) -> int:
        return len(self.labels)

    def __len__(self) -> int:
        return len(self.labels)

    def index_of(self, label: str) -> int:
        try:
            return self.index[label]
        except KeyError:
            AppError.VocabularyMismatch.raise_(f"标签 {label!r} 不在词表中")


class FeatureMatrix(BaseModel):
    """稠密特征矩阵，每行一张图像（视觉特征、池化词向量或语义空间坐标）"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    values: np.ndarray
    row_ids: tuple[str, ...]

    @field_validator("values", mode="before")
    @classmethod
    def convert_values(cls, v: Any) -> np.ndarray:
        return _readonly(v, 2, "特征矩阵")

    @model_validator(mode="after")
    def check_alignment(self) -> "FeatureMatrix":
        if self.values.shape[0] != len(self.row_ids):
            AppError.DimensionMismatch.raise_(
                f"特征矩阵有 {self.values.shape[0]} 行, 但提供了 {len(self.row_ids)} 个图像标识")
        _check_unique_ids(self.row_ids, "特征矩阵行标识")
        _check_finite(self.values, self.row_ids, "特征矩阵")
        return self

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]

    def subset(self, indices: Sequence[int] | np.ndarray) -> "FeatureMatrix":
        idx = np.asarray(indices, dtype=np.int64)
        return FeatureMatrix(values=self.values[idx], row_ids=tuple(self.row_ids[i] for i in idx))


class AnnotationSet(BaseModel):
    """图像×标签的稀疏标注集合

    二值形式存放专家标签或用户标签；实值形式存放去噪后的标签向量。
    binary 标志由全量扫描得出：当且仅当所有存储权重都属于 {0, 1}。
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    vocabulary: Vocabulary
    matrix: sp.csr_matrix
    row_ids: tuple[str, ...]

    @field_validator("matrix", mode="before")
    @classmethod
    def convert_matrix(cls, v: Any) -> sp.csr_matrix:
        m = sp.csr_matrix(v, dtype=np.float64, copy=True)
        nnz_before = m.nnz
        m.sum_duplicates()
        if m.nnz != nnz_before:
            AppError.InvariantViolation.raise_("同一图像的标注中存在重复的标签下标")
        if m.data.size and not np.all(np.isfinite(m.data)):
            AppError.NonFiniteValue.raise_("标注权重中存在非有限值")
        if m.data.size and np.any(m.data < 0):
            AppError.NegativeWeight.raise_(f"标注权重最小值为 {m.data.min()}")
        m.eliminate_zeros()
        m.data.setflags(write=False)
        return m

    @model_validator(mode="after")
    def check_alignment(self) -> "AnnotationSet":
        n, d = self.matrix.shape
        if d != self.vocabulary.size:
            AppError.VocabularyMismatch.raise_(f"标注矩阵有 {d} 列, 词表大小为 {self.vocabulary.size}")
        if n != len(self.row_ids):
            AppError.DimensionMismatch.raise_(f"标注矩阵有 {n} 行, 但提供了 {len(self.row_ids)} 个图像标识")
        _check_unique_ids(self.row_ids, "标注图像标识")
        return self

    @classmethod
    def from_dense(cls, vocabulary: Vocabulary, values: np.ndarray, row_ids: Sequence[str]) -> "AnnotationSet":
        return cls(vocabulary=vocabulary, matrix=sp.csr_matrix(np.asarray(values, dtype=np.float64)),
                   row_ids=tuple(row_ids))

    @classmethod
    def from_label_lists(cls, vocabulary: Vocabulary, label_lists: Iterable[Iterable[int]],
                         row_ids: Sequence[str]) -> "AnnotationSet":
        """由每张图像的标签下标列表构造二值标注（同一行内的重复下标会被合并）"""
        indptr = [0]
        indices: list[int] = []
        for labels in label_lists:
            unique = sorted(set(int(i) for i in labels))
            for i in unique:
                if not 0 <= i < vocabulary.size:
                    AppError.InvariantViolation.raise_(f"标签下标 {i} 超出词表大小 {vocabulary.size}")
            indices.extend(unique)
            indptr.append(len(indices))
        matrix = sp.csr_matrix((np.ones(len(indices)), np.asarray(indices, dtype=np.int64), np.asarray(indptr)),
                               shape=(len(indptr) - 1, vocabulary.size))
        return cls(vocabulary=vocabulary, matrix=matrix, row_ids=tuple(row_ids))

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def binary(self) -> bool:
        data = self.matrix.data
        return bool(np.all((data == 0.0) | (data == 1.0)))

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def rows(self) -> list[list[tuple[int, float]]]:
        """每张图像的 (标签下标, 权重) 稀疏行"""
        out = []
        for i in range(self.n_rows):
            start, end = self.matrix.indptr[i], self.matrix.indptr[i + 1]
            out.append([(int(j), float(w)) for j, w in zip(self.matrix.indices[start:end], self.matrix.data[start:end])])
        return out

    def label_sets(self) -> list[frozenset[int]]:
        return [frozenset(int(j) for j, _ in row) for row in self.rows()]

    def label_counts(self) -> np.ndarray:
        """每张图像的标签个数 N_i（非零项数）"""
        return np.diff(self.matrix.indptr).astype(np.int64)

    def image_counts(self) -> np.ndarray:
        """每个标签出现的图像数 n_t"""
        return np.bincount(self.matrix.indices, minlength=self.vocabulary.size).astype(np.int64)

    def subset(self, indices: Sequence[int] | np.ndarray) -> "AnnotationSet":
        idx = np.asarray(indices, dtype=np.int64)
        return AnnotationSet(vocabulary=self.vocabulary, matrix=self.matrix[idx],
                             row_ids=tuple(self.row_ids[i] for i in idx))

    def aligned_to(self, row_ids: Sequence[str]) -> "AnnotationSet":
        """按给定图像标识顺序重排（所有标识必须存在）"""
        position = {rid: i for i, rid in enumerate(self.row_ids)}
        missing = [rid for rid in row_ids if rid not in position]
        if missing:
            AppError.DimensionMismatch.raise_(f"标注中缺少 {len(missing)} 张图像, 例如 {missing[:3]}")
        return self.subset([position[rid] for rid in row_ids])


class GramMatrix(BaseModel):
    """对称核矩阵，附带生成它的核函数标识与图像标识"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    values: np.ndarray
    kernel_id: str
    row_ids: tuple[str, ...]

    @field_validator("values", mode="before")
    @classmethod
    def symmetrize(cls, v: Any) -> np.ndarray:
        arr = np.asarray(v, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            AppError.DimensionMismatch.raise_(f"核矩阵必须为方阵, 实际形状 {arr.shape}")
        return _readonly((arr + arr.T) / 2.0, 2, "核矩阵")

    @model_validator(mode="after")
    def check_gram(self) -> "GramMatrix":
        if self.values.shape[0] != len(self.row_ids):
            AppError.DimensionMismatch.raise_(
                f"核矩阵大小 {self.values.shape[0]} 与图像标识数 {len(self.row_ids)} 不一致")
        _check_unique_ids(self.row_ids, "核矩阵图像标识")
        _check_finite(self.values, self.row_ids, "核矩阵")
        diag = np.diag(self.values)
        if diag.size and diag.min() < -DIAGONAL_TOL * max(1.0, float(np.abs(diag).max())):
            i = int(np.argmin(diag))
            AppError.NotPositiveSemidefinite.raise_(f"核矩阵对角元 {self.row_ids[i]!r} 为 {diag[i]}")
        return self

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def subset(self, indices: Sequence[int] | np.ndarray) -> "GramMatrix":
        idx = np.asarray(indices, dtype=np.int64)
        return GramMatrix(values=self.values[np.ix_(idx, idx)], kernel_id=self.kernel_id,
                          row_ids=tuple(self.row_ids[i] for i in idx))

    def as_block(self) -> "KernelBlock":
        return KernelBlock(values=self.values, kernel_id=self.kernel_id,
                           row_ids=self.row_ids, col_ids=self.row_ids)

    def scaled(self, factor: float) -> "GramMatrix":
        return GramMatrix(values=self.values * factor, kernel_id=self.kernel_id, row_ids=self.row_ids)


class KernelBlock(BaseModel):
    """矩形核块（查询图像 × 训练图像），用于样本外投影与基线近邻检索"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    values: np.ndarray
    kernel_id: str
    row_ids: tuple[str, ...]
    col_ids: tuple[str, ...]

    @field_validator("values", mode="before")
    @classmethod
    def convert_values(cls, v: Any) -> np.ndarray:
        return _readonly(v, 2, "核块")

    @model_validator(mode="after")
    def check_alignment(self) -> "KernelBlock":
        q, n = self.values.shape
        if q != len(self.row_ids) or n != len(self.col_ids):
            AppError.DimensionMismatch.raise_(
                f"核块形状 {self.values.shape} 与标识数 ({len(self.row_ids)}, {len(self.col_ids)}) 不一致")
        _check_finite(self.values, self.row_ids, "核块")
        return self

    def subset(self, rows: Sequence[int] | np.ndarray | None = None,
               cols: Sequence[int] | np.ndarray | None = None) -> "KernelBlock":
        r = np.arange(len(self.row_ids)) if rows is None else np.asarray(rows, dtype=np.int64)
        c = np.arange(len(self.col_ids)) if cols is None else np.asarray(cols, dtype=np.int64)
        return KernelBlock(values=self.values[np.ix_(r, c)], kernel_id=self.kernel_id,
                           row_ids=tuple(self.row_ids[i] for i in r), col_ids=tuple(self.col_ids[j] for j in c))


class WordVectorTable(BaseModel):
    """标签词向量表，所有向量长度相同 (P > 0)"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    labels: tuple[str, ...]
    vectors: np.ndarray

    @field_validator("vectors", mode="before")
    @classmethod
    def convert_vectors(cls, v: Any) -> np.ndarray:
        return _readonly(v, 2, "词向量")

    @model_validator(mode="after")
    def check_table(self) -> "WordVectorTable":
        if self.vectors.shape[0] != len(self.labels):
            AppError.DimensionMismatch.raise_(f"词向量行数 {self.vectors.shape[0]} 与标签数 {len(self.labels)} 不一致")
        if self.vectors.shape[1] == 0:
            AppError.InvariantViolation.raise_("词向量维度 P 必须大于 0")
        _check_unique_ids(self.labels, "词向量标签")
        _check_finite(self.vectors, self.labels, "词向量")
        return self

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @cached_property
    def entries(self) -> dict[str, np.ndarray]:
        return {label: self.vectors[i] for i, label in enumerate(self.labels)}

    def __contains__(self, label: object) -> bool:
        return label in self.entries


class SimilarityMatrix(BaseModel):
    """标签相似度矩阵 S (D×D)，构造时对称化"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    vocabulary: Vocabulary
    values: np.ndarray

    @field_validator("values", mode="before")
    @classmethod
    def symmetrize(cls, v: Any) -> np.ndarray:
        arr = np.asarray(v, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            AppError.DimensionMismatch.raise_(f"相似度矩阵必须为方阵, 实际形状 {arr.shape}")
        return _readonly((arr + arr.T) / 2.0, 2, "相似度矩阵")

    @model_validator(mode="after")
    def check_side(self) -> "SimilarityMatrix":
        if self.values.shape[0] != self.vocabulary.size:
            AppError.VocabularyMismatch.raise_(
                f"相似度矩阵边长 {self.values.shape[0]} 与词表大小 {self.vocabulary.size} 不一致")
        _check_finite(self.values, self.vocabulary.labels, "相似度矩阵")
        return self


class SemanticProjector(BaseModel):
    """语义空间投影器：对偶基 A、相关系数 r 与嵌入新图像所需的训练集引用

    visual_scale 为拟合前施加在视觉核上的归一化系数，投影时同样作用于核行。
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    dual_basis: np.ndarray
    correlations: np.ndarray
    train_row_ids: tuple[str, ...]
    kernel_id: str
    visual_scale: float = 1.0

    @field_validator("dual_basis", mode="before")
    @classmethod
    def convert_basis(cls, v: Any) -> np.ndarray:
        return _readonly(v, 2, "对偶基")

    @field_validator("correlations", mode="before")
    @classmethod
    def convert_correlations(cls, v: Any) -> np.ndarray:
        return _readonly(v, 1, "相关系数")

    @model_validator(mode="after")
    def check_projector(self) -> "SemanticProjector":
        r = self.correlations
        n, m = self.dual_basis.shape
        if m != r.size:
            AppError.InvariantViolation.raise_(f"对偶基列数 {m} 与相关系数个数 {r.size} 不一致")
        if m == 0:
            AppError.InvariantViolation.raise_("投影器没有任何语义维度")
        if n != len(self.train_row_ids):
            AppError.InvariantViolation.raise_(f"对偶基行数 {n} 与训练图像数 {len(self.train_row_ids)} 不一致")
        _check_finite(self.dual_basis, None, "对偶基")
        _check_finite(r, None, "相关系数")
        if np.any(r <= 0) or np.any(r > 1 + CORRELATION_TOL):
            AppError.InvariantViolation.raise_(f"相关系数必须位于 (0, 1], 实际范围 [{r.min()}, {r.max()}]")
        if np.any(np.diff(r) > 0):
            AppError.InvariantViolation.raise_("相关系数未按非递增排序")
        if not np.isfinite(self.visual_scale) or self.visual_scale <= 0:
            AppError.InvariantViolation.raise_(f"视觉核缩放系数必须为正, 实际为 {self.visual_scale}")
        return self

    @property
    def m_dims(self) -> int:
        return int(self.correlations.size)

    @property
    def n_train(self) -> int:
        return len(self.train_row_ids)
