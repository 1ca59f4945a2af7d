# -*- coding: utf-8 -*-
"""核函数模块
计算流水线所需的全部核矩阵与样本外核块：
- 视觉视图: 二阶 ArcCosine 核
- 文本视图: 线性标签核、本体相似度加权标签核、词向量池化核
- 去噪标签: exp-χ² 核
rows 与 cols 相同（cols 为空）时返回对称的 GramMatrix，否则返回矩形 KernelBlock。
"""
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np
import scipy.linalg as la
from loguru import logger
from tqdm import tqdm

from ..config import RUNTIME
from ..exceptions import AppError
from ..mapping import KernelKind
from ..model import (
    AnnotationSet, FeatureMatrix, GramMatrix, KernelBlock, KernelSpec, SimilarityMatrix, WordVectorTable,
)

# 分块大小固定，与线程数无关，保证结果不随调度变化
CHUNK_ROWS = 256


def _chunked(n_rows: int, block: Callable[[int, int], np.ndarray], desc: str,
             threads: int | None = None, progress: bool | None = None) -> np.ndarray:
    """按行分块计算并按原顺序拼接"""
    threads = RUNTIME.threads if threads is None else threads
    progress = RUNTIME.progress if progress is None else progress
    starts = list(range(0, n_rows, CHUNK_ROWS))
    if not starts:
        return np.zeros((0, 0))
    spans = [(s, min(s + CHUNK_ROWS, n_rows)) for s in starts]
    if threads > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(tqdm(pool.map(lambda span: block(*span), spans), total=len(spans),
                              desc=desc, unit="chunk", disable=not progress))
    else:
        parts = [block(*span) for span in tqdm(spans, desc=desc, unit="chunk", disable=not progress)]
    return np.vstack(parts)


def _wrap(values: np.ndarray, kernel_id: str, row_ids: tuple[str, ...],
          col_ids: tuple[str, ...] | None) -> GramMatrix | KernelBlock:
    if col_ids is None:
        return GramMatrix(values=values, kernel_id=kernel_id, row_ids=row_ids)
    return KernelBlock(values=values, kernel_id=kernel_id, row_ids=row_ids, col_ids=col_ids)


def _check_vocabulary(*sets: AnnotationSet) -> None:
    labels = sets[0].vocabulary.labels
    for other in sets[1:]:
        if other.vocabulary.labels != labels:
            AppError.VocabularyMismatch.raise_("两组标注的词表不一致")


def _row_norms(X: FeatureMatrix) -> np.ndarray:
    norms = np.linalg.norm(X.values, axis=1)
    zero = np.flatnonzero(norms == 0)
    if zero.size:
        AppError.ZeroNormRow.raise_(f"图像 {X.row_ids[zero[0]]!r} 的特征为零向量, ArcCosine核无定义")
    return norms


def arccos2_kernel(X: FeatureMatrix, Y: FeatureMatrix | None = None, *, threads: int | None = None,
                   progress: bool | None = None) -> GramMatrix | KernelBlock:
    """二阶 ArcCosine 核

    K(x, y) = (1/π)·‖x‖²·‖y‖²·J₂(θ)，J₂(θ) = 3 sinθ cosθ + (π−θ)(1 + 2cos²θ)，
    θ 为 x 与 y 夹角，余弦先截断到 [−1, 1]。
    """
    other = X if Y is None else Y
    if X.n_cols != other.n_cols:
        AppError.DimensionMismatch.raise_(f"特征维度 {X.n_cols} 与 {other.n_cols} 不一致")
    nx, ny = _row_norms(X), _row_norms(other)
    unit_y = other.values / ny[:, None]

    def block(start: int, stop: int) -> np.ndarray:
        cos = np.clip((X.values[start:stop] / nx[start:stop, None]) @ unit_y.T, -1.0, 1.0)
        theta = np.arccos(cos)
        j2 = 3.0 * np.sin(theta) * cos + (np.pi - theta) * (1.0 + 2.0 * cos ** 2)
        return (nx[start:stop, None] ** 2) * (ny[None, :] ** 2) * j2 / np.pi

    values = _chunked(X.n_rows, block, "arccos2", threads, progress)
    kernel_id = KernelSpec(kind=KernelKind.ARCCOS2).kernel_id
    return _wrap(values, kernel_id, X.row_ids, None if Y is None else other.row_ids)


def linear_label_kernel(A: AnnotationSet, B: AnnotationSet | None = None) -> GramMatrix | KernelBlock:
    """线性标签核：两张图像共有的标签个数"""
    other = A if B is None else B
    _check_vocabulary(A, other)
    for annotations in (A, other):
        if not annotations.binary:
            AppError.InvalidParameter.raise_("线性标签核要求二值标注")
    values = (A.matrix @ other.matrix.T).toarray()
    kernel_id = KernelSpec(kind=KernelKind.LINEAR_LABELS).kernel_id
    return _wrap(values, kernel_id, A.row_ids, None if B is None else other.row_ids)


def clip_psd(S: SimilarityMatrix) -> SimilarityMatrix:
    """把相似度矩阵的负特征值截断为 0，得到半正定的 S"""
    eigvals, eigvecs = la.eigh(S.values)
    negative = int(np.sum(eigvals < 0))
    if negative:
        logger.opt(colors=True).info("<g>Kernel</g>:相似度矩阵有 <c>{}</c> 个负特征值被截断, 最小 {:.3g}",
                                     negative, eigvals.min())
    clipped = (eigvecs * np.clip(eigvals, 0.0, None)) @ eigvecs.T
    return SimilarityMatrix(vocabulary=S.vocabulary, values=clipped)


def ontology_label_kernel(A: AnnotationSet, B: AnnotationSet | None = None, S: SimilarityMatrix | None = None,
                          clip: bool = False) -> GramMatrix | KernelBlock:
    """本体标签核：K = φ(A)·S·φ(B)ᵀ"""
    if S is None:
        AppError.MissingParameter.raise_("本体标签核需要标签相似度矩阵 S")
    other = A if B is None else B
    _check_vocabulary(A, other)
    if S.vocabulary.labels != A.vocabulary.labels:
        AppError.VocabularyMismatch.raise_("相似度矩阵的词表与标注词表不一致")
    if clip:
        S = clip_psd(S)
    values = np.asarray(A.matrix @ S.values @ other.matrix.T.toarray())
    spec = KernelSpec(kind=KernelKind.ONTOLOGY_LABELS, params={"clip_psd": 1.0} if clip else {})
    return _wrap(values, spec.kernel_id, A.row_ids, None if B is None else other.row_ids)


def wordvec_pool(A: AnnotationSet, W: WordVectorTable) -> FeatureMatrix:
    """词向量平均池化：第 i 行为其标签词向量的加权平均，无标签图像映射为零向量"""
    missing = [label for label in A.vocabulary.labels if label not in W]
    if missing:
        AppError.MissingWordVector.raise_(f"{len(missing)} 个标签没有词向量: {missing[:10]}")
    Z = np.vstack([W.entries[label] for label in A.vocabulary.labels])
    counts = A.label_counts().astype(np.float64)
    pooled = np.asarray(A.matrix @ Z)
    nonzero = counts > 0
    pooled[nonzero] /= counts[nonzero, None]
    pooled[~nonzero] = 0.0
    return FeatureMatrix(values=pooled, row_ids=A.row_ids)


def wordvec_label_kernel(A: AnnotationSet, B: AnnotationSet | None = None,
                         W: WordVectorTable | None = None) -> GramMatrix | KernelBlock:
    """词向量核：池化词向量之间的内积"""
    if W is None:
        AppError.MissingParameter.raise_("词向量核需要词向量表")
    other = A if B is None else B
    _check_vocabulary(A, other)
    pa = wordvec_pool(A, W).values
    pb = pa if B is None else wordvec_pool(other, W).values
    kernel_id = KernelSpec(kind=KernelKind.WORDVEC_LABELS).kernel_id
    return _wrap(pa @ pb.T, kernel_id, A.row_ids, None if B is None else other.row_ids)


def _nonnegative(A: AnnotationSet) -> np.ndarray:
    values = A.dense()
    if values.size and values.min() < 0:
        AppError.NegativeWeight.raise_(f"exp-χ² 核要求非负权重, 最小值为 {values.min()}")
    return values


def chi2_distances(A: AnnotationSet, B: AnnotationSet | None = None) -> np.ndarray:
    """成对 χ² 距离 Σ_k (a_k − b_k)² / (a_k + b_k)，分母为 0 的项记为 0"""
    other = A if B is None else B
    _check_vocabulary(A, other)
    a = _nonnegative(A)
    b = a if B is None else _nonnegative(other)

    def block(start: int, stop: int) -> np.ndarray:
        x = a[start:stop, None, :]
        y = b[None, :, :]
        num = (x - y) ** 2
        den = x + y
        terms = np.divide(num, den, out=np.zeros(np.broadcast_shapes(num.shape, den.shape)), where=den > 0)
        return terms.sum(axis=2)

    return _chunked(a.shape[0], block, "chi2")


def auto_chi2_scale(distances: np.ndarray) -> float:
    """C = 训练块上成对 χ² 距离（不含自身配对）的均值；均值为 0 时退回 1"""
    n = distances.shape[0]
    if n < 2:
        logger.opt(colors=True).warning("<y>Kernel</y>:样本数不足以估计 exp-χ² 的 C, 使用 C=1")
        return 1.0
    mean = float((distances.sum() - np.trace(distances)) / (n * (n - 1)))
    if mean <= 0:
        logger.opt(colors=True).warning("<y>Kernel</y>:χ² 距离均值为 0, exp-χ² 的 C 退回 1")
        return 1.0
    return mean


def exp_chi2_kernel(A: AnnotationSet, B: AnnotationSet | None = None,
                    C: float | str = "auto") -> GramMatrix | KernelBlock:
    """exp-χ² 核：K = exp(−χ²/(2C))

    C 为 "auto" 时取训练块（B 为空时为 A 本身, 否则为 B）成对 χ² 距离的均值。
    """
    if C == "auto":
        reference = A if B is None else B
        C = auto_chi2_scale(chi2_distances(reference))
        logger.opt(colors=True).debug("exp-χ² 自动尺度 C={}", C)
    C = float(C)
    if not math.isfinite(C) or C <= 0:
        AppError.InvalidParameter.raise_(f"exp-χ² 的 C 必须为正, 实际为 {C}")
    values = np.exp(-chi2_distances(A, B) / (2.0 * C))
    kernel_id = KernelSpec(kind=KernelKind.EXP_CHI2, params={"C": C}).kernel_id
    return _wrap(values, kernel_id, A.row_ids, None if B is None else B.row_ids)


def compute_kernel(spec: KernelSpec, rows: FeatureMatrix | AnnotationSet,
                   cols: FeatureMatrix | AnnotationSet | None = None, *,
                   similarity: SimilarityMatrix | None = None,
                   word_vectors: WordVectorTable | None = None, threads: int | None = None,
                   progress: bool | None = None) -> GramMatrix | KernelBlock:
    """按核函数规格分派计算
    Args:
        spec: 核函数规格
        rows: 行图像（视觉核为特征矩阵, 文本核为标注）
        cols: 列图像, 为空时计算 rows 上的对称核矩阵
        similarity: 本体标签核所需的 S
        word_vectors: 词向量核所需的词向量表
        threads: 视觉核分块计算的线程数, 为空时取 RUNTIME
        progress: 是否显示分块进度条, 为空时取 RUNTIME
    Returns:
        GramMatrix | KernelBlock: cols 为空时为核矩阵, 否则为矩形核块
    """
    kernel_function = spec.kind.get_kernel_function()
    expects_features = spec.kind is KernelKind.ARCCOS2
    for item in (rows, cols):
        if item is not None and isinstance(item, FeatureMatrix) != expects_features:
            AppError.InvalidParameter.raise_(
                f"核函数 {spec.kind.value} 需要{'特征矩阵' if expects_features else '标注'}作为输入")
    if expects_features:
        return kernel_function(rows, cols, threads=threads, progress=progress)
    if spec.kind is KernelKind.ONTOLOGY_LABELS:
        return kernel_function(rows, cols, S=similarity, clip=bool(spec.params.get("clip_psd", 0)))
    if spec.kind is KernelKind.WORDVEC_LABELS:
        return kernel_function(rows, cols, W=word_vectors)
    if spec.kind is KernelKind.EXP_CHI2:
        return kernel_function(rows, cols, C=spec.params.get("C", "auto"))
    return kernel_function(rows, cols)
