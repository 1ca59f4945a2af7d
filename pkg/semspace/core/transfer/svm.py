# -*- coding: utf-8 -*-
"""逐标签 L2 正则最小二乘线性分类器（SGD 训练）

每个标签 t 在原始特征 ψ 上最小化 (1/N)·Σ_i (⟨w_t, ψ_i⟩ + b_t − y_it)² + λ·‖w_t‖²，
带标签 t 的图像 y = +1，其余 y = −1。

迭代在坐标 z = (ψ − μ)/s 中进行（μ 为均值，s 为中心化后的均方根范数），参数 v = s·w、c = b + ⟨w, μ⟩。
这是同一目标的等价改写：罚项变为 (λ/s²)·‖v‖²，截距不受罚，
对任意 v 的最优 c 恰为 y 的均值，因此 c 取闭式解，只用 SGD 训练 v（所有标签同时向量化更新）。
步长 η_t = η₀/(1 + η₀·λ·t)，每轮按种子打乱样本顺序，对后半程迭代取平均。
返回的模型换算回原始坐标 (w, b)。
"""
import numpy as np
from loguru import logger

from ...exceptions import AppError
from ...model import AnnotationSet, FeatureMatrix, SvmModel
from ...utils import stream_rng
from .relevance import label_indicator


def _targets(annotations: AnnotationSet) -> np.ndarray:
    return 2.0 * label_indicator(annotations) - 1.0


def _standardize(X: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    mean = X.mean(axis=0)
    centered = X - mean
    scale = float(np.sqrt(np.mean(np.sum(centered ** 2, axis=1))))
    if not np.isfinite(scale) or scale <= 0:
        scale = 1.0
    return centered / scale, mean, scale


def svm_train(embedding: FeatureMatrix, annotations: AnnotationSet, lam: float, epochs: int = 20,
              seed: int = 0, step0: float = 0.1) -> SvmModel:
    """训练所有标签的线性模型
    Args:
        embedding: 训练图像特征（语义空间 ψ 或基线视觉特征）
        annotations: 训练标注
        lam: L2 正则系数 λ（作用于原始坐标下的 w）
        epochs: 训练轮数
        seed: 打乱顺序所用的种子
        step0: 初始步长 η₀
    Returns:
        SvmModel: 每个标签一组原始坐标下的 (w_t, b_t)
    Raises:
        AppError.NonFiniteGradient: 更新出现非有限值
    """
    if annotations.row_ids != embedding.row_ids:
        annotations = annotations.aligned_to(embedding.row_ids)
    Z, mean, scale = _standardize(embedding.values)
    Y = _targets(annotations)
    offsets = Y.mean(axis=0)
    penalty = lam / scale ** 2
    n, m = Z.shape
    V = np.zeros((m, Y.shape[1]))
    V_avg = np.zeros_like(V)
    averaged = 0
    total = epochs * n
    rng = stream_rng(seed, "svm.shuffle")
    t = 0
    for epoch in range(epochs):
        for i in rng.permutation(n):
            eta = step0 / (1.0 + step0 * lam * t)
            err = Z[i] @ V + offsets - Y[i]
            V *= max(0.0, 1.0 - 2.0 * eta * penalty)
            V -= eta * 2.0 * np.outer(Z[i], err)
            t += 1
            if t > total // 2:
                averaged += 1
                V_avg += (V - V_avg) / averaged
        if not np.all(np.isfinite(V)):
            AppError.NonFiniteGradient.raise_(f"SVM 第 {epoch} 轮权重出现非有限值")
    W = V_avg / scale
    intercepts = offsets - mean @ W
    logger.opt(colors=True).debug("SVM 训练完成: λ={} 轮数={} 平均迭代数={}", lam, epochs, averaged)
    return SvmModel(vocabulary=annotations.vocabulary, weights=W.T, intercepts=intercepts, lam=lam)


def svm_scores(model: SvmModel, queries: np.ndarray) -> np.ndarray:
    """批量打分 f(t) = b_t + ⟨w_t, ψ⟩"""
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    if queries.shape[1] != model.weights.shape[1]:
        AppError.DimensionMismatch.raise_(f"查询维度 {queries.shape[1]} 与模型维度 {model.weights.shape[1]} 不一致")
    return queries @ model.weights.T + model.intercepts[None, :]


def svm_score(model: SvmModel, query: FeatureMatrix | np.ndarray) -> np.ndarray:
    """单个或多个查询的相关度（FeatureMatrix 时返回 Q×D）"""
    values = query.values if isinstance(query, FeatureMatrix) else query
    scores = svm_scores(model, values)
    return scores[0] if np.ndim(values) == 1 else scores


def svm_objective(model: SvmModel, embedding: FeatureMatrix, annotations: AnnotationSet) -> float:
    """原始特征上的训练目标（对所有标签求和）：(1/N)·Σ(⟨w,ψ⟩+b−y)² + λ·‖w‖²"""
    if annotations.row_ids != embedding.row_ids:
        annotations = annotations.aligned_to(embedding.row_ids)
    residual = svm_scores(model, embedding.values) - _targets(annotations)
    return float(np.mean(residual ** 2, axis=0).sum() + model.lam * np.sum(model.weights ** 2))
