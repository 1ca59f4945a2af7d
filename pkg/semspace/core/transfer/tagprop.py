# -*- coding: utf-8 -*-
"""TagProp（按近邻名次加权）模块

模型 p(t|I) = Σ_j π_j·𝕀(I_j, t)，截断到 [ε, 1−ε]；π 位于单纯形上。
训练在训练集的留一近邻上最大化伯努利对数似然（对 N·D 取平均），
每轮做一次投影梯度上升，步长回溯减半，保证对数似然不下降。
"""
import numpy as np
from loguru import logger

from ...exceptions import AppError
from ...model import AnnotationSet, TagPropModel
from .neighbor_index import NeighborIndex
from .relevance import label_indicator

EPSILON = 1e-6
MAX_BACKTRACK = 40


def project_to_simplex(v: np.ndarray) -> np.ndarray:
    """欧氏投影到概率单纯形（排序法）"""
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    k = np.arange(1, v.size + 1)
    rho = int(np.nonzero(u - (css - 1.0) / k > 0)[0][-1])
    theta = (css[rho] - 1.0) / (rho + 1)
    w = np.maximum(v - theta, 0.0)
    return w / w.sum()


def _neighbor_labels(neighbors: np.ndarray, indicator: np.ndarray) -> np.ndarray:
    """Q×K×D：第 j 名近邻是否带有标签 t"""
    return indicator[neighbors]


def _log_likelihood(weights: np.ndarray, votes: np.ndarray, targets: np.ndarray) -> float:
    p = np.clip(np.einsum("j,njd->nd", weights, votes), EPSILON, 1.0 - EPSILON)
    return float(np.mean(targets * np.log(p) + (1.0 - targets) * np.log(1.0 - p)))


def _gradient(weights: np.ndarray, votes: np.ndarray, targets: np.ndarray) -> np.ndarray:
    p = np.clip(np.einsum("j,njd->nd", weights, votes), EPSILON, 1.0 - EPSILON)
    dp = targets / p - (1.0 - targets) / (1.0 - p)
    return np.einsum("njd,nd->j", votes, dp) / targets.size


def tagprop_train(index: NeighborIndex, annotations: AnnotationSet, K: int, epochs: int = 50,
                  step: float = 0.5) -> TagPropModel:
    """在训练集上学习名次权重 π
    Args:
        index: 训练图像的近邻索引（使用留一近邻）
        annotations: 训练标注（与索引的训练图像对齐）
        K: 近邻数
        epochs: 梯度上升轮数
        step: 每轮的初始步长
    Returns:
        TagPropModel: 训练后的模型, log_likelihoods 记录初值与每轮之后的对数似然
    Raises:
        AppError.NonFiniteGradient: 梯度出现非有限值
    """
    if K < 1:
        AppError.InvalidParameter.raise_(f"TagProp 的近邻数 K 必须 ≥ 1, 实际为 {K}")
    if annotations.row_ids != index.train_ids:
        annotations = annotations.aligned_to(index.train_ids)
    indicator = label_indicator(annotations)
    neighbors, _ = index.training_neighbors(K)
    votes = _neighbor_labels(neighbors, indicator)
    weights = np.full(K, 1.0 / K)
    current = _log_likelihood(weights, votes, indicator)
    history = [current]
    for epoch in range(epochs):
        grad = _gradient(weights, votes, indicator)
        if not np.all(np.isfinite(grad)):
            AppError.NonFiniteGradient.raise_(f"TagProp 第 {epoch} 轮梯度出现非有限值")
        eta = step
        for _ in range(MAX_BACKTRACK):
            candidate = project_to_simplex(weights + eta * grad)
            value = _log_likelihood(candidate, votes, indicator)
            if value >= current:
                weights, current = candidate, value
                break
            eta /= 2.0
        history.append(current)
    logger.opt(colors=True).debug("TagProp 训练完成: π={} LL={}", np.round(weights, 4), current)
    return TagPropModel(weights=weights, trained=True, log_likelihoods=tuple(history))


def tagprop_scores(model: TagPropModel, neighbors: np.ndarray, indicator: np.ndarray) -> np.ndarray:
    """批量打分 f(t) = Σ_j π_j·𝕀(I_j, t)，neighbors 为按距离排好序的 Q×K 下标"""
    if neighbors.shape[1] != model.k:
        AppError.DimensionMismatch.raise_(f"近邻数 {neighbors.shape[1]} 与模型的 K={model.k} 不一致")
    return np.einsum("j,qjd->qd", model.weights, _neighbor_labels(neighbors, indicator))


def tagprop_score(model: TagPropModel, neighbors: np.ndarray, annotations: AnnotationSet) -> np.ndarray:
    """单个查询的 TagProp 相关度行"""
    return tagprop_scores(model, np.atleast_2d(np.asarray(neighbors, dtype=np.int64)),
                          label_indicator(annotations))[0]


def uniform_tagprop(K: int) -> TagPropModel:
    """未训练的均匀权重模型 π_j = 1/K"""
    return TagPropModel(weights=np.full(K, 1.0 / K), trained=False)
