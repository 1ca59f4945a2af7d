# -*- coding: utf-8 -*-
"""标签预传播（去噪）模块
把每张训练图像的原始用户标签替换为其 R 个视觉近邻标签向量的加权平均，
权重 x_k = exp(−d²_ik/σ)，d²_ik = Kv[i,i] + Kv[k,k] − 2·Kv[i,k]（截断到 0）。
只做一轮传播，只作用于训练图像。
"""
import numpy as np
from loguru import logger

from ..exceptions import AppError
from ..model import AnnotationSet, DenoiseConfig, GramMatrix


def visual_neighbors(Kv: GramMatrix, R: int) -> np.ndarray:
    """每张图像按 Kv 取相似度最大的 R 个近邻（不含自身，相同值按下标升序）"""
    values = np.array(Kv.values, copy=True)
    np.fill_diagonal(values, -np.inf)
    return np.argsort(-values, axis=1, kind="stable")[:, :R]


def pre_propagate_tags(tags: AnnotationSet, Kv: GramMatrix, cfg: DenoiseConfig) -> AnnotationSet:
    """对训练标签做一次视觉加权预传播
    Args:
        tags: 训练图像的二值用户标签
        Kv: 同一批训练图像的视觉核矩阵
        cfg: 去噪配置（R 与 σ）
    Returns:
        AnnotationSet: 实值标签，每行是近邻标签向量的凸组合
    Raises:
        AppError.InvalidConfiguration: N ≤ R
    """
    if tags.row_ids != Kv.row_ids:
        if len(tags.row_ids) != Kv.n:
            AppError.DimensionMismatch.raise_(f"标签有 {len(tags.row_ids)} 张图像, 视觉核为 {Kv.n} 张")
        tags = tags.aligned_to(Kv.row_ids)
    n = Kv.n
    if n <= cfg.R:
        AppError.InvalidConfiguration.raise_(f"去噪要求训练图像数 N={n} 大于近邻数 R={cfg.R}")
    neighbors = visual_neighbors(Kv, cfg.R)
    diag = np.diag(Kv.values)
    rows = np.arange(n)[:, None]
    d2 = np.maximum(diag[:, None] + diag[neighbors] - 2.0 * Kv.values[rows, neighbors], 0.0)
    if cfg.sigma == "auto":
        sigma = float(d2.mean())
        if sigma <= 0:
            logger.opt(colors=True).warning("<y>Denoise</y>:近邻平方距离均值为 0, σ 退回 1")
            sigma = 1.0
    else:
        sigma = float(cfg.sigma)
    # 每行减去最小距离后再取指数，归一化后结果不变
    weights = np.exp(-(d2 - d2.min(axis=1, keepdims=True)) / sigma)
    weights /= weights.sum(axis=1, keepdims=True)
    Y = tags.dense()
    denoised = np.einsum("ik,ikd->id", weights, Y[neighbors])
    logger.opt(colors=True).info("<g>Denoise</g>:预传播 R=<c>{}</c> σ=<c>{:.6g}</c> |<g>SUCCESS</g>", cfg.R, sigma)
    return AnnotationSet.from_dense(tags.vocabulary, denoised, tags.row_ids)
