# -*- coding: utf-8 -*-
"""超参数选择模块
在训练集上做 k 折交叉验证：近邻类方法搜索近邻数 K，SVM 搜索正则系数 λ，
以留出折上的 MAP 为准则。另提供在测试集上扫描 K 的辅助函数。
"""
from typing import Sequence

import numpy as np
from loguru import logger

from ...exceptions import AppError
from ...model import AnnotationSet, CvResult, TransferConfig
from ...utils import stream_rng
from ..evaluation import map_labels
from .registry import AbstractRelevance, TransferData, TransferQueries

DEFAULT_FOLDS = 3


def make_folds(n: int, folds: int, seed: int) -> list[np.ndarray]:
    """按种子打乱后均分为 folds 份（每份内下标升序）"""
    if folds < 2 or folds > n:
        AppError.InvalidParameter.raise_(f"折数 {folds} 必须位于 [2, {n}]")
    order = stream_rng(seed, "cv.folds").permutation(n)
    return [np.sort(part) for part in np.array_split(order, folds)]


def _held_out_map(method: str, config: TransferConfig, data: TransferData, folds: list[np.ndarray],
                  seed: int) -> float | None:
    values = []
    for k, held in enumerate(folds):
        fit_idx = np.sort(np.concatenate([f for j, f in enumerate(folds) if j != k]))
        fit, queries = data.split(fit_idx, held)
        truth = data.annotations.subset(held)
        if not truth.image_counts().any():
            continue
        scores = AbstractRelevance.create(method, config, seed).fit(fit).score(queries)
        values.append(map_labels(scores, truth))
    return float(np.mean(values)) if values else None


def cross_validate(data: TransferData, config: TransferConfig, seed: int = 0,
                   folds: int = DEFAULT_FOLDS) -> CvResult:
    """k 折交叉验证选择超参数
    Args:
        data: 训练侧数据（近邻索引、标注、可选特征）
        config: 迁移配置, 其中 k_grid / lambda_grid 为候选值
        seed: 划分与 SGD 所用的种子
        folds: 折数
    Returns:
        CvResult: 每个候选值的平均留出 MAP 与最优值（并列时取列表中靠前者）
    """
    method = config.method
    parts = make_folds(data.n, folds, seed)
    smallest_fit = data.n - max(p.size for p in parts)
    if method.uses_neighbors:
        parameter, field = "K", "K"
        grid = [k for k in config.k_grid if k < smallest_fit]
        skipped = sorted(set(config.k_grid) - set(grid))
        if skipped:
            logger.opt(colors=True).warning("<y>CV</y>:K={} 不小于折内训练图像数 {}, 已跳过", skipped, smallest_fit)
    else:
        parameter, field = "lambda", "svm_lambda"
        grid = list(config.lambda_grid)
    if not grid:
        AppError.InvalidConfiguration.raise_(f"{method.value} 没有可用的 {parameter} 候选值")
    scores: list[float | None] = []
    for value in grid:
        candidate = config.model_copy(update={field: value})
        score = _held_out_map(method.value, candidate, data, parts, seed)
        scores.append(score)
        logger.opt(colors=True).info("<g>CV</g>:{} {}=<c>{}</c> MAP=<c>{}</c>", method.value, parameter, value,
                                     "NA" if score is None else f"{score:.4f}")
    valid = [(s, i) for i, s in enumerate(scores) if s is not None]
    if not valid:
        AppError.InvariantViolation.raise_("所有留出折都没有正样本, 无法选择超参数")
    best = grid[max(valid, key=lambda item: (item[0], -item[1]))[1]]
    logger.opt(colors=True).info("<g>CV</g>:{} 最优 {}=<c>{}</c> |<g>SUCCESS</g>", method.value, parameter, best)
    return CvResult(method=method.value, parameter=parameter, grid=tuple(float(g) for g in grid),
                    scores=tuple(scores), best=float(best), folds=folds)


def sweep_neighbors(data: TransferData, queries: TransferQueries, truth: AnnotationSet,
                    config: TransferConfig, k_values: Sequence[int], seed: int = 0) -> dict[int, float]:
    """对一组近邻数 K 分别打分并返回测试集 MAP"""
    if not config.method.uses_neighbors:
        AppError.InvalidParameter.raise_(f"{config.method.value} 不依赖近邻数 K")
    result = {}
    for k in k_values:
        model = AbstractRelevance.create(config.method, config.model_copy(update={"K": int(k)}), seed).fit(data)
        result[int(k)] = map_labels(model.score(queries), truth)
    return result
