# -*- coding: utf-8 -*-
"""相关度函数模块
由近邻的标签为每个 (图像, 标签) 打分：
- f_knn: 近邻中带有标签 t 的图像数 k_t
- f_tagvote: k_t − K·n_t/|S|，扣除标签在整个集合中的先验频率
- f_2pknn: 两阶段近邻，先为每个标签取 M 个最近的正样本，再在并集上按 exp(−d) 投票
以及 top-n 标注。单行函数与批量函数结果一致。
"""
from typing import Sequence

import numpy as np

from ...exceptions import AppError
from ...model import AnnotationSet, RelevanceScores, Vocabulary


def label_indicator(annotations: AnnotationSet) -> np.ndarray:
    """稠密 0/1 指示矩阵 𝕀(I_j, t)（实值标注按非零计）"""
    return (annotations.dense() > 0).astype(np.float64)


def _check_vocab(annotations: AnnotationSet, vocab: Vocabulary | None) -> None:
    if vocab is not None and vocab.labels != annotations.vocabulary.labels:
        AppError.VocabularyMismatch.raise_("训练标注的词表与目标词表不一致")


def f_knn(neighbors: Sequence[int] | np.ndarray, annotations: AnnotationSet,
          vocab: Vocabulary | None = None) -> np.ndarray:
    """单个查询的近邻投票 f(t) = k_t"""
    _check_vocab(annotations, vocab)
    return knn_votes(np.atleast_2d(np.asarray(neighbors, dtype=np.int64)), label_indicator(annotations))[0]


def knn_votes(neighbors: np.ndarray, indicator: np.ndarray) -> np.ndarray:
    """批量近邻投票：neighbors 为 Q×K 下标，返回 Q×D 的 k_t"""
    return indicator[neighbors].sum(axis=1)


def f_tagvote(neighbors: Sequence[int] | np.ndarray, annotations: AnnotationSet, vocab: Vocabulary | None = None,
              n_t: np.ndarray | None = None, S_size: int | None = None) -> np.ndarray:
    """单个查询的 TagVote: f(t) = k_t − K·n_t/|S|
    Args:
        neighbors: K 个近邻的训练图像下标
        annotations: 训练标注
        vocab: 词表（可选, 用于校验）
        n_t: 每个标签在整个集合中的图像数, 默认由 annotations 计算
        S_size: 集合大小 |S|, 默认为 annotations 的图像数
    """
    _check_vocab(annotations, vocab)
    indicator = label_indicator(annotations)
    n_t = indicator.sum(axis=0) if n_t is None else np.asarray(n_t, dtype=np.float64)
    S_size = indicator.shape[0] if S_size is None else S_size
    return tagvote_scores(np.atleast_2d(np.asarray(neighbors, dtype=np.int64)), indicator, n_t, S_size)[0]


def tagvote_scores(neighbors: np.ndarray, indicator: np.ndarray, n_t: np.ndarray, S_size: int) -> np.ndarray:
    if S_size <= 0:
        AppError.InvalidParameter.raise_("TagVote 需要非空的训练集合 |S| > 0")
    K = neighbors.shape[1]
    return knn_votes(neighbors, indicator) - K * np.asarray(n_t, dtype=np.float64)[None, :] / S_size


def twopknn_scores(distances: np.ndarray, indicator: np.ndarray, m_per_label: int) -> np.ndarray:
    """批量 2PKNN 打分
    Args:
        distances: Q×N 查询到训练图像的距离
        indicator: N×D 训练标签指示矩阵
        m_per_label: 第一阶段每个标签保留的最近正样本数
    Returns:
        np.ndarray: Q×D 的相关度 Σ_{j∈𝒩(I)} exp(−d_j)·𝕀(I_j, t)
    """
    if indicator.shape[1] == 0:
        AppError.InvalidParameter.raise_("2PKNN 需要非空词表")
    if m_per_label < 1:
        AppError.InvalidParameter.raise_(f"m_per_label 必须 ≥ 1, 实际为 {m_per_label}")
    scores = np.zeros((distances.shape[0], indicator.shape[1]))
    for q, row in enumerate(distances):
        order = np.argsort(row, kind="stable")
        ranked = indicator[order]
        # 每个标签沿距离顺序的前 M 个正样本
        first_m = (ranked > 0) & (np.cumsum(ranked, axis=0) <= m_per_label)
        members = first_m.any(axis=1)
        scores[q] = (np.exp(-row[order]) * members) @ ranked
    return scores


def f_2pknn(query_distances: np.ndarray, annotations: AnnotationSet, m_per_label: int) -> np.ndarray:
    """单个查询的 2PKNN 相关度行"""
    return twopknn_scores(np.atleast_2d(np.asarray(query_distances, dtype=np.float64)),
                          label_indicator(annotations), m_per_label)[0]


def annotate_topn(scores: RelevanceScores, n: int) -> list[list[int]]:
    """每张图像取得分最高的 n 个标签下标，得分相同按标签下标升序"""
    d = scores.vocabulary.size
    if not 1 <= n <= d:
        AppError.InvalidParameter.raise_(f"n={n} 必须位于 [1, D={d}]")
    order = np.argsort(-scores.values, axis=1, kind="stable")[:, :n]
    return [[int(j) for j in row] for row in order]


def ranked_predictions(scores: RelevanceScores, n: int) -> list[list[tuple[int, float]]]:
    """top-n 标签连同得分，用于写出 TSV"""
    return [[(j, float(scores.values[i, j])) for j in row] for i, row in enumerate(annotate_topn(scores, n))]
