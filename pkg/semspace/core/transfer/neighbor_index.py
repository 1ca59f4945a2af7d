# -*- coding: utf-8 -*-
"""近邻检索模块
语义空间中使用 ψ 之间的余弦距离；基线视觉空间中使用 d = 1 − Kv，
其中 Kv 按训练块的最小/最大值归一化到 [0, 1]。检索为穷举扫描，
距离相同时按训练图像下标升序。
"""
from typing import Sequence

import numpy as np

from ...exceptions import AppError
from ...mapping import NeighborMetric
from ...model import FeatureMatrix, GramMatrix, KernelBlock


def cosine_distances(queries: np.ndarray, points: np.ndarray) -> np.ndarray:
    """余弦距离 1 − cos；零向量与任何向量的距离定义为 1"""
    qn = np.linalg.norm(queries, axis=1)
    pn = np.linalg.norm(points, axis=1)
    q = np.divide(queries, qn[:, None], out=np.zeros_like(queries), where=qn[:, None] > 0)
    p = np.divide(points, pn[:, None], out=np.zeros_like(points), where=pn[:, None] > 0)
    return np.clip(1.0 - q @ p.T, 0.0, 2.0)


class NeighborIndex:
    """训练图像上的近邻索引

    语义模式由训练集 ψ 构成（cosine_on_psi）；基线模式由训练视觉核矩阵构成（one_minus_kv）。
    两种存储恰好有一种被填充。
    """

    def __init__(self, embedding: FeatureMatrix | None = None, gram: GramMatrix | None = None,
                 similarity_range: tuple[float, float] | None = None) -> None:
        if (embedding is None) == (gram is None):
            AppError.InvalidParameter.raise_("近邻索引必须且只能由语义特征或视觉核矩阵之一构成")
        self.embedding = embedding
        self.gram = gram
        if gram is not None and similarity_range is None:
            similarity_range = (float(gram.values.min()), float(gram.values.max()))
        self.similarity_range = similarity_range

    @classmethod
    def from_embedding(cls, embedding: FeatureMatrix) -> "NeighborIndex":
        return cls(embedding=embedding)

    @classmethod
    def from_gram(cls, gram: GramMatrix) -> "NeighborIndex":
        return cls(gram=gram)

    @property
    def metric(self) -> NeighborMetric:
        return NeighborMetric.COSINE_ON_PSI if self.embedding is not None else NeighborMetric.ONE_MINUS_KV

    @property
    def train_ids(self) -> tuple[str, ...]:
        return self.embedding.row_ids if self.embedding is not None else self.gram.row_ids

    @property
    def n(self) -> int:
        return len(self.train_ids)

    def _normalized_similarity(self, kernel_rows: np.ndarray) -> np.ndarray:
        low, high = self.similarity_range
        span = high - low
        if span <= 0:
            return np.ones_like(kernel_rows)
        return np.clip((kernel_rows - low) / span, 0.0, 1.0)

    def distances(self, query: FeatureMatrix | KernelBlock | np.ndarray) -> np.ndarray:
        """查询到全部训练图像的距离矩阵 (Q×N)
        Args:
            query: 语义模式为 ψ 行（FeatureMatrix 或二维数组）；基线模式为对训练图像的核行
        """
        if isinstance(query, KernelBlock):
            if self.metric is not NeighborMetric.ONE_MINUS_KV:
                AppError.InvalidParameter.raise_("语义空间索引需要 ψ 特征作为查询, 而不是核块")
            if query.col_ids != self.train_ids:
                AppError.KernelMismatch.raise_("查询核块的列与索引的训练图像不一致")
            rows = query.values
        elif isinstance(query, FeatureMatrix):
            if self.metric is not NeighborMetric.COSINE_ON_PSI:
                AppError.InvalidParameter.raise_("基线索引需要核块作为查询, 而不是特征矩阵")
            rows = query.values
        else:
            rows = np.atleast_2d(np.asarray(query, dtype=np.float64))
        if self.metric is NeighborMetric.COSINE_ON_PSI:
            if rows.shape[1] != self.embedding.n_cols:
                AppError.DimensionMismatch.raise_(f"查询维度 {rows.shape[1]} 与索引维度 {self.embedding.n_cols} 不一致")
            return cosine_distances(rows, self.embedding.values)
        if rows.shape[1] != self.n:
            AppError.DimensionMismatch.raise_(f"查询核行长度 {rows.shape[1]} 与训练图像数 {self.n} 不一致")
        return 1.0 - self._normalized_similarity(rows)

    def self_distances(self) -> np.ndarray:
        """训练图像两两之间的距离 (N×N)"""
        if self.metric is NeighborMetric.COSINE_ON_PSI:
            return cosine_distances(self.embedding.values, self.embedding.values)
        return 1.0 - self._normalized_similarity(self.gram.values)

    def knn(self, query: FeatureMatrix | KernelBlock | np.ndarray, K: int) -> tuple[np.ndarray, np.ndarray]:
        """批量近邻检索，返回 (下标 Q×K, 距离 Q×K)"""
        return rank_neighbors(self.distances(query), K)

    def training_neighbors(self, K: int) -> tuple[np.ndarray, np.ndarray]:
        """训练图像的留一近邻（排除自身）"""
        if K > self.n - 1:
            AppError.InvalidParameter.raise_(f"留一近邻要求 K={K} 小于训练图像数 {self.n}")
        d = self.self_distances()
        np.fill_diagonal(d, np.inf)
        return rank_neighbors(d, K)

    def subset(self, indices: Sequence[int] | np.ndarray) -> "NeighborIndex":
        """只保留部分训练图像的索引（基线模式沿用原归一化范围）"""
        idx = np.asarray(indices, dtype=np.int64)
        if self.embedding is not None:
            return NeighborIndex(embedding=self.embedding.subset(idx))
        return NeighborIndex(gram=self.gram.subset(idx), similarity_range=self.similarity_range)


def rank_neighbors(distances: np.ndarray, K: int) -> tuple[np.ndarray, np.ndarray]:
    """按距离升序取前 K 个，距离相同按下标升序"""
    if K < 1 or K > distances.shape[1]:
        AppError.InvalidParameter.raise_(f"近邻数 K={K} 必须位于 [1, {distances.shape[1]}]")
    order = np.argsort(distances, axis=1, kind="stable")[:, :K]
    return order, np.take_along_axis(distances, order, axis=1)


def knn_query(index: NeighborIndex, query: np.ndarray | FeatureMatrix | KernelBlock, K: int) -> list[tuple[int, float]]:
    """单个查询的 K 近邻：[(训练图像下标, 距离), ...]，按距离升序"""
    order, dist = index.knn(query, K)
    if order.shape[0] != 1:
        AppError.InvalidParameter.raise_(f"knn_query 只接受单个查询, 实际为 {order.shape[0]} 个")
    return [(int(i), float(d)) for i, d in zip(order[0], dist[0])]
