# -*- coding: utf-8 -*-
"""相关度函数注册表模块
为每种标签迁移方法提供统一的 fit / score 接口，并通过注册机制按 TransferMethod 选择实现。
流水线、交叉验证与命令行都只通过该接口使用各方法。
"""

# 标准库
from abc import ABC, abstractmethod
from typing import Sequence
# 第三方库
import numpy as np
from loguru import logger
# 项目内部模块
from ...exceptions import AppError
from ...mapping import TransferMethod
from ...model import AnnotationSet, FeatureMatrix, KernelBlock, RelevanceScores, TransferConfig
from .neighbor_index import NeighborIndex, rank_neighbors
from .relevance import knn_votes, label_indicator, tagvote_scores, twopknn_scores
from .svm import svm_scores, svm_train
from .tagprop import tagprop_scores, tagprop_train


class TransferData:
    """标签迁移的训练侧数据
    Attributes:
        index: 训练图像上的近邻索引
        annotations: 与索引训练图像对齐的训练标注
        features: 线性分类器使用的训练特征（语义空间为 ψ, 基线为原始视觉特征）
    """

    def __init__(self, index: NeighborIndex, annotations: AnnotationSet,
                 features: FeatureMatrix | None = None) -> None:
        if annotations.row_ids != index.train_ids:
            annotations = annotations.aligned_to(index.train_ids)
        if features is not None and features.row_ids != index.train_ids:
            AppError.DimensionMismatch.raise_("训练特征的图像顺序与近邻索引不一致")
        self.index = index
        self.annotations = annotations
        self.features = features

    @property
    def n(self) -> int:
        return self.index.n

    def split(self, fit_idx: Sequence[int] | np.ndarray,
              held_idx: Sequence[int] | np.ndarray) -> tuple["TransferData", "TransferQueries"]:
        """按下标切分为训练部分与留出查询（交叉验证使用）"""
        fit_idx = np.asarray(fit_idx, dtype=np.int64)
        held_idx = np.asarray(held_idx, dtype=np.int64)
        distances = self.index.self_distances()[np.ix_(held_idx, fit_idx)]
        fit = TransferData(self.index.subset(fit_idx), self.annotations.subset(fit_idx),
                           None if self.features is None else self.features.subset(fit_idx))
        held_ids = tuple(self.index.train_ids[i] for i in held_idx)
        held = TransferQueries(held_ids, distances,
                               None if self.features is None else self.features.subset(held_idx))
        return fit, held


class TransferQueries:
    """待标注的查询图像：到训练图像的距离，以及（可选的）线性分类器特征"""

    def __init__(self, row_ids: Sequence[str], distances: np.ndarray, features: FeatureMatrix | None = None) -> None:
        self.row_ids = tuple(row_ids)
        self.distances = np.asarray(distances, dtype=np.float64)
        if self.distances.ndim != 2 or self.distances.shape[0] != len(self.row_ids):
            AppError.DimensionMismatch.raise_(f"距离矩阵形状 {self.distances.shape} 与查询数 {len(self.row_ids)} 不一致")
        if features is not None and features.row_ids != self.row_ids:
            AppError.DimensionMismatch.raise_("查询特征的图像顺序与距离矩阵不一致")
        self.features = features

    @classmethod
    def from_index(cls, index: NeighborIndex, query: FeatureMatrix | KernelBlock,
                   features: FeatureMatrix | None = None) -> "TransferQueries":
        """由近邻索引计算查询距离
        Args:
            index: 训练图像的近邻索引
            query: 语义模式为查询 ψ；基线模式为查询对训练图像的视觉核块
            features: 线性分类器使用的查询特征, 语义模式下默认与 query 相同
        """
        if features is None and isinstance(query, FeatureMatrix):
            features = query
        return cls(query.row_ids, index.distances(query), features)


class AbstractRelevance(ABC):
    """相关度函数抽象基类
    提供注册机制与通用的 fit / score 流程，子类只实现具体的打分规则。
    Attributes:
        _registry: 存储已注册方法的字典
    """
    _registry: dict[TransferMethod, type["AbstractRelevance"]] = {}
    method: TransferMethod

    def __init__(self, config: TransferConfig, seed: int = 0) -> None:
        self.config = config
        self.seed = seed
        self.data: TransferData | None = None
        self.indicator: np.ndarray | None = None

    @classmethod
    def register(cls, method: TransferMethod):
        """装饰器：将子类注册到指定方法
        Args:
            method: TransferMethod 枚举值
        """
        def wrapper(subclass):
            subclass.method = method
            cls._registry[method] = subclass
            return subclass
        return wrapper

    @classmethod
    def create(cls, method: TransferMethod | str, config: TransferConfig, seed: int = 0) -> "AbstractRelevance":
        """根据方法名创建对应的相关度函数实例"""
        try:
            method = TransferMethod(method)
        except ValueError:
            AppError.InvalidParameter.raise_(f"未知的标签迁移方法 {method}")
        subclass = cls._registry.get(method)
        if subclass is None:
            AppError.InvalidParameter.raise_(f"标签迁移方法 {method.value} 没有已注册的实现")
        return subclass(config, seed)

    def fit(self, data: TransferData) -> "AbstractRelevance":
        """在训练数据上准备（或训练）相关度函数"""
        self.data = data
        self.indicator = label_indicator(data.annotations)
        self._fit(data)
        logger.opt(colors=True).debug("<g>{}</g>:训练图像 {} 张 |<g>READY</g>", self.method.value, data.n)
        return self

    def score(self, queries: TransferQueries) -> RelevanceScores:
        """为每个 (查询图像, 标签) 打分"""
        if self.data is None:
            AppError.InvalidParameter.raise_(f"{self.method.value} 尚未 fit 就调用了 score")
        if queries.distances.shape[1] != self.data.n:
            AppError.DimensionMismatch.raise_(
                f"查询距离有 {queries.distances.shape[1]} 列, 训练图像为 {self.data.n} 张")
        values = self._score(queries)
        return RelevanceScores(row_ids=queries.row_ids, vocabulary=self.data.annotations.vocabulary, values=values)

    def _neighbors(self, queries: TransferQueries) -> np.ndarray:
        neighbors, _ = rank_neighbors(queries.distances, self.config.K)
        return neighbors

    def _fit(self, data: TransferData) -> None:
        """默认无需训练"""

    @abstractmethod
    def _score(self, queries: TransferQueries) -> np.ndarray:
        """返回 Q×D 的相关度矩阵"""


@AbstractRelevance.register(TransferMethod.NNVOT)
class NnVot(AbstractRelevance):
    """近邻投票 f(t) = k_t"""

    def _score(self, queries: TransferQueries) -> np.ndarray:
        return knn_votes(self._neighbors(queries), self.indicator)


@AbstractRelevance.register(TransferMethod.TAGVOTE)
class TagVote(AbstractRelevance):
    """扣除标签先验的近邻投票 f(t) = k_t − K·n_t/|S|"""

    def _score(self, queries: TransferQueries) -> np.ndarray:
        n_t = self.indicator.sum(axis=0)
        return tagvote_scores(self._neighbors(queries), self.indicator, n_t, self.indicator.shape[0])


@AbstractRelevance.register(TransferMethod.TAGPROP)
class TagProp(AbstractRelevance):
    """按近邻名次加权的 TagProp"""

    def _fit(self, data: TransferData) -> None:
        self.model = tagprop_train(data.index, data.annotations, self.config.K,
                                   epochs=self.config.tagprop_epochs, step=self.config.tagprop_step)

    def _score(self, queries: TransferQueries) -> np.ndarray:
        return tagprop_scores(self.model, self._neighbors(queries), self.indicator)


@AbstractRelevance.register(TransferMethod.TWOPKNN)
class TwoPKnn(AbstractRelevance):
    """两阶段近邻 2PKNN"""

    def _score(self, queries: TransferQueries) -> np.ndarray:
        return twopknn_scores(queries.distances, self.indicator, self.config.m_per_label)


@AbstractRelevance.register(TransferMethod.SVM)
class Svm(AbstractRelevance):
    """逐标签线性分类器"""

    def _fit(self, data: TransferData) -> None:
        if data.features is None:
            AppError.MissingParameter.raise_("SVM 需要训练特征")
        self.model = svm_train(data.features, data.annotations, self.config.svm_lambda,
                               epochs=self.config.svm_epochs, seed=self.seed, step0=self.config.svm_step0)

    def _score(self, queries: TransferQueries) -> np.ndarray:
        if queries.features is None:
            AppError.MissingParameter.raise_("SVM 需要查询特征")
        return svm_scores(self.model, queries.features.values)
