"""标签迁移子包
语义空间（或视觉基线空间）中的近邻检索、五种相关度函数、方法注册表与交叉验证。
"""
from .neighbor_index import NeighborIndex, cosine_distances, knn_query, rank_neighbors
from .relevance import (
    label_indicator, f_knn, knn_votes, f_tagvote, tagvote_scores, f_2pknn, twopknn_scores,
    annotate_topn, ranked_predictions,
)
from .tagprop import project_to_simplex, tagprop_train, tagprop_score, tagprop_scores, uniform_tagprop
from .svm import svm_train, svm_score, svm_scores, svm_objective
from .registry import AbstractRelevance, TransferData, TransferQueries, NnVot, TagVote, TagProp, TwoPKnn, Svm
from .cross_validation import cross_validate, make_folds, sweep_neighbors

__all__ = [
    "NeighborIndex", "cosine_distances", "knn_query", "rank_neighbors",
    "label_indicator", "f_knn", "knn_votes", "f_tagvote", "tagvote_scores", "f_2pknn", "twopknn_scores",
    "annotate_topn", "ranked_predictions",
    "project_to_simplex", "tagprop_train", "tagprop_score", "tagprop_scores", "uniform_tagprop",
    "svm_train", "svm_score", "svm_scores", "svm_objective",
    "AbstractRelevance", "TransferData", "TransferQueries", "NnVot", "TagVote", "TagProp", "TwoPKnn", "Svm",
    "cross_validate", "make_folds", "sweep_neighbors",
]
