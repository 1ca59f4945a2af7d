# -*- coding: utf-8 -*-
"""评估指标模块

以标签为中心的评估：
- Prec@n / Rec@n：每张图像预测 n 个标签，逐标签计算精确率与召回率后做无权平均
- MAP：每个标签按相关度对全部测试图像排序计算 AP，再对有正样本的标签取平均
- N+：召回率非零的标签数
以及近邻标签集合的平均 Jaccard 相似度诊断。
"""
from typing import Sequence

import numpy as np
from loguru import logger

from ..exceptions import AppError
from ..model import AnnotationSet, FeatureMatrix, KernelBlock, LabelMetrics, MetricReport, RelevanceScores
from .transfer.neighbor_index import NeighborIndex
from .transfer.relevance import annotate_topn


def _truth_matrix(truth: AnnotationSet) -> np.ndarray:
    return truth.dense() > 0


def _confusion(predicted: Sequence[Sequence[int]], truth: AnnotationSet, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    d = truth.vocabulary.size
    if not 1 <= n <= d:
        AppError.InvalidParameter.raise_(f"n={n} 必须位于 [1, D={d}]")
    if len(predicted) != truth.n_rows:
        AppError.DimensionMismatch.raise_(f"预测了 {len(predicted)} 张图像, 真值有 {truth.n_rows} 张")
    Y = _truth_matrix(truth)
    P = np.zeros_like(Y)
    for i, labels in enumerate(predicted):
        if len(labels) != n or len(set(labels)) != n:
            AppError.InvalidParameter.raise_(f"第 {i} 张图像应预测 {n} 个不同标签, 实际为 {list(labels)}")
        P[i, list(labels)] = True
    return P.sum(axis=0), Y.sum(axis=0), (P & Y).sum(axis=0)


def prec_rec_at_n(predicted: Sequence[Sequence[int]], truth: AnnotationSet,
                  n: int) -> tuple[float, float, list[LabelMetrics]]:
    """逐标签精确率/召回率及其平均
    Args:
        predicted: 每张图像预测的 n 个标签下标（与 truth 行对齐）
        truth: 测试集真值标注
        n: 每张图像预测的标签数
    Returns:
        tuple: (Prec@n, Rec@n, 逐标签明细)
    """
    n_pred, n_true, n_correct = _confusion(predicted, truth, n)
    per_label = []
    precisions, recalls = [], []
    for t, label in enumerate(truth.vocabulary.labels):
        precision = recall = None
        # 既不在真值中也从未被预测的标签不参与平均
        if n_true[t] > 0 or n_pred[t] > 0:
            precision = float(n_correct[t] / n_pred[t]) if n_pred[t] > 0 else 0.0
            precisions.append(precision)
        if n_true[t] > 0:
            recall = float(n_correct[t] / n_true[t])
            recalls.append(recall)
        per_label.append(LabelMetrics(label=label, n_true=int(n_true[t]), n_predicted=int(n_pred[t]),
                                      n_correct=int(n_correct[t]), precision=precision, recall=recall))
    prec = float(np.mean(precisions)) if precisions else 0.0
    rec = float(np.mean(recalls)) if recalls else 0.0
    return prec, rec, per_label


def average_precision(scores: np.ndarray, relevant: np.ndarray) -> float:
    """单个标签的 AP，得分相同按图像下标升序排列"""
    order = np.argsort(-scores, kind="stable")
    hits = relevant[order].astype(np.float64)
    if hits.sum() == 0:
        AppError.InvariantViolation.raise_("计算 AP 的标签没有正样本")
    precision_at_k = np.cumsum(hits) / np.arange(1, hits.size + 1)
    return float(np.sum(precision_at_k * hits) / hits.sum())


def label_average_precisions(scores: RelevanceScores, truth: AnnotationSet) -> np.ndarray:
    """每个标签的 AP，没有正样本的标签为 nan"""
    if scores.vocabulary.labels != truth.vocabulary.labels:
        AppError.VocabularyMismatch.raise_("相关度矩阵与真值标注的词表不一致")
    if truth.row_ids != scores.row_ids:
        truth = truth.aligned_to(scores.row_ids)
    Y = _truth_matrix(truth)
    aps = np.full(Y.shape[1], np.nan)
    for t in np.nonzero(Y.any(axis=0))[0]:
        aps[t] = average_precision(scores.values[:, t], Y[:, t])
    return aps


def map_labels(scores: RelevanceScores, truth: AnnotationSet) -> float:
    """MAP：对至少有一张正样本图像的标签求 AP 的平均"""
    aps = label_average_precisions(scores, truth)
    if np.all(np.isnan(aps)):
        AppError.InvariantViolation.raise_("测试集中没有任何标签带有正样本, 无法计算 MAP")
    return float(np.nanmean(aps))


def n_plus(predicted: Sequence[Sequence[int]], truth: AnnotationSet) -> int:
    """召回率非零（至少一次预测正确）的标签数"""
    if len(predicted) != truth.n_rows:
        AppError.DimensionMismatch.raise_(f"预测了 {len(predicted)} 张图像, 真值有 {truth.n_rows} 张")
    hit = set()
    for labels, actual in zip(predicted, truth.label_sets()):
        hit.update(set(labels) & actual)
    return len(hit)


def jaccard(a: frozenset[int], b: frozenset[int]) -> float:
    """两个标签集合的 Jaccard 相似度；两个空集记为 1"""
    union = len(a | b)
    if union == 0:
        return 1.0
    return len(a & b) / union


def jaccard_neighborhood(index: NeighborIndex, queries: FeatureMatrix | KernelBlock, truth: AnnotationSet,
                         train_annotations: AnnotationSet, K: int) -> float:
    """查询图像与其 K 个近邻之间标签集合的平均 Jaccard 相似度
    Args:
        index: 训练图像的近邻索引（语义空间或视觉基线）
        queries: 查询图像的 ψ 或核块
        truth: 查询图像的标注
        train_annotations: 训练图像的标注
        K: 近邻数
    Returns:
        float: 先对每张查询图像的 K 个近邻取平均, 再对查询图像取平均
    """
    if truth.row_ids != queries.row_ids:
        truth = truth.aligned_to(queries.row_ids)
    if train_annotations.row_ids != index.train_ids:
        train_annotations = train_annotations.aligned_to(index.train_ids)
    neighbors, _ = index.knn(queries, K)
    query_sets = truth.label_sets()
    train_sets = train_annotations.label_sets()
    per_query = [np.mean([jaccard(query_sets[q], train_sets[j]) for j in row]) for q, row in enumerate(neighbors)]
    return float(np.mean(per_query)) if per_query else 0.0


def evaluate(scores: RelevanceScores, truth: AnnotationSet, n: int, per_label: bool = False) -> MetricReport:
    """完整评估：MAP、Prec@n、Rec@n、N+
    Args:
        scores: 测试图像的相关度
        truth: 测试集真值标注
        n: 每张图像预测的标签数
        per_label: 报告是否附带逐标签明细
    """
    if truth.row_ids != scores.row_ids:
        truth = truth.aligned_to(scores.row_ids)
    predicted = annotate_topn(scores, n)
    prec, rec, label_rows = prec_rec_at_n(predicted, truth, n)
    aps = label_average_precisions(scores, truth)
    has_positive = ~np.isnan(aps)
    map_score = float(np.mean(aps[has_positive])) if has_positive.any() else None
    if map_score is None:
        logger.opt(colors=True).warning("<y>Evaluate</y>:测试集中没有带正样本的标签, MAP 未定义")
    if per_label:
        label_rows = [row.model_copy(update={"average_precision": None if np.isnan(ap) else float(ap)})
                      for row, ap in zip(label_rows, aps)]
    report = MetricReport(
        n=n,
        map_score=map_score,
        prec_at_n=prec,
        rec_at_n=rec,
        n_plus=sum(1 for row in label_rows if row.n_correct > 0),
        n_labels=truth.vocabulary.size,
        n_labels_precision=sum(1 for row in label_rows if row.precision is not None),
        n_labels_recall=sum(1 for row in label_rows if row.recall is not None),
        n_labels_map=int(has_positive.sum()),
        per_label=tuple(label_rows) if per_label else None,
    )
    logger.opt(colors=True).info(
        "<g>Evaluate</g>:MAP=<c>{}</c> Prec@{}=<c>{:.4f}</c> Rec@{}=<c>{:.4f}</c> N+=<c>{}</c> |<g>SUCCESS</g>",
        "NA" if map_score is None else f"{map_score:.4f}", n, prec, n, rec, report.n_plus)
    return report


def _fmt(value: float | int | None) -> str:
    if value is None:
        return "NA"
    if isinstance(value, int):
        return str(value)
    return f"{value:.6f}"


REPORT_FIELDS = ("n", "map_score", "prec_at_n", "rec_at_n", "n_plus",
                 "n_labels", "n_labels_precision", "n_labels_recall", "n_labels_map")
LABEL_FIELDS = ("label", "n_true", "n_predicted", "n_correct", "precision", "recall", "average_precision")


def render_report_tsv(report: MetricReport) -> str:
    """固定顺序的 TSV 报告：每行 `指标<TAB>数值`，可选的逐标签表格附在空行之后"""
    lines = [f"{name}\t{_fmt(getattr(report, name))}" for name in REPORT_FIELDS]
    if report.per_label is not None:
        lines.append("")
        lines.append("\t".join(LABEL_FIELDS))
        for row in report.per_label:
            lines.append("\t".join([row.label] + [_fmt(getattr(row, name)) for name in LABEL_FIELDS[1:]]))
    return "\n".join(lines) + "\n"
