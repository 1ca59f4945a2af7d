# -*- coding: utf-8 -*-
"""文本输入读取模块
负责词表、标注、词向量与标签相似度矩阵的读取，以及标注/预测结果的 TSV 写出。
所有读取函数在出错时给出文件名与行号。
"""
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np
from loguru import logger

from ..exceptions import AppError
from ..model import AnnotationSet, SimilarityMatrix, Vocabulary, WordVectorTable
from ..utils import parse_float_tokens
from .fmat_codec import infer_format, read_csv_matrix, read_fmat


def _iter_lines(path: Path) -> Iterator[tuple[int, str]]:
    """逐行读取 UTF-8 文本，返回 (行号, 去掉行尾换行的内容)"""
    path = Path(path)
    if not path.is_file():
        AppError.ResourceNotFound.raise_(f"文件不存在 —— 路径:{path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            for line_no, line in enumerate(f, start=1):
                yield line_no, line.rstrip("\r\n")
    except UnicodeDecodeError as e:
        AppError.AnnotationFormatError.raise_(f"{path} 不是合法 UTF-8 —— {e}")
    except OSError as e:
        AppError.FileIOError.raise_(f"读取文件失败 {path} —— {e}")


def load_vocabulary(path: Path) -> Vocabulary:
    """读取词表：每行一个标签，行号即标签下标（末尾空行忽略）"""
    labels = [line.strip() for _, line in _iter_lines(path)]
    while labels and not labels[-1]:
        labels.pop()
    for i, label in enumerate(labels):
        if not label:
            AppError.AnnotationFormatError.raise_(f"{path} 第 {i + 1} 行为空标签")
    if not labels:
        AppError.EmptyMatrix.raise_(f"词表 {path} 为空")
    return Vocabulary(labels=tuple(labels))


def save_vocabulary(vocab: Vocabulary, path: Path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("".join(f"{label}\n" for label in vocab.labels), encoding="utf-8")


def read_annotations(path: Path, vocab: Vocabulary) -> tuple[AnnotationSet, int]:
    """读取标注文件 "id<TAB>label1,label2,..."
    Args:
        path: 标注文件
        vocab: 词表
    Returns:
        tuple[AnnotationSet, int]: 二值标注, 以及被丢弃的词表外标签个数
    Raises:
        AppError.AnnotationFormatError: 某行缺少制表符或标识为空（带行号）
        AppError.DuplicateIdentifier: 图像标识重复（带行号）
    """
    row_ids: list[str] = []
    label_lists: list[list[int]] = []
    seen: dict[str, int] = {}
    dropped = 0
    examples: list[str] = []
    for line_no, line in _iter_lines(path):
        if not line.strip():
            continue
        if "\t" not in line:
            AppError.AnnotationFormatError.raise_(f"{path} 第 {line_no} 行缺少制表符分隔: {line[:40]!r}")
        image_id, _, label_field = line.partition("\t")
        image_id = image_id.strip()
        if not image_id:
            AppError.AnnotationFormatError.raise_(f"{path} 第 {line_no} 行图像标识为空")
        if image_id in seen:
            AppError.DuplicateIdentifier.raise_(
                f"{path} 第 {line_no} 行图像标识 {image_id!r} 与第 {seen[image_id]} 行重复")
        seen[image_id] = line_no
        indices = []
        for token in label_field.split(","):
            label = token.strip()
            if not label:
                continue
            position = vocab.index.get(label)
            if position is None:
                dropped += 1
                if len(examples) < 5:
                    examples.append(label)
                continue
            indices.append(position)
        row_ids.append(image_id)
        label_lists.append(indices)
    if dropped:
        logger.opt(colors=True).warning(
            "<y>Annotations</y>:{} 中有 <y>{}</y> 个词表外标签被丢弃, 例如 {}", path, dropped, examples)
    return AnnotationSet.from_label_lists(vocab, label_lists, row_ids), dropped


def load_annotations(path: Path, vocab: Vocabulary) -> AnnotationSet:
    annotations, _ = read_annotations(path, vocab)
    return annotations


def write_annotations(annotations: AnnotationSet, path: Path) -> None:
    """写出二值标注为 "id<TAB>label1,label2,..."（标签按词表顺序）"""
    if not annotations.binary:
        AppError.InvalidParameter.raise_("只有二值标注可以写为标注文本, 实值标注请保存为矩阵")
    labels = annotations.vocabulary.labels
    lines = [f"{rid}\t{','.join(labels[j] for j, _ in row)}\n"
             for rid, row in zip(annotations.row_ids, annotations.rows())]
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("".join(lines), encoding="utf-8")


def load_word_vectors(path: Path) -> WordVectorTable:
    """读取文本词向量 "label v1 v2 ... vP"；兼容首行为 "个数 维度" 的 word2vec 文本头"""
    labels: list[str] = []
    vectors: list[np.ndarray] = []
    first = True
    for line_no, line in _iter_lines(path):
        tokens = line.split()
        if not tokens:
            continue
        if first and len(tokens) == 2 and all(t.isdigit() for t in tokens):
            first = False
            continue
        first = False
        if len(tokens) < 2:
            AppError.MatrixFormatError.raise_(f"{path} 第 {line_no} 行没有向量分量")
        vector = parse_float_tokens(tokens[1:], f"{path} 第 {line_no} 行")
        if vectors and vector.size != vectors[0].size:
            AppError.DimensionMismatch.raise_(
                f"{path} 第 {line_no} 行向量维度 {vector.size}, 首行为 {vectors[0].size}")
        labels.append(tokens[0])
        vectors.append(vector)
    if not vectors:
        AppError.EmptyMatrix.raise_(f"词向量文件 {path} 为空")
    return WordVectorTable(labels=tuple(labels), vectors=np.vstack(vectors))


def load_similarity(path: Path, vocab: Vocabulary) -> SimilarityMatrix:
    """读取标签相似度矩阵 S（FMAT 或无标识列的 CSV），与词表配对并对称化"""
    path = Path(path)
    if not path.is_file():
        AppError.ResourceNotFound.raise_(f"相似度矩阵文件不存在 —— 路径:{path}")
    if infer_format(path) == "csv":
        values, _ = read_csv_matrix(path, with_ids=False)
    else:
        values, ids = read_fmat(path)
        if any(ids) and tuple(ids) != vocab.labels:
            AppError.VocabularyMismatch.raise_(f"{path} 的行标识与词表不一致")
    if values.shape[0] != values.shape[1]:
        AppError.DimensionMismatch.raise_(f"相似度矩阵必须为方阵, 实际为 {values.shape}")
    return SimilarityMatrix(vocabulary=vocab, values=values)


def write_topn_tsv(path: Path, row_ids: Sequence[str], vocab: Vocabulary,
                   predictions: Sequence[Sequence[tuple[int, float]]]) -> None:
    """写出预测结果 "image_id<TAB>label:score,label:score,..."（按排名顺序）"""
    lines = []
    for rid, ranked in zip(row_ids, predictions):
        body = ",".join(f"{vocab.labels[j]}:{float(score)!r}" for j, score in ranked)
        lines.append(f"{rid}\t{body}\n")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("".join(lines), encoding="utf-8")


def read_topn_tsv(path: Path, vocab: Vocabulary) -> tuple[tuple[str, ...], list[list[tuple[int, float]]]]:
    """读取 write_topn_tsv 写出的预测结果"""
    row_ids: list[str] = []
    predictions: list[list[tuple[int, float]]] = []
    for line_no, line in _iter_lines(path):
        if not line.strip():
            continue
        image_id, sep, body = line.partition("\t")
        if not sep:
            AppError.AnnotationFormatError.raise_(f"{path} 第 {line_no} 行缺少制表符分隔")
        ranked = []
        for item in filter(None, body.split(",")):
            label, colon, score = item.rpartition(":")
            if not colon:
                AppError.AnnotationFormatError.raise_(f"{path} 第 {line_no} 行条目 {item!r} 缺少分数")
            try:
                ranked.append((vocab.index_of(label), float(score)))
            except ValueError:
                AppError.AnnotationFormatError.raise_(f"{path} 第 {line_no} 行分数 {score!r} 无法解析")
        row_ids.append(image_id)
        predictions.append(ranked)
    return tuple(row_ids), predictions
