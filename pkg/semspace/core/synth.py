# -*- coding: utf-8 -*-
"""合成多模态数据生成模块

每个类别有一个随机原型特征与固定的标签子集；
图像 = 原型 + 高斯噪声 σ_v，干净标注即类别标签，带噪标注按概率 p_flip 翻转每一位。
所有随机性来自 SynthSpec.seed 派生的独立流，同一规格两次生成结果逐位相同。
"""
from pathlib import Path

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict

from ..model import AnnotationSet, FeatureMatrix, SynthSpec, Vocabulary
from ..storage import save_feature_matrix, save_vocabulary, write_annotations
from ..utils import stream_rng


class SynthDataset(BaseModel):
    """合成数据集：全部图像的特征与标注，以及训练/测试划分（下标升序）"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    spec: SynthSpec
    vocabulary: Vocabulary
    features: FeatureMatrix
    clean: AnnotationSet
    noisy: AnnotationSet
    classes: np.ndarray
    train_idx: np.ndarray
    test_idx: np.ndarray

    def train_features(self) -> FeatureMatrix:
        return self.features.subset(self.train_idx)

    def test_features(self) -> FeatureMatrix:
        return self.features.subset(self.test_idx)

    def train_annotations(self, noisy: bool = False) -> AnnotationSet:
        return (self.noisy if noisy else self.clean).subset(self.train_idx)

    def test_annotations(self) -> AnnotationSet:
        return self.clean.subset(self.test_idx)


def synth_dataset(spec: SynthSpec) -> SynthDataset:
    """按规格生成合成数据集
    Args:
        spec: 类别数、每类图像数、特征维度、词表大小、每类标签数、噪声与种子
    Returns:
        SynthDataset: 特征、干净标注、带噪标注与划分
    """
    n = spec.n_classes * spec.images_per_class
    vocab = Vocabulary(labels=tuple(f"label{j:03d}" for j in range(spec.vocab_size)))
    row_ids = tuple(f"img{i:05d}" for i in range(n))

    prototypes = stream_rng(spec.seed, "synth.prototypes").standard_normal((spec.n_classes, spec.feature_dim))
    label_rng = stream_rng(spec.seed, "synth.labels")
    class_labels = [np.sort(label_rng.choice(spec.vocab_size, size=spec.labels_per_class, replace=False))
                    for _ in range(spec.n_classes)]
    classes = np.repeat(np.arange(spec.n_classes), spec.images_per_class)

    noise = stream_rng(spec.seed, "synth.visual_noise").standard_normal((n, spec.feature_dim))
    features = prototypes[classes] + spec.visual_noise * noise

    clean = np.zeros((n, spec.vocab_size))
    for i, c in enumerate(classes):
        clean[i, class_labels[c]] = 1.0
    flips = stream_rng(spec.seed, "synth.tag_noise").random((n, spec.vocab_size)) < spec.tag_noise_rate
    noisy = np.where(flips, 1.0 - clean, clean)

    order = stream_rng(spec.seed, "synth.split").permutation(n)
    n_test = int(np.floor(n * spec.test_fraction))
    test_idx = np.sort(order[:n_test])
    train_idx = np.sort(order[n_test:])

    logger.opt(colors=True).info(
        "<g>Synth</g>:类别 <c>{}</c> 图像 <c>{}</c> (训练 {} / 测试 {}) 词表 <c>{}</c> |<g>SUCCESS</g>",
        spec.n_classes, n, train_idx.size, test_idx.size, spec.vocab_size)
    return SynthDataset(
        spec=spec,
        vocabulary=vocab,
        features=FeatureMatrix(values=features, row_ids=row_ids),
        clean=AnnotationSet.from_dense(vocab, clean, row_ids),
        noisy=AnnotationSet.from_dense(vocab, noisy, row_ids),
        classes=classes,
        train_idx=train_idx,
        test_idx=test_idx,
    )


def write_synth(dataset: SynthDataset, out_dir: Path) -> dict[str, Path]:
    """把合成数据写成流水线可直接读取的文件，返回各文件路径"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "vocab": out_dir / "vocab.txt",
        "train_features": out_dir / "train_features.fmat",
        "test_features": out_dir / "test_features.fmat",
        "train_annotations": out_dir / "train_annotations.txt",
        "train_noisy_annotations": out_dir / "train_noisy_annotations.txt",
        "test_annotations": out_dir / "test_annotations.txt",
    }
    save_vocabulary(dataset.vocabulary, paths["vocab"])
    save_feature_matrix(dataset.train_features(), paths["train_features"], dtype="f64")
    save_feature_matrix(dataset.test_features(), paths["test_features"], dtype="f64")
    write_annotations(dataset.train_annotations(), paths["train_annotations"])
    write_annotations(dataset.train_annotations(noisy=True), paths["train_noisy_annotations"])
    write_annotations(dataset.test_annotations(), paths["test_annotations"])
    logger.opt(colors=True).info("<g>Synth</g>:数据已写入 <c>{}</c> |<g>SUCCESS</g>", out_dir)
    return paths
