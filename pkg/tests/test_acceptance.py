"""合成数据上的端到端性质验证：语义空间、降噪与训练子集规模"""
import copy
from pathlib import Path

import numpy as np
import pytest
import yaml
from loguru import logger

from semspace.config import WORKDIR, load_pipeline_config, parse_pipeline_config
from semspace.core.denoise import pre_propagate_tags
from semspace.core.kcca import fit_kcca
from semspace.core.kernels import arccos2_kernel, chi2_distances
from semspace.core.pipeline import run_pipeline
from semspace.core.synth import synth_dataset
from semspace.model import GramMatrix, KccaConfig, SynthSpec

SEEDS = (0, 1, 2)
METHODS = ("nnvot", "tagvote", "tagprop", "2pknn", "svm")

pytestmark = pytest.mark.slow


@pytest.fixture(autouse=True)
def silent_pipeline():
    logger.disable("semspace")
    yield
    logger.enable("semspace")


def _merge(base: dict, update: dict) -> dict:
    merged = dict(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def _config(out_dir: Path, seed: int, **sections):
    """以随包默认配置为底，覆盖指定段落；同一 seed 同时作用于合成数据与流水线"""
    raw = yaml.safe_load(WORKDIR.default_config.read_text(encoding="utf-8"))
    raw = _merge(copy.deepcopy(raw), sections)
    raw["seed"] = seed
    raw["out_dir"] = str(out_dir)
    raw["data"]["synthetic"]["seed"] = seed
    return parse_pipeline_config(raw)


def _map(out_dir: Path, seed: int, **sections) -> float:
    return run_pipeline(_config(out_dir, seed, **sections)).report.map_score


class TestCanonicalCorrelation:

    def test_independent_views_are_not_above_permutation_null(self):
        rng = np.random.default_rng(7)
        n = 100
        ids = tuple(f"img{i}" for i in range(n))
        X, Y = rng.standard_normal((n, 5)), rng.standard_normal((n, 5))
        Kv = GramMatrix(values=X @ X.T, kernel_id="linear", row_ids=ids)
        Kt_values = Y @ Y.T
        cfg = KccaConfig(kappa=0.5)

        def top_correlation(values: np.ndarray) -> float:
            Kt = GramMatrix(values=values, kernel_id="linear_labels", row_ids=ids)
            return float(fit_kcca(Kv, Kt, cfg).correlations[0])

        observed = top_correlation(Kt_values)
        null = []
        for _ in range(100):
            perm = rng.permutation(n)
            null.append(top_correlation(Kt_values[perm][:, perm]))
        assert observed < np.percentile(null, 95)


class TestSemanticNeighborhoods:

    @staticmethod
    def _jaccard(tmp_path: Path, seed: int, space: str, visual_noise: float) -> dict[int, float]:
        result = run_pipeline(_config(tmp_path / f"{space}-{seed}-{visual_noise}", seed,
                                      data={"synthetic": {"visual_noise": visual_noise}},
                                      transfer={"space": space},
                                      eval={"jaccard_k": [10, 25, 50, 100]}))
        return result.jaccard

    @pytest.mark.parametrize("seed", SEEDS)
    def test_semantic_neighbors_share_more_labels(self, tmp_path, seed):
        # 取基线 Jaccard 全部低于 0.6 的最小视觉噪声
        for visual_noise in (1.0, 2.0, 3.0):
            baseline = self._jaccard(tmp_path, seed, "baseline", visual_noise)
            if max(baseline.values()) < 0.6:
                break
        assert max(baseline.values()) < 0.6
        semantic = self._jaccard(tmp_path, seed, "semantic", visual_noise)
        for k, value in baseline.items():
            assert semantic[k] - value >= 0.05, f"K={k}"


class TestDenoising:

    @staticmethod
    def _label_dense(seed: int):
        return synth_dataset(SynthSpec(n_classes=8, images_per_class=100, feature_dim=64, vocab_size=25,
                                       labels_per_class=20, visual_noise=0.5, tag_noise_rate=0.2, seed=seed))

    @pytest.mark.parametrize("seed", SEEDS)
    def test_pre_propagation_moves_tags_towards_clean(self, seed):
        data = self._label_dense(seed)
        Kv = arccos2_kernel(data.train_features())
        clean, noisy = data.train_annotations(), data.train_annotations(noisy=True)
        denoised = pre_propagate_tags(noisy, Kv, load_pipeline_config(WORKDIR.default_config).denoise)
        closer = np.diag(chi2_distances(denoised, clean)) < np.diag(chi2_distances(noisy, clean))
        assert np.mean(closer) >= 0.9

    @pytest.mark.parametrize("seed", SEEDS)
    def test_denoised_chi2_kernel_beats_raw_label_kernel(self, tmp_path, seed):
        noisy_data = {"synthetic": {"tag_noise_rate": 0.2}, "noisy_tags": True}
        raw = _map(tmp_path / "raw", seed, data=noisy_data)
        denoised = _map(tmp_path / "denoised", seed, data=noisy_data,
                        kernels={"textual": {"kind": "exp_chi2"}}, denoise={"enabled": True})
        assert denoised >= raw


class TestSemanticTransfer:

    @pytest.mark.parametrize("seed", SEEDS)
    def test_semantic_space_is_never_worse(self, tmp_path, seed):
        gains = []
        for method in METHODS:
            scores = {space: _map(tmp_path / f"{method}-{space}", seed,
                                  transfer={"method": method, "space": space})
                      for space in ("baseline", "semantic")}
            assert scores["semantic"] >= scores["baseline"], method
            gains.append(scores["semantic"] - scores["baseline"])
        assert sum(gain > 0 for gain in gains) >= 3


class TestTrainingSubset:

    SYNTH = {"n_classes": 10, "images_per_class": 50, "test_fraction": 0.2}

    def test_map_grows_with_subset_size(self, tmp_path):
        medians = []
        for size in (50, 100, 200, 400):
            maps = [_map(tmp_path / f"{size}-{seed}", seed, data={"synthetic": self.SYNTH},
                         kcca={"train_subset": size})
                    for seed in range(5)]
            medians.append(float(np.median(maps)))
        for smaller, larger in zip(medians, medians[1:]):
            assert larger >= smaller - 0.02, medians
