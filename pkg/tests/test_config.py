from pathlib import Path

import pytest
import yaml

from semspace.config import RUNTIME, WORKDIR, ConfigLoader, load_pipeline_config, parse_pipeline_config
from semspace.exceptions import AppError
from semspace.mapping import KernelKind, TransferMethod
from semspace.model import KernelSpec
from semspace.utils import derive_seed, stream_rng

FILE_DATA = {
    "vocab": "data/vocab.txt",
    "train_features": "data/train.fmat",
    "test_features": "data/test.fmat",
    "train_annotations": "data/train.txt",
    "test_annotations": "/abs/test.txt",
}


def _error_code(call):
    with pytest.raises(AppError.Exception) as info:
        call()
    return info.value.error_code


class TestPipelineConfig:

    def test_relative_paths_resolve_against_config_dir(self, tmp_path):
        cfg = parse_pipeline_config({"data": FILE_DATA}, base_dir=tmp_path)
        assert cfg.data.vocab == tmp_path / "data" / "vocab.txt"
        assert cfg.data.test_annotations == Path("/abs/test.txt")
        assert cfg.transfer.method is TransferMethod.NNVOT
        assert cfg.kernels.visual.kind is KernelKind.ARCCOS2

    def test_yaml_file(self, tmp_path):
        path = tmp_path / "config.yaml"
        path.write_text(yaml.safe_dump({"seed": 5, "data": FILE_DATA, "transfer": {"method": "2pknn", "K": 7}}),
                        encoding="utf-8")
        cfg = load_pipeline_config(path)
        assert cfg.seed == 5
        assert cfg.transfer.method is TransferMethod.TWOPKNN
        assert cfg.transfer.K == 7
        assert cfg.data.train_features == tmp_path / "data" / "train.fmat"

    def test_missing_file(self, tmp_path):
        assert _error_code(lambda: load_pipeline_config(tmp_path / "none.yaml")) is AppError.ConfigFileReadError

    def test_invalid_field_value(self):
        raw = {"data": FILE_DATA, "kcca": {"kappa": 2.0}}
        with pytest.raises(AppError.Exception) as info:
            parse_pipeline_config(raw)
        assert info.value.error_code is AppError.InvalidConfiguration
        assert "kcca.kappa" in str(info.value)

    def test_missing_data_fields(self):
        raw = {"data": {"vocab": "v.txt"}}
        assert _error_code(lambda: parse_pipeline_config(raw)) is AppError.MissingConfiguration

    def test_synthetic_source_needs_no_paths(self):
        cfg = parse_pipeline_config({"data": {"synthetic": {"n_classes": 3}}}, base_dir=Path("/tmp"))
        assert cfg.data.synthetic.n_classes == 3
        assert cfg.data.vocab is None

    def test_denoise_requires_exp_chi2(self):
        raw = {"data": FILE_DATA, "denoise": {"enabled": True}}
        assert _error_code(lambda: parse_pipeline_config(raw)) is AppError.InvalidConfiguration
        raw = {"data": FILE_DATA, "kernels": {"textual": {"kind": "exp_chi2"}}}
        assert _error_code(lambda: parse_pipeline_config(raw)) is AppError.InvalidConfiguration
        raw = {"data": FILE_DATA, "kernels": {"textual": {"kind": "exp_chi2"}}, "denoise": {"enabled": True, "R": 5}}
        assert parse_pipeline_config(raw).denoise.R == 5

    def test_visual_kernel_must_be_arccos(self):
        raw = {"data": FILE_DATA, "kernels": {"visual": {"kind": "linear_labels"}}}
        assert _error_code(lambda: parse_pipeline_config(raw)) is AppError.InvalidConfiguration

    def test_default_config_resource(self):
        cfg = load_pipeline_config(WORKDIR.default_config)
        assert cfg.data.synthetic is not None
        assert cfg.kcca.kappa == 0.5
        assert cfg.transfer.k_grid == [5, 10, 25, 50]


class TestKernelSpec:

    def test_kernel_ids(self):
        assert KernelSpec(kind=KernelKind.ARCCOS2).kernel_id == "arccos2(n=2)"
        assert KernelSpec(kind=KernelKind.LINEAR_LABELS).kernel_id == "linear_labels()"
        assert KernelSpec(kind=KernelKind.EXP_CHI2).kernel_id == "exp_chi2(C=auto)"
        assert KernelSpec(kind=KernelKind.EXP_CHI2, params={"C": 0.5}).kernel_id == "exp_chi2(C=0.5)"

    def test_unknown_parameter(self):
        assert _error_code(lambda: KernelSpec(kind=KernelKind.ARCCOS2, params={"C": 1.0})) \
            is AppError.InvalidConfiguration

    def test_arccos_order_is_fixed(self):
        assert _error_code(lambda: KernelSpec(kind=KernelKind.ARCCOS2, params={"n": 1.0})) \
            is AppError.InvalidConfiguration

    def test_chi2_scale_must_be_positive(self):
        assert _error_code(lambda: KernelSpec(kind=KernelKind.EXP_CHI2, params={"C": -1.0})) \
            is AppError.InvalidConfiguration


class TestRuntimeOptions:

    def test_environment_variables(self, monkeypatch):
        monkeypatch.setenv("SEMSPACE_THREADS", "3")
        monkeypatch.setenv("SEMSPACE_PROGRESS", "true")
        ConfigLoader.create_and_load()
        assert RUNTIME.threads == 3
        assert RUNTIME.progress is True

    def test_env_file_and_overrides(self, tmp_path, monkeypatch):
        # dotenv 会写入 os.environ，先登记以便测试结束后撤销
        monkeypatch.setenv("SEMSPACE_SEED", "")
        monkeypatch.delenv("SEMSPACE_SEED")
        env_file = tmp_path / ".env"
        env_file.write_text("SEMSPACE_SEED=42\n", encoding="utf-8")
        ConfigLoader.create_and_load(env_file, overrides={"threads": 2, "cache_dir": None})
        assert RUNTIME.seed == 42
        assert RUNTIME.threads == 2
        assert RUNTIME.cache_dir is None

    def test_missing_env_file(self, tmp_path):
        assert _error_code(lambda: ConfigLoader.create_and_load(tmp_path / "none.env")) \
            is AppError.ConfigFileReadError

    def test_invalid_override(self):
        assert _error_code(lambda: ConfigLoader.create_and_load(overrides={"threads": 0})) \
            is AppError.InvalidConfiguration


class TestRandomStreams:

    def test_derive_seed_is_deterministic(self):
        assert derive_seed(7, "svm.shuffle") == derive_seed(7, "svm.shuffle")
        assert derive_seed(7, "svm.shuffle") != derive_seed(7, "cv.folds")
        assert derive_seed(7, "svm.shuffle") != derive_seed(8, "svm.shuffle")

    def test_streams_reproduce(self):
        a = stream_rng(3, "synth.labels").random(5)
        b = stream_rng(3, "synth.labels").random(5)
        assert (a == b).all()
