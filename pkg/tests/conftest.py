"""测试公共夹具：小规模词表、特征与标注的构造函数，以及全局运行选项的隔离"""
import numpy as np
import pytest

from semspace.config import RUNTIME, WORKDIR
from semspace.model import AnnotationSet, FeatureMatrix, Vocabulary


def _ids(prefix: str, n: int) -> tuple[str, ...]:
    return tuple(f"{prefix}{i}" for i in range(n))


@pytest.fixture(autouse=True)
def isolated_runtime():
    """命令行测试会改写 RUNTIME/WORKDIR，每个测试结束后恢复"""
    saved = RUNTIME.model_dump()
    saved_error_log = WORKDIR.error_log
    yield
    for field, value in saved.items():
        setattr(RUNTIME, field, value)
    WORKDIR.error_log = saved_error_log


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def make_vocab():
    def factory(d: int) -> Vocabulary:
        return Vocabulary(labels=tuple(f"t{j}" for j in range(d)))
    return factory


@pytest.fixture
def make_features():
    def factory(values, prefix: str = "img") -> FeatureMatrix:
        values = np.asarray(values, dtype=np.float64)
        return FeatureMatrix(values=values, row_ids=_ids(prefix, values.shape[0]))
    return factory


@pytest.fixture
def make_annotations(make_vocab):
    def factory(dense, prefix: str = "img", vocab: Vocabulary | None = None) -> AnnotationSet:
        dense = np.asarray(dense, dtype=np.float64)
        vocab = vocab or make_vocab(dense.shape[1])
        return AnnotationSet.from_dense(vocab, dense, _ids(prefix, dense.shape[0]))
    return factory


@pytest.fixture
def random_tags(rng):
    """每行至少一个标签的随机二值标注矩阵"""
    def factory(n: int, d: int, p: float = 0.3) -> np.ndarray:
        tags = (rng.random((n, d)) < p).astype(np.float64)
        tags[np.arange(n), rng.integers(0, d, size=n)] = 1.0
        return tags
    return factory
