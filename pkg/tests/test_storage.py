import struct

import numpy as np
import pytest
import yaml

from semspace.exceptions import AppError
from semspace.model import GramMatrix, KernelBlock, RelevanceScores, SemanticProjector
from semspace.storage import (
    KernelCache, decode_fmat, encode_fmat, load_feature_matrix, load_gram, load_kernel_block, load_projector,
    load_scores, load_similarity, load_vocabulary, load_word_vectors, read_annotations, read_csv_matrix,
    read_topn_tsv, save_feature_matrix, save_gram, save_kernel_block, save_projector, save_scores,
    save_vocabulary, sidecar_path, write_csv_matrix, write_topn_tsv,
)
from semspace.storage.projector_store import _write_payload


def _error_code(call):
    with pytest.raises(AppError.Exception) as info:
        call()
    return info.value.error_code


class TestFmat:

    def test_f64_is_exact(self, rng):
        values = rng.standard_normal((4, 3))
        decoded, ids = decode_fmat(encode_fmat(values, ("a", "b", "c", "d"), "f64"))
        assert np.array_equal(decoded, values)
        assert ids == ("a", "b", "c", "d")

    def test_f32_is_rounded(self, rng):
        values = rng.standard_normal((3, 5))
        decoded, _ = decode_fmat(encode_fmat(values, ("a", "b", "c"), "f32"))
        assert decoded.dtype == np.float64
        np.testing.assert_allclose(decoded, values, rtol=1e-6)

    def test_truncated_body(self):
        payload = encode_fmat(np.ones((2, 2)), ("a", "b"))
        assert _error_code(lambda: decode_fmat(payload[:-6])) is AppError.MatrixFormatError
        assert _error_code(lambda: decode_fmat(payload[:10])) is AppError.MatrixFormatError

    def test_trailing_bytes(self):
        payload = encode_fmat(np.ones((2, 2)), ("a", "b")) + b"\x00"
        assert _error_code(lambda: decode_fmat(payload)) is AppError.MatrixFormatError

    def test_zero_rows(self):
        payload = struct.pack("<4sIBQQ", b"FMAT", 1, 1, 0, 3) + struct.pack("<Q", 0)
        assert _error_code(lambda: decode_fmat(payload)) is AppError.EmptyMatrix

    def test_bad_magic_and_version(self):
        payload = encode_fmat(np.ones((1, 1)), ("a",))
        assert _error_code(lambda: decode_fmat(b"XMAT" + payload[4:])) is AppError.MatrixFormatError
        bumped = payload[:4] + struct.pack("<I", 2) + payload[8:]
        assert _error_code(lambda: decode_fmat(bumped)) is AppError.VersionMismatch

    def test_feature_matrix_files(self, tmp_path, rng, make_features):
        fm = make_features(rng.standard_normal((5, 4)))
        save_feature_matrix(fm, tmp_path / "x.fmat", dtype="f64")
        assert np.array_equal(load_feature_matrix(tmp_path / "x.fmat").values, fm.values)
        save_feature_matrix(fm, tmp_path / "x.csv")
        loaded = load_feature_matrix(tmp_path / "x.csv")
        assert np.array_equal(loaded.values, fm.values)
        assert loaded.row_ids == fm.row_ids

    def test_missing_feature_file(self, tmp_path):
        assert _error_code(lambda: load_feature_matrix(tmp_path / "nope.fmat")) is AppError.ResourceNotFound


class TestCsv:

    def test_repr_roundtrip_is_exact(self, tmp_path):
        values = np.array([[0.1, 1e-300, -2.5], [1 / 3, 7.0, 0.0]])
        write_csv_matrix(tmp_path / "m.csv", values, ("x", "y"))
        decoded, ids = read_csv_matrix(tmp_path / "m.csv")
        assert np.array_equal(decoded, values)
        assert ids == ("x", "y")

    def test_ragged_rows(self, tmp_path):
        (tmp_path / "m.csv").write_text("a,1,2\nb,3\n", encoding="utf-8")
        assert _error_code(lambda: read_csv_matrix(tmp_path / "m.csv")) is AppError.DimensionMismatch

    def test_non_finite_value(self, tmp_path):
        (tmp_path / "m.csv").write_text("a,1,nan\n", encoding="utf-8")
        assert _error_code(lambda: read_csv_matrix(tmp_path / "m.csv")) is AppError.NonFiniteValue

    def test_unparseable_value(self, tmp_path):
        (tmp_path / "m.csv").write_text("a,1,abc\n", encoding="utf-8")
        assert _error_code(lambda: read_csv_matrix(tmp_path / "m.csv")) is AppError.MatrixFormatError


class TestTextInputs:

    def test_annotations_drop_unknown_labels(self, tmp_path, make_vocab):
        path = tmp_path / "ann.txt"
        path.write_text("img0\tt0,t2,zebra\nimg1\t\n\nimg2\tt1, t1\n", encoding="utf-8")
        annotations, dropped = read_annotations(path, make_vocab(3))
        assert dropped == 1
        assert annotations.row_ids == ("img0", "img1", "img2")
        np.testing.assert_array_equal(annotations.dense(), [[1, 0, 1], [0, 0, 0], [0, 1, 0]])
        assert annotations.binary

    def test_annotations_missing_tab(self, tmp_path, make_vocab):
        path = tmp_path / "ann.txt"
        path.write_text("img0\tt0\nimg1 t1\n", encoding="utf-8")
        with pytest.raises(AppError.Exception) as info:
            read_annotations(path, make_vocab(2))
        assert info.value.error_code is AppError.AnnotationFormatError
        assert "2" in str(info.value)

    def test_annotations_duplicate_identifier(self, tmp_path, make_vocab):
        path = tmp_path / "ann.txt"
        path.write_text("img0\tt0\nimg0\tt1\n", encoding="utf-8")
        assert _error_code(lambda: read_annotations(path, make_vocab(2))) is AppError.DuplicateIdentifier

    def test_vocabulary_roundtrip(self, tmp_path, make_vocab):
        vocab = make_vocab(4)
        save_vocabulary(vocab, tmp_path / "vocab.txt")
        assert load_vocabulary(tmp_path / "vocab.txt").labels == vocab.labels

    def test_empty_vocabulary(self, tmp_path):
        (tmp_path / "vocab.txt").write_text("\n", encoding="utf-8")
        assert _error_code(lambda: load_vocabulary(tmp_path / "vocab.txt")) is AppError.EmptyMatrix

    def test_word_vectors_with_header(self, tmp_path):
        path = tmp_path / "vectors.txt"
        path.write_text("2 3\nsky 0.1 0.2 0.3\nsea 1 2 3\n", encoding="utf-8")
        table = load_word_vectors(path)
        assert table.labels == ("sky", "sea")
        np.testing.assert_allclose(table.vectors, [[0.1, 0.2, 0.3], [1.0, 2.0, 3.0]])

    def test_word_vectors_ragged(self, tmp_path):
        path = tmp_path / "vectors.txt"
        path.write_text("sky 0.1 0.2\nsea 1\n", encoding="utf-8")
        assert _error_code(lambda: load_word_vectors(path)) is AppError.DimensionMismatch

    def test_similarity_csv(self, tmp_path, make_vocab):
        path = tmp_path / "S.csv"
        write_csv_matrix(path, [[1.0, 0.5], [0.5, 1.0]])
        S = load_similarity(path, make_vocab(2))
        np.testing.assert_allclose(S.values, [[1.0, 0.5], [0.5, 1.0]])

    def test_topn_tsv(self, tmp_path, make_vocab):
        vocab = make_vocab(3)
        predictions = [[(2, np.float64(0.75)), (0, 0.25)], [(1, 1.0), (2, 0.0)]]
        write_topn_tsv(tmp_path / "top.tsv", ("a", "b"), vocab, predictions)
        assert (tmp_path / "top.tsv").read_text(encoding="utf-8").splitlines()[0] == "a\tt2:0.75,t0:0.25"
        ids, decoded = read_topn_tsv(tmp_path / "top.tsv", vocab)
        assert ids == ("a", "b")
        assert decoded == [[(2, 0.75), (0, 0.25)], [(1, 1.0), (2, 0.0)]]


class TestProjectorStore:

    @pytest.fixture
    def projector(self, rng):
        return SemanticProjector(dual_basis=rng.standard_normal((5, 2)), correlations=[0.9, 0.4],
                                 train_row_ids=tuple(f"img{i}" for i in range(5)), kernel_id="arccos2(n=2)",
                                 visual_scale=0.125)

    def test_bit_exact_roundtrip(self, tmp_path, projector):
        save_projector(projector, tmp_path / "model.ssp")
        loaded = load_projector(tmp_path / "model.ssp")
        assert np.array_equal(loaded.dual_basis, projector.dual_basis)
        assert np.array_equal(loaded.correlations, projector.correlations)
        assert loaded.train_row_ids == projector.train_row_ids
        assert loaded.kernel_id == projector.kernel_id
        assert loaded.visual_scale == projector.visual_scale

    def test_truncated_file(self, tmp_path, projector):
        path = tmp_path / "model.ssp"
        save_projector(projector, path)
        path.write_bytes(path.read_bytes()[:-9])
        assert _error_code(lambda: load_projector(path)) is AppError.IntegrityError

    def test_flipped_byte(self, tmp_path, projector):
        path = tmp_path / "model.ssp"
        save_projector(projector, path)
        data = bytearray(path.read_bytes())
        data[-40] ^= 0x01
        path.write_bytes(bytes(data))
        assert _error_code(lambda: load_projector(path)) is AppError.IntegrityError

    def test_unsupported_version(self, tmp_path):
        path = tmp_path / "model.ssp"
        _write_payload(path, {"n": 1, "m": 1, "train_row_ids": ["a"]}, np.ones((1, 1)), np.array([0.5]), version=2)
        assert _error_code(lambda: load_projector(path)) is AppError.VersionMismatch

    def test_correlation_above_one(self, tmp_path):
        path = tmp_path / "model.ssp"
        header = {"n": 3, "m": 1, "kernel_id": "k", "visual_scale": 1.0, "train_row_ids": ["a", "b", "c"]}
        _write_payload(path, header, np.ones((3, 1)), np.array([1.5]))
        assert _error_code(lambda: load_projector(path)) is AppError.InvariantViolation


class TestArtifacts:

    def test_gram_keeps_kernel_id(self, tmp_path, rng):
        X = rng.standard_normal((4, 2))
        gram = GramMatrix(values=X @ X.T, kernel_id="arccos2(n=2)", row_ids=("a", "b", "c", "d"))
        save_gram(gram, tmp_path / "kv.fmat", inputs={"features": "abc"})
        loaded = load_gram(tmp_path / "kv.fmat")
        assert loaded.kernel_id == "arccos2(n=2)"
        assert np.array_equal(loaded.values, gram.values)
        document = yaml.safe_load(sidecar_path(tmp_path / "kv.fmat").read_text(encoding="utf-8"))
        assert document["artifact"] == "gram"
        assert document["inputs"] == {"features": "abc"}
        assert len(document["sha256"]) == 64

    def test_sidecar_path(self, tmp_path):
        assert sidecar_path(tmp_path / "scores.fmat").name == "scores.fmat.yaml"

    def test_gram_without_sidecar(self, tmp_path):
        from semspace.storage import write_fmat
        write_fmat(tmp_path / "k.fmat", np.eye(2), ("a", "b"))
        assert load_gram(tmp_path / "k.fmat").kernel_id == "unknown"

    def test_kernel_block_columns(self, tmp_path, rng):
        block = KernelBlock(values=rng.random((2, 3)), kernel_id="exp_chi2(C=0.5)", row_ids=("q0", "q1"),
                            col_ids=("a", "b", "c"))
        save_kernel_block(block, tmp_path / "block.fmat")
        loaded = load_kernel_block(tmp_path / "block.fmat")
        assert loaded.col_ids == ("a", "b", "c")
        assert loaded.kernel_id == "exp_chi2(C=0.5)"
        assert _error_code(lambda: load_gram(tmp_path / "block.fmat")) is AppError.DimensionMismatch

    def test_scores_carry_vocabulary(self, tmp_path, rng, make_vocab):
        scores = RelevanceScores(row_ids=("q0", "q1"), vocabulary=make_vocab(3), values=rng.random((2, 3)))
        save_scores(scores, tmp_path / "scores.fmat")
        loaded = load_scores(tmp_path / "scores.fmat")
        assert loaded.vocabulary.labels == ("t0", "t1", "t2")
        assert np.array_equal(loaded.values, scores.values)


class TestKernelCache:

    def test_hits_after_store(self, tmp_path):
        cache = KernelCache(tmp_path / "cache")
        key = KernelCache.make_key("arccos2(n=2)", "h1", "h2")
        assert cache.load(key) is None
        block = KernelBlock(values=np.eye(2), kernel_id="arccos2(n=2)", row_ids=("a", "b"), col_ids=("a", "b"))
        cache.store(key, block)
        loaded = cache.load(key)
        assert np.array_equal(loaded.values, block.values)
        assert (cache.hits, cache.misses) == (1, 1)

    def test_key_depends_on_inputs(self):
        assert KernelCache.make_key("k", "a") != KernelCache.make_key("k", "b")

    def test_disabled_cache(self):
        cache = KernelCache(None)
        assert not cache.enabled
        assert cache.load("anything") is None
        assert cache.misses == 0
