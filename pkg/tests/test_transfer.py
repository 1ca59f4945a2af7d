import numpy as np
import pytest

from semspace.core.transfer import (
    AbstractRelevance, NeighborIndex, NnVot, TransferData, TransferQueries, annotate_topn, cosine_distances,
    cross_validate, f_2pknn, f_knn, f_tagvote, knn_query, make_folds, project_to_simplex, svm_objective,
    svm_score, svm_train, sweep_neighbors, tagprop_score, tagprop_train, uniform_tagprop,
)
from semspace.exceptions import AppError
from semspace.mapping import NeighborMetric, TransferMethod
from semspace.model import GramMatrix, KernelBlock, RelevanceScores, TagPropModel, TransferConfig


def _clustered(rng, n_clusters: int, per_cluster: int, dim: int, spread: float = 0.05):
    """每个簇一个随机中心；簇 c 的图像带标签 c"""
    centers = rng.standard_normal((n_clusters, dim)) * 3.0
    classes = np.repeat(np.arange(n_clusters), per_cluster)
    X = centers[classes] + spread * rng.standard_normal((classes.size, dim))
    return X, np.eye(n_clusters)[classes]


class TestNeighborIndex:

    def test_cosine_zero_vector_distance_is_one(self):
        d = cosine_distances(np.zeros((1, 3)), np.array([[1.0, 0.0, 0.0], [0.0, 2.0, 0.0]]))
        np.testing.assert_array_equal(d, [[1.0, 1.0]])

    def test_query_equal_to_stored_point_is_first(self, rng, make_features):
        psi = make_features(rng.standard_normal((30, 4)))
        neighbors = knn_query(NeighborIndex.from_embedding(psi), psi.values[7], 3)
        assert neighbors[0][0] == 7
        assert neighbors[0][1] == pytest.approx(0.0, abs=1e-12)

    def test_matches_exhaustive_sort(self, rng, make_features):
        psi = make_features(rng.standard_normal((50, 5)))
        q = rng.standard_normal(5)
        index = NeighborIndex.from_embedding(psi)
        got = [i for i, _ in knn_query(index, q, 10)]
        dist = [1.0 - (q @ p) / (np.linalg.norm(q) * np.linalg.norm(p)) for p in psi.values]
        expected = sorted(range(50), key=lambda i: (dist[i], i))[:10]
        assert got == expected

    def test_baseline_constant_row_returns_index_order(self, rng):
        X = rng.standard_normal((8, 3))
        gram = GramMatrix(values=X @ X.T, kernel_id="arccos2(n=2)", row_ids=tuple(f"img{i}" for i in range(8)))
        index = NeighborIndex.from_gram(gram)
        assert index.metric is NeighborMetric.ONE_MINUS_KV
        top = gram.values.max()
        block = KernelBlock(values=np.full((1, 8), top), kernel_id=gram.kernel_id, row_ids=("q",),
                            col_ids=gram.row_ids)
        neighbors, distances = index.knn(block, 4)
        np.testing.assert_array_equal(neighbors, [[0, 1, 2, 3]])
        np.testing.assert_array_equal(distances, np.zeros((1, 4)))

    def test_baseline_rejects_feature_query(self, rng, make_features):
        gram = GramMatrix(values=np.eye(3), kernel_id="k", row_ids=("a", "b", "c"))
        with pytest.raises(AppError.Exception) as info:
            NeighborIndex.from_gram(gram).knn(make_features(rng.random((1, 3))), 1)
        assert info.value.error_code is AppError.InvalidParameter

    def test_training_neighbors_exclude_self(self, rng, make_features):
        psi = make_features(rng.standard_normal((12, 3)))
        neighbors, _ = NeighborIndex.from_embedding(psi).training_neighbors(4)
        assert all(i not in row for i, row in enumerate(neighbors))


class TestRelevanceFunctions:

    def test_knn_counts_labels(self, make_annotations):
        A = make_annotations([[1, 0, 1], [1, 1, 0], [0, 0, 1], [1, 0, 0]])
        np.testing.assert_array_equal(f_knn([0, 1, 2], A), [2, 1, 2])

    def test_knn_with_one_neighbor_copies_labels(self, random_tags, make_annotations):
        A = make_annotations(random_tags(10, 6))
        np.testing.assert_array_equal(f_knn([4], A), A.dense()[4])

    def test_tagvote_subtracts_prior(self, make_annotations):
        A = make_annotations([[1]] * 5 + [[0]] * 5)
        score = f_tagvote(np.arange(10), A, n_t=np.array([100.0]), S_size=1000)
        np.testing.assert_allclose(score, [4.0])

    def test_tagvote_requires_nonempty_set(self, make_annotations):
        with pytest.raises(AppError.Exception):
            f_tagvote([0], make_annotations([[1]]), n_t=np.array([1.0]), S_size=0)

    def test_tagvote_and_knn_agree_under_uniform_prior(self, random_tags, make_annotations):
        A = make_annotations(random_tags(20, 5))
        neighbors = [3, 8, 1, 15, 0]
        uniform = np.full(5, 4.0)
        knn = f_knn(neighbors, A)
        tagvote = f_tagvote(neighbors, A, n_t=uniform, S_size=20)
        np.testing.assert_allclose(knn - tagvote, 1.0)

    def test_tagprop_weighted_vote(self, make_annotations):
        A = make_annotations([[1], [1], [0]])
        model = TagPropModel(weights=[0.5, 0.3, 0.2], trained=True)
        np.testing.assert_allclose(tagprop_score(model, np.array([0, 1, 2]), A), [0.8])

    def test_uniform_tagprop_equals_normalized_knn(self, random_tags, make_annotations):
        A = make_annotations(random_tags(15, 4))
        neighbors = np.array([2, 5, 7, 11])
        np.testing.assert_allclose(tagprop_score(uniform_tagprop(4), neighbors, A), f_knn(neighbors, A) / 4)

    def test_2pknn_single_positive_at_zero_distance(self, make_annotations):
        A = make_annotations([[1, 0], [0, 0], [0, 0]])
        np.testing.assert_allclose(f_2pknn(np.array([0.0, 0.3, 0.4]), A, 2), [1.0, 0.0])

    def test_2pknn_matches_bruteforce(self, rng, random_tags, make_annotations):
        tags = random_tags(25, 6, p=0.25)
        A = make_annotations(tags)
        d = rng.random(25)
        M = 3
        got = f_2pknn(d, A, M)
        order = sorted(range(25), key=lambda j: (d[j], j))
        pool = set()
        for t in range(6):
            pool.update([j for j in order if tags[j, t] > 0][:M])
        expected = [sum(np.exp(-d[j]) * tags[j, t] for j in pool) for t in range(6)]
        np.testing.assert_allclose(got, expected, rtol=1e-12)

    def test_annotate_topn_tie_order(self, make_vocab):
        scores = RelevanceScores(row_ids=("q",), vocabulary=make_vocab(3), values=[[0.9, 0.1, 0.9]])
        assert annotate_topn(scores, 2) == [[0, 2]]

    def test_annotate_topn_invariant_under_shift(self, rng, make_vocab):
        values = rng.random((5, 7))
        a = RelevanceScores(row_ids=tuple("abcde"), vocabulary=make_vocab(7), values=values)
        b = RelevanceScores(row_ids=tuple("abcde"), vocabulary=make_vocab(7), values=values + 3.0)
        assert annotate_topn(a, 3) == annotate_topn(b, 3)

    def test_annotate_topn_rejects_bad_n(self, make_vocab):
        scores = RelevanceScores(row_ids=("q",), vocabulary=make_vocab(3), values=[[0.1, 0.2, 0.3]])
        for n in (0, 4):
            with pytest.raises(AppError.Exception):
                annotate_topn(scores, n)


class TestTagPropTraining:

    def test_projection_onto_simplex(self):
        w = project_to_simplex(np.array([0.8, 0.6, -0.5]))
        assert w.min() >= 0
        assert w.sum() == pytest.approx(1.0)
        np.testing.assert_allclose(w, [0.6, 0.4, 0.0])

    def test_weights_concentrate_on_informative_rank(self, make_features, make_annotations):
        # 10 个簇，每簇两张完全相同的图像；留一近邻的第 1 名总是同簇图像
        positions = np.repeat(np.eye(10), 2, axis=0)
        psi = make_features(positions)
        A = make_annotations(positions)
        model = tagprop_train(NeighborIndex.from_embedding(psi), A, K=3)
        assert model.trained
        assert model.weights[0] >= 0.9

    def test_log_likelihood_never_decreases(self, rng, random_tags, make_features, make_annotations):
        psi = make_features(rng.standard_normal((30, 4)))
        A = make_annotations(random_tags(30, 5))
        model = tagprop_train(NeighborIndex.from_embedding(psi), A, K=5, epochs=20)
        history = np.array(model.log_likelihoods)
        assert history.size == 21
        assert np.all(np.diff(history) >= -1e-12)
        assert model.weights.sum() == pytest.approx(1.0)


class TestSvm:

    def test_separable_one_dimensional(self, make_features, make_annotations):
        x = np.r_[np.full(10, 1.0), np.full(10, -1.0)][:, None]
        A = make_annotations(np.r_[np.ones(10), np.zeros(10)][:, None])
        model = svm_train(make_features(x), A, lam=1e-4, epochs=30)
        scores = svm_score(model, x)
        assert scores[:10].min() > scores[10:].max()
        assert scores[0, 0] > 0 > scores[-1, 0]

    def test_large_lambda_collapses_to_intercept(self, rng, make_features, make_annotations):
        A = make_annotations(np.r_[np.ones(6), np.zeros(14)][:, None])
        model = svm_train(make_features(rng.standard_normal((20, 3))), A, lam=1e6)
        assert np.abs(model.weights).max() < 1e-3
        assert model.intercepts[0] == pytest.approx(-0.4, abs=1e-4)

    @staticmethod
    def _ridge_optimum(X: np.ndarray, Y: np.ndarray, lam: float) -> tuple[np.ndarray, np.ndarray, float]:
        """原始特征上 (1/N)·Σ(⟨w,ψ⟩+b−y)² + λ‖w‖² 的闭式解"""
        n, m = X.shape
        mu, y_bar = X.mean(axis=0), Y.mean(axis=0)
        Xc = X - mu
        W = np.linalg.solve(Xc.T @ Xc / n + lam * np.eye(m), Xc.T @ (Y - y_bar) / n)
        b = y_bar - mu @ W
        value = float(np.mean((X @ W + b - Y) ** 2, axis=0).sum() + lam * np.sum(W ** 2))
        return W, b, value

    def test_reaches_ridge_optimum(self, rng, make_features, make_annotations):
        X = 3.0 * rng.standard_normal((40, 5)) + 2.0
        truth = X @ rng.standard_normal((5, 3)) + 0.5 * rng.standard_normal((40, 3))
        A = make_annotations((truth > 0).astype(float))
        features = make_features(X)
        lam = 1e-2
        model = svm_train(features, A, lam=lam, epochs=200)
        _, _, optimum = self._ridge_optimum(X, 2.0 * A.dense() - 1.0, lam)
        achieved = svm_objective(model, features, A)
        assert achieved >= optimum * (1 - 1e-9)
        assert achieved <= optimum * 1.01

    def test_penalty_acts_on_raw_weights(self, make_features, make_annotations):
        x = np.r_[np.full(10, 10.0), np.full(10, -10.0)][:, None]
        A = make_annotations(np.r_[np.ones(10), np.zeros(10)][:, None])
        model = svm_train(make_features(x), A, lam=1.0)
        W, b, _ = self._ridge_optimum(x, 2.0 * A.dense() - 1.0, 1.0)
        expected = float(10.0 * W[0, 0] + b[0])
        assert expected == pytest.approx(100.0 / 101.0)
        assert svm_score(model, x)[0, 0] == pytest.approx(expected, rel=1e-2)
        np.testing.assert_allclose(model.weights[0], W[:, 0], rtol=1e-2)

    def test_deterministic_for_fixed_seed(self, rng, random_tags, make_features, make_annotations):
        features = make_features(rng.standard_normal((25, 4)))
        A = make_annotations(random_tags(25, 3))
        a = svm_train(features, A, lam=1e-3, seed=5)
        b = svm_train(features, A, lam=1e-3, seed=5)
        assert np.array_equal(a.weights, b.weights)


class TestRegistry:

    def _data(self, rng, make_features, make_annotations):
        X, Y = _clustered(rng, 4, 10, 6)
        psi = make_features(X)
        index = NeighborIndex.from_embedding(psi)
        return TransferData(index, make_annotations(Y), psi), psi

    def test_create_by_name(self):
        model = AbstractRelevance.create("nnvot", TransferConfig())
        assert isinstance(model, NnVot)
        assert model.method is TransferMethod.NNVOT

    def test_unknown_method(self):
        with pytest.raises(AppError.Exception) as info:
            AbstractRelevance.create("bogus", TransferConfig())
        assert info.value.error_code is AppError.InvalidParameter

    def test_score_before_fit(self, rng, make_features, make_annotations):
        data, psi = self._data(rng, make_features, make_annotations)
        with pytest.raises(AppError.Exception):
            AbstractRelevance.create("nnvot", TransferConfig()).score(TransferQueries.from_index(data.index, psi))

    @pytest.mark.parametrize("method", [m.value for m in TransferMethod])
    def test_every_method_recovers_cluster_labels(self, method, rng, make_features, make_annotations):
        data, psi = self._data(rng, make_features, make_annotations)
        queries = TransferQueries.from_index(data.index, psi)
        cfg = TransferConfig(method=TransferMethod(method), K=5, m_per_label=3, svm_lambda=1e-3, svm_epochs=50)
        scores = AbstractRelevance.create(method, cfg).fit(data).score(queries)
        assert scores.values.shape == (40, 4)
        predicted = [row[0] for row in annotate_topn(scores, 1)]
        assert predicted == list(np.repeat(np.arange(4), 10))

    def test_nnvot_matches_direct_votes(self, rng, make_features, make_annotations):
        data, psi = self._data(rng, make_features, make_annotations)
        queries = TransferQueries.from_index(data.index, psi.subset([0, 15]))
        scores = AbstractRelevance.create("nnvot", TransferConfig(K=3)).fit(data).score(queries)
        neighbors, _ = data.index.knn(psi.subset([0, 15]), 3)
        for row, nb in zip(scores.values, neighbors):
            np.testing.assert_array_equal(row, f_knn(nb, data.annotations))

    def test_svm_requires_features(self, rng, make_features, make_annotations):
        data, _ = self._data(rng, make_features, make_annotations)
        without = TransferData(data.index, data.annotations)
        with pytest.raises(AppError.Exception) as info:
            AbstractRelevance.create("svm", TransferConfig(method=TransferMethod.SVM)).fit(without)
        assert info.value.error_code is AppError.MissingParameter


class TestCrossValidation:

    def _data(self, rng, make_features, make_annotations):
        X, Y = _clustered(rng, 3, 12, 5, spread=0.3)
        psi = make_features(X)
        return TransferData(NeighborIndex.from_embedding(psi), make_annotations(Y), psi)

    def test_folds_partition_indices(self):
        folds = make_folds(10, 3, seed=0)
        assert sorted(np.concatenate(folds).tolist()) == list(range(10))
        assert [f.size for f in folds] == [4, 3, 3]
        assert all(np.all(np.diff(f) > 0) for f in folds)

    def test_selects_from_feasible_grid(self, rng, make_features, make_annotations):
        data = self._data(rng, make_features, make_annotations)
        cfg = TransferConfig(k_grid=[1, 3, 5, 40])
        result = cross_validate(data, cfg, seed=0)
        assert result.parameter == "K"
        assert result.grid == (1.0, 3.0, 5.0)
        assert result.best in result.grid
        assert all(0.0 <= s <= 1.0 for s in result.scores)

    def test_deterministic(self, rng, make_features, make_annotations):
        data = self._data(rng, make_features, make_annotations)
        cfg = TransferConfig(method=TransferMethod.SVM, lambda_grid=[1e-3, 1e-1])
        a = cross_validate(data, cfg, seed=3)
        b = cross_validate(data, cfg, seed=3)
        assert a == b
        assert a.parameter == "lambda"

    def test_sweep_neighbors(self, rng, make_features, make_annotations):
        data = self._data(rng, make_features, make_annotations)
        psi = data.features
        queries = TransferQueries.from_index(data.index, psi)
        result = sweep_neighbors(data, queries, data.annotations, TransferConfig(), [1, 3])
        assert set(result) == {1, 3}
        assert result[1] == pytest.approx(1.0)


class TestTransferData:

    def test_split_shapes(self, rng, make_features, random_tags, make_annotations):
        psi = make_features(rng.standard_normal((10, 3)))
        data = TransferData(NeighborIndex.from_embedding(psi), make_annotations(random_tags(10, 4)), psi)
        fit, held = data.split(np.array([0, 1, 2, 3, 4, 5]), np.array([6, 7, 8, 9]))
        assert fit.n == 6
        assert held.distances.shape == (4, 6)
        assert held.row_ids == psi.row_ids[6:]
        np.testing.assert_allclose(held.distances, data.index.distances(psi.values[6:])[:, :6], atol=1e-12)

    def test_annotations_aligned_to_index(self, make_features, make_annotations):
        psi = make_features(np.eye(3))
        A = make_annotations([[1, 0], [0, 1], [1, 1]])
        reordered = A.subset([2, 0, 1])
        data = TransferData(NeighborIndex.from_embedding(psi), reordered)
        assert data.annotations.row_ids == psi.row_ids
        np.testing.assert_array_equal(data.annotations.dense(), A.dense())
