import numpy as np
import pytest

from semspace.core.kcca import dense_kcca_oracle, fit_kcca, pgso, project, subsample_training
from semspace.exceptions import AppError
from semspace.model import GramMatrix, KccaConfig, KernelBlock

IDS = tuple(f"img{i}" for i in range(20))


def _gram(values: np.ndarray, kernel_id: str = "arccos2(n=2)", ids: tuple[str, ...] = IDS) -> GramMatrix:
    return GramMatrix(values=values, kernel_id=kernel_id, row_ids=ids[:values.shape[0]])


def _full_rank(rng: np.random.Generator, n: int, p: int) -> np.ndarray:
    X = rng.standard_normal((n, p))
    K = X @ X.T
    return K / np.mean(np.diag(K))


class TestPgso:

    def test_reconstructs_low_rank_kernel(self, rng):
        X = rng.standard_normal((20, 5))
        K = X @ X.T
        factor = pgso(K, max_rank=20, tol=1e-10)
        assert factor.rank == 5
        np.testing.assert_allclose(factor.G @ factor.G.T, K, atol=1e-8 * np.trace(K))
        assert len(set(factor.pivots)) == factor.rank

    def test_rank_cap_leaves_residual(self, rng):
        K = _full_rank(rng, 10, 15)
        factor = pgso(K, max_rank=3, tol=1e-12)
        assert factor.rank == 3
        assert factor.residual_trace > 0
        residual = np.trace(K - factor.G @ factor.G.T)
        assert factor.residual_trace == pytest.approx(residual, rel=1e-8)

    def test_first_pivot_is_largest_diagonal(self, rng):
        K = _full_rank(rng, 8, 12)
        assert pgso(K, max_rank=8, tol=1e-12).pivots[0] == int(np.argmax(np.diag(K)))

    def test_negative_diagonal_rejected(self):
        with pytest.raises(AppError.Exception) as info:
            pgso(np.array([[1.0, 0.0], [0.0, -1.0]]), max_rank=2, tol=1e-6)
        assert info.value.error_code is AppError.NotPositiveSemidefinite


class TestFitKcca:

    def test_agrees_with_dense_solver(self, rng):
        Kv, Kt = _full_rank(rng, 20, 30), _full_rank(rng, 20, 30)
        cfg = KccaConfig(kappa=0.5, normalize=False, pgso_tol=1e-14, max_rank=20)
        p = fit_kcca(_gram(Kv), _gram(Kt, "linear_labels()"), cfg)
        r_oracle, A_oracle = dense_kcca_oracle(Kv, Kt, 0.5, 5)
        np.testing.assert_allclose(p.correlations[:5], r_oracle, atol=1e-6)
        if r_oracle[0] - r_oracle[1] > 1e-3:
            a = p.dual_basis[:, 0]
            b = A_oracle[:, 0] * np.sign(a @ A_oracle[:, 0])
            np.testing.assert_allclose(a, b, atol=1e-6 * np.abs(b).max())

    def test_defaults_solve_unscaled_problem(self, rng):
        X, Y = rng.standard_normal((20, 30)), rng.standard_normal((20, 30))
        Kv, Kt = 5.0 * X @ X.T, 0.2 * Y @ Y.T
        p = fit_kcca(_gram(Kv), _gram(Kt, "linear_labels()"), KccaConfig(pgso_tol=1e-14))
        assert p.visual_scale == 1.0
        r_oracle, _ = dense_kcca_oracle(Kv, Kt, 0.5, 5)
        np.testing.assert_allclose(p.correlations[:5], r_oracle, atol=1e-6)

    def test_opt_in_normalization_matches_rescaled_problem(self, rng):
        X, Y = rng.standard_normal((20, 30)), rng.standard_normal((20, 30))
        Kv, Kt = 5.0 * X @ X.T, 0.2 * Y @ Y.T
        p = fit_kcca(_gram(Kv), _gram(Kt, "t"), KccaConfig(normalize=True, pgso_tol=1e-14))
        assert p.visual_scale == pytest.approx(1.0 / np.mean(np.diag(Kv)))
        r_oracle, _ = dense_kcca_oracle(Kv / np.mean(np.diag(Kv)), Kt / np.mean(np.diag(Kt)), 0.5, 5)
        np.testing.assert_allclose(p.correlations[:5], r_oracle, atol=1e-6)
        block = KernelBlock(values=Kv[:3], kernel_id="arccos2(n=2)", row_ids=IDS[:3], col_ids=IDS)
        expected = (Kv[:3] * p.visual_scale) @ p.dual_basis * p.correlations
        np.testing.assert_allclose(project(p, block).values, expected)

    def test_dual_basis_normalization(self, rng):
        Kv, Kt = _full_rank(rng, 15, 25), _full_rank(rng, 15, 25)
        kappa = 0.3
        p = fit_kcca(_gram(Kv), _gram(Kt, "t"), KccaConfig(kappa=kappa, normalize=False, pgso_tol=1e-14))
        A = p.dual_basis
        gram = A.T @ Kv @ (Kv + kappa * np.eye(15)) @ A
        np.testing.assert_allclose(np.diag(gram), 1.0, atol=1e-6)

    def test_identical_views_without_regularization(self, rng):
        X = rng.standard_normal((15, 5))
        K = _gram(X @ X.T)
        p = fit_kcca(K, K, KccaConfig(kappa=0.0, pgso_tol=1e-9))
        assert p.m_dims == 5
        np.testing.assert_allclose(p.correlations, 1.0, atol=1e-9)

    def test_correlations_are_sorted_and_bounded(self, rng):
        p = fit_kcca(_gram(_full_rank(rng, 20, 6)), _gram(_full_rank(rng, 20, 4), "t"), KccaConfig(kappa=0.1))
        r = p.correlations
        assert np.all(r > 0) and np.all(r <= 1 + 1e-9)
        assert np.all(np.diff(r) <= 0)

    def test_requested_dimensions_truncated_to_attainable(self, rng):
        X = rng.standard_normal((12, 3))
        K = _gram(X @ X.T)
        p = fit_kcca(K, K, KccaConfig(kappa=0.0, pgso_tol=1e-9, m_dims=10))
        assert p.m_dims == 3

    def test_sign_convention(self, rng):
        p = fit_kcca(_gram(_full_rank(rng, 20, 8)), _gram(_full_rank(rng, 20, 8), "t"), KccaConfig())
        A = p.dual_basis
        pivots = np.argmax(np.abs(A), axis=0)
        assert np.all(A[pivots, np.arange(A.shape[1])] > 0)

    def test_mismatched_training_images(self, rng):
        Kv = _gram(_full_rank(rng, 5, 5))
        Kt = GramMatrix(values=np.eye(5), kernel_id="t", row_ids=("a", "b", "c", "d", "e"))
        with pytest.raises(AppError.Exception) as info:
            fit_kcca(Kv, Kt, KccaConfig())
        assert info.value.error_code is AppError.DimensionMismatch


class TestProject:

    def test_projection_formula(self, rng):
        Kv = _gram(_full_rank(rng, 20, 10) * 4.0)
        Kt = _gram(_full_rank(rng, 20, 5), "t")
        p = fit_kcca(Kv, Kt, KccaConfig(kappa=0.5))
        rows = KernelBlock(values=rng.random((3, 20)), kernel_id=Kv.kernel_id, row_ids=("q0", "q1", "q2"),
                           col_ids=Kv.row_ids)
        psi = project(p, rows)
        expected = (rows.values * p.visual_scale) @ p.dual_basis * p.correlations
        np.testing.assert_allclose(psi.values, expected, rtol=1e-12)
        assert psi.row_ids == rows.row_ids
        assert p.visual_scale == pytest.approx(0.25)

    def test_column_mismatch(self, rng):
        Kv = _gram(_full_rank(rng, 6, 6))
        p = fit_kcca(Kv, Kv, KccaConfig())
        rows = KernelBlock(values=np.ones((1, 6)), kernel_id=Kv.kernel_id, row_ids=("q",),
                           col_ids=tuple(reversed(Kv.row_ids)))
        with pytest.raises(AppError.Exception) as info:
            project(p, rows)
        assert info.value.error_code is AppError.KernelMismatch

    def test_kernel_id_mismatch(self, rng):
        Kv = _gram(_full_rank(rng, 6, 6))
        p = fit_kcca(Kv, Kv, KccaConfig())
        rows = KernelBlock(values=np.ones((1, 6)), kernel_id="exp_chi2(C=1.0)", row_ids=("q",), col_ids=Kv.row_ids)
        with pytest.raises(AppError.Exception) as info:
            project(p, rows)
        assert info.value.error_code is AppError.KernelMismatch


class TestSubsample:

    def test_deterministic_sorted_unique(self):
        a = subsample_training(100, 30, seed=7)
        b = subsample_training(100, 30, seed=7)
        np.testing.assert_array_equal(a, b)
        assert a.size == 30 and np.all(np.diff(a) > 0)

    def test_full_size_is_identity(self):
        np.testing.assert_array_equal(subsample_training(5, 5, seed=1), np.arange(5))
