import numpy as np
import pytest

from panreg.core_math import Dataset, orthonormalize
from panreg.estimators import (
    ols_fit,
    pan_angle_2d,
    pan_fit_2d,
    pan_fit_orthonormal,
    pan_predict,
    pan_ridge_coefficients,
    pan_ridge_fit_orthonormal,
    pan_ridge_prediction,
    ridge_fit,
    shrinkage_factor,
)
from panreg.exceptions import DegenerateInputError, DomainError, RankError
from panreg.optimizer import fit_general

from oracles import brute_force_2d, eig_oracle, normal_equations, penalized_rss_orthonormal


def _b(fit):
    return np.asarray(fit.beta_hat)


class TestOls:
    def test_orthonormal_collapses(self, orthonormal_data):
        data, _ = orthonormal_data()
        np.testing.assert_allclose(ols_fit(data).beta, data.X.T @ data.Y, atol=1e-12)

    def test_matches_normal_equations_seed_7(self):
        r = np.random.default_rng(7)
        X, Y = r.standard_normal((50, 6)), r.standard_normal(50)
        np.testing.assert_allclose(ols_fit(Dataset(X, Y)).beta, normal_equations(X, Y), atol=1e-9)

    def test_residual_orthogonal(self, rng):
        X, Y = rng.standard_normal((30, 4)), rng.standard_normal(30)
        b = ols_fit(Dataset(X, Y)).beta
        assert np.abs(X.T @ (Y - X @ b)).max() < 1e-8

    def test_singular(self, rng):
        X = rng.standard_normal((10, 3))
        X[:, 1] = 2 * X[:, 0]
        with pytest.raises(RankError):
            ols_fit(Dataset(X, rng.standard_normal(10)))


class TestRidge:
    def test_zero_is_ols(self, rng):
        d = Dataset(rng.standard_normal((20, 3)), rng.standard_normal(20))
        np.testing.assert_allclose(ridge_fit(d, 0.0).beta, ols_fit(d).beta, atol=1e-12)

    def test_orthonormal_halves(self, orthonormal_data):
        data, _ = orthonormal_data()
        np.testing.assert_allclose(ridge_fit(data, 1.0).beta, data.X.T @ data.Y / 2, atol=1e-12)

    def test_general_design(self, rng):
        X, Y = rng.standard_normal((20, 3)), rng.standard_normal(20)
        np.testing.assert_allclose(ridge_fit(Dataset(X, Y), 2.5).beta,
                                   normal_equations(X, Y, 2.5), atol=1e-10)

    def test_negative_rejected(self, orthonormal_data):
        with pytest.raises(DomainError):
            ridge_fit(orthonormal_data()[0], -0.1)


class TestPanOrthonormal:
    def test_lambda_zero_is_ols(self, rng):
        b, x0 = rng.standard_normal(5), rng.standard_normal(5)
        fit = pan_fit_orthonormal(b, x0, 0.0)
        np.testing.assert_allclose(_b(fit), b, atol=1e-14)
        assert fit.c_value == pytest.approx(1.0)

    def test_matches_eigen_oracle(self, rng):
        for _ in range(300):
            p = rng.integers(2, 16)
            b, x0 = rng.standard_normal(p), rng.standard_normal(p)
            l1, l2 = rng.uniform(0, 10), rng.uniform(-10, 10)
            ref, _, _ = eig_oracle(b, x0, l1, l2)
            np.testing.assert_allclose(_b(pan_ridge_fit_orthonormal(b, x0, l1, l2)), ref,
                                       atol=1e-9 * (1 + np.linalg.norm(b)))

    def test_global_minimum_against_perturbations(self, rng):
        b, x0 = rng.standard_normal(6), rng.standard_normal(6)
        fit = pan_ridge_fit_orthonormal(b, x0, 1.0, 3.0)
        best = penalized_rss_orthonormal(_b(fit), b, x0, 1.0, 3.0)
        for _ in range(200):
            cand = _b(fit) + 0.1 * rng.standard_normal(6)
            assert penalized_rss_orthonormal(cand, b, x0, 1.0, 3.0) >= best - 1e-12

    def test_large_lambda_projects_onto_h0(self, rng):
        b, x0 = rng.standard_normal(4), rng.standard_normal(4)
        proj = b - (x0 @ b) / (x0 @ x0) * x0
        np.testing.assert_allclose(_b(pan_fit_orthonormal(b, x0, 1e8)), proj, atol=1e-3)

    def test_p2_seed_3_matches_tangent_route(self):
        r = np.random.default_rng(3)
        b, x0 = r.standard_normal(2), r.standard_normal(2)
        for l2 in (-1.0, 0.5, 3.0):
            np.testing.assert_allclose(_b(pan_fit_orthonormal(b, x0, l2)), _b(pan_fit_2d(b, x0, l2)),
                                       atol=1e-8)

    def test_eigen_residual(self, rng):
        for _ in range(200):
            p = rng.integers(2, 12)
            b, x0 = rng.standard_normal(p), rng.standard_normal(p)
            l1, l2 = rng.uniform(0, 5), rng.uniform(-10, 10)
            fit = pan_ridge_fit_orthonormal(b, x0, l1, l2)
            _, M, _ = eig_oracle(b, x0, l1, l2)
            g = fit.direction
            assert np.linalg.norm(g) == pytest.approx(1.0, abs=1e-12)
            res = M @ g - (g @ M @ g) * g
            assert np.linalg.norm(res) < 1e-8 * np.linalg.norm(M, 2)
            assert fit.length == pytest.approx(b @ g / (1 + l1), abs=1e-10)

    def test_degenerate_inputs(self):
        with pytest.raises(DegenerateInputError):
            pan_fit_orthonormal(np.zeros(3), np.ones(3), 1.0)
        with pytest.raises(DegenerateInputError):
            pan_fit_orthonormal(np.ones(3), np.zeros(3), 1.0)

    def test_collinear_branch(self):
        b = np.array([1.0, 2.0, 2.0])
        for l2 in (0.5, -0.5, 4.0):
            fit = pan_fit_orthonormal(b, 2 * b, l2)
            assert np.all(np.isfinite(_b(fit)))
            # collinear: the estimate stays on the line through b
            assert abs(np.cross(_b(fit), b)).max() < 1e-12

    def test_c_value_in_range(self, rng):
        for _ in range(200):
            b, x0 = rng.standard_normal(3), rng.standard_normal(3)
            assert -1 <= pan_fit_orthonormal(b, x0, rng.uniform(-50, 50)).c_value <= 1


class TestPanRidge:
    def test_reduces_to_ridge(self, rng):
        b, x0 = rng.standard_normal(5), rng.standard_normal(5)
        np.testing.assert_allclose(_b(pan_ridge_fit_orthonormal(b, x0, 3.0, 0.0)), b / 4, atol=1e-14)

    def test_reduces_to_pan(self, rng):
        b, x0 = rng.standard_normal(5), rng.standard_normal(5)
        a = pan_ridge_fit_orthonormal(b, x0, 0.0, 2.0)
        c = pan_fit_orthonormal(b, x0, 2.0)
        np.testing.assert_allclose(_b(a), _b(c), atol=1e-15)
        assert a.c_value == c.c_value

    def test_seed_11_matches_optimizer(self):
        r = np.random.default_rng(11)
        X = orthonormalize(r.standard_normal((30, 6)))
        Y = X @ r.standard_normal(6) + r.standard_normal(30)
        x0 = r.standard_normal(6)
        closed = pan_ridge_fit_orthonormal(X.T @ Y, x0, 2.0, 3.0)
        num = fit_general(Dataset(X, Y), x0, 2.0, 3.0)
        np.testing.assert_allclose(_b(closed), _b(num), atol=1e-6)

    def test_negative_ridge_rejected(self):
        with pytest.raises(DomainError):
            pan_ridge_fit_orthonormal(np.ones(2), np.ones(2), -1.0, 1.0)


class TestPrediction:
    def test_routes_agree(self, rng):
        for _ in range(300):
            p = rng.integers(2, 16)
            b, x0 = rng.standard_normal(p), rng.standard_normal(p)
            l1, l2 = rng.uniform(0, 10), rng.uniform(-10, 10)
            fit = pan_ridge_fit_orthonormal(b, x0, l1, l2)
            dot = x0 @ _b(fit)
            assert pan_predict(fit) == pytest.approx(dot, abs=1e-10)
            assert fit.shrinkage_factor * (x0 @ b) == pytest.approx(dot, abs=1e-10)
            assert pan_ridge_prediction(b, x0, l1, l2) == pytest.approx(dot, abs=1e-10)

    def test_infinite_penalty_zero(self, rng):
        b, x0 = rng.standard_normal(4), rng.standard_normal(4)
        assert abs(pan_predict(pan_fit_orthonormal(b, x0, 1e10))) < 1e-6

    def test_negative_infinite_penalty_ols(self, rng):
        b, x0 = rng.standard_normal(4), rng.standard_normal(4)
        pred = pan_predict(pan_fit_orthonormal(b, x0, -1e8))
        assert abs(pred - x0 @ b) <= 1e-3 * abs(x0 @ b)

    def test_monotone_shrink(self, rng):
        b, x0 = rng.standard_normal(5), rng.standard_normal(5)
        preds = [abs(pan_predict(pan_fit_orthonormal(b, x0, l))) for l in (0, 1, 10, 100, 1e4)]
        assert all(a >= c - 1e-15 for a, c in zip(preds, preds[1:]))

    def test_vectorized_coefficients(self, rng):
        B, X0 = rng.standard_normal((7, 4)), rng.standard_normal((7, 4))
        out = pan_ridge_coefficients(B, X0, 0.5, 2.0)
        for i in range(7):
            np.testing.assert_allclose(out[i], _b(pan_ridge_fit_orthonormal(B[i], X0[i], 0.5, 2.0)),
                                       atol=1e-13)


class TestShrinkageFactor:
    def test_no_penalty(self):
        np.testing.assert_allclose(shrinkage_factor(np.linspace(-1, 1, 11), 2.0), 1.0)

    def test_hand_value_orthogonal(self):
        assert shrinkage_factor(0.0, 1.0, 0.0, 1.0) == pytest.approx(0.5)

    def test_even_in_cosine(self, rng):
        c = rng.uniform(-1, 1, 50)
        np.testing.assert_allclose(shrinkage_factor(c, 1.3, 0.5, 2), shrinkage_factor(-c, 1.3, 0.5, 2))

    def test_bounds_positive_penalty(self, rng):
        c = rng.uniform(-1, 1, 500)
        f = shrinkage_factor(c, rng.uniform(0.1, 3), 0.0, rng.uniform(0, 20))
        assert np.all((f >= 0) & (f <= 1 + 1e-15))

    def test_negative_penalty_expands_at_zero(self):
        b2, l2 = 1.5 ** 2, -0.8
        assert shrinkage_factor(0.0, 1.5, 0.0, l2) == pytest.approx(b2 / (b2 + l2))
        assert shrinkage_factor(0.0, 1.5, 0.0, l2) >= 1

    def test_curve_shape(self):
        # penalty below |beta|^2: factor returns to 1 at |cos| = 1
        c = np.linspace(-1, 1, 201)
        pos = shrinkage_factor(c, 1.0, 0.0, 0.6)
        neg = shrinkage_factor(c, 1.0, 0.0, -0.5)
        assert np.argmin(pos) == 100 and np.argmax(neg) == 100
        assert pos[0] == pytest.approx(1.0) and neg[0] == pytest.approx(1.0)

    def test_strong_penalty_kills_collinear(self):
        # penalty above |beta|^2: a vector orthogonal to x0 beats beta_ols itself
        assert shrinkage_factor(1.0, 1.0, 0.0, 2.0) == pytest.approx(0.0, abs=1e-15)
        assert shrinkage_factor(0.0, 1.0, 0.0, 2.0) == pytest.approx(1 / 3)

    def test_ridge_shifts_down(self):
        c = np.linspace(-1, 1, 21)
        assert np.all(shrinkage_factor(c, 1.0, 1.0, 1.0) < shrinkage_factor(c, 1.0, 0.0, 1.0))

    def test_matches_fit(self, rng):
        b, x0 = rng.standard_normal(6), rng.standard_normal(6)
        fit = pan_ridge_fit_orthonormal(b, x0, 0.7, 2.2)
        assert shrinkage_factor(fit.cos_sim, np.linalg.norm(b), 0.7, 2.2) \
            == pytest.approx(fit.shrinkage_factor, abs=1e-12)

    def test_personalized(self):
        b = np.array([1.0, 0.0])
        f1 = pan_fit_orthonormal(b, np.array([1.0, 1.0]), 0.5).shrinkage_factor
        f2 = pan_fit_orthonormal(b, np.array([1.0, 3.0]), 0.5).shrinkage_factor
        assert f1 != pytest.approx(f2)

    def test_domain(self):
        with pytest.raises(DomainError):
            shrinkage_factor(1.5, 1.0, 0.0, 1.0)


class TestTangentRoute:
    def test_zero_penalty(self, rng):
        b, x0 = rng.standard_normal(2), rng.standard_normal(2)
        np.testing.assert_allclose(_b(pan_fit_2d(b, x0, 0.0)), b, atol=1e-14)

    def test_limit_angle(self):
        x0 = np.array([1.0, 0.0])
        b = np.array([np.cos(1.0), np.sin(1.0)])  # angle in [a0, a0 + pi]
        fit = pan_fit_2d(b, x0, 1e8)
        assert pan_angle_2d(fit) == pytest.approx(np.pi / 2, abs=1e-3)

    def test_seed_5_cross_implementation(self):
        r = np.random.default_rng(5)
        b, x0 = r.standard_normal(2), r.standard_normal(2)
        for l2 in (-3.0, -0.4, 0.7, 5.0):
            np.testing.assert_allclose(_b(pan_fit_2d(b, x0, l2)), _b(pan_fit_orthonormal(b, x0, l2)),
                                       atol=1e-8)

    def test_brute_force(self, rng):
        for _ in range(20):
            b, x0 = rng.standard_normal(2), rng.standard_normal(2)
            l2 = rng.uniform(-5, 5)
            got = _b(pan_fit_2d(b, x0, l2))
            ref = brute_force_2d(b, x0, l2)
            assert penalized_rss_orthonormal(got, b, x0, 0, l2) \
                <= penalized_rss_orthonormal(ref, b, x0, 0, l2) + 1e-10

    def test_requires_p2(self):
        with pytest.raises(ValueError):
            pan_fit_2d(np.ones(3), np.ones(3), 1.0)
