import numpy as np
import pytest

from panreg.core_math import (
    Dataset,
    HypersphericalCoords,
    center,
    cosine_similarity,
    direction_from_angles,
    from_hyperspherical,
    hyperspherical_jacobian,
    is_orthonormal,
    orthonormalize,
    standardize,
    to_hyperspherical,
)
from panreg.exceptions import DegenerateInputError, InsufficientDataError, RankError

from oracles import central_difference


class TestToHyperspherical:
    def test_unit_axis(self):
        c = to_hyperspherical([1.0, 0.0])
        assert c.r == 1.0
        np.testing.assert_allclose(c.angles, [0.0])

    def test_second_axis(self):
        c = to_hyperspherical([0.0, 1.0])
        np.testing.assert_allclose(c.angles, [np.pi / 2])

    def test_round_trip_seed_42(self):
        v = np.random.default_rng(42).standard_normal(6)
        c = to_hyperspherical(v)
        assert c.r == pytest.approx(np.linalg.norm(v), rel=1e-14)
        np.testing.assert_allclose(from_hyperspherical(c), v, rtol=1e-10, atol=1e-12)

    def test_angle_ranges(self, rng):
        for _ in range(200):
            c = to_hyperspherical(rng.standard_normal(rng.integers(2, 12)))
            assert np.all((c.angles[:-1] >= 0) & (c.angles[:-1] <= np.pi))
            assert -np.pi < c.angles[-1] <= np.pi

    def test_negative_last_component(self):
        c = to_hyperspherical([0.0, 0.0, -1.0])
        assert c.angles[-1] == pytest.approx(-np.pi / 2)
        np.testing.assert_allclose(from_hyperspherical(c), [0, 0, -1], atol=1e-15)

    def test_zero_vector_convention(self):
        c = to_hyperspherical(np.zeros(4))
        assert c.r == 0.0
        np.testing.assert_array_equal(c.angles, np.zeros(3))

    def test_scalar_has_no_angles(self):
        c = to_hyperspherical([-3.0])
        assert c.dim == 1 and c.r == 3.0 and c.angles.size == 0

    def test_pi_not_minus_pi(self):
        c = to_hyperspherical([-1.0, -0.0])
        assert c.angles[-1] == pytest.approx(np.pi)


class TestFromHyperspherical:
    def test_quarter_turn(self):
        np.testing.assert_allclose(from_hyperspherical(HypersphericalCoords(1.0, [np.pi / 2])),
                                   [0.0, 1.0], atol=1e-15)

    def test_leading_cosine(self):
        np.testing.assert_allclose(from_hyperspherical(HypersphericalCoords(2.0, [0.0, 0.0])),
                                   [2.0, 0.0, 0.0])

    def test_hand_cascade(self):
        v = from_hyperspherical(HypersphericalCoords(1.0, [np.pi / 2, np.pi / 4]))
        np.testing.assert_allclose(v, [0.0, np.sqrt(2) / 2, np.sqrt(2) / 2], atol=1e-15)

    def test_norm_preserved(self, rng):
        for _ in range(100):
            p = rng.integers(2, 15)
            ang = np.concatenate((rng.uniform(0, np.pi, p - 2), rng.uniform(-np.pi, np.pi, 1)))
            r = rng.uniform(0.1, 10)
            assert np.linalg.norm(from_hyperspherical(HypersphericalCoords(r, ang))) \
                == pytest.approx(r, rel=1e-12)

    def test_negative_length_rejected(self):
        with pytest.raises(ValueError):
            HypersphericalCoords(-1.0, [0.0])

    def test_direction_is_unit(self, rng):
        d = direction_from_angles(rng.uniform(0, np.pi, 7))
        assert np.linalg.norm(d) == pytest.approx(1.0, abs=1e-14)


class TestJacobian:
    def test_against_central_differences(self, rng):
        for p in (2, 3, 5, 8):
            z = np.concatenate(([rng.uniform(0.5, 2)], rng.uniform(0.2, 2.9, p - 1)))

            def f(z, k):
                return (z[0] * direction_from_angles(z[1:]))[k]

            J = hyperspherical_jacobian(z[0], z[1:])
            for k in range(p):
                np.testing.assert_allclose(J[k], central_difference(lambda zz: f(zz, k), z),
                                           atol=1e-8)


class TestCosineSimilarity:
    def test_orthogonal(self):
        assert cosine_similarity([1, 0], [0, 1]) == 0.0

    def test_parallel(self):
        assert cosine_similarity([1, 1], [2, 2]) == pytest.approx(1.0)

    def test_scale_invariant(self, rng):
        a, b = rng.standard_normal(5), rng.standard_normal(5)
        assert cosine_similarity(3.5 * a, 0.2 * b) == pytest.approx(cosine_similarity(a, b), abs=1e-12)

    def test_zero_norm(self):
        with pytest.raises(DegenerateInputError):
            cosine_similarity([0, 0], [1, 2])


class TestCenter:
    def test_column(self):
        d = center(Dataset([[1.0], [3.0]], [0.0, 0.0]))
        np.testing.assert_allclose(d.X[:, 0], [-1.0, 1.0])

    def test_constant_outcome(self):
        d = center(Dataset(np.arange(6.0).reshape(3, 2), [5.0, 5.0, 5.0]))
        np.testing.assert_allclose(d.Y, 0.0)
        assert d.y_mean == 5.0 and d.centered

    def test_zero_means(self, rng):
        d = center(Dataset(rng.standard_normal((97, 6)) + 3, rng.standard_normal(97)))
        assert np.all(np.abs(d.X.sum(axis=0)) < 1e-9 * d.n)
        assert abs(d.Y.sum()) < 1e-9 * d.n

    def test_needs_two_rows(self):
        with pytest.raises(InsufficientDataError):
            center(Dataset([[1.0, 2.0]], [1.0]))

    def test_transform_x_composes(self, rng):
        raw = Dataset(rng.standard_normal((20, 3)) * [1, 5, 9] + [1, 2, 3], rng.standard_normal(20))
        d = standardize(raw)
        np.testing.assert_allclose(d.transform_x(raw.X[4]), d.X[4], atol=1e-12)
        np.testing.assert_allclose(d.X.std(axis=0, ddof=1), 1.0)

    def test_constant_column_not_standardizable(self):
        with pytest.raises(RankError):
            standardize(Dataset([[1.0, 2.0], [1.0, 3.0], [1.0, 5.0]], [1.0, 2.0, 3.0]))


class TestOrthonormalize:
    def test_random_seed_1(self):
        Q = orthonormalize(np.random.default_rng(1).standard_normal((50, 6)))
        assert np.abs(Q.T @ Q - np.eye(6)).max() < 1e-9

    def test_sqrt_n(self):
        Q = orthonormalize(np.random.default_rng(1).standard_normal((50, 6)), scale="sqrt_n")
        assert np.abs(Q.T @ Q - 50 * np.eye(6)).max() < 1e-9

    def test_already_orthonormal_unchanged(self):
        Q = orthonormalize(np.random.default_rng(2).standard_normal((30, 4)))
        np.testing.assert_allclose(orthonormalize(Q), Q, atol=1e-12)

    def test_span_preserved(self, rng):
        X = rng.standard_normal((25, 4))
        Q = orthonormalize(X)
        np.testing.assert_allclose(Q @ (Q.T @ X), X, atol=1e-10)

    def test_rank_deficient(self, rng):
        X = rng.standard_normal((20, 3))
        X[:, 2] = X[:, 0] - X[:, 1]
        with pytest.raises(RankError):
            orthonormalize(X)

    def test_is_orthonormal(self):
        assert is_orthonormal(np.eye(3))
        assert not is_orthonormal(2 * np.eye(3))
