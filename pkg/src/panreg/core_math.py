"""Vector geometry shared by the estimators.

Hyperspherical coordinates follow the usual n-sphere convention::

    v_1     = r cos(a_1)
    v_2     = r sin(a_1) cos(a_2)
    ...
    v_{p-1} = r sin(a_1) ... sin(a_{p-2}) cos(a_{p-1})
    v_p     = r sin(a_1) ... sin(a_{p-2}) sin(a_{p-1})

with a_1..a_{p-2} in [0, pi] and a_{p-1} in (-pi, pi].
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .exceptions import DegenerateInputError, InsufficientDataError, RankError


@dataclass(frozen=True)
class HypersphericalCoords:
    """Length ``r`` and ``p - 1`` angles (radians) of a p-vector."""

    r: float
    angles: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "angles", np.asarray(self.angles, dtype=float).reshape(-1))
        if self.r < 0:
            raise ValueError("hyperspherical length must be nonnegative")

    @property
    def dim(self) -> int:
        return self.angles.size + 1


@dataclass(frozen=True)
class Dataset:
    """Design matrix and outcome, optionally centered.

    ``column_means``/``y_mean`` hold the means removed by :func:`center` so
    that a new covariate vector can be put on the same footing
    (:meth:`transform_x`). ``column_scales`` records any standardization.
    """

    X: np.ndarray
    Y: np.ndarray
    column_means: np.ndarray = None
    y_mean: float = 0.0
    centered: bool = False
    column_scales: np.ndarray = None
    column_names: Optional[Sequence[str]] = None
    outcome_name: Optional[str] = None

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        Y = np.asarray(self.Y, dtype=float).reshape(-1)
        if X.shape[0] != Y.shape[0]:
            raise ValueError(f"X has {X.shape[0]} rows but Y has {Y.shape[0]} entries")
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise InsufficientDataError("dataset needs n >= 1 and p >= 1")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)
        p = X.shape[1]
        if self.column_means is None:
            object.__setattr__(self, "column_means", np.zeros(p))
        if self.column_scales is None:
            object.__setattr__(self, "column_scales", np.ones(p))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def transform_x(self, x) -> np.ndarray:
        """Apply this dataset's centering and scaling to raw covariates."""
        x = np.asarray(x, dtype=float)
        return (x - self.column_means) / self.column_scales

    def drop_row(self, i: int) -> "Dataset":
        keep = np.arange(self.n) != i
        return replace(self, X=self.X[keep], Y=self.Y[keep])


def to_hyperspherical(v) -> HypersphericalCoords:
    """Convert a Cartesian vector to hyperspherical coordinates.

    The zero vector maps to ``r = 0`` with all angles zero. For ``p = 1`` the
    angle list is empty, so only ``|v|`` is representable.
    """
    v = np.asarray(v, dtype=float).reshape(-1)
    p = v.size
    if p < 1:
        raise ValueError("vector must have at least one entry")
    r = float(np.linalg.norm(v))
    if p == 1:
        return HypersphericalCoords(r, np.empty(0))
    # tail[i] = ||v[i:]||, computed from the back to avoid cancellation
    tail = np.sqrt(np.cumsum(v[::-1] ** 2)[::-1])
    angles = np.zeros(p - 1)
    for i in range(p - 2):
        angles[i] = np.arctan2(tail[i + 1], v[i])
    last = np.arctan2(v[p - 1], v[p - 2])
    if last == -np.pi:
        last = np.pi
    angles[p - 2] = last
    return HypersphericalCoords(r, angles)


def direction_from_angles(angles) -> np.ndarray:
    """Unit vector of dimension ``len(angles) + 1`` for the given angles."""
    angles = np.asarray(angles, dtype=float).reshape(-1)
    p = angles.size + 1
    out = np.ones(p)
    if p == 1:
        return out
    sines = np.concatenate(([1.0], np.cumprod(np.sin(angles))))
    out[:-1] = sines[:-1] * np.cos(angles)
    out[-1] = sines[-1]
    return out


def from_hyperspherical(coords: HypersphericalCoords) -> np.ndarray:
    """Inverse of :func:`to_hyperspherical`."""
    return coords.r * direction_from_angles(coords.angles)


def hyperspherical_jacobian(r: float, angles) -> np.ndarray:
    """Jacobian of ``(r, angles) -> r * direction(angles)``, shape ``(p, p)``.

    Column 0 is the derivative with respect to ``r``; column ``j + 1`` the
    derivative with respect to ``angles[j]``.
    """
    angles = np.asarray(angles, dtype=float).reshape(-1)
    p = angles.size + 1
    J = np.zeros((p, p))
    J[:, 0] = direction_from_angles(angles)
    s, c = np.sin(angles), np.cos(angles)
    for k in range(p):
        n_sines = min(k, p - 1)
        trailing = c[k] if k < p - 1 else 1.0
        for j in range(min(k + 1, p - 1)):
            if j < n_sines:
                # d/da_j of sin(a_j) inside the product
                factors = s[:n_sines].copy()
                factors[j] = c[j]
                J[k, j + 1] = r * np.prod(factors) * trailing
            else:
                # j == k: the trailing cosine
                J[k, j + 1] = -r * np.prod(s[:n_sines]) * s[k]
    return J


def cosine_similarity(a, b) -> float:
    """Normalized inner product ``a.b / (|a| |b|)``."""
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise DegenerateInputError("cosine similarity is undefined for a zero vector")
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


def center(data: Dataset) -> Dataset:
    """Center the columns of X and the outcome; the removed means are kept.

    Centering an already centered dataset composes the means, so
    :meth:`Dataset.transform_x` keeps mapping raw covariates correctly.
    """
    if data.n < 2:
        raise InsufficientDataError(f"centering needs n >= 2, got n = {data.n}")
    x_mean = data.X.mean(axis=0)
    y_mean = float(data.Y.mean())
    return replace(
        data,
        X=data.X - x_mean,
        Y=data.Y - y_mean,
        column_means=data.column_means + x_mean * data.column_scales,
        y_mean=data.y_mean + y_mean,
        centered=True,
    )


def standardize(data: Dataset, ddof: int = 1) -> Dataset:
    """Center, then scale every covariate column to unit sample variance."""
    out = center(data)
    sd = out.X.std(axis=0, ddof=ddof)
    if np.any(sd == 0):
        bad = [i for i in np.flatnonzero(sd == 0)]
        raise RankError(f"constant covariate column(s) {bad} cannot be standardized")
    return replace(out, X=out.X / sd, column_scales=out.column_scales * sd)


def orthonormalize(X, scale: str = "unit", rtol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis of the column span of X via QR.

    ``scale="unit"`` gives ``Q.T @ Q = I``; ``scale="sqrt_n"`` gives
    ``n * I``. Each column is signed so its first nonzero entry is positive.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n, p = X.shape
    if n < p:
        raise RankError(f"need n >= p to orthonormalize, got {n} x {p}")
    Q, R = np.linalg.qr(X)
    diag = np.abs(np.diag(R))
    if diag.min() <= rtol * max(diag.max(), np.finfo(float).tiny):
        raise RankError("columns are linearly dependent")
    for j in range(p):
        nz = np.flatnonzero(np.abs(Q[:, j]) > 1e-14)
        if nz.size and Q[nz[0], j] < 0:
            Q[:, j] = -Q[:, j]
    if scale == "unit":
        return Q
    if scale == "sqrt_n":
        return Q * np.sqrt(n)
    raise ValueError(f"unknown scale {scale!r}; expected 'unit' or 'sqrt_n'")


def is_orthonormal(X, atol: float = 1e-9) -> bool:
    X = np.asarray(X, dtype=float)
    return bool(np.allclose(X.T @ X, np.eye(X.shape[1]), rtol=0, atol=atol))
