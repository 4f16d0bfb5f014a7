"""Closed-form OLS, ridge, PAN and PAN-ridge estimators.

The PAN closed forms assume an orthonormal design (``X.T @ X = I``). Under
that assumption the penalized objective only depends on the data through the
OLS estimate, so the fits below take ``beta_ols`` rather than a dataset.

The vectorized helpers (:func:`pan_ridge_coefficients`,
:func:`pan_ridge_prediction`) broadcast over leading axes and are what the
tuning and simulation code call in bulk; the ``*_fit_*`` functions wrap them
for a single covariate vector and return a :class:`PanFit`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core_math import (
    Dataset,
    HypersphericalCoords,
    cosine_similarity,
    to_hyperspherical,
)
from .exceptions import DegenerateInputError, DomainError, RankError

METHOD_TAGS = ("ols", "ridge", "pan", "pan_ridge")

# relative threshold on |b|^2 |x0|^2 - (x0.b)^2 below which x0 and b are
# treated as collinear and the second basis vector is dropped
COLLINEAR_RTOL = 1e-12


@dataclass(frozen=True)
class CoefficientVector:
    """Regression coefficients with an on-demand hyperspherical view."""

    beta: np.ndarray

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float).reshape(-1)
        if not np.all(np.isfinite(beta)):
            raise DegenerateInputError("coefficient vector has non-finite entries")
        object.__setattr__(self, "beta", beta)

    def __array__(self, dtype=None, copy=None):
        return self.beta if dtype is None else self.beta.astype(dtype)

    def __len__(self):
        return self.beta.size

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.beta))

    @property
    def hyperspherical(self) -> HypersphericalCoords:
        return to_hyperspherical(self.beta)


@dataclass(frozen=True)
class PanFit:
    """Personalized coefficients for one covariate vector ``x0``.

    ``c_value`` is the eigen-structure constant (``c`` for PAN, ``C`` for
    PAN-ridge), ``shrinkage_factor`` the multiplier taking the OLS prediction
    ``x0 . beta_ref`` to the fitted prediction, and ``direction``/``length``
    the unit direction and signed length with ``beta_hat = length * direction``.
    """

    beta_hat: CoefficientVector
    x0: np.ndarray
    lambda1: float
    lambda2: float
    c_value: float
    shrinkage_factor: float
    cos_sim: float
    method_tag: str
    beta_ref: Optional[CoefficientVector] = None
    direction: Optional[np.ndarray] = None
    length: Optional[float] = None
    diagnostics: Optional[dict] = None

    @property
    def prediction(self) -> float:
        return float(self.x0 @ self.beta_hat.beta)


def _as_vector(v, name):
    v = np.asarray(v, dtype=float).reshape(-1)
    if not np.all(np.isfinite(v)):
        raise DegenerateInputError(f"{name} has non-finite entries")
    return v


def _check_lambda1(lambda1):
    if lambda1 < 0:
        raise DomainError(f"ridge penalty must be >= 0, got {lambda1}")


def ols_fit(data: Dataset) -> CoefficientVector:
    """Least-squares coefficients ``(X'X)^{-1} X'Y``; raises on rank deficiency."""
    X, Y = data.X, data.Y
    if data.n < data.p:
        raise RankError(f"X'X is singular: n = {data.n} < p = {data.p}")
    coef, _, rank, sv = np.linalg.lstsq(X, Y, rcond=None)
    if rank < data.p or sv[-1] <= sv[0] * 1e-12:
        raise RankError("X'X is singular or numerically rank deficient")
    return CoefficientVector(coef)


def ridge_fit(data: Dataset, lambda1: float) -> CoefficientVector:
    """Ridge coefficients ``(X'X + lambda1 I)^{-1} X'Y``."""
    _check_lambda1(lambda1)
    if lambda1 == 0:
        return ols_fit(data)
    X, Y = data.X, data.Y
    A = X.T @ X + lambda1 * np.eye(data.p)
    return CoefficientVector(np.linalg.solve(A, X.T @ Y))


def _pan_scalars(beta_ols, x0, lambda1, lambda2):
    """Shared scalar pieces of the PAN-ridge closed form (broadcasting)."""
    b2 = np.sum(beta_ols * beta_ols, axis=-1)
    x2 = np.sum(x0 * x0, axis=-1)
    xb = np.sum(x0 * beta_ols, axis=-1)
    if np.any(b2 == 0):
        raise DegenerateInputError("unpenalized estimate has zero norm")
    if np.any(x2 == 0):
        raise DegenerateInputError("covariate vector x0 has zero norm")
    lam = (1.0 + lambda1) * lambda2
    a2 = xb * xb / x2
    disc = np.maximum((b2 + lam) ** 2 - 4.0 * lam * a2, 0.0)
    sq = np.sqrt(disc)
    # at sq == 0 the two leading eigenvalues tie; keep the unpenalized direction
    safe = np.where(sq > 0, sq, 1.0)
    C = np.where(sq > 0, (b2 + lam - 2.0 * lam * a2 / b2) / safe, 1.0)
    ratio = np.where(sq > 0, (b2 - lam) / safe, 1.0)
    C = np.clip(C, -1.0, 1.0)
    return b2, x2, xb, lam, C, ratio


def _discriminant(b2, x2, xb, lam):
    return np.sqrt(np.maximum((b2 + lam) ** 2 - 4.0 * lam * xb * xb / x2, 0.0))


def _half_one_plus_ratio(b2, x2, xb, lam):
    """``(1 + (b2 - lam) / sqrt(D)) / 2`` without cancellation.

    Uses ``D - (b2 - lam)^2 = 4 lam perp2 / x2`` when ``b2 - lam < 0``.
    """
    sq = _discriminant(b2, x2, xb, lam)
    s = b2 - lam
    perp2 = np.maximum(b2 * x2 - xb * xb, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = 0.5 * (sq + s) / sq
        flipped = 2.0 * lam * perp2 / (x2 * sq * (sq - s))
    out = np.where(s >= 0, direct, flipped)
    return np.where(sq > 0, out, 1.0)


def _cos_sin_terms(b2, x2, xb, lam, sq):
    """``(1 + C, 1 - C, sqrt(1 - C^2))`` without cancellation.

    With ``t = sqrt(D) C`` one has ``D - t^2 = 4 lam^2 a^2 (b2 - a^2) / b2^2``,
    ``a^2 = xb^2 / x2``, so ``sqrt(1 - C^2)`` needs no subtraction; the
    smaller of ``1 +- C`` is recovered from it.
    """
    perp2 = np.maximum(b2 * x2 - xb * xb, 0.0)
    safe = np.where(sq > 0, sq, 1.0)
    t = b2 + lam - 2.0 * lam * xb * xb / (x2 * b2)
    S = np.minimum(2.0 * np.abs(lam * xb) * np.sqrt(perp2) / (x2 * b2 * safe), 1.0)
    big = 1.0 + np.abs(t) / safe
    small = S * S / big
    opc = np.where(t >= 0, big, small)
    omc = np.where(t >= 0, small, big)
    degenerate = sq <= 0
    return (np.where(degenerate, 2.0, opc), np.where(degenerate, 0.0, omc),
            np.where(degenerate, 0.0, S))


def pan_ridge_prediction(beta_ols, x0, lambda1=0.0, lambda2=0.0):
    """PAN-ridge prediction ``x0 . beta_hat`` via the shrinkage-factor route.

    Broadcasts over leading axes of ``beta_ols`` and ``x0`` (last axis = p).
    """
    beta_ols = np.asarray(beta_ols, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    b2 = np.sum(beta_ols * beta_ols, axis=-1)
    x2 = np.sum(x0 * x0, axis=-1)
    if np.any(b2 == 0):
        raise DegenerateInputError("unpenalized estimate has zero norm")
    if np.any(x2 == 0):
        raise DegenerateInputError("covariate vector x0 has zero norm")
    return prediction_from_products(b2, x2, np.sum(x0 * beta_ols, axis=-1), lambda1, lambda2)


def prediction_from_products(b2, x2, xb, lambda1=0.0, lambda2=0.0):
    """Shrinkage-factor prediction from ``|beta|^2``, ``|x0|^2`` and ``x0.beta``.

    Lets callers that sweep the penalties compute the inner products once.
    """
    _check_lambda1(lambda1)
    lam = (1.0 + lambda1) * lambda2
    return xb * _half_one_plus_ratio(b2, x2, xb, lam) / (1.0 + lambda1)


def pan_ridge_coefficients(beta_ols, x0, lambda1=0.0, lambda2=0.0):
    """PAN-ridge coefficient vectors for an orthonormal design (broadcasting).

    The second basis direction enters with sign ``-sign(lambda2 * x0.beta)``,
    i.e. the leading eigenvector of the reduced 2x2 problem taken with a
    positive first entry.
    """
    beta_ols = np.asarray(beta_ols, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    b2, x2, xb, lam, C, _ = _pan_scalars(beta_ols, x0, lambda1, lambda2)
    opc, _, S = _cos_sin_terms(b2, x2, xb, lam, _discriminant(b2, x2, xb, lam))
    perp2 = b2 * x2 - xb * xb
    collinear = perp2 <= COLLINEAR_RTOL * b2 * x2
    # at collinearity only the 1 + C term survives; C = +-1 there
    opc = np.where(collinear, 1.0 + C, opc)
    denom = np.sqrt(np.where(collinear, 1.0, perp2))
    w = (b2[..., None] * x0 - xb[..., None] * beta_ols) / denom[..., None]
    sign = -np.sign(lam * xb)
    second = np.where(collinear, 0.0, sign * 0.5 * S)
    out = 0.5 * opc[..., None] * beta_ols + second[..., None] * w
    return out / (1.0 + lambda1)


def _direction(beta_ols, x0, C, lam, xb, b2, x2):
    """Unit direction and the basis it lives in (single instance)."""
    u1 = beta_ols / np.sqrt(b2)
    perp2 = b2 * x2 - xb * xb
    if perp2 <= COLLINEAR_RTOL * b2 * x2:
        if C >= 0:
            return u1
        # direction orthogonal to beta: any unit vector in its complement
        e = np.zeros_like(u1)
        e[np.argmin(np.abs(u1))] = 1.0
        g = e - (e @ u1) * u1
        return g / np.linalg.norm(g)
    u2 = (b2 * x0 - xb * beta_ols) / (np.sqrt(b2) * np.sqrt(perp2))
    opc, omc, _ = _cos_sin_terms(b2, x2, xb, lam, _discriminant(b2, x2, xb, lam))
    cos_t = np.sqrt(0.5 * float(opc))
    sin_t = -np.sign(lam * xb) * np.sqrt(0.5 * float(omc))
    g = cos_t * u1 + sin_t * u2
    return g / np.linalg.norm(g)


def pan_ridge_fit_orthonormal(beta_ols, x0, lambda1: float, lambda2: float) -> PanFit:
    """PAN-ridge fit for one ``x0`` under an orthonormal design.

    ``lambda2 = 0`` gives ridge (``beta_ols / (1 + lambda1)``) and
    ``lambda1 = 0`` gives the plain PAN estimate.
    """
    _check_lambda1(lambda1)
    beta_ols = _as_vector(getattr(beta_ols, "beta", beta_ols), "beta_ols")
    x0 = _as_vector(x0, "x0")
    if beta_ols.shape != x0.shape:
        raise ValueError(f"dimension mismatch: beta has {beta_ols.size}, x0 has {x0.size}")
    b2, x2, xb, lam, C, _ = _pan_scalars(beta_ols, x0, lambda1, lambda2)
    b2, x2, xb, C = float(b2), float(x2), float(xb), float(C)
    beta_hat = pan_ridge_coefficients(beta_ols, x0, lambda1, lambda2)
    gamma = _direction(beta_ols, x0, C, lam, xb, b2, x2)
    return PanFit(
        beta_hat=CoefficientVector(beta_hat),
        x0=x0,
        lambda1=float(lambda1),
        lambda2=float(lambda2),
        c_value=C,
        shrinkage_factor=float(_half_one_plus_ratio(b2, x2, xb, lam)) / (1.0 + lambda1),
        cos_sim=cosine_similarity(x0, beta_ols),
        method_tag="pan_ridge" if lambda1 > 0 else "pan",
        beta_ref=CoefficientVector(beta_ols),
        direction=gamma,
        length=float(beta_ols @ gamma / (1.0 + lambda1)),
    )


def pan_fit_orthonormal(beta_ols, x0, lambda2: float) -> PanFit:
    """PAN fit (no ridge term) for one ``x0`` under an orthonormal design."""
    return pan_ridge_fit_orthonormal(beta_ols, x0, 0.0, lambda2)


def pan_predict(fit: PanFit) -> float:
    """Prediction for ``fit.x0`` computed as shrinkage factor times OLS prediction."""
    if fit.beta_ref is None:
        return fit.prediction
    return float(fit.shrinkage_factor * (fit.x0 @ fit.beta_ref.beta))


def shrinkage_factor(cos_sim, beta_norm, lambda1=0.0, lambda2=0.0):
    """Multiplier on the OLS prediction as a function of cosine similarity.

    Vectorized in ``cos_sim``. Depends on the cosine only through its square.
    """
    _check_lambda1(lambda1)
    cos_sim = np.asarray(cos_sim, dtype=float)
    if np.any(np.abs(cos_sim) > 1 + 1e-12):
        raise DomainError("cosine similarity must lie in [-1, 1]")
    if beta_norm <= 0:
        raise DegenerateInputError("beta_norm must be positive")
    b2 = float(beta_norm) ** 2
    lam = (1.0 + lambda1) * lambda2
    # a unit x0 at the given cosine: x0.beta = cos |beta|
    c = np.clip(cos_sim, -1.0, 1.0)
    out = _half_one_plus_ratio(b2, 1.0, c * float(beta_norm), lam) / (1.0 + lambda1)
    return float(out) if out.ndim == 0 else out


def _wrap_angle(a):
    a = (a + np.pi) % (2 * np.pi) - np.pi
    return np.where(a == -np.pi, np.pi, a)


def pan_fit_2d(beta_ols, x0, lambda2: float) -> PanFit:
    """Two-dimensional PAN fit from the double-angle tangent relation.

    Solves for the angle of the estimate directly, enumerating the four
    stationary angles and keeping the one with the smallest penalized RSS.
    Independent of the eigenvector route in :func:`pan_fit_orthonormal`.
    """
    beta_ols = _as_vector(getattr(beta_ols, "beta", beta_ols), "beta_ols")
    x0 = _as_vector(x0, "x0")
    if beta_ols.size != 2 or x0.size != 2:
        raise ValueError("pan_fit_2d needs p = 2")
    r_ols = np.hypot(*beta_ols)
    r0 = np.hypot(*x0)
    if r_ols == 0 or r0 == 0:
        raise DegenerateInputError("zero-length OLS estimate or covariate vector")
    a_ols = np.arctan2(beta_ols[1], beta_ols[0])
    a0 = np.arctan2(x0[1], x0[0])
    # H0 direction: alpha0 +/- pi/2, whose doubled angle is 2*alpha0 + pi
    num = r_ols ** 2 * np.sin(2 * a_ols) + lambda2 * np.sin(2 * a0 + np.pi)
    den = r_ols ** 2 * np.cos(2 * a_ols) + lambda2 * np.cos(2 * a0 + np.pi)
    base = 0.5 * np.arctan2(num, den)
    best = None
    for k in range(4):
        a = base + k * np.pi / 2
        r = r_ols * np.cos(a_ols - a)
        beta = r * np.array([np.cos(a), np.sin(a)])
        obj = np.sum((beta - beta_ols) ** 2) + lambda2 * np.cos(a - a0) ** 2
        if best is None or obj < best[0] - 1e-15:
            best = (obj, a, r, beta)
    _, a_hat, r_hat, beta_hat = best
    b2, x2, xb, lam, C, _ = _pan_scalars(beta_ols, x0, 0.0, lambda2)
    return PanFit(
        beta_hat=CoefficientVector(beta_hat),
        x0=x0,
        lambda1=0.0,
        lambda2=float(lambda2),
        c_value=float(C),
        shrinkage_factor=float(_half_one_plus_ratio(b2, x2, xb, lam)),
        cos_sim=cosine_similarity(x0, beta_ols),
        method_tag="pan",
        beta_ref=CoefficientVector(beta_ols),
        direction=np.array([np.cos(a_hat), np.sin(a_hat)]),
        length=float(r_hat),
    )


def pan_angle_2d(fit: PanFit) -> float:
    """Angle of the 2-D estimate in (-pi, pi]."""
    return float(_wrap_angle(np.arctan2(fit.beta_hat.beta[1], fit.beta_hat.beta[0])))
