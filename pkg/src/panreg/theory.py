"""Analytic results for the scaled orthogonal design ``X'X = n I``.

Includes the small-``lambda2`` slope of the prediction MSE, the ridge
crossover at which the helpful sign of ``lambda2`` flips, the density of the
cosine similarity between a random direction and a fixed one, and a
Monte-Carlo estimator of the prediction MSE curve used to check them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from . import _random
from .core_math import orthonormalize
from .estimators import pan_ridge_prediction
from .exceptions import DegenerateInputError, DomainError


@dataclass(frozen=True)
class TheoryInstance:
    x0: np.ndarray
    beta_true: np.ndarray
    sigma: float
    n: int
    lambda1: float = 0.0

    def __post_init__(self):
        x0 = np.asarray(self.x0, dtype=float).reshape(-1)
        beta = np.asarray(self.beta_true, dtype=float).reshape(-1)
        if x0.shape != beta.shape:
            raise ValueError("x0 and beta_true must have the same length")
        if np.linalg.norm(x0) == 0 or np.linalg.norm(beta) == 0:
            raise DegenerateInputError("x0 and beta_true must be nonzero")
        if not self.sigma > 0:
            raise DomainError("sigma must be > 0")
        if self.n < 1:
            raise DomainError("n must be >= 1")
        if self.lambda1 < 0:
            raise DomainError("lambda1 must be >= 0")
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "beta_true", beta)

    @property
    def p(self) -> int:
        return self.x0.size

    @property
    def cos_sim(self) -> float:
        return float(self.x0 @ self.beta_true
                     / (np.linalg.norm(self.x0) * np.linalg.norm(self.beta_true)))


def mse_derivative_at_zero(inst: TheoryInstance) -> float:
    """Leading-order derivative of the prediction MSE in ``lambda2`` at 0.

    ``C1 * (lambda1 (x0'b)^2 - sigma^2 |x0|^2 (1 - 4 cos^2))`` with
    ``C1 = 2 (|x0|^2 |b|^2 - (x0'b)^2) / (n (n + lambda1) |x0|^2 |b|^4)``;
    the O(n^-3) remainder is dropped.
    """
    x2 = float(inst.x0 @ inst.x0)
    b2 = float(inst.beta_true @ inst.beta_true)
    q = float(inst.x0 @ inst.beta_true) ** 2
    c1 = 2.0 * (x2 * b2 - q) / (inst.n * (inst.n + inst.lambda1) * x2 * b2 ** 2)
    cos2 = q / (x2 * b2)
    return c1 * (inst.lambda1 * q - inst.sigma ** 2 * x2 * (1.0 - 4.0 * cos2))


def _prediction_terms(x0, beta):
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    beta = np.asarray(beta, dtype=float).reshape(-1)
    x2 = float(x0 @ x0)
    if x2 == 0 or float(beta @ beta) == 0:
        raise DegenerateInputError("x0 and beta must be nonzero")
    q = float(x0 @ beta) ** 2
    if q == 0:
        raise DegenerateInputError("undefined when x0 is orthogonal to beta")
    return x2, q, q / (x2 * float(beta @ beta))


def oracle_fridge_lambda(x0, beta, sigma: float) -> float:
    """Oracle focused-ridge penalty ``sigma^2 |x0|^2 / (x0'beta)^2``."""
    x2, q, _ = _prediction_terms(x0, beta)
    return sigma ** 2 * x2 / q


def lambda1_star(x0, beta, sigma: float) -> float:
    """Ridge penalty at which the MSE slope in ``lambda2`` changes sign.

    Negative whenever ``|cos| > 1/2``: then every ``lambda1 >= 0`` lies above it.
    """
    _, _, cos2 = _prediction_terms(x0, beta)
    return oracle_fridge_lambda(x0, beta, sigma) * (1.0 - 4.0 * cos2)


def _check_p(p):
    if int(p) != p or p < 2:
        raise DomainError(f"dimension must be an integer >= 2, got {p}")
    return int(p)


def _density_constant(p: int) -> float:
    return float(np.exp(special.gammaln(p / 2) - special.gammaln((p - 1) / 2)) / np.sqrt(np.pi))


def inner_product_density(z, p: int):
    """Density of ``x'u`` for ``u`` uniform on the unit sphere and unit ``x``.

    ``Gamma(p/2) / (sqrt(pi) Gamma((p-1)/2)) (1 - z^2)^((p-3)/2)`` on (-1, 1).
    """
    p = _check_p(p)
    z = np.asarray(z, dtype=float)
    if np.any(np.abs(z) >= 1):
        raise DomainError("density is defined for |z| < 1")
    out = _density_constant(p) * (1.0 - z * z) ** ((p - 3) / 2)
    return float(out) if out.ndim == 0 else out


def proportion_within(t: float, p: int) -> float:
    """Probability that the cosine similarity lies in ``(-t, t)``.

    Integrated in ``theta`` with ``z = sin(theta)``, which removes the
    endpoint singularity at ``p = 2``.
    """
    p = _check_p(p)
    if not 0 < t <= 1:
        raise DomainError("t must lie in (0, 1]")
    c = _density_constant(p)
    val, _ = integrate.quad(lambda th: np.cos(th) ** (p - 2), 0.0, float(np.arcsin(t)),
                            epsabs=1e-12, epsrel=1e-12)
    return float(min(1.0, 2.0 * c * val))


@dataclass
class MseCurve:
    lambda2_values: np.ndarray
    mse: np.ndarray
    se: np.ndarray
    diff_vs_zero: np.ndarray
    diff_se: np.ndarray
    replications: int
    seed: int

    def rows(self):
        return list(zip(self.lambda2_values.tolist(), self.mse.tolist()))


def mc_mse_curve(inst: TheoryInstance, lambda2_values, replications: int, seed: int = 0,
                 chunk: int = 20000) -> MseCurve:
    """Monte-Carlo prediction MSE of scaled-design PAN-ridge along ``lambda2``.

    One design with ``X'X = n I`` is drawn and kept fixed; only the noise is
    redrawn. Each replicate gives ``beta_ols = X'Y / n`` and the prediction at
    ``x0`` for every ``lambda2``, all on the same noise. Paired differences
    against ``lambda2 = 0`` come with their own standard errors.
    """
    if replications < 1:
        raise ValueError("replications must be >= 1")
    lam2 = np.asarray(lambda2_values, dtype=float).reshape(-1)
    n, p = inst.n, inst.p
    if n < p:
        raise DomainError("need n >= p for a scaled orthogonal design")
    X = orthonormalize(_random.stream(seed, _random.MONTE_CARLO, 0, sub=1)
                       .standard_normal((n, p)), scale="sqrt_n")
    Xt = X.T / n
    mean = X @ inst.beta_true
    truth = float(inst.x0 @ inst.beta_true)
    grid = np.concatenate(([0.0], lam2))

    sums = np.zeros(grid.size)
    sq = np.zeros(grid.size)
    dsum = np.zeros(grid.size)
    dsq = np.zeros(grid.size)
    done, k = 0, 0
    while done < replications:
        m = min(chunk, replications - done)
        eps = _random.stream(seed, _random.MONTE_CARLO, k).standard_normal((m, n))
        beta_ols = (mean + inst.sigma * eps) @ Xt.T
        err = np.empty((m, grid.size))
        for j, l2 in enumerate(grid):
            pred = pan_ridge_prediction(beta_ols, inst.x0, inst.lambda1 / n, l2 / n)
            err[:, j] = (pred - truth) ** 2
        d = err - err[:, :1]
        sums += err.sum(axis=0)
        sq += (err ** 2).sum(axis=0)
        dsum += d.sum(axis=0)
        dsq += (d ** 2).sum(axis=0)
        done += m
        k += 1

    R = replications
    mse = sums / R
    dmean = dsum / R
    if R > 1:
        se = np.sqrt(np.maximum(sq / R - mse ** 2, 0.0) * R / (R - 1) / R)
        dse = np.sqrt(np.maximum(dsq / R - dmean ** 2, 0.0) * R / (R - 1) / R)
    else:
        se = np.full(grid.size, np.nan)
        dse = np.full(grid.size, np.nan)
    return MseCurve(lam2, mse[1:], se[1:], dmean[1:], dse[1:], R, seed)
