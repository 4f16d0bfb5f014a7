"""Parametric-bootstrap selection of the ridge and angle penalties.

Outcome vectors are simulated from the fitted linear model with Gaussian
noise at the plug-in noise level; every grid point is scored on the same
bootstrap samples by the squared distance between the personalized
predictions for the in-sample covariate vectors and the plug-in mean.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _random
from .core_math import Dataset, is_orthonormal
from .estimators import ols_fit, prediction_from_products
from .exceptions import DomainError, InsufficientDataError, TuningError
from .optimizer import OptimizerConfig, fit_general_batch

DEFAULT_LAMBDA1 = (0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0)
DEFAULT_LAMBDA2 = (-8.0, -4.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 2.5, 3.0, 4.0, 6.0, 8.0, 12.0)

METHODS = ("ridge_only", "pan_only", "pan_ridge", "pan_given_lambda1")

# a grid point is rejected when more than this share of replicates failed
MAX_FAILURE_RATE = 0.01


@dataclass(frozen=True)
class TuningGrid:
    lambda1_values: Sequence[float] = DEFAULT_LAMBDA1
    lambda2_values: Sequence[float] = DEFAULT_LAMBDA2
    B: int = 2000
    seed: int = 0

    def __post_init__(self):
        l1 = tuple(sorted(float(v) for v in self.lambda1_values))
        l2 = tuple(sorted(float(v) for v in self.lambda2_values))
        if not l1 or not l2:
            raise ValueError("tuning grids must be non-empty")
        if l1[0] < 0:
            raise DomainError("ridge grid values must be >= 0")
        if self.B < 1:
            raise ValueError("B must be >= 1")
        object.__setattr__(self, "lambda1_values", l1)
        object.__setattr__(self, "lambda2_values", l2)


@dataclass
class TuningResult:
    mse_surface: np.ndarray
    lambda1_values: tuple
    lambda2_values: tuple
    selected: tuple
    sigma_hat: float
    method: str
    B: int
    seed: int
    failures: np.ndarray = None
    failed_points: list = field(default_factory=list)

    @property
    def lambda1(self) -> float:
        return self.selected[0]

    @property
    def lambda2(self) -> float:
        return self.selected[1]

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "lambda1_values": list(self.lambda1_values),
            "lambda2_values": list(self.lambda2_values),
            "mse_surface": [[None if not np.isfinite(v) else float(v) for v in row]
                            for row in self.mse_surface],
            "selected": {"lambda1": self.selected[0], "lambda2": self.selected[1]},
            "sigma_hat": self.sigma_hat,
            "B": self.B,
            "seed": self.seed,
            "failed_points": [list(p) for p in self.failed_points],
        }


def estimate_sigma(data: Dataset):
    """Plug-in noise level from the OLS residuals, ``RSS / (n - p)``.

    Returns ``(sigma_hat, sigma2_hat)``.
    """
    if data.n <= data.p:
        raise InsufficientDataError(
            f"need n > p for a residual variance, got n = {data.n}, p = {data.p}")
    beta = ols_fit(data).beta
    resid = data.Y - data.X @ beta
    s2 = float(resid @ resid) / (data.n - data.p)
    return float(np.sqrt(s2)), s2


def _grid_for(method, grid: TuningGrid, lambda1):
    if method == "ridge_only":
        return grid.lambda1_values, (0.0,)
    if method == "pan_only":
        return (0.0,), grid.lambda2_values
    if method == "pan_ridge":
        return grid.lambda1_values, grid.lambda2_values
    if method == "pan_given_lambda1":
        if lambda1 is None:
            raise ValueError("pan_given_lambda1 needs a fixed lambda1")
        if lambda1 < 0:
            raise DomainError("ridge penalty must be >= 0")
        return (float(lambda1),), grid.lambda2_values
    raise ValueError(f"unknown tuning method {method!r}; expected one of {METHODS}")


def bootstrap_noise(n, B, seed):
    """Standard normal ``(B, n)`` noise, one counter-based stream per replicate."""
    eps = np.empty((B, n))
    for r in range(B):
        eps[r] = _random.stream(seed, _random.BOOTSTRAP, r).standard_normal(n)
    return eps


def bootstrap_outcomes(X, beta, sigma, B, seed, noise=None):
    """``B`` outcome vectors ``X beta + sigma eps``.

    ``noise`` may carry a precomputed :func:`bootstrap_noise` draw for the
    same ``(n, B, seed)``, which callers tuning several grids reuse.
    """
    X = np.asarray(X, dtype=float)
    eps = bootstrap_noise(X.shape[0], B, seed) if noise is None else noise
    return X @ beta + sigma * eps


def _inner_products(X, Yb, x_eval):
    """``|beta|^2``, ``|x|^2`` and ``x.beta`` for every replicate and target
    under an orthonormal design, shaped to broadcast to ``(B, m)``."""
    beta_b = Yb @ X  # (B, p): X'Y per replicate
    return ((beta_b * beta_b).sum(axis=1)[:, None], (x_eval * x_eval).sum(axis=1)[None, :],
            beta_b @ x_eval.T)


def _score_point(X, Yb, x_eval, target, l1, l2, products, config):
    """Average squared prediction error at one grid point.

    ``products`` holds the output of :func:`_inner_products` when the design
    is orthonormal and is ``None`` otherwise. Returns
    ``(mse, n_failed_replicates)``.
    """
    B = Yb.shape[0]
    if products is not None:
        with np.errstate(all="ignore"):
            pred = prediction_from_products(*products, l1, l2)
        failed = ~np.all(np.isfinite(pred), axis=1)
    elif l2 == 0:
        A = X.T @ X + l1 * np.eye(X.shape[1])
        beta_b = np.linalg.solve(A, (Yb @ X).T).T
        pred = beta_b @ x_eval.T
        failed = np.zeros(B, dtype=bool)
    else:
        res = fit_general_batch(Dataset(X, Yb[0]), x_eval, l1, l2, Y=Yb, config=config)
        m = x_eval.shape[0]
        betas = res.beta.reshape(B, m, -1)
        pred = np.einsum("rip,ip->ri", betas, x_eval)
        failed = ~res.converged.reshape(B, m).all(axis=1)
    ok = ~failed
    if not ok.any():
        return np.nan, int(failed.sum())
    err = (pred[ok] - target[None, :]) ** 2
    return float(err.mean()), int(failed.sum())


def _run_grid(X, center_beta, sigma, x_eval, l1_values, l2_values, B, seed,
              workers, config, method, sigma_report, noise=None):
    X = np.asarray(X, dtype=float)
    x_eval = np.asarray(x_eval, dtype=float)
    Yb = bootstrap_outcomes(X, center_beta, sigma, B, seed, noise)
    products = _inner_products(X, Yb, x_eval) if is_orthonormal(X) else None
    target = x_eval @ center_beta
    points = [(i, j) for i in range(len(l1_values)) for j in range(len(l2_values))]

    def work(ij):
        i, j = ij
        return _score_point(X, Yb, x_eval, target, l1_values[i], l2_values[j], products, config)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            scored = list(pool.map(work, points))
    else:
        scored = [work(ij) for ij in points]

    surface = np.full((len(l1_values), len(l2_values)), np.nan)
    failures = np.zeros_like(surface, dtype=int)
    failed_points = []
    for (i, j), (mse, nfail) in zip(points, scored):
        failures[i, j] = nfail
        if nfail > MAX_FAILURE_RATE * B or not np.isfinite(mse):
            failed_points.append((l1_values[i], l2_values[j]))
        else:
            surface[i, j] = mse
    if not np.isfinite(surface).any():
        raise TuningError("every grid point failed during bootstrap tuning")
    return TuningResult(
        mse_surface=surface,
        lambda1_values=tuple(l1_values),
        lambda2_values=tuple(l2_values),
        selected=select(surface, l1_values, l2_values),
        sigma_hat=sigma_report,
        method=method,
        B=B,
        seed=seed,
        failures=failures,
        failed_points=failed_points,
    )


def select(surface, l1_values, l2_values, rtol=1e-12):
    """Grid point with the smallest MSE; ties go to the smallest ``|lambda2|``
    and then the smallest ``lambda1``."""
    surface = np.asarray(surface, dtype=float)
    best = np.nanmin(surface)
    tie = np.isfinite(surface) & (surface <= best + rtol * max(abs(best), 1e-300))
    cands = [(abs(l2_values[j]), l1_values[i], l2_values[j])
             for i, j in zip(*np.nonzero(tie))]
    _, l1, l2 = min(cands)
    return (float(l1), float(l2))


def bootstrap_tune(data: Dataset, grid: TuningGrid = None, method: str = "pan_ridge",
                   lambda1: Optional[float] = None, workers: int = 1,
                   config: Optional[OptimizerConfig] = None) -> TuningResult:
    """Select tuning parameters by parametric bootstrap around the OLS fit.

    ``method`` restricts the grid: ``ridge_only`` (angle penalty 0),
    ``pan_only`` (ridge penalty 0), ``pan_ridge`` (full grid) or
    ``pan_given_lambda1`` (ridge penalty fixed at ``lambda1``).
    """
    grid = grid or TuningGrid()
    l1_values, l2_values = _grid_for(method, grid, lambda1)
    sigma, _ = estimate_sigma(data)
    beta = ols_fit(data).beta
    return _run_grid(data.X, beta, sigma, data.X, l1_values, l2_values, grid.B, grid.seed,
                     workers, config, method, sigma)


def oracle_tune(X, beta_true, sigma_true: float, grid: TuningGrid = None,
                lambda1_fixed: Optional[float] = None, x_eval=None, workers: int = 1,
                config: Optional[OptimizerConfig] = None) -> TuningResult:
    """Bootstrap tuning with the true coefficients and noise level plugged in.

    ``x_eval`` defaults to the rows of the design ``X``. With
    ``lambda1_fixed`` only the angle penalty is searched.
    """
    grid = grid or TuningGrid()
    X = np.asarray(X, dtype=float)
    beta_true = np.asarray(beta_true, dtype=float)
    if X.shape[1] != beta_true.size:
        raise ValueError("beta_true does not match the design dimension")
    if sigma_true < 0:
        raise DomainError("sigma_true must be >= 0")
    if lambda1_fixed is None:
        method, l1 = "pan_ridge", None
    else:
        method, l1 = "pan_given_lambda1", lambda1_fixed
    l1_values, l2_values = _grid_for(method, grid, l1)
    x_eval = X if x_eval is None else np.atleast_2d(np.asarray(x_eval, dtype=float))
    return _run_grid(X, beta_true, sigma_true, x_eval, l1_values, l2_values, grid.B,
                     grid.seed, workers, config, "oracle_" + method, float(sigma_true))
