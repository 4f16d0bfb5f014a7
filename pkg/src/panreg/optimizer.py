"""Numerical PAN-ridge fits for general (non-orthonormal) designs.

The objective is

    f(beta) = ||Y - X beta||^2 + lambda1 beta'beta
              + (lambda2 / x0'x0) (x0'beta)^2 / beta'beta

which is smooth away from the origin but not convex. The solver is a damped
Newton method with the Hessian's eigenvalues replaced by their absolute
values (so every step is a descent direction, including near saddles) and
Armijo backtracking. It runs on a whole batch of problems at once, since
bootstrap tuning needs one fit per (replicate, covariate vector) pair.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import optimize

from .core_math import (
    Dataset,
    HypersphericalCoords,
    direction_from_angles,
    hyperspherical_jacobian,
    is_orthonormal,
    to_hyperspherical,
)
from .estimators import CoefficientVector, PanFit, pan_ridge_fit_orthonormal, ridge_fit
from .exceptions import ConvergenceError, DegenerateInputError, DomainError, RankError


@dataclass(frozen=True)
class OptimizerConfig:
    max_iterations: int = 200
    gradient_tolerance: float = 1e-10
    parametrization: str = "cartesian"
    initializer: str = "ols"
    multistart: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.gradient_tolerance > 0:
            raise ValueError("gradient_tolerance must be > 0")
        if self.parametrization not in ("cartesian", "hyperspherical"):
            raise ValueError(f"unknown parametrization {self.parametrization!r}")
        if self.initializer not in ("ols", "ridge"):
            raise ValueError(f"unknown initializer {self.initializer!r}")


def _check(beta, x0):
    bb = float(beta @ beta)
    if bb == 0:
        raise DomainError("the angle penalty is undefined at beta = 0")
    if float(x0 @ x0) == 0:
        raise DegenerateInputError("covariate vector x0 has zero norm")
    return bb


def objective(beta, data: Dataset, x0, lambda1: float = 0.0, lambda2: float = 0.0) -> float:
    """Penalized residual sum of squares at ``beta``."""
    beta = np.asarray(beta, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    bb = _check(beta, x0)
    resid = data.Y - data.X @ beta
    xb = float(x0 @ beta)
    return float(resid @ resid + lambda1 * bb + lambda2 / float(x0 @ x0) * xb * xb / bb)


def gradient(beta, data: Dataset, x0, lambda1: float = 0.0, lambda2: float = 0.0) -> np.ndarray:
    """Analytic gradient of :func:`objective`."""
    beta = np.asarray(beta, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    bb = _check(beta, x0)
    lam = lambda2 / float(x0 @ x0)
    xb = float(x0 @ beta)
    X, Y = data.X, data.Y
    return (
        -2.0 * X.T @ Y
        + 2.0 * X.T @ (X @ beta)
        + 2.0 * lambda1 * beta
        + 2.0 * lam * x0 * xb / bb
        - 2.0 * lam * xb * xb / bb ** 2 * beta
    )


def hessian(beta, data: Dataset, x0, lambda1: float = 0.0, lambda2: float = 0.0) -> np.ndarray:
    beta = np.asarray(beta, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    _check(beta, x0)
    A = data.X.T @ data.X + lambda1 * np.eye(data.p)
    return _hessian_batch(A, beta[None], x0[None], lambda2 / float(x0 @ x0))[0]


# -- hyperspherical form ------------------------------------------------------


@dataclass(frozen=True)
class HypersphericalData:
    """Rows of a design matrix in hyperspherical form plus the outcome."""

    radii: np.ndarray
    angles: np.ndarray
    Y: np.ndarray

    @classmethod
    def from_dataset(cls, data: Dataset) -> "HypersphericalData":
        coords = [to_hyperspherical(row) for row in data.X]
        return cls(
            radii=np.array([c.r for c in coords]),
            angles=np.array([c.angles for c in coords]).reshape(data.n, data.p - 1),
            Y=data.Y.copy(),
        )


def angular_inner(a, b) -> np.ndarray:
    """Inner product of the unit directions with angles ``a`` and ``b``.

    Uses the nested form cos a1 cos b1 + sin a1 sin b1 (cos a2 cos b2 + ...),
    ending in cos(a_{p-1} - b_{p-1}); broadcasts over leading axes.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    m = max(a.shape[-1], b.shape[-1])
    if m == 0:
        return np.ones(np.broadcast_shapes(a.shape[:-1], b.shape[:-1]))
    s = np.cos(a[..., m - 1] - b[..., m - 1])
    for j in range(m - 2, -1, -1):
        s = np.cos(a[..., j]) * np.cos(b[..., j]) + np.sin(a[..., j]) * np.sin(b[..., j]) * s
    return s


def objective_hyperspherical(
    coords: HypersphericalCoords,
    data: HypersphericalData,
    x0_coords: HypersphericalCoords,
    lambda2: float = 0.0,
    lambda1: float = 0.0,
) -> float:
    """Penalized RSS written in lengths and angles only."""
    if coords.r == 0:
        raise DomainError("the angle penalty is undefined at r = 0")
    fitted = coords.r * data.radii * angular_inner(data.angles, coords.angles)
    resid = data.Y - fitted
    cos0 = float(angular_inner(x0_coords.angles, coords.angles))
    return float(resid @ resid + lambda1 * coords.r ** 2 + lambda2 * cos0 ** 2)


# -- batched solver -----------------------------------------------------------


@dataclass
class BatchResult:
    beta: np.ndarray
    value: np.ndarray
    grad_norm: np.ndarray
    converged: np.ndarray
    iterations: np.ndarray
    history: list = field(default_factory=list)


def _values_batch(A, center, base, x0, lam, beta):
    # quadratic part written around its minimizer: no cancellation near the optimum
    bb = np.einsum("ij,ij->i", beta, beta)
    xb = np.einsum("ij,ij->i", x0, beta)
    d = beta - center
    return np.einsum("ij,jk,ik->i", d, A, d) + base + lam * xb * xb / bb


def _grad_batch(A, b, x0, lam, beta):
    bb = np.einsum("ij,ij->i", beta, beta)[:, None]
    xb = np.einsum("ij,ij->i", x0, beta)[:, None]
    return 2.0 * (beta @ A.T) - 2.0 * b + 2.0 * lam * (x0 * xb / bb - xb * xb / bb ** 2 * beta)


def _hessian_batch(A, beta, x0, lam):
    bb = np.einsum("ij,ij->i", beta, beta)[:, None, None]
    xb = np.einsum("ij,ij->i", x0, beta)[:, None, None]
    p = beta.shape[1]
    S = x0[:, :, None] * x0[:, None, :]
    Sb = x0[:, :, None] * xb  # S @ beta as a column
    bcol = beta[:, :, None]
    cross = Sb * bcol.transpose(0, 2, 1) + bcol * Sb.transpose(0, 2, 1)
    bbT = bcol * bcol.transpose(0, 2, 1)
    q = xb * xb
    HJ = 2.0 * S / bb - 4.0 * cross / bb ** 2 - 2.0 * q * np.eye(p) / bb ** 2 + 8.0 * q * bbT / bb ** 3
    return 2.0 * A[None] + lam * HJ


def solve_batch(A, b, c, x0, lambda2, start, tol=1e-10, max_iter=200, floor=None, record=False):
    """Minimize many PAN-ridge objectives sharing the Gram part ``A``.

    Parameters
    ----------
    A : (p, p) array
        ``X'X + lambda1 I``.
    b : (N, p) array
        ``X'Y`` per problem.
    c : (N,) array
        ``Y'Y`` per problem (only enters the reported values and tolerance).
    x0 : (N, p) array
        Covariate vectors.
    lambda2 : float
        Angle penalty; each problem uses ``lambda2 / |x0|^2``.
    start : (N, p) array
        Initial iterates (must be nonzero).
    floor : (N,) array, optional
        Iterates with norm below ``floor`` are rejected by backtracking.

    Returns
    -------
    BatchResult
    """
    A = np.asarray(A, dtype=float)
    b = np.atleast_2d(np.asarray(b, dtype=float))
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    beta = np.array(np.atleast_2d(start), dtype=float)
    N, p = beta.shape
    b = np.broadcast_to(b, (N, p))
    x0 = np.broadcast_to(x0, (N, p))
    c = np.broadcast_to(np.asarray(c, dtype=float), (N,))
    x2 = np.einsum("ij,ij->i", x0, x0)
    if np.any(x2 == 0):
        raise DegenerateInputError("covariate vector x0 has zero norm")
    if np.any(np.einsum("ij,ij->i", beta, beta) == 0):
        raise DomainError("starting point at the origin")
    lam = (lambda2 / x2)[:, None] if np.ndim(lambda2) == 0 else (np.asarray(lambda2) / x2)[:, None]
    lam_flat = lam[:, 0]
    if floor is None:
        floor = 1e-10 * np.linalg.norm(beta, axis=1)
    floor = np.broadcast_to(floor, (N,))

    try:
        center = np.linalg.solve(A, b.T).T
    except np.linalg.LinAlgError as exc:
        raise RankError("Gram matrix is singular; use a positive ridge penalty") from exc
    base = c - np.einsum("ij,ij->i", b, center)
    value = _values_batch(A, center, base, x0, lam_flat, beta)
    grad = _grad_batch(A, b, x0, lam, beta)
    gnorm = np.linalg.norm(grad, axis=1)
    converged = gnorm <= tol * (1.0 + np.abs(value))
    stalled = np.zeros(N, dtype=bool)
    iterations = np.zeros(N, dtype=int)
    history = [value.copy()] if record else []

    for _ in range(max_iter):
        active = np.flatnonzero(~converged & ~stalled)
        if active.size == 0:
            break
        Ba, ga, xa, la = beta[active], grad[active], x0[active], lam[active]
        H = _hessian_batch(A, Ba, xa, la[:, :, None])
        w, V = np.linalg.eigh(H)
        absw = np.abs(w)
        absw = np.maximum(absw, 1e-12 * absw.max(axis=1, keepdims=True) + 1e-300)
        step = -np.einsum("nij,nj->ni", V, np.einsum("nji,nj->ni", V, ga) / absw)
        slope = np.einsum("ij,ij->i", ga, step)
        t = np.ones(active.size)
        accepted = np.zeros(active.size, dtype=bool)
        new_beta = Ba.copy()
        new_val = value[active].copy()
        # predicted decrease below the resolution of f: Armijo cannot decide,
        # so take the full step when it reduces the gradient norm
        skip = np.zeros(active.size, dtype=bool)
        tiny = np.abs(slope) <= 1e3 * np.finfo(float).eps * (1.0 + np.abs(value[active]))
        if tiny.any():
            ti = np.flatnonzero(tiny)
            cand = Ba[ti] + step[ti]
            ok_norm = np.linalg.norm(cand, axis=1) > floor[active[ti]]
            gc = np.linalg.norm(_grad_batch(A, b[active[ti]], xa[ti], la[ti], cand), axis=1)
            ok = ok_norm & (gc < gnorm[active[ti]])
            idx = ti[ok]
            accepted[idx] = True
            new_beta[idx] = cand[ok]
            new_val[idx] = _values_batch(A, center[active[idx]], base[active[idx]],
                                         xa[idx], la[idx, 0], cand[ok])
            # no gradient progress either: nothing left to gain
            skip[ti[~ok]] = True
        for _halving in range(60):
            todo = np.flatnonzero(~accepted & ~skip)
            if todo.size == 0:
                break
            cand = Ba[todo] + t[todo, None] * step[todo]
            ok_norm = np.linalg.norm(cand, axis=1) > floor[active[todo]]
            safe = np.where(ok_norm[:, None], cand, Ba[todo])
            fv = _values_batch(A, center[active[todo]], base[active[todo]], xa[todo], la[todo, 0], safe)
            ok = ok_norm & (fv <= value[active[todo]] + 1e-4 * t[todo] * slope[todo])
            idx = todo[ok]
            accepted[idx] = True
            new_beta[idx] = cand[ok]
            new_val[idx] = fv[ok]
            t[todo[~ok]] *= 0.5
        stalled[active[~accepted]] = True
        upd = active[accepted]
        beta[upd] = new_beta[accepted]
        value[upd] = new_val[accepted]
        iterations[upd] += 1
        grad[upd] = _grad_batch(A, b[upd], x0[upd], lam[upd], beta[upd])
        gnorm[upd] = np.linalg.norm(grad[upd], axis=1)
        converged[upd] = gnorm[upd] <= tol * (1.0 + np.abs(value[upd]))
        if record:
            history.append(value.copy())

    return BatchResult(beta, value, gnorm, converged, iterations, history)


# -- single-problem front end -------------------------------------------------


def _gram(data: Dataset, lambda1: float):
    return data.X.T @ data.X + lambda1 * np.eye(data.p)


def _initial_point(data: Dataset, lambda1: float, config: OptimizerConfig) -> np.ndarray:
    G = data.X.T @ data.X
    cond = np.linalg.cond(G)
    if config.initializer == "ridge" or not np.isfinite(cond) or cond > 1e8:
        lam = lambda1 if lambda1 > 0 else 1.0
        return ridge_fit(data, lam).beta
    if data.n < data.p:
        raise RankError("OLS initializer needs n >= p")
    return np.linalg.solve(G, data.X.T @ data.Y)


def _starts(init, x0, lambda2, rng, multistart):
    starts = [init]
    if multistart and lambda2 != 0:
        g0 = x0 / np.linalg.norm(x0)
        proj = (init @ g0) * g0
        scale = np.linalg.norm(init)
        perp = init - proj
        starts.append(init - 2 * proj)  # mirror image across H0
        if np.linalg.norm(perp) > 1e-8 * scale:
            starts.append(perp)  # on H0
        starts.append(init + proj)  # stretched toward x0
        starts.append(init + 0.25 * scale * rng.standard_normal(init.size))
    return np.array(starts)


def _general_fit_record(data, x0, lambda1, lambda2, beta, beta_ref, info, tag):
    beta_ref = np.asarray(beta_ref, dtype=float)
    xb_ref = float(x0 @ beta_ref)
    pred = float(x0 @ beta)
    nb, nr = np.linalg.norm(beta), np.linalg.norm(beta_ref)
    cos_t = float(beta @ beta_ref / (nb * nr)) if nb > 0 and nr > 0 else 0.0
    with np.errstate(all="ignore"):
        cos_sim = float(np.clip(xb_ref / (np.linalg.norm(x0) * nr), -1, 1))
    return PanFit(
        beta_hat=CoefficientVector(beta),
        x0=x0,
        lambda1=float(lambda1),
        lambda2=float(lambda2),
        c_value=float(np.clip(2 * cos_t * cos_t - 1, -1, 1)),
        shrinkage_factor=pred / xb_ref if xb_ref != 0 else float("nan"),
        cos_sim=cos_sim,
        method_tag=tag,
        beta_ref=CoefficientVector(beta_ref),
        direction=beta / nb if nb > 0 else None,
        length=float(nb),
        diagnostics=info,
    )


def _hyperspherical_stage(data, x0, lambda1, lambda2, start, config):
    """BFGS over (r, angles); returns the Cartesian point it ends at."""
    c0 = to_hyperspherical(start)
    z0 = np.concatenate(([c0.r], c0.angles))

    def fun(z):
        beta = z[0] * direction_from_angles(z[1:])
        if beta @ beta == 0:
            return np.inf, np.zeros_like(z)
        f = objective(beta, data, x0, lambda1, lambda2)
        g = gradient(beta, data, x0, lambda1, lambda2)
        return f, hyperspherical_jacobian(z[0], z[1:]).T @ g

    res = optimize.minimize(
        fun, z0, jac=True, method="BFGS",
        options={"maxiter": config.max_iterations, "gtol": 1e-8},
    )
    z = res.x if np.isfinite(res.fun) and res.fun <= fun(z0)[0] else z0
    return z[0] * direction_from_angles(z[1:]), int(res.nit)


def fit_general(data: Dataset, x0, lambda1: float = 0.0, lambda2: float = 0.0,
                config: Optional[OptimizerConfig] = None) -> PanFit:
    """Numerically minimize the PAN-ridge objective for one ``x0``.

    Several starting points are tried when ``lambda2 != 0`` (the angle
    penalty creates up to four stationary points) and the lowest objective is
    kept. Raises :class:`ConvergenceError`, carrying the best iterate, when no
    start reaches the gradient tolerance.
    """
    config = config or OptimizerConfig()
    if lambda1 < 0:
        raise DomainError(f"ridge penalty must be >= 0, got {lambda1}")
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.size != data.p:
        raise ValueError(f"x0 has {x0.size} entries, expected {data.p}")
    if x0 @ x0 == 0:
        raise DegenerateInputError("covariate vector x0 has zero norm")
    if lambda2 == 0:
        # plain ridge: the quadratic has a closed-form minimizer
        beta_ref = ridge_fit(data, lambda1).beta
        info = {"parametrization": config.parametrization, "hyperspherical_iterations": 0}
        f = objective(beta_ref, data, x0, lambda1, 0.0)
        info.update(objective=f, grad_norm=float(np.linalg.norm(gradient(beta_ref, data, x0, lambda1, 0.0))),
                    iterations=0, converged=True, n_starts=0, history=[f])
        tag = "ridge" if lambda1 > 0 else "ols"
        return _general_fit_record(data, x0, lambda1, lambda2, beta_ref, beta_ref, info, tag)
    init = _initial_point(data, lambda1, config)
    if init @ init == 0:
        raise DegenerateInputError("initial estimate is the zero vector")
    beta_ref = ridge_fit(data, lambda1).beta
    info = {"parametrization": config.parametrization, "hyperspherical_iterations": 0}
    if config.parametrization == "hyperspherical":
        init, nit = _hyperspherical_stage(data, x0, lambda1, lambda2, init, config)
        info["hyperspherical_iterations"] = nit

    rng = np.random.default_rng(config.seed)
    starts = _starts(init, x0, lambda2, rng, config.multistart)
    A = _gram(data, lambda1)
    b = data.X.T @ data.Y
    c = float(data.Y @ data.Y)
    floor = 1e-10 * np.linalg.norm(init)
    res = solve_batch(A, b[None], c, x0[None], lambda2, starts,
                      tol=config.gradient_tolerance, max_iter=config.max_iterations,
                      floor=floor, record=True)
    order = np.lexsort((~res.converged, res.value))
    k = order[0]
    info.update(
        objective=float(res.value[k]),
        grad_norm=float(res.grad_norm[k]),
        iterations=int(res.iterations[k]),
        converged=bool(res.converged[k]),
        n_starts=len(starts),
        history=[float(h[k]) for h in res.history],
    )
    if not res.converged[k]:
        conv = np.flatnonzero(res.converged)
        if conv.size and res.value[conv].min() <= res.value[k] + 1e-12 * (1 + abs(res.value[k])):
            k = conv[np.argmin(res.value[conv])]
        else:
            raise ConvergenceError(
                f"no start reached gradient tolerance {config.gradient_tolerance} "
                f"within {config.max_iterations} iterations",
                best=res.beta[k].copy(), best_value=float(res.value[k]),
            )
    tag = "pan_ridge" if lambda1 > 0 else "pan"
    return _general_fit_record(data, x0, lambda1, lambda2, res.beta[k], beta_ref, info, tag)


def fit_general_batch(data: Dataset, x0s, lambda1: float, lambda2: float,
                      Y=None, config: Optional[OptimizerConfig] = None) -> BatchResult:
    """One fit per row of ``x0s`` (and per outcome vector, if ``Y`` is 2-D).

    ``Y`` of shape ``(R, n)`` pairs every outcome vector with every covariate
    vector, giving ``R * len(x0s)`` problems ordered replicate-major. The ridge
    estimate of each outcome vector is the starting point (single start).
    """
    config = config or OptimizerConfig()
    x0s = np.atleast_2d(np.asarray(x0s, dtype=float))
    Y = data.Y[None] if Y is None else np.atleast_2d(np.asarray(Y, dtype=float))
    R, m = Y.shape[0], x0s.shape[0]
    A = _gram(data, lambda1)
    B = Y @ data.X  # (R, p) = X'Y per replicate
    c = np.einsum("ij,ij->i", Y, Y)
    A_start = A if lambda1 > 0 else A + (0 if np.linalg.cond(A) < 1e8 else 1.0) * np.eye(data.p)
    start = np.linalg.solve(A_start, B.T).T
    b_all = np.repeat(B, m, axis=0)
    c_all = np.repeat(c, m)
    x_all = np.tile(x0s, (R, 1))
    s_all = np.repeat(start, m, axis=0)
    if lambda2 == 0:
        res = BatchResult(s_all, np.full(R * m, np.nan), np.zeros(R * m),
                          np.ones(R * m, dtype=bool), np.zeros(R * m, dtype=int))
        return res
    return solve_batch(A, b_all, c_all, x_all, lambda2, s_all,
                       tol=config.gradient_tolerance, max_iter=config.max_iterations)


def fit_personalized(data: Dataset, x0, lambda1: float = 0.0, lambda2: float = 0.0,
                     config: Optional[OptimizerConfig] = None) -> PanFit:
    """PAN-ridge fit for ``x0``: closed form when ``X'X = I``, numerical otherwise."""
    if is_orthonormal(data.X):
        return pan_ridge_fit_orthonormal(data.X.T @ data.Y, x0, lambda1, lambda2)
    return fit_general(data, x0, lambda1, lambda2, config)
