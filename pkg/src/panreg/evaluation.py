"""Prediction-error metrics: test-set MSE against known coefficients,
leave-one-out cross-validation, and per-observation personalized reports."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core_math import Dataset, cosine_similarity
from .estimators import ols_fit
from .exceptions import InsufficientDataError, PanError
from .optimizer import OptimizerConfig, fit_personalized

METHODS = ("ols", "ridge", "pan", "pan_ridge")


@dataclass
class EvaluationReport:
    method_tag: str
    tuning: tuple
    metric_name: str
    value: float
    per_observation: Optional[list] = None
    fold_errors: Optional[np.ndarray] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        out = {
            "method": self.method_tag,
            "lambda1": self.tuning[0],
            "lambda2": self.tuning[1],
            "metric": self.metric_name,
            "value": self.value,
        }
        if self.per_observation is not None:
            out["per_observation"] = self.per_observation
        return out


def _check_method(method, lambda1, lambda2):
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    if lambda1 < 0:
        raise ValueError("lambda1 must be >= 0")
    if method == "ols" and (lambda1 != 0 or lambda2 != 0):
        raise ValueError("ols takes lambda1 = lambda2 = 0")
    if method == "ridge" and lambda2 != 0:
        raise ValueError("ridge takes lambda2 = 0")
    if method == "pan" and lambda1 != 0:
        raise ValueError("pan takes lambda1 = 0")


def test_mse(beta_hats, x_test, beta_true) -> float:
    """Mean of ``(x_i' beta_hat_i - x_i' beta)^2`` over the test points.

    ``beta_hats`` is either one p-vector shared by all points or one row per
    test point (personalized fits).
    """
    x_test = np.atleast_2d(np.asarray(x_test, dtype=float))
    beta_true = np.asarray(beta_true, dtype=float).reshape(-1)
    beta_hats = np.asarray(beta_hats, dtype=float)
    if x_test.shape[1] != beta_true.size:
        raise ValueError("x_test and beta_true dimensions differ")
    if beta_hats.ndim == 1:
        beta_hats = np.broadcast_to(beta_hats, x_test.shape)
    if beta_hats.shape != x_test.shape:
        raise ValueError(f"beta_hats has shape {beta_hats.shape}, expected {x_test.shape}")
    diff = np.einsum("ij,ij->i", x_test, beta_hats) - x_test @ beta_true
    return float(np.mean(diff ** 2))


test_mse.__test__ = False  # not a pytest test


def _predict_row(train: Dataset, x_raw, lambda1, lambda2, config):
    """Fit on ``train`` after centering it and predict the outcome at ``x_raw``."""
    xm = train.X.mean(axis=0)
    ym = float(train.Y.mean())
    fold = Dataset(train.X - xm, train.Y - ym, centered=True)
    x0 = x_raw - xm
    if not np.any(x0):
        # every coefficient vector predicts the mean at the centroid
        return ym
    fit = fit_personalized(fold, x0, lambda1, lambda2, config)
    return ym + fit.prediction


def loocv(data: Dataset, method: str, lambda1: float = 0.0, lambda2: float = 0.0,
          config: Optional[OptimizerConfig] = None) -> EvaluationReport:
    """Leave-one-out prediction error with tuning parameters held fixed.

    Each fold is re-centered on its own training rows and the held-out row is
    centered with the same means before serving as ``x0``.
    """
    _check_method(method, lambda1, lambda2)
    if data.n < 3:
        raise InsufficientDataError(f"leave-one-out needs n >= 3, got n = {data.n}")
    errors = np.empty(data.n)
    for i in range(data.n):
        try:
            pred = _predict_row(data.drop_row(i), data.X[i], lambda1, lambda2, config)
        except PanError as exc:
            raise type(exc)(f"fold {i}: {exc}") from exc
        errors[i] = (data.Y[i] - pred) ** 2
    return EvaluationReport(method, (float(lambda1), float(lambda2)), "loocv_error",
                            float(errors.mean()), fold_errors=errors)


def per_observation_report(data: Dataset, lambda2: float, k_extremes: int = 4,
                           lambda1: float = 0.0,
                           config: Optional[OptimizerConfig] = None) -> EvaluationReport:
    """OLS and personalized fits for the observations whose covariate vectors
    are least and most aligned with the OLS coefficients.

    Observations are ranked by ``|cos(x_i, beta_ols)|``; the ``k`` smallest
    and ``k`` largest are reported (smallest first). Entries carry the
    0-based ``index``; predictions are on the outcome scale. ``value`` is the
    mean squared in-sample error of the personalized predictions over the
    reported rows.
    """
    if k_extremes < 1:
        raise ValueError("k_extremes must be >= 1")
    if data.n < 2 * k_extremes:
        raise InsufficientDataError(f"need n >= {2 * k_extremes} for k = {k_extremes}")
    beta = ols_fit(data).beta
    cos = np.array([cosine_similarity(x, beta) if np.any(x) else 0.0 for x in data.X])
    order = np.argsort(np.abs(cos), kind="stable")
    chosen = np.concatenate((order[:k_extremes], order[-k_extremes:]))
    rows = []
    sq = []
    for i in chosen:
        x0 = data.X[i]
        if np.any(x0):
            coef = np.asarray(fit_personalized(data, x0, lambda1, lambda2, config).beta_hat)
        else:
            coef = beta.copy()
        pan_pred = data.y_mean + float(x0 @ coef)
        sq.append((data.Y[i] + data.y_mean - pan_pred) ** 2)
        rows.append({
            "index": int(i),
            "cos_sim": float(cos[i]),
            "ols_prediction": data.y_mean + float(x0 @ beta),
            "pan_prediction": pan_pred,
            "ols_coefficients": beta.tolist(),
            "pan_coefficients": coef.tolist(),
        })
    tag = "pan_ridge" if lambda1 > 0 else "pan"
    return EvaluationReport(tag, (float(lambda1), float(lambda2)), "in_sample_error",
                            float(np.mean(sq)), per_observation=rows)
