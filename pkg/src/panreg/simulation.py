"""Simulation study: orthonormal training designs, bootstrap tuning for every
method, and test-set prediction MSE against the true coefficients."""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import _random
from .core_math import orthonormalize
from .estimators import pan_ridge_prediction
from .evaluation import test_mse
from .tuning import DEFAULT_LAMBDA1, DEFAULT_LAMBDA2, _run_grid, bootstrap_noise

METHOD_ROSTER = (
    "ols",
    "pan",
    "ridge",
    "pan_ridge_fixed_oracle",
    "pan_ridge_fixed_estimated",
    "pan_ridge_joint",
)

METHOD_LABELS = {
    "ols": "OLS",
    "pan": "PAN",
    "ridge": "Ridge",
    "pan_ridge_fixed_oracle": "PAN-ridge (fixed lambda1, oracle)",
    "pan_ridge_fixed_estimated": "PAN-ridge (fixed lambda1, estimated)",
    "pan_ridge_joint": "PAN-ridge (lambda1, lambda2)",
}


@dataclass(frozen=True)
class SimulationConfig:
    n: int = 50
    p: int = 6
    sigma: float = 3.0
    beta_value: float = 0.05
    replications: int = 200
    test_size: int = 1000
    B: int = 2000
    seed: int = 0
    methods: Sequence[str] = METHOD_ROSTER
    lambda1_values: Sequence[float] = DEFAULT_LAMBDA1
    lambda2_values: Sequence[float] = DEFAULT_LAMBDA2
    workers: int = 1

    def __post_init__(self):
        for name in ("n", "p", "replications", "test_size", "B"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if self.p > self.n:
            raise ValueError(f"need p <= n, got p = {self.p}, n = {self.n}")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        unknown = [m for m in self.methods if m not in METHOD_ROSTER]
        if unknown:
            raise ValueError(f"unknown methods {unknown}; expected a subset of {METHOD_ROSTER}")
        # keep roster order whatever order the caller used
        object.__setattr__(self, "methods", tuple(m for m in METHOD_ROSTER if m in self.methods))
        object.__setattr__(self, "lambda1_values", tuple(float(v) for v in self.lambda1_values))
        object.__setattr__(self, "lambda2_values", tuple(float(v) for v in self.lambda2_values))
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass
class MethodSummary:
    mean_mse: float
    se: float
    mean_lambda1: float
    mean_lambda2: float
    failures: int = 0


@dataclass
class SimulationReport:
    config: SimulationConfig
    results: dict
    wall_time: float
    per_replication: dict = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        cfg = asdict(self.config)
        cfg["methods"] = list(self.config.methods)
        cfg["lambda1_values"] = list(self.config.lambda1_values)
        cfg["lambda2_values"] = list(self.config.lambda2_values)
        return {
            "config": cfg,
            "results": {m: asdict(s) for m, s in self.results.items()},
            "wall_time": self.wall_time,
        }


def replication_seed(seed: int, r: int) -> int:
    """Bootstrap seed for replication ``r`` (independent of worker layout)."""
    return int(np.random.SeedSequence([seed, r]).generate_state(1, np.uint64)[0])


def _one_replication(cfg: SimulationConfig, r: int) -> dict:
    rng = _random.stream(cfg.seed, _random.SIMULATION, r)
    raw = rng.standard_normal((cfg.n, cfg.p))
    X = orthonormalize(raw - raw.mean(axis=0))
    beta = np.full(cfg.p, float(cfg.beta_value))
    Y = X @ beta + cfg.sigma * rng.standard_normal(cfg.n)
    x_test = _random.stream(cfg.seed, _random.TEST_SET, r).standard_normal((cfg.test_size, cfg.p))
    beta_ols = X.T @ Y
    truth = x_test @ beta
    l1s, l2s = cfg.lambda1_values, cfg.lambda2_values
    bseed = replication_seed(cfg.seed, r)
    # every tuning run in this replication sees the same bootstrap noise
    noise = bootstrap_noise(cfg.n, cfg.B, bseed)
    want = set(cfg.methods)
    out = {}

    def score(l1, l2):
        pred = pan_ridge_prediction(beta_ols, x_test, l1, l2)
        return float(np.mean((pred - truth) ** 2)), l1, l2

    if want & {"pan", "ridge", "pan_ridge_fixed_estimated", "pan_ridge_joint"}:
        resid = Y - X @ beta_ols
        sigma_hat = float(np.sqrt(resid @ resid / (cfg.n - cfg.p))) if cfg.n > cfg.p else 0.0

    def tune(center, sigma, l1_values, l2_values):
        res = _run_grid(X, center, sigma, X, tuple(l1_values), tuple(l2_values), cfg.B, bseed,
                        1, None, "sim", sigma, noise)
        return res.selected

    if "ols" in want:
        out["ols"] = (test_mse(beta_ols, x_test, beta), 0.0, 0.0)
    if "pan" in want:
        out["pan"] = score(*tune(beta_ols, sigma_hat, (0.0,), l2s))
    if want & {"ridge", "pan_ridge_fixed_estimated"}:
        l1_hat, _ = tune(beta_ols, sigma_hat, l1s, (0.0,))
        if "ridge" in want:
            out["ridge"] = score(l1_hat, 0.0)
        if "pan_ridge_fixed_estimated" in want:
            out["pan_ridge_fixed_estimated"] = score(*tune(beta_ols, sigma_hat, (l1_hat,), l2s))
    if "pan_ridge_fixed_oracle" in want:
        l1_or, _ = tune(beta, cfg.sigma, l1s, (0.0,))
        out["pan_ridge_fixed_oracle"] = score(*tune(beta, cfg.sigma, (l1_or,), l2s))
    if "pan_ridge_joint" in want:
        out["pan_ridge_joint"] = score(*tune(beta_ols, sigma_hat, l1s, l2s))
    return out


def run_study(config: SimulationConfig) -> SimulationReport:
    """Run every replication and average the test MSE of each method."""
    t0 = time.perf_counter()
    reps = range(config.replications)
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            rows = list(pool.map(lambda r: _one_replication(config, r), reps))
    else:
        rows = [_one_replication(config, r) for r in reps]
    results, per_rep = {}, {}
    R = config.replications
    for m in config.methods:
        vals = np.array([row[m] for row in rows], dtype=float)
        per_rep[m] = vals
        mse = vals[:, 0]
        se = float(mse.std(ddof=1) / np.sqrt(R)) if R > 1 else 0.0
        results[m] = MethodSummary(float(mse.mean()), se, float(vals[:, 1].mean()),
                                   float(vals[:, 2].mean()))
    return SimulationReport(config, results, time.perf_counter() - t0, per_rep)


def emit_table(report, format: str = "text") -> str:
    """Render one report, or a sequence of reports as columns, as a table.

    Rows follow the method roster; text mode prints three decimals.
    """
    reports = [report] if isinstance(report, SimulationReport) else list(report)
    methods = [m for m in METHOD_ROSTER
               if reports and all(m in rep.results for rep in reports)]
    columns = [f"p={rep.config.p}, beta_j={rep.config.beta_value:g}" for rep in reports]
    if format == "json":
        doc = {
            "columns": columns,
            "rows": [{"method": m, "values": [rep.results[m].mean_mse for rep in reports],
                      "se": [rep.results[m].se for rep in reports]} for m in methods],
        }
        return json.dumps(doc, sort_keys=True, indent=2)
    if format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method"] + columns)
        for m in methods:
            w.writerow([m] + [repr(rep.results[m].mean_mse) for rep in reports])
        return buf.getvalue()
    if format == "text":
        width = max([len("Method")] + [len(METHOD_LABELS[m]) for m in methods])
        cw = max([16] + [len(c) for c in columns])
        lines = ["Method".ljust(width) + "".join(c.rjust(cw + 2) for c in columns)]
        for m in methods:
            vals = "".join(f"{rep.results[m].mean_mse:.3f}".rjust(cw + 2) for rep in reports)
            lines.append(METHOD_LABELS[m].ljust(width) + vals)
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {format!r}; expected text, json or csv")
