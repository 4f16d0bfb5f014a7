"""``panreg`` command-line tool.

Subcommands: fit, predict, tune, cv, simulate, theory, shrink-curve. Reports
are canonical JSON documents with a provenance block; curves and tables can
be written as CSV or text. Exit codes: 0 ok, 2 usage, 3 data, 4 numeric,
5 internal.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

import numpy as np

from . import _random
from .cli_io import dumps, ingest_csv, provenance, read_config, read_vectors
from .core_math import center, standardize
from .estimators import ridge_fit, shrinkage_factor
from .evaluation import loocv
from .exceptions import PanError
from .optimizer import OptimizerConfig, fit_personalized
from .simulation import METHOD_ROSTER, SimulationConfig, emit_table, run_study
from .theory import (
    TheoryInstance,
    inner_product_density,
    lambda1_star,
    mse_derivative_at_zero,
    oracle_fridge_lambda,
    proportion_within,
)
from .tuning import DEFAULT_LAMBDA1, DEFAULT_LAMBDA2, METHODS, TuningGrid, bootstrap_tune

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC, EXIT_INTERNAL = 0, 2, 3, 4, 5


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def float_list(text):
    try:
        return [float(v) for v in str(text).replace(";", ",").split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def name_list(text):
    return [v.strip() for v in str(text).split(",") if v.strip()]


def pair_list(text):
    pairs = []
    for chunk in str(text).split(";"):
        vals = float_list(chunk)
        if len(vals) != 2:
            raise argparse.ArgumentTypeError(f"expected 'lambda1,lambda2' pairs, got {chunk!r}")
        pairs.append(tuple(vals))
    return pairs


def seed_type(text):
    v = int(text)
    if v < 0 or v >= 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def bool_text(text):
    s = str(text).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    from . import __version__

    parser = _Parser(prog="panreg", description="Personalized angle (PAN) regression tools.")
    parser.add_argument("--version", action="version", version=f"panreg {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--config", help="key=value config file; flags override it")
    common.add_argument("--output", "-o", help="write the result here instead of stdout")
    common.add_argument("--seed", type=seed_type, help="random seed (generated and echoed if absent)")
    common.add_argument("--workers", type=positive_int, default=1,
                        help="worker threads; never changes numeric output")

    data = _Parser(add_help=False)
    data.add_argument("--data", help="CSV file with a header row")
    data.add_argument("--outcome", help="outcome column (default: last column)")
    data.add_argument("--covariates", type=name_list,
                      help="comma-separated covariate columns (default: all but the outcome)")
    data.add_argument("--standardize", action=argparse.BooleanOptionalAction, default=True,
                      help="scale covariates to unit sample variance after centering")

    target = _Parser(add_help=False)
    target.add_argument("--row", type=int, help="0-based data row used as x0")
    target.add_argument("--x0", type=float_list, help="raw covariate values for x0")
    target.add_argument("--x0-file", help="file of raw covariate vectors, one per line")
    target.add_argument("--lambda1", type=float, default=0.0, help="ridge penalty (>= 0)")
    target.add_argument("--lambda2", type=float, default=0.0, help="angle penalty (any sign)")
    target.add_argument("--parametrization", choices=("cartesian", "hyperspherical"),
                        default="cartesian", help="optimizer parametrization for general designs")

    p = sub.add_parser("fit", parents=[common, data, target],
                       help="personalized coefficients and prediction for one x0")
    p.set_defaults(handler=cmd_fit)

    p = sub.add_parser("predict", parents=[common, data, target],
                       help="personalized predictions for one or more x0")
    p.add_argument("--rows", help="comma-separated 0-based rows, or 'all'")
    p.set_defaults(handler=cmd_predict)

    p = sub.add_parser("tune", parents=[common, data],
                       help="parametric-bootstrap MSE surface and selected penalties")
    p.add_argument("--method", choices=METHODS, default="pan_ridge")
    p.add_argument("--lambda1", type=float, help="fixed ridge penalty for pan_given_lambda1")
    p.add_argument("--B", type=positive_int, default=2000, help="bootstrap samples")
    p.add_argument("--lambda1-grid", type=float_list, default=list(DEFAULT_LAMBDA1))
    p.add_argument("--lambda2-grid", type=float_list, default=list(DEFAULT_LAMBDA2))
    p.set_defaults(handler=cmd_tune)

    p = sub.add_parser("cv", parents=[common, data],
                       help="leave-one-out prediction error for (lambda1, lambda2) pairs")
    p.add_argument("--pairs", type=pair_list, default=[(0.0, 0.0), (0.0, 2.5), (4.0, 0.0), (2.0, 3.0)],
                   help="semicolon-separated 'lambda1,lambda2' pairs")
    p.set_defaults(handler=cmd_cv)

    p = sub.add_parser("simulate", parents=[common], help="simulation study of test-set MSE")
    p.add_argument("--n", type=positive_int, default=50)
    p.add_argument("--p", type=positive_int, default=6)
    p.add_argument("--sigma", type=float, default=3.0)
    p.add_argument("--beta-values", type=float_list, default=[0.05, 0.10, 0.15, 0.20],
                   help="equal coefficient values, one table column each")
    p.add_argument("--replications", type=positive_int, default=200)
    p.add_argument("--test-size", type=positive_int, default=1000)
    p.add_argument("--B", type=positive_int, default=2000)
    p.add_argument("--methods", type=name_list, default=list(METHOD_ROSTER))
    p.add_argument("--lambda1-grid", type=float_list, default=list(DEFAULT_LAMBDA1))
    p.add_argument("--lambda2-grid", type=float_list, default=list(DEFAULT_LAMBDA2))
    p.add_argument("--format", choices=("json", "text", "csv"), default="json")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("theory", parents=[common], help="analytic quantities for given instances")
    p.add_argument("--proportion", type=float, help="t for P(|cos| < t) of a random direction")
    p.add_argument("--density", type=float, help="z at which to evaluate the cosine density")
    p.add_argument("--p", type=int, help="dimension for --proportion/--density")
    p.add_argument("--x0", type=float_list, help="covariate vector")
    p.add_argument("--beta", type=float_list, help="true coefficient vector")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--n", type=positive_int, default=100)
    p.add_argument("--lambda1", type=float, default=0.0)
    p.set_defaults(handler=cmd_theory)

    p = sub.add_parser("shrink-curve", parents=[common],
                       help="shrinkage factor against cosine similarity, as CSV")
    p.add_argument("--beta-norm", type=float, default=1.0)
    p.add_argument("--lambda1-values", type=float_list, default=[0.0, 0.5])
    p.add_argument("--lambda2-values", type=float_list, default=[-0.5, -0.25, 0.25, 0.5, 0.75])
    p.add_argument("--points", type=positive_int, default=201)
    p.set_defaults(handler=cmd_shrink_curve)
    return parser


# -- config merging -----------------------------------------------------------


def _apply_config(parser, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    cmd = next((a for a in argv if a in subparsers.choices), None)
    if cmd is None:
        return
    sp = subparsers.choices[cmd]
    cfg = read_config(known.config)
    values = dict(cfg.get("common", {}))
    values.update(cfg.get(cmd, {}))
    actions = {a.dest: a for a in sp._actions if a.dest not in ("help", "config")}
    unknown = sorted(k for k in values if k not in actions)
    if unknown:
        raise UsageError(f"unknown config keys for {cmd}: {unknown}")
    converted = {}
    for key, text in values.items():
        action = actions[key]
        try:
            if isinstance(action, argparse.BooleanOptionalAction):
                converted[key] = bool_text(text)
            elif action.type is not None:
                converted[key] = action.type(text)
            else:
                converted[key] = text
        except (argparse.ArgumentTypeError, ValueError) as exc:
            raise UsageError(f"config key {key!r}: {exc}") from None
        if action.choices is not None and converted[key] not in action.choices:
            raise UsageError(f"config key {key!r}: {text!r} not in {sorted(action.choices)}")
    sp.set_defaults(**converted)


def _settings(args) -> dict:
    skip = {"handler", "output", "config", "workers"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


# -- helpers ------------------------------------------------------------------


def _require(args, *names):
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise UsageError(f"{args.command}: missing required option(s) {flags}")


def _load(args):
    _require(args, "data")
    ds = ingest_csv(args.data, outcome=args.outcome, covariates=args.covariates)
    return standardize(ds) if args.standardize else center(ds)


def _targets(args, data, allow_many=False):
    """Covariate vectors on the fitted scale, with their labels."""
    chosen = [n for n in ("row", "x0", "x0_file") if getattr(args, n, None) is not None]
    rows = getattr(args, "rows", None)
    if rows is not None:
        chosen.append("rows")
    if len(chosen) != 1:
        raise UsageError(f"{args.command}: give exactly one of --row, --x0, --x0-file"
                         + (", --rows" if allow_many else ""))
    if args.row is not None or rows is not None:
        if rows is not None:
            idx = list(range(data.n)) if rows.strip() == "all" else [int(v) for v in rows.split(",")]
        else:
            idx = [args.row]
        bad = [i for i in idx if not 0 <= i < data.n]
        if bad:
            raise UsageError(f"row index out of range 0..{data.n - 1}: {bad}")
        return data.X[idx], [{"row": i} for i in idx]
    raw = np.atleast_2d(np.array(args.x0, dtype=float)) if args.x0 is not None \
        else read_vectors(args.x0_file)
    if raw.shape[1] != data.p:
        raise UsageError(f"x0 has {raw.shape[1]} entries, data has {data.p} covariates")
    if raw.shape[0] > 1 and not allow_many:
        raise UsageError("fit takes a single x0; use predict for several")
    return data.transform_x(raw), [{"x0_raw": r.tolist()} for r in raw]


def _fit_one(data, x0, args):
    if args.lambda2 == 0:
        beta = ridge_fit(data, args.lambda1).beta
        tag = "ridge" if args.lambda1 > 0 else "ols"
        return beta, {"method": tag}
    cfg = OptimizerConfig(parametrization=args.parametrization, seed=args.seed % (2 ** 32))
    fit = fit_personalized(data, x0, args.lambda1, args.lambda2, cfg)
    return np.asarray(fit.beta_hat), {
        "method": fit.method_tag,
        "cos_sim": fit.cos_sim,
        "shrinkage_factor": fit.shrinkage_factor,
        "c_value": fit.c_value,
    }


def _names(data):
    return list(data.column_names) if data.column_names else [f"x{j + 1}" for j in range(data.p)]


# -- subcommands --------------------------------------------------------------


def cmd_fit(args):
    data = _load(args)
    X0, labels = _targets(args, data)
    x0 = X0[0]
    if not np.any(x0):
        raise UsageError("x0 is zero after centering; the angle penalty is undefined")
    beta, info = _fit_one(data, x0, args)
    pred = float(x0 @ beta)
    return {
        **labels[0],
        **info,
        "lambda1": args.lambda1,
        "lambda2": args.lambda2,
        "x0": x0.tolist(),
        "coefficients": dict(zip(_names(data), beta.tolist())),
        "prediction": data.y_mean + pred,
        "prediction_centered": pred,
    }


def cmd_predict(args):
    data = _load(args)
    X0, labels = _targets(args, data, allow_many=True)
    out = []
    for x0, lab in zip(X0, labels):
        if np.any(x0):
            beta, info = _fit_one(data, x0, args)
        else:
            beta, info = ridge_fit(data, args.lambda1).beta, {"method": "centroid"}
        out.append({**lab, "method": info["method"], "prediction": data.y_mean + float(x0 @ beta)})
    return {"lambda1": args.lambda1, "lambda2": args.lambda2, "predictions": out}


def cmd_tune(args):
    data = _load(args)
    grid = TuningGrid(args.lambda1_grid, args.lambda2_grid, B=args.B, seed=args.seed)
    res = bootstrap_tune(data, grid, method=args.method, lambda1=args.lambda1,
                         workers=args.workers)
    return res.to_dict()


def _method_for(l1, l2):
    if l1 == 0 and l2 == 0:
        return "ols"
    if l2 == 0:
        return "ridge"
    return "pan" if l1 == 0 else "pan_ridge"


def cmd_cv(args):
    data = _load(args)
    cfg = OptimizerConfig(seed=args.seed % (2 ** 32))
    reports = [loocv(data, _method_for(l1, l2), l1, l2, cfg).to_dict() for l1, l2 in args.pairs]
    return {"n": data.n, "p": data.p, "reports": reports}


def cmd_simulate(args):
    reports = []
    for b in args.beta_values:
        cfg = SimulationConfig(
            n=args.n, p=args.p, sigma=args.sigma, beta_value=b, replications=args.replications,
            test_size=args.test_size, B=args.B, seed=args.seed, methods=args.methods,
            lambda1_values=args.lambda1_grid, lambda2_values=args.lambda2_grid,
            workers=args.workers,
        )
        reports.append(run_study(cfg))
    if args.format != "json":
        return emit_table(reports, args.format)
    return {"reports": [r.to_dict() for r in reports]}


def cmd_theory(args):
    out = {}
    if args.proportion is not None or args.density is not None:
        _require(args, "p")
        if args.proportion is not None:
            out["proportion_within"] = proportion_within(args.proportion, args.p)
        if args.density is not None:
            out["density"] = inner_product_density(args.density, args.p)
    if args.x0 is not None or args.beta is not None:
        _require(args, "x0", "beta")
        inst = TheoryInstance(np.array(args.x0), np.array(args.beta), args.sigma, args.n,
                              args.lambda1)
        out["cos_sim"] = inst.cos_sim
        out["mse_derivative_at_zero"] = mse_derivative_at_zero(inst)
        if inst.cos_sim != 0:
            out["lambda1_star"] = lambda1_star(inst.x0, inst.beta_true, args.sigma)
            out["oracle_fridge_lambda"] = oracle_fridge_lambda(inst.x0, inst.beta_true, args.sigma)
    if not out:
        raise UsageError("theory: give --proportion/--density with --p, or --x0 with --beta")
    return out


def cmd_shrink_curve(args):
    cos = np.linspace(-1.0, 1.0, args.points)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["lambda1", "lambda2", "cos_sim", "shrinkage_factor"])
    for l1 in args.lambda1_values:
        for l2 in args.lambda2_values:
            f = shrinkage_factor(cos, args.beta_norm, l1, l2)
            for c, v in zip(cos, f):
                w.writerow([repr(l1), repr(l2), repr(float(c)), repr(float(v))])
    return buf.getvalue()


# -- entry point --------------------------------------------------------------


def _error_doc(kind, message, code, command=None, **extra):
    err = {"kind": kind, "message": message, "exit_code": code}
    err.update({k: v for k, v in extra.items() if v is not None})
    return {"command": command, "error": err}


def _emit(text, path):
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    command = None
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        command = args.command
        if args.seed is None:
            args.seed = _random.fresh_seed()
        result = args.handler(args)
        if isinstance(result, str):
            _emit(result, args.output)
        else:
            doc = {"command": command, "provenance": provenance(_settings(args), args.seed),
                   "result": result}
            _emit(dumps(doc), args.output)
        return EXIT_OK
    except UsageError as exc:
        sys.stdout.write(dumps(_error_doc("usage", str(exc), EXIT_USAGE, command)))
        return EXIT_USAGE
    except PanError as exc:
        doc = _error_doc(exc.kind, str(exc), exc.exit_code, command,
                         row=getattr(exc, "row", None), column=getattr(exc, "column", None))
        sys.stdout.write(dumps(doc))
        return exc.exit_code
    except (OSError, UnicodeDecodeError) as exc:
        sys.stdout.write(dumps(_error_doc("data", str(exc), EXIT_DATA, command)))
        return EXIT_DATA
    except ValueError as exc:
        sys.stdout.write(dumps(_error_doc("usage", str(exc), EXIT_USAGE, command)))
        return EXIT_USAGE
    except Exception as exc:  # pragma: no cover - last resort
        sys.stdout.write(dumps(_error_doc("internal", f"{type(exc).__name__}: {exc}",
                                          EXIT_INTERNAL, command)))
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
