"""File formats for the command-line tool: CSV datasets, key=value config
files and canonical JSON report documents."""

from __future__ import annotations

import configparser
import csv
import hashlib
import json
import math
import platform
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import scipy

from .core_math import Dataset
from .exceptions import ParseError, SchemaError

MISSING = {"", "na", "nan", "null", "none", "?"}

SCHEMA_VERSION = "1"


def _parse_cell(text: str, row: int, column: str) -> float:
    s = text.strip()
    if s.lower() in MISSING:
        raise ParseError(f"missing value in row {row}, column {column!r}", row=row, column=column)
    try:
        v = float(s)
    except ValueError:
        raise ParseError(f"cannot parse {s!r} as a number in row {row}, column {column!r}",
                         row=row, column=column) from None
    if not math.isfinite(v):
        raise ParseError(f"non-finite value {s!r} in row {row}, column {column!r}",
                         row=row, column=column)
    return v


def ingest_csv(path, outcome: Optional[str] = None,
               covariates: Optional[Sequence[str]] = None) -> Dataset:
    """Read a header-first CSV into an uncentered :class:`Dataset`.

    ``outcome`` defaults to the last column; ``covariates`` defaults to every
    other column. Columns not selected are skipped without being parsed. A
    leading column with an empty header (row names) is ignored. Data rows are
    numbered from 1 in error messages.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8-sig") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if any(cell.strip() for cell in r)]
    if not rows:
        raise SchemaError(f"{path}: empty file (a header row is required)")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    first = 1 if header and header[0] == "" else 0
    names = header[first:]
    if any(h == "" for h in names):
        raise SchemaError(f"{path}: empty column name in header")
    dupes = sorted({h for h in names if names.count(h) > 1})
    if dupes:
        raise SchemaError(f"{path}: duplicate column names {dupes}")
    if len(names) < 2:
        raise SchemaError(f"{path}: need at least one covariate and one outcome column")
    outcome = names[-1] if outcome is None else outcome
    if outcome not in names:
        raise SchemaError(f"{path}: outcome column {outcome!r} not found in {names}")
    if covariates is None:
        covariates = [h for h in names if h != outcome]
    else:
        covariates = list(covariates)
        missing = [c for c in covariates if c not in names]
        if missing:
            raise SchemaError(f"{path}: covariate columns {missing} not found")
        if outcome in covariates:
            raise SchemaError(f"{path}: outcome {outcome!r} also listed as a covariate")
    if not body:
        raise SchemaError(f"{path}: header present but no data rows")
    idx = {h: first + i for i, h in enumerate(names)}
    X = np.empty((len(body), len(covariates)))
    Y = np.empty(len(body))
    for r, cells in enumerate(body, start=1):
        if len(cells) != len(header):
            raise ParseError(f"row {r} has {len(cells)} fields, header has {len(header)}", row=r)
        for j, c in enumerate(covariates):
            X[r - 1, j] = _parse_cell(cells[idx[c]], r, c)
        Y[r - 1] = _parse_cell(cells[idx[outcome]], r, outcome)
    return Dataset(X, Y, column_names=tuple(covariates), outcome_name=outcome)


def read_vectors(path) -> np.ndarray:
    """Numeric rows from a CSV or whitespace file; a non-numeric first line
    is treated as a header."""
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip()]
    if not lines:
        raise SchemaError(f"{path}: no vectors found")
    rows = [ln.replace(",", " ").split() for ln in lines]
    try:
        [float(v) for v in rows[0]]
    except ValueError:
        rows = rows[1:]
    out = [[_parse_cell(v, i + 1, f"field {j + 1}") for j, v in enumerate(r)]
           for i, r in enumerate(rows)]
    if not out or len({len(r) for r in out}) != 1:
        raise SchemaError(f"{path}: vectors must be non-empty and of equal length")
    return np.array(out)


def read_config(path) -> dict:
    """``{section: {key: value}}`` from a key=value file with ``#`` comments.

    Keys in ``[common]`` apply to every subcommand; dashes in keys are
    normalized to underscores.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), comment_prefixes=("#",),
                                   default_section="common", interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except configparser.Error as exc:
        raise ParseError(f"{path}: {exc}") from exc
    out = {"common": {k.replace("-", "_"): v for k, v in cp.defaults().items()}}
    for sec in cp.sections():
        out[sec] = {k.replace("-", "_"): v for k, v in cp.items(sec)}
    return out


def jsonable(obj):
    """Convert numpy values to plain Python; non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dumps(doc) -> str:
    """Canonical JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(jsonable(doc), sort_keys=True, indent=2, allow_nan=False) + "\n"


def config_hash(settings: dict) -> str:
    text = json.dumps(jsonable(settings), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def provenance(settings: dict, seed) -> dict:
    from . import __version__

    return {
        "config_hash": config_hash(settings),
        "seed": seed,
        "versions": {
            "panreg": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
    }


def load_schema() -> dict:
    text = resources.files("panreg").joinpath("report.schema.json").read_text(encoding="utf-8")
    return json.loads(text)
