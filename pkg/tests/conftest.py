import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from panreg.cli_io import ingest_csv
from panreg.core_math import Dataset, orthonormalize, standardize

# HYPOTHESIS_PROFILE=stress runs many more examples per property
settings.register_profile("stress", max_examples=5000, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ROOT = Path(__file__).resolve().parents[1]
PROSTATE_COVARIATES = ("lcavol", "lweight", "age", "lbph", "svi", "lcp")


def prostate_path():
    env = os.environ.get("PANREG_PROSTATE_CSV")
    return Path(env) if env else ROOT / "data" / "prostate.csv"


def load_prostate():
    """Standardized prostate data, or None when the CSV is not present."""
    path = prostate_path()
    if not path.exists():
        return None
    return standardize(ingest_csv(path, outcome="lpsa", covariates=PROSTATE_COVARIATES))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def orthonormal_data():
    def make(n=40, p=5, seed=0, noise=0.5):
        r = np.random.default_rng(seed)
        X = orthonormalize(r.standard_normal((n, p)))
        beta = r.standard_normal(p)
        return Dataset(X, X @ beta + noise * r.standard_normal(n)), beta

    return make


ACCEPTANCE_LINES = []


@pytest.fixture
def report_line():
    """Record a one-line acceptance verdict; all lines are echoed at the end of the run."""
    def emit(text):
        ACCEPTANCE_LINES.append(text)
        print(text, flush=True)

    return emit


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
