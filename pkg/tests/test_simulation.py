import csv
import io
import json

import numpy as np
import pytest

from panreg.simulation import (
    METHOD_ROSTER,
    SimulationConfig,
    emit_table,
    replication_seed,
    run_study,
)

SMALL = dict(n=20, p=3, replications=4, test_size=50, B=20,
             lambda1_values=(0.0, 1.0, 4.0), lambda2_values=(-1.0, 0.0, 1.0, 3.0))


class TestConfig:
    def test_defaults(self):
        c = SimulationConfig()
        assert (c.n, c.p, c.sigma, c.replications, c.test_size, c.B) == (50, 6, 3.0, 200, 1000, 2000)
        assert c.methods == METHOD_ROSTER

    def test_roster_order(self):
        c = SimulationConfig(methods=["ridge", "ols"])
        assert c.methods == ("ols", "ridge")

    @pytest.mark.parametrize("kw", [dict(n=0), dict(p=10, n=5), dict(sigma=-1.0),
                                    dict(methods=["lasso"]), dict(workers=0), dict(B=0)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            SimulationConfig(**kw)


class TestRunStudy:
    def test_noise_free(self):
        rep = run_study(SimulationConfig(sigma=0.0, **SMALL))
        for m in ("ols", "ridge", "pan", "pan_ridge_joint", "pan_ridge_fixed_oracle"):
            assert rep.results[m].mean_mse < 1e-20
            assert rep.results[m].mean_lambda2 == 0.0

    def test_ols_variance(self):
        # test points are N(0, I) and the training design is orthonormal, so
        # OLS test MSE averages sigma^2 * p
        cfg = SimulationConfig(sigma=0.5, methods=["ols"], **{**SMALL, "replications": 400})
        r = run_study(cfg).results["ols"]
        assert abs(r.mean_mse - 0.25 * 3) < 3 * r.se

    def test_deterministic(self):
        a = run_study(SimulationConfig(**SMALL))
        b = run_study(SimulationConfig(**SMALL))
        assert emit_table(a, "json") == emit_table(b, "json")
        for m in METHOD_ROSTER:
            np.testing.assert_array_equal(a.per_replication[m], b.per_replication[m])

    def test_workers_do_not_change_result(self):
        a = run_study(SimulationConfig(**SMALL))
        b = run_study(SimulationConfig(workers=3, **SMALL))
        for m in METHOD_ROSTER:
            np.testing.assert_array_equal(a.per_replication[m], b.per_replication[m])

    def test_subset_matches_full(self):
        # a method's numbers do not depend on which other methods run
        a = run_study(SimulationConfig(**SMALL))
        b = run_study(SimulationConfig(methods=["pan"], **SMALL))
        np.testing.assert_array_equal(a.per_replication["pan"], b.per_replication["pan"])

    def test_oracle_not_worse_on_average(self):
        rep = run_study(SimulationConfig(sigma=3.0, beta_value=0.05, p=6, n=50, replications=30,
                                         test_size=200, B=100, methods=["ridge", "pan_ridge_fixed_oracle"]))
        assert rep.results["pan_ridge_fixed_oracle"].mean_mse <= rep.results["ridge"].mean_mse

    def test_replication_seed(self):
        assert replication_seed(1, 2) == replication_seed(1, 2)
        assert replication_seed(1, 2) != replication_seed(1, 3)
        assert replication_seed(1, 2) != replication_seed(2, 2)

    def test_report_dict_is_json(self):
        d = run_study(SimulationConfig(methods=["ols"], **SMALL)).to_dict()
        assert json.loads(json.dumps(d))["config"]["methods"] == ["ols"]


@pytest.fixture(scope="module")
def reports():
    return [run_study(SimulationConfig(beta_value=b, **SMALL)) for b in (0.05, 0.1)]


class TestEmitTable:
    def test_text(self, reports):
        lines = emit_table(reports, "text").splitlines()
        assert lines[0].startswith("Method")
        assert len(lines) == 1 + len(METHOD_ROSTER)
        assert lines[1].startswith("OLS") and lines[3].startswith("Ridge")
        assert f"{reports[0].results['ols'].mean_mse:.3f}" in lines[1]

    def test_csv(self, reports):
        rows = list(csv.reader(io.StringIO(emit_table(reports, "csv"))))
        assert rows[0] == ["method", "p=3, beta_j=0.05", "p=3, beta_j=0.1"]
        assert [r[0] for r in rows[1:]] == list(METHOD_ROSTER)
        assert float(rows[1][2]) == reports[1].results["ols"].mean_mse

    def test_json(self, reports):
        doc = json.loads(emit_table(reports, "json"))
        assert doc["rows"][0]["method"] == "ols" and len(doc["rows"][0]["values"]) == 2

    def test_single_report(self, reports):
        assert emit_table(reports[0]).count("\n") == 1 + len(METHOD_ROSTER)

    def test_empty(self):
        assert emit_table([], "text") == "Method\n"
        assert emit_table([], "csv") == "method\n"

    def test_unknown_format(self, reports):
        with pytest.raises(ValueError):
            emit_table(reports, "xml")
