"""End-to-end scenario runs and the report writer."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from wavemor import (ConfigurationError, emit_report, run_convergence,
                     run_timedomain, scenario_from_dict, template_scenario)


@pytest.fixture(scope="module")
def exhaust_report():
    return run_convergence(template_scenario("exhaust-1d"))


def _leapfrog_case():
    return scenario_from_dict({
        "name": "lf-smoke",
        "grid": {"interior": [60], "step": [1.0], "pml": [8]},
        "stretching": {"strength": 0.02},
        "medium": {"preset": "homogeneous", "params": {"velocity": 1.0}},
        "source": {"location": [25]},
        "receivers": [{"location": [35], "id": "rx"}],
        "band": {"omega_min": 0.1, "omega_max": 0.4},
        "time": {"t_max": 30.0, "samples": 241, "leapfrog": True,
                 "wavelet": {"omega_c": 0.3, "sigma": 4.0}},
        "methods": [{"type": "eks", "i": 2, "orders": [10]}],
    })


class TestConvergenceRun:
    def test_report_shape(self, exhaust_report):
        rep = exhaust_report
        assert rep.kind == "convergence"
        assert rep.n == 120
        assert [t.label for t in rep.tables] == ["eks(i=2)", "pks"]
        assert [name for name, _ in rep.responses] == ["oracle-freq"]
        assert set(rep.wall_times) == {"assemble", "oracle", "convergence",
                                       "diagnostics"}

    def test_full_order_rows_hit_the_oracle(self, exhaust_report):
        for table in exhaust_report.tables:
            assert table.rows[-1].dim == 120
            assert table.rows[-1].error < 1e-9

    def test_decomposition_checks_pass(self, exhaust_report):
        rep = exhaust_report
        names = [c["name"] for c in rep.checks]
        assert "decomposition residual [eks(i=2), d=120]" in names
        assert "bilinear orthogonality [pks, d=120]" in names
        assert all(c["passed"] for c in rep.checks)
        assert set(rep.diagnostics) == {"eks(i=2)", "pks"}

    def test_pml_floor_is_reported(self, exhaust_report):
        # diagnostic only: the template's stretch is strong, so the gap to
        # the plain shifted solve is O(1); it just has to be a real number
        assert exhaust_report.pml_floor > 0.0
        assert np.isfinite(exhaust_report.pml_floor)

    def test_oversized_problem_needs_an_explicit_choice(self):
        desk = template_scenario("desk-2d")
        with pytest.raises(ConfigurationError, match="dense cap"):
            run_convergence(desk, dense_cap=100)

    def test_self_convergence_reference(self):
        rep = run_convergence(template_scenario("exhaust-1d"), dense_cap=50,
                              self_convergence=True)
        assert rep.pml_floor is None
        oracle = rep.responses[0][1]
        assert oracle.meta["oracle"] == "self-convergence[eks(i=2), d=120]"
        # the reference is the leading method at full order, so that row
        # reproduces it exactly
        assert rep.tables[0].rows[-1].error == 0.0
        assert rep.tables[1].rows[-1].error < 1e-9

    def test_seed_override_lands_in_the_report(self):
        rep = run_convergence(template_scenario("exhaust-1d"), seed=3)
        assert rep.scenario.seed == 3
        assert rep.tables[0].meta["seed"] == 3


class TestTimedomainRun:
    def test_trace_inventory_and_errors(self):
        rep = run_timedomain(template_scenario("exhaust-1d"))
        assert rep.kind == "timedomain"
        names = [name for name, _ in rep.responses]
        assert names == ["oracle-time", "eks-i-2-d120-trace", "pks-d120-trace"]
        for table in rep.tables:
            assert table.meta["domain"] == "time"
            assert table.rows[-1].error < 1e-9
        assert rep.checks == ()

    def test_leapfrog_cross_check(self):
        rep = run_timedomain(_leapfrog_case())
        names = [name for name, _ in rep.responses]
        assert names[-1] == "leapfrog-time"
        lf = rep.responses[-1][1]
        assert lf.samples.size == 241
        assert np.array_equal(lf.samples, rep.responses[0][1].samples)
        (check,) = rep.checks
        assert check["name"] == "leapfrog vs dense stabilized trace"
        assert check["window"] == [0.0, 30.0]   # no echo inside the window
        assert check["passed"]

    def test_dense_cap_applies(self):
        with pytest.raises(ConfigurationError, match="dense cap"):
            run_timedomain(template_scenario("exhaust-1d"), dense_cap=50)


class TestEmitReport:
    def test_inventory_and_hashes(self, exhaust_report, tmp_path):
        out = tmp_path / "run"
        manifest = emit_report(exhaust_report, out)
        assert manifest["kind"] == "convergence"
        assert manifest["scenario_hash"] == \
            exhaust_report.scenario.scenario_hash()
        paths = {e["path"] for e in manifest["files"]}
        assert paths == {"oracle-freq.csv", "oracle-freq.json",
                         "eks-i-2-convergence.csv", "pks-convergence.csv",
                         "report.json"}
        for entry in manifest["files"]:
            blob = (out / entry["path"]).read_bytes()
            assert hashlib.sha256(blob).hexdigest() == entry["sha256"]
            assert len(blob) == entry["bytes"]
        on_disk = json.loads((out / "manifest.json").read_text())
        assert on_disk == manifest

    def test_table_csv_layout(self, exhaust_report, tmp_path):
        emit_report(exhaust_report, tmp_path / "run")
        lines = (tmp_path / "run" / "pks-convergence.csv").read_text() \
            .splitlines()
        assert lines[0] == "order,dim,error,matvecs,solves"
        order, dim, error, matvecs, solves = lines[1].split(",")
        assert (order, dim) == ("120", "120")
        assert float(error) < 1e-9
        assert int(matvecs) == 120

    def test_reruns_are_byte_identical(self, exhaust_report, tmp_path):
        first = emit_report(exhaust_report, tmp_path / "a")
        second = emit_report(exhaust_report, tmp_path / "b")
        assert first["files"] == second["files"]

    def test_refuses_to_clobber(self, exhaust_report, tmp_path):
        out = tmp_path / "run"
        out.mkdir()
        (out / "keep.txt").write_text("precious")
        with pytest.raises(FileExistsError, match="overwrite"):
            emit_report(exhaust_report, out)
        emit_report(exhaust_report, out, overwrite=True)
        assert (out / "keep.txt").read_text() == "precious"
        assert (out / "report.json").exists()

    def test_report_json_fields(self, exhaust_report, tmp_path):
        emit_report(exhaust_report, tmp_path / "run")
        data = json.loads((tmp_path / "run" / "report.json").read_text())
        assert data["kind"] == "convergence"
        assert data["n"] == 120
        assert data["responses"] == ["oracle-freq"]
        assert data["scenario"]["name"] == "exhaust-1d"
        assert len(data["tables"]) == 2
