"""Experiment orchestration: build, reduce, compare, emit.

Wall times are recorded but never asserted; numerical artifacts (CSV files)
are deterministic for a fixed scenario and seed. Every tolerance that shows
up in a report names the check that produced it.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .krylov import check_decomposition, eks_orthogonalize, pks_lanczos
from .linalg import factorize
from .medium import homogeneous_medium
from .grid import build_grid
from .operators import assemble_source, assemble_operator
from .oracles import (DenseOracle, courant_limit, dense_freq_solution,
                      dense_time_solution, direct_freq_solve,
                      leapfrog_reference)
from .response import ResponseSet, convolve_response
from .rom import ConvergenceRow, ConvergenceTable, build_reduced_model, \
    eval_freq, eval_time, rom_error_curve
from .scenario import AssembledScenario, Scenario, assemble_scenario

_DEFAULT_TOLS = {
    "decomposition_residual": 1.0e-10,
    "orthogonality": 1.0e-8,
}


@dataclass(frozen=True)
class RunReport:
    kind: str                      # "convergence" | "timedomain"
    scenario: Scenario
    n: int
    tables: tuple[ConvergenceTable, ...] = ()
    diagnostics: dict = field(default_factory=dict)
    checks: tuple[dict, ...] = ()
    pml_floor: float | None = None
    wall_times: dict = field(default_factory=dict)
    responses: tuple = ()          # (name, ResponseSet) pairs

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "scenario": self.scenario.canonical(),
            "scenario_hash": self.scenario.scenario_hash(),
            "n": self.n,
            "tables": [t.as_dict() for t in self.tables],
            "diagnostics": self.diagnostics,
            "checks": list(self.checks),
            "pml_floor": self.pml_floor,
            "wall_times": self.wall_times,
            "responses": [name for name, _ in self.responses],
        }


class _Stopwatch:
    def __init__(self):
        self.laps = {}
        self._mark = time.perf_counter()

    def lap(self, name: str):
        now = time.perf_counter()
        self.laps[name] = self.laps.get(name, 0.0) + now - self._mark
        self._mark = now


def _build_basis(asm, spec, order, solver, reorthogonalize):
    if spec.kind == "pks":
        return pks_lanczos(asm.op, asm.b, order,
                           reorthogonalize=reorthogonalize)
    return eks_orthogonalize(asm.op, asm.b, order, spec.i, solver=solver,
                             reorthogonalize=reorthogonalize)


def _self_reference(asm, solver, reorthogonalize, s_values):
    """Finest-affordable model of the scenario's own leading method."""
    sc = asm.scenario
    spec = next((m for m in sc.methods if m.kind == "eks"), sc.methods[0])
    width = spec.i + 1 if spec.kind == "eks" else 1
    order = min(2 * max(spec.orders), asm.n // width)
    basis = _build_basis(asm, spec, order, solver, reorthogonalize)
    model = build_reduced_model(basis, asm.receivers,
                                {"scenario": sc.scenario_hash()})
    resp = eval_freq(model, s_values, receiver_ids=asm.receiver_ids)
    resp.meta.update(oracle=f"self-convergence[{spec.label}, d={basis.dim}]")
    return resp


def estimate_pml_floor(asm: AssembledScenario, oracle: DenseOracle) -> float:
    """Relative gap between the stabilized and plain shifted solutions.

    Measured at the stretching's matched frequency, at the receivers. The
    two formulas differ exactly by the anti-resonant branch the correction
    replaces, so the gap tracks the quality of the absorbing layer; it is
    reported, never asserted against.
    """
    s0 = 1.0j * asm.scenario.omega_match()
    stabilized = dense_freq_solution(oracle, asm.b, [s0], asm.receivers,
                                     asm.receiver_ids).values[0]
    plain = direct_freq_solve(asm.op, asm.b, s0)[list(asm.receivers)]
    return float(np.linalg.norm(stabilized - plain)
                 / np.linalg.norm(plain))


def _decomposition_checks(asm, solver, reorthogonalize, tols):
    """Largest-order decomposition diagnostics for every method."""
    diagnostics = {}
    checks = []
    for spec in asm.scenario.methods:
        basis = _build_basis(asm, spec, max(spec.orders), solver,
                             reorthogonalize)
        report = check_decomposition(asm.op, basis)
        diagnostics[spec.label] = report.as_dict()
        checks.append({
            "name": f"decomposition residual [{spec.label}, d={basis.dim}]",
            "source": "check_decomposition",
            "observed": report.residual,
            "tolerance": tols["decomposition_residual"],
            "passed": report.residual <= tols["decomposition_residual"],
        })
        checks.append({
            "name": f"bilinear orthogonality [{spec.label}, d={basis.dim}]",
            "source": "check_decomposition",
            "observed": report.orthogonality,
            "tolerance": tols["orthogonality"],
            "passed": report.orthogonality <= tols["orthogonality"],
        })
    return diagnostics, checks


def run_convergence(scenario: Scenario, dense_cap: int = 5000,
                    self_convergence: bool = False,
                    reorthogonalize: bool = True,
                    seed: int | None = None) -> RunReport:
    """Frequency-band convergence of every requested method vs one oracle."""
    if seed is not None:
        scenario = replace(scenario, seed=seed)
    watch = _Stopwatch()
    asm = assemble_scenario(scenario)
    solver = factorize(asm.op) if any(m.kind == "eks"
                                      for m in scenario.methods) else None
    watch.lap("assemble")
    s_values = scenario.s_samples()
    pml_floor = None
    if asm.n <= dense_cap:
        oracle = DenseOracle(asm.op, dense_cap)
        oracle_resp = dense_freq_solution(oracle, asm.b, s_values,
                                          asm.receivers, asm.receiver_ids)
        pml_floor = estimate_pml_floor(asm, oracle)
    elif self_convergence:
        oracle_resp = _self_reference(asm, solver, reorthogonalize, s_values)
    else:
        raise ConfigurationError(
            f"N = {asm.n} exceeds the dense cap {dense_cap}; pass "
            "self_convergence=True (--self-convergence) or raise the cap")
    watch.lap("oracle")
    tols = dict(_DEFAULT_TOLS)
    tols.update(scenario.tolerances)
    hash_ = scenario.scenario_hash()
    tables = []
    checks = []
    for spec in scenario.methods:
        table = rom_error_curve(
            asm.op, asm.b, spec.kind, spec.orders, s_values, oracle_resp,
            asm.receivers, i=spec.i, solver=solver,
            reorthogonalize=reorthogonalize,
            extra_meta={"scenario": hash_, "seed": scenario.seed})
        tables.append(table)
        target = tols.get("convergence")
        if target is not None:
            reached = table.converged_dim(target)
            checks.append({
                "name": f"{spec.label} reaches {target:g} on the band",
                "source": "rom_error_curve",
                "tolerance": target,
                "observed": reached,
                "passed": reached is not None,
            })
    watch.lap("convergence")
    diagnostics, diag_checks = _decomposition_checks(
        asm, solver, reorthogonalize, tols)
    checks.extend(diag_checks)
    watch.lap("diagnostics")
    responses = [("oracle-freq", oracle_resp)]
    return RunReport(kind="convergence", scenario=scenario, n=asm.n,
                     tables=tuple(tables), diagnostics=diagnostics,
                     checks=tuple(checks), pml_floor=pml_floor,
                     wall_times=watch.laps, responses=tuple(responses))


def _leapfrog_setup(scenario: Scenario, asm: AssembledScenario):
    """Enlarged-domain real twin of a homogeneous scenario.

    The box is padded so wall reflections cannot reach any receiver inside
    the observation window; absorbing layers are then unnecessary.
    """
    if scenario.medium_preset != "homogeneous":
        raise ConfigurationError(
            "the leapfrog cross-check needs a homogeneous medium; "
            "got preset " + scenario.medium_preset)
    c = asm.medium.c_max
    pad = [int(np.ceil(c * scenario.t_max / h)) + 2 for h in scenario.step]
    interior = [n + 2 * p for n, p in zip(scenario.interior, pad)]
    grid = build_grid(interior, scenario.step, [0] * scenario.ndim)
    medium = homogeneous_medium(grid, c)
    op = assemble_operator(grid, medium, None)
    shift = lambda loc: tuple(x + p for x, p in zip(loc, pad))
    b = assemble_source(op, shift(scenario.source_location),
                        scenario.source_amplitude)
    receivers = [grid.flat_index(shift(loc))
                 for loc in scenario.receiver_locations]
    return grid, medium, b.real, receivers


def _first_echo_time(asm: AssembledScenario) -> float:
    """Earliest wall-echo arrival at any receiver, mirror-image paths.

    Single-bounce paths only; corner echoes are strictly longer. Uses the
    fastest wave speed, so the returned time is conservative.
    """
    grid = asm.grid
    steps = np.asarray(grid.step)
    walls_lo = np.zeros(grid.ndim)
    walls_hi = steps * (np.asarray(grid.shape) + 1)
    src = (np.asarray(np.unravel_index(int(np.argmax(np.abs(asm.b))),
                                       grid.shape)) + 1) * steps
    t = np.inf
    for rec in asm.receivers:
        xr = (np.asarray(np.unravel_index(rec, grid.shape)) + 1) * steps
        for ax in range(grid.ndim):
            for wall in (walls_lo[ax], walls_hi[ax]):
                mirror = src.copy()
                mirror[ax] = 2.0 * wall - src[ax]
                t = min(t, float(np.linalg.norm(mirror - xr)))
    return t / asm.medium.c_max


def run_timedomain(scenario: Scenario, dense_cap: int = 5000,
                   reorthogonalize: bool = True,
                   seed: int | None = None) -> RunReport:
    """Window traces for every method/order, plus reference solutions."""
    if seed is not None:
        scenario = replace(scenario, seed=seed)
    watch = _Stopwatch()
    asm = assemble_scenario(scenario)
    times = scenario.time_grid()
    wavelet = scenario.wavelet()
    solver = factorize(asm.op) if any(m.kind == "eks"
                                      for m in scenario.methods) else None
    watch.lap("assemble")
    if asm.n > dense_cap:
        raise ConfigurationError(
            f"N = {asm.n} exceeds the dense cap {dense_cap} for the "
            "time-domain oracle")
    oracle = DenseOracle(asm.op, dense_cap)
    oracle_resp = convolve_response(
        dense_time_solution(oracle, asm.b, times, asm.receivers,
                            asm.receiver_ids), wavelet)
    watch.lap("oracle")
    hash_ = scenario.scenario_hash()
    tables = []
    responses = [("oracle-time", oracle_resp)]
    for spec in scenario.methods:
        rows = []
        for order in sorted(spec.orders):
            basis = _build_basis(asm, spec, order, solver, reorthogonalize)
            model = build_reduced_model(basis, asm.receivers,
                                        {"scenario": hash_})
            resp = convolve_response(
                eval_time(model, times, receiver_ids=asm.receiver_ids),
                wavelet)
            rows.append(ConvergenceRow(
                order=order, dim=basis.dim,
                error=resp.window_error(oracle_resp),
                matvecs=basis.matvec_count, solves=basis.solve_count))
            responses.append((f"{_slug(spec.label)}-d{basis.dim}-trace", resp))
        tables.append(ConvergenceTable(
            label=spec.label, rows=tuple(rows),
            meta={"domain": "time", "scenario": hash_}))
    watch.lap("traces")
    checks = []
    if scenario.leapfrog:
        grid, medium, b, receivers = _leapfrog_setup(scenario, asm)
        dt_grid = float(times[1] - times[0])
        bound = courant_limit(grid, medium)
        n_sub = max(1, int(np.ceil(dt_grid / (bound / 6.0))))
        dt = dt_grid / n_sub
        lf = leapfrog_reference(grid, medium, b, dt,
                                n_sub * (times.size - 1), receivers,
                                forcing=wavelet,
                                receiver_ids=asm.receiver_ids)
        lf_resp = ResponseSet("time", times, lf.values[::n_sub],
                              lf.receivers, lf.meta)
        responses.append(("leapfrog-time", lf_resp))
        # wall echoes exist only on the stabilized side (the leapfrog twin
        # is padded); compare strictly before the first one can arrive
        t_echo = min(_first_echo_time(asm), float(times[-1]))
        keep = times <= t_echo
        diff = lf_resp.values[keep] - oracle_resp.values[keep]
        observed = float(np.linalg.norm(diff)
                         / np.linalg.norm(oracle_resp.values[keep]))
        tol = scenario.tolerances.get("leapfrog", 1.0e-2)
        checks.append({
            "name": "leapfrog vs dense stabilized trace",
            "source": "leapfrog_reference/window_error",
            "observed": observed,
            "tolerance": tol,
            "window": [0.0, t_echo],
            "passed": observed <= tol,
        })
        watch.lap("leapfrog")
    return RunReport(kind="timedomain", scenario=scenario, n=asm.n,
                     tables=tuple(tables), checks=tuple(checks),
                     wall_times=watch.laps, responses=tuple(responses))


def _slug(label: str) -> str:
    out = []
    for ch in label:
        if ch.isalnum():
            out.append(ch)
        elif out and out[-1] != "-":
            out.append("-")
    return "".join(out).strip("-")


def _table_csv(table: ConvergenceTable) -> str:
    lines = ["order,dim,error,matvecs,solves"]
    for r in table.rows:
        lines.append(f"{r.order},{r.dim},{r.error!r},{r.matvecs},{r.solves}")
    return "\n".join(lines) + "\n"


def emit_report(report: RunReport, out_dir, overwrite: bool = False) -> dict:
    """Write CSVs, the JSON report and a hash manifest; returns the manifest."""
    out = Path(out_dir)
    if out.exists() and any(out.iterdir()) and not overwrite:
        raise FileExistsError(
            f"{out} already contains files; pass overwrite=True (--overwrite)")
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, resp in report.responses:
        written += resp.write_csv(out / f"{name}.csv")
    for table in report.tables:
        path = out / f"{_slug(table.label)}-{report.kind}.csv"
        path.write_text(_table_csv(table))
        written.append(str(path))
    report_path = out / "report.json"
    with open(report_path, "w") as fh:
        json.dump(report.as_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(str(report_path))
    entries = []
    for path in sorted(written):
        blob = Path(path).read_bytes()
        entries.append({"path": str(Path(path).relative_to(out)),
                        "sha256": hashlib.sha256(blob).hexdigest(),
                        "bytes": len(blob)})
    manifest = {"scenario_hash": report.scenario.scenario_hash(),
                "kind": report.kind, "files": entries}
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest
