"""Experiment drivers: single runs, linear-wave verification, nu-sweeps.

Every driver is deterministic for a fixed config: initial data is seeded,
step counts and record/snapshot times are derived from the config alone,
and all file output goes through atomic writes.  The sweep driver runs its
members in separate processes; each member's outputs are identical whether
the pool has one worker or many.
"""

from __future__ import annotations

import dataclasses
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import ConfigError, RunConfig, validate_config
from .diagnostics import (
    DiagnosticsCollector,
    DiagnosticsRecord,
    bootstrap_monitor,
    lyapunov_equivalence_check,
    max_relative_identity_residual,
    trajectory_distance,
    write_diagnostics_csv,
)
from .linear import linear_mode_solution
from .model import FlowState, make_initial_data
from .snapshots import atomic_write_text, read_snapshot, write_snapshot
from .spectral import divergence, leray_project
from .stepping import BlowUpError, integrate


def _json_text(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _state_components(state: FlowState) -> np.ndarray:
    """Physical snapshot payload: velocity components, then stress triangle."""
    return np.concatenate([state.u.to_physical(), state.tau.to_physical()])


@dataclass
class RunResult:
    config: RunConfig
    records: List[DiagnosticsRecord]
    summary: dict
    final_state: FlowState
    outdir: Optional[Path]
    blew_up: bool


def run_single(cfg: RunConfig, outdir: Optional[Path] = None) -> RunResult:
    """Integrate one configuration and (optionally) write its artifacts.

    Writes diagnostics.csv, summary.json, config.json and OBSF snapshots
    under outdir when given.  A blow-up is not raised here: the partial
    record stream and a marker in the summary are produced instead.
    """
    grid = cfg.grid
    params = cfg.model
    state = make_initial_data(
        grid, recipe=cfg.initial_data.recipe, epsilon=cfg.initial_data.epsilon,
        s=cfg.diagnostics.resolve_s(grid), seed=cfg.initial_data.seed,
        mode=cfg.initial_data.mode, band=cfg.initial_data.band)
    collector = DiagnosticsCollector(params, cfg.diagnostics, grid)

    manifest: List[dict] = []
    callbacks: List[Tuple[int, object]] = [
        (cfg.cadence_steps, lambda s, i: collector.observe(s, i))]
    if outdir is not None:
        outdir = Path(outdir)
        (outdir / "snapshots").mkdir(parents=True, exist_ok=True)

        def save_snapshot(s: FlowState, i: int) -> None:
            name = f"snapshots/snap_{i:08d}.obsf"
            write_snapshot(outdir / name, grid.d, grid.n, _state_components(s))
            manifest.append({"step": i, "t": s.t, "file": name})

        callbacks.append((cfg.output.snapshot_cadence_steps, save_snapshot))

    blow_up = None
    try:
        result = integrate(state, params, cfg.stepper, callbacks)
        final_state, steps = result.state, result.steps
    except BlowUpError as exc:
        final_state, steps = exc.state, exc.step
        blow_up = {"t": exc.state.t, "step": exc.step}

    records = collector.records
    report = bootstrap_monitor(records)
    # the centered-difference residual needs a uniform record cadence; a
    # trailing partial step breaks that, so retry without the last record
    identity_max = None
    for tail in (None, -1):
        try:
            identity_max = max_relative_identity_residual(
                records[:tail], params)
            break
        except ValueError:
            continue
    checks = {"lyapunov_equivalence": collector.lyapunov_violations == 0}
    summary = {
        "config": cfg.to_dict(),
        "warnings": cfg.warnings(),
        "t_final": final_state.t,
        "steps": steps,
        "record_count": len(records),
        "sup_u_hs": max(r.u_hs for r in records),
        "sup_tau_hs": max(r.tau_hs for r in records),
        "bootstrap": {
            "e0": report.e0,
            "sup_e": report.sup_e,
            "c_star": report.c_star,
            "norms0": report.norms0,
            "sup_norms": report.sup_norms,
            "bounded_energy": report.bounded_energy,
            "bounded_norms": report.bounded_norms,
        },
        "lyapunov_violations": collector.lyapunov_violations,
        "min_eig_sigma_min": min(r.min_eig_sigma for r in records),
        "max_identity_residual": identity_max,
        "blow_up": blow_up,
        "checks": checks,
        "snapshots": manifest,
    }
    if outdir is not None:
        write_diagnostics_csv(outdir / "diagnostics.csv", records)
        atomic_write_text(outdir / "summary.json", _json_text(summary))
        atomic_write_text(outdir / "config.json", _json_text(cfg.to_dict()))
    return RunResult(cfg, records, summary, final_state, outdir, blow_up is not None)


def load_snapshot_series(outdir: Path) -> List[Tuple[float, np.ndarray]]:
    """Read back the (t, components) series a run wrote under outdir."""
    outdir = Path(outdir)
    summary = json.loads((outdir / "summary.json").read_text())
    series = []
    for entry in summary["snapshots"]:
        _, _, comps = read_snapshot(outdir / entry["file"])
        series.append((entry["t"], comps))
    if not series:
        raise ValueError(f"{outdir} contains no snapshots")
    return series


@dataclass
class LinearVerifyReport:
    mode: Tuple[int, ...]
    k_mag: float
    epsilon: float
    max_deviation: float
    deviation_over_eps: float
    deviation_over_eps_sq: float
    linear_toggles: bool
    times: List[float]
    deviations: List[float]
    checks: Dict[str, bool]


def linear_verify(cfg: RunConfig, outdir: Optional[Path] = None,
                  oracle_tol: float = 1e-10) -> LinearVerifyReport:
    """Compare the solver against the exact two-component mode solution.

    Requires the single-mode recipe.  The excited mode pair (uhat, shat),
    with shat the projected stress divergence, is tracked at the record
    cadence and compared with the closed-form solution propagated from the
    initial amplitudes.  With the nonlinear terms toggled off the deviation
    is pure integrator error and is gated at oracle_tol; with full physics
    at small amplitude the deviation is quadratic in epsilon, which the
    reported ratios expose.
    """
    if cfg.initial_data.recipe != "single-mode":
        raise ConfigError(["linear-verify requires initial_data.recipe "
                           "= 'single-mode'"])
    grid = cfg.grid
    params = cfg.model
    mode = cfg.initial_data.mode or (0,) * (grid.d - 1) + (1,)
    idx = grid.mode_index(mode)
    k_mag = math.sqrt(sum(m * m for m in mode))
    state = make_initial_data(
        grid, recipe="single-mode", epsilon=cfg.initial_data.epsilon,
        s=cfg.diagnostics.resolve_s(grid), seed=cfg.initial_data.seed,
        mode=cfg.initial_data.mode)

    samples: List[Tuple[float, np.ndarray, np.ndarray]] = []

    def capture(s: FlowState, i: int) -> None:
        shat = leray_project(divergence(s.tau))
        samples.append((s.t, s.u.comps[(slice(None),) + idx].copy(),
                        shat.comps[(slice(None),) + idx].copy()))

    integrate(state, params, cfg.stepper, [(cfg.cadence_steps, capture)])

    t0, u0, s0 = samples[0]
    times, devs = [], []
    for t, u_num, s_num in samples:
        u_ref, s_ref = linear_mode_solution(u0, s0, k_mag, params.eta,
                                            params.beta, t - t0)
        dev = max(float(np.max(np.abs(u_num - u_ref))),
                  float(np.max(np.abs(s_num - s_ref))))
        times.append(t)
        devs.append(dev)
    max_dev = max(devs)
    eps = cfg.initial_data.epsilon
    tg = params.toggles
    linear_toggles = not (tg.advection_u or tg.advection_tau or tg.q_term)
    checks: Dict[str, bool] = {}
    if linear_toggles:
        checks["oracle_agreement"] = max_dev < oracle_tol
    report = LinearVerifyReport(
        mode=tuple(mode), k_mag=k_mag, epsilon=eps, max_deviation=max_dev,
        deviation_over_eps=max_dev / eps if eps > 0 else 0.0,
        deviation_over_eps_sq=max_dev / eps ** 2 if eps > 0 else 0.0,
        linear_toggles=linear_toggles, times=times, deviations=devs,
        checks=checks)
    if outdir is not None:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        payload = dataclasses.asdict(report)
        payload["mode"] = list(report.mode)
        atomic_write_text(outdir / "linear_verify.json", _json_text(payload))
        lines = ["t,deviation"]
        lines += [f"{repr(t)},{repr(d)}" for t, d in zip(times, devs)]
        atomic_write_text(outdir / "linear_verify.csv", "\n".join(lines) + "\n")
    return report


@dataclass
class SweepResult:
    nus: Tuple[float, ...]
    distances: Tuple[float, ...]
    slope: float
    intercept: float
    sup_u_hs: Dict[str, float]      # keyed by repr(nu), "0.0" = baseline
    sup_tau_hs: Dict[str, float]
    member_dirs: Dict[str, str]
    checks: Dict[str, bool]
    blew_up: bool


def _member_dir(outdir: Path, nu: float) -> Path:
    return Path(outdir) / (f"nu_{nu:.3e}" if nu > 0 else "nu_0")


def _sweep_member(cfg_dict: dict, outdir: str) -> dict:
    """Run one sweep member from its serialized config (process-pool safe)."""
    cfg, _ = validate_config(cfg_dict)
    return run_single(cfg, Path(outdir)).summary


def sweep_viscosity(cfg: RunConfig, nus: Sequence[float], outdir: Path,
                    threads: int = 1,
                    slope_band: Tuple[float, float] = (0.9, 1.1)) -> SweepResult:
    """Vanishing-viscosity study against the nu = 0 baseline.

    Runs the baseline and one member per nu (all other parameters shared,
    fixed dt required so snapshot times match), computes the sup-in-time L2
    distance of each member to the baseline from the snapshot files, and
    fits the log-log slope of distance against nu.  Members may run in a
    process pool; results do not depend on the worker count.
    """
    nus = sorted((float(v) for v in nus), reverse=True)
    if len(nus) < 3:
        raise ConfigError(["sweep needs at least three viscosity values"])
    if len(set(nus)) != len(nus):
        raise ConfigError(["sweep viscosities must be distinct"])
    if min(nus) <= 0:
        raise ConfigError(["sweep viscosities must be positive; the nu = 0 "
                           "baseline is run implicitly"])
    if max(nus) / min(nus) < 100.0 * (1.0 - 1e-12):
        raise ConfigError(["sweep viscosities must span at least two decades"])
    if cfg.stepper.dt == "auto":
        raise ConfigError(["sweep requires a fixed stepper.dt so snapshot "
                           "times match across members"])
    # shared template: members only differ in nu, baseline included below
    cfg = dataclasses.replace(cfg, model=dataclasses.replace(cfg.model, nu=0.0))

    s_floor = 2.0 * cfg.model.alpha + 2.0 * cfg.model.beta - 1.0
    warnings = list(cfg.warnings())
    if cfg.diagnostics.resolve_s(cfg.grid) < s_floor:
        warnings.append(
            f"s={cfg.diagnostics.resolve_s(cfg.grid):g} is below "
            f"2 alpha + 2 beta - 1 = {s_floor:g}; the O(nu) rate is not "
            "guaranteed at this regularity")

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    jobs: List[Tuple[float, dict, Path]] = []
    for nu in [0.0] + nus:
        member_cfg = dataclasses.replace(
            cfg, model=dataclasses.replace(cfg.model, nu=nu))
        jobs.append((nu, member_cfg.to_dict(), _member_dir(outdir, nu)))

    summaries: Dict[float, dict] = {}
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            futures = [(nu, pool.submit(_sweep_member, cd, str(md)))
                       for nu, cd, md in jobs]
            for nu, fut in futures:
                summaries[nu] = fut.result()
    else:
        for nu, cd, md in jobs:
            summaries[nu] = _sweep_member(cd, str(md))

    blew_up = any(s["blow_up"] is not None for s in summaries.values())
    baseline = load_snapshot_series(_member_dir(outdir, 0.0))
    distances = []
    for nu in nus:
        series = load_snapshot_series(_member_dir(outdir, nu))
        _, _, sup = trajectory_distance(baseline, series)
        distances.append(sup)
    if not blew_up and min(distances) > 0.0:
        slope, intercept = np.polyfit(np.log(np.array(nus)),
                                      np.log(np.array(distances)), 1)
    else:
        slope, intercept = float("nan"), float("nan")
    checks = {"slope_in_band": bool(slope_band[0] <= slope <= slope_band[1])}
    result = SweepResult(
        nus=tuple(nus), distances=tuple(distances),
        slope=float(slope), intercept=float(intercept),
        sup_u_hs={repr(nu): summaries[nu]["sup_u_hs"] for nu in [0.0] + nus},
        sup_tau_hs={repr(nu): summaries[nu]["sup_tau_hs"] for nu in [0.0] + nus},
        member_dirs={repr(nu): str(_member_dir(outdir, nu)) for nu in [0.0] + nus},
        checks=checks, blew_up=blew_up)

    lines = ["nu,distance,sup_u_hs,sup_tau_hs"]
    for nu, dist in zip(nus, distances):
        lines.append(",".join([repr(nu), repr(dist),
                               repr(summaries[nu]["sup_u_hs"]),
                               repr(summaries[nu]["sup_tau_hs"])]))
    atomic_write_text(outdir / "sweep.csv", "\n".join(lines) + "\n")
    payload = dataclasses.asdict(result)
    payload["warnings"] = warnings
    atomic_write_text(outdir / "sweep_summary.json", _json_text(payload))
    return result
