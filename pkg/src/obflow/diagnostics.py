"""Norm tracking and the inequality checks used by the analysis.

A DiagnosticsRecord is one row of the time series: H^s and L2 norms, the
dissipation functionals, the accumulated energy functional

    E(t) = ||u||_{H^s}^2 + ||tau||_{H^s}^2
           + 2 int_0^t ( eta ||L^beta tau||_{H^s}^2
                         + (kc/2) ||grad u||_{H^(s-beta)}^2 ) dt',

the damped-wave Lyapunov functional

    L(t) = ||u||_{H^s}^2 + ||tau||_{H^s}^2 + 2 kc (u, div tau)_{H^(s-beta)},

and pointwise stress positivity.  The integral in E is accumulated with the
trapezoidal rule at the record cadence.  kc is the cross-term coefficient,
constrained to (0, 1/4) so that L is equivalent to the norm part.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .model import FlowState, ModelParams, energy_budget
from .snapshots import atomic_write_text
from .spectral import (
    SYM_PAIRS,
    Grid,
    TWO_PI,
    divergence,
    fractional_laplacian,
    gradient,
    sobolev_inner_product,
    sobolev_norm,
)


@dataclass(frozen=True)
class DiagnosticParams:
    """Sobolev index and cross-term coefficient for the functionals.

    s = None resolves to 1 + d/2 + 0.01, the smallest convenient index
    above the embedding threshold.  k_cross must lie in (0, 1/4).
    """

    s: Optional[float] = None
    k_cross: float = 0.1

    def __post_init__(self):
        if not 0.0 < self.k_cross < 0.25:
            raise ValueError(
                f"k_cross must lie in (0, 1/4), got {self.k_cross}")

    def resolve_s(self, grid: Grid) -> float:
        return 1.0 + grid.d / 2.0 + 0.01 if self.s is None else float(self.s)

    def warnings(self, grid: Grid) -> List[str]:
        s = self.resolve_s(grid)
        out = []
        if s <= 1.0 + grid.d / 2.0:
            out.append(f"s={s:g} is not above 1 + d/2 = {1 + grid.d / 2:g}; "
                       "H^s is not an algebra there and norms may not control "
                       "the nonlinearity")
        return out


@dataclass(frozen=True)
class DiagnosticsRecord:
    """One diagnostic row; field order is the CSV column order."""

    t: float
    u_hs: float                # ||u||_{H^s}
    tau_hs: float              # ||tau||_{H^s}
    u_l2: float
    tau_l2: float
    diss_tau: float            # ||L^beta tau||_{H^s}^2
    diss_u: float              # ||grad u||_{H^(s-beta)}^2
    visc_u: float              # nu ||L^alpha u||_{H^s}^2
    cross: float               # (u, div tau)_{H^(s-beta)}
    E: float
    L: float
    q_work: float              # <Q(tau, grad u), tau>_{L2}
    identity_residual: float   # relative instantaneous L2 balance residual
    min_eig_sigma: float       # min over x of eig_min(tau(x) + I)
    diss_tau_l2: float         # ||L^beta tau||_{L2}^2 (for the record-stream check)
    visc_u_l2: float           # nu ||L^alpha u||_{L2}^2


CSV_COLUMNS = tuple(f.name for f in fields(DiagnosticsRecord))


def _min_eig_sym2(a11: np.ndarray, a12: np.ndarray, a22: np.ndarray) -> np.ndarray:
    mean = 0.5 * (a11 + a22)
    radius = np.sqrt(0.25 * (a11 - a22) ** 2 + a12 ** 2)
    return mean - radius


def _min_eig_sym3(a11, a12, a13, a22, a23, a33) -> np.ndarray:
    """Smallest eigenvalue of symmetric 3x3 matrices (trigonometric form)."""
    q = (a11 + a22 + a33) / 3.0
    p2 = ((a11 - q) ** 2 + (a22 - q) ** 2 + (a33 - q) ** 2
          + 2.0 * (a12 ** 2 + a13 ** 2 + a23 ** 2))
    p = np.sqrt(p2 / 6.0)
    safe = np.where(p > 0, p, 1.0)
    b11, b22, b33 = (a11 - q) / safe, (a22 - q) / safe, (a33 - q) / safe
    b12, b13, b23 = a12 / safe, a13 / safe, a23 / safe
    det_b = (b11 * (b22 * b33 - b23 ** 2)
             - b12 * (b12 * b33 - b23 * b13)
             + b13 * (b12 * b23 - b22 * b13))
    r = np.clip(det_b / 2.0, -1.0, 1.0)
    phi = np.arccos(r) / 3.0
    eig = q + 2.0 * p * np.cos(phi + 2.0 * np.pi / 3.0)
    return np.where(p > 0, eig, q)


def stress_min_eigenvalue(state: FlowState) -> float:
    """min over the grid of the smallest eigenvalue of tau(x) + identity."""
    grid = state.grid
    tri = state.tau.to_physical()
    idx = {pair: m for m, pair in enumerate(SYM_PAIRS[grid.d])}
    if grid.d == 2:
        eig = _min_eig_sym2(tri[idx[(0, 0)]] + 1.0, tri[idx[(0, 1)]],
                            tri[idx[(1, 1)]] + 1.0)
    else:
        eig = _min_eig_sym3(tri[idx[(0, 0)]] + 1.0, tri[idx[(0, 1)]],
                            tri[idx[(0, 2)]], tri[idx[(1, 1)]] + 1.0,
                            tri[idx[(1, 2)]], tri[idx[(2, 2)]] + 1.0)
    return float(np.min(eig))


class DiagnosticsCollector:
    """Builds the record stream along a run and tracks simple verdicts."""

    def __init__(self, params: ModelParams, diag: DiagnosticParams, grid: Grid):
        self.params = params
        self.diag = diag
        self.grid = grid
        self.s = diag.resolve_s(grid)
        self.records: List[DiagnosticsRecord] = []
        self.lyapunov_violations = 0
        self._dissipation_accum = 0.0
        self._prev: Optional[Tuple[float, float]] = None  # (t, integrand)

    def observe(self, state: FlowState, step: int = 0) -> DiagnosticsRecord:
        params, s, kc = self.params, self.s, self.diag.k_cross
        u, tau = state.u, state.tau

        u_hs = sobolev_norm(u, s)
        tau_hs = sobolev_norm(tau, s)
        diss_tau = sobolev_inner_product(fractional_laplacian(tau, params.beta),
                                         tau, s)
        diss_u = 0.0
        for i in range(self.grid.d):
            g = gradient(u.component(i))
            diss_u += sobolev_inner_product(g, g, s - params.beta)
        visc_u = params.nu_eff * sobolev_inner_product(
            fractional_laplacian(u, params.alpha), u, s) if params.nu_eff else 0.0
        cross = sobolev_inner_product(u, divergence(tau), s - params.beta)

        integrand = params.eta_eff * diss_tau + 0.5 * kc * diss_u
        if self._prev is not None:
            t_prev, g_prev = self._prev
            self._dissipation_accum += 0.5 * (g_prev + integrand) * (state.t - t_prev)
        self._prev = (state.t, integrand)

        budget = energy_budget(state, params)
        norms_sq = u_hs ** 2 + tau_hs ** 2
        rec = DiagnosticsRecord(
            t=state.t,
            u_hs=u_hs,
            tau_hs=tau_hs,
            u_l2=sobolev_norm(u, 0.0),
            tau_l2=sobolev_norm(tau, 0.0),
            diss_tau=diss_tau,
            diss_u=diss_u,
            visc_u=visc_u,
            cross=cross,
            E=norms_sq + 2.0 * self._dissipation_accum,
            L=norms_sq + 2.0 * kc * cross,
            q_work=budget["q_work"],
            identity_residual=budget["residual_rel"],
            min_eig_sigma=stress_min_eigenvalue(state),
            diss_tau_l2=budget["diss_tau_l2"],
            visc_u_l2=params.nu_eff * budget["visc_u_l2"],
        )
        self.records.append(rec)
        ok, _ = lyapunov_equivalence_check(rec, kc)
        if not ok:
            self.lyapunov_violations += 1
        return rec


def lyapunov_equivalence_check(rec: DiagnosticsRecord,
                               k_cross: float) -> Tuple[bool, float]:
    """Check |2 kc (u, div tau)| <= 1/2 ||u||^2 + 2 kc^2 ||tau||^2 at H^s.

    Returns (passed, slack).  The bound holds mode-by-mode for beta >= 1/2,
    so slack should never be negative beyond roundoff; the pass condition
    allows a 1e-12 relative margin.
    """
    lhs = abs(2.0 * k_cross * rec.cross)
    rhs = 0.5 * rec.u_hs ** 2 + 2.0 * k_cross ** 2 * rec.tau_hs ** 2
    slack = rhs - lhs
    return slack >= -1e-12 * (rhs + lhs), slack


def energy_identity_residual(records: Sequence[DiagnosticsRecord],
                             params: ModelParams) -> Tuple[np.ndarray, np.ndarray]:
    """Centered-difference residual of the L2 energy identity per interior record.

    residual(t_i) = d/dt [ (||u||^2 + ||tau||^2) / 2 ]
                    + eta ||L^beta tau||^2 + nu ||L^alpha u||^2
                    + a ||tau||^2 + <Q, tau>,

    evaluated from the record stream alone.  Requires at least three
    uniformly spaced records; the truncation error is O(dt_record^2).
    """
    if len(records) < 3:
        raise ValueError("need at least three records for centered differences")
    t = np.array([r.t for r in records])
    spacing = np.diff(t)
    if spacing.min() <= 0:
        raise ValueError("record times must be strictly increasing")
    if (spacing.max() - spacing.min()) > 1e-9 * spacing.max():
        raise ValueError("records are not uniformly sampled")
    x = 0.5 * (np.array([r.u_l2 for r in records]) ** 2
               + np.array([r.tau_l2 for r in records]) ** 2)
    dxdt = (x[2:] - x[:-2]) / (t[2:] - t[:-2])
    diss = np.array([
        params.eta_eff * r.diss_tau_l2 + r.visc_u_l2
        + params.a_eff * r.tau_l2 ** 2 + r.q_work
        for r in records[1:-1]])
    return t[1:-1], dxdt + diss


def max_relative_identity_residual(records: Sequence[DiagnosticsRecord],
                                   params: ModelParams) -> float:
    """Max |residual| over interior records, relative to the balance scale."""
    _, resid = energy_identity_residual(records, params)
    t = np.array([r.t for r in records])
    x = 0.5 * (np.array([r.u_l2 for r in records]) ** 2
               + np.array([r.tau_l2 for r in records]) ** 2)
    dxdt = (x[2:] - x[:-2]) / (t[2:] - t[:-2])
    diss = resid - dxdt
    scale = float(max(np.max(np.abs(dxdt)), np.max(np.abs(diss))))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(resid)) / scale)


@dataclass(frozen=True)
class BootstrapReport:
    """Boundedness summary of one record stream."""

    e0: float
    sup_e: float
    c_star: float
    norms0: float           # ||u||^2 + ||tau||^2 at t = 0
    sup_norms: float
    bounded_energy: bool    # sup E <= 4 E(0)
    bounded_norms: bool     # sup (||u||^2 + ||tau||^2) <= 4 * initial


def bootstrap_monitor(records: Sequence[DiagnosticsRecord],
                      margin: float = 4.0) -> BootstrapReport:
    """Report sup E, the smallest constant C with E(t) <= E(0) + C E(t)^(3/2),
    and the factor-`margin` boundedness verdicts."""
    if not records:
        raise ValueError("empty record stream")
    e = np.array([r.E for r in records])
    norms = np.array([r.u_hs ** 2 + r.tau_hs ** 2 for r in records])
    e0 = float(e[0])
    c_star = 0.0
    for val in e[1:]:
        if val > 0:
            c_star = max(c_star, (val - e0) / val ** 1.5)
    zero0 = e0 == 0.0
    return BootstrapReport(
        e0=e0,
        sup_e=float(e.max()),
        c_star=c_star,
        norms0=float(norms[0]),
        sup_norms=float(norms.max()),
        bounded_energy=bool(e.max() <= margin * e0) if not zero0 else bool(e.max() == 0),
        bounded_norms=bool(norms.max() <= margin * norms[0]) if norms[0] > 0
        else bool(norms.max() == 0),
    )


def trajectory_distance(series_a: Sequence[Tuple[float, np.ndarray]],
                        series_b: Sequence[Tuple[float, np.ndarray]],
                        ) -> Tuple[np.ndarray, np.ndarray, float]:
    """Sup-in-time L2 distance between two snapshot series.

    Each series is a list of (t, components) with physical samples laid out
    as d velocity components followed by the stress upper triangle.  Times
    must match pairwise to 1e-12 (relative).  Returns (times, distances,
    sup distance); the L2 norms carry the (2pi)^d volume and the Frobenius
    multiplicity of the mirrored stress components.
    """
    if len(series_a) != len(series_b):
        raise ValueError(f"snapshot counts differ: {len(series_a)} vs {len(series_b)}")
    if not series_a:
        raise ValueError("empty snapshot series")
    times, dists = [], []
    for (ta, ca), (tb, cb) in zip(series_a, series_b):
        if abs(ta - tb) > 1e-12 * max(1.0, abs(ta)):
            raise ValueError(f"snapshot times differ: {ta!r} vs {tb!r}")
        if ca.shape != cb.shape:
            raise ValueError(f"snapshot shapes differ: {ca.shape} vs {cb.shape}")
        d = ca.ndim - 1
        pairs = SYM_PAIRS[d]
        if ca.shape[0] != d + len(pairs):
            raise ValueError(f"expected {d + len(pairs)} components, got {ca.shape[0]}")
        cell = (TWO_PI / ca.shape[1]) ** d
        delta = ca - cb
        total = float(np.sum(delta[:d] ** 2))
        for m, (i, j) in enumerate(pairs):
            mult = 1.0 if i == j else 2.0
            total += mult * float(np.sum(delta[d + m] ** 2))
        times.append(ta)
        dists.append(math.sqrt(cell * total))
    times = np.array(times)
    dists = np.array(dists)
    return times, dists, float(dists.max())


def diagnostics_csv(records: Sequence[DiagnosticsRecord]) -> str:
    """CSV text with one row per record, columns in declaration order."""
    lines = [",".join(CSV_COLUMNS)]
    for rec in records:
        lines.append(",".join(repr(float(getattr(rec, c))) for c in CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def write_diagnostics_csv(path, records: Sequence[DiagnosticsRecord]) -> None:
    atomic_write_text(path, diagnostics_csv(records))
