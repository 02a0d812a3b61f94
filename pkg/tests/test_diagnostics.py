"""Energy functionals, Lyapunov bookkeeping, eigenvalue floor, distances."""

import math

import numpy as np
import pytest

from obflow.diagnostics import (
    CSV_COLUMNS,
    DiagnosticParams,
    DiagnosticsCollector,
    bootstrap_monitor,
    diagnostics_csv,
    energy_identity_residual,
    lyapunov_equivalence_check,
    max_relative_identity_residual,
    stress_min_eigenvalue,
    trajectory_distance,
)
from obflow.model import (
    FlowState,
    ModelParams,
    TermToggles,
    make_initial_data,
)
from obflow.spectral import (
    Grid,
    TensorField,
    VectorField,
    dealias,
    forward_transform,
    leray_project,
)
from obflow.stepping import StepperConfig, integrate

TWO_PI = 2.0 * math.pi


def random_state(grid, seed, scale=1.0):
    rng = np.random.default_rng(seed)
    u = leray_project(dealias(VectorField(grid, np.stack([
        forward_transform(scale * rng.standard_normal(grid.shape),
                          grid).coeffs
        for _ in range(grid.d)]))))
    tau = TensorField.zeros(grid)
    for i in range(tau.comps.shape[0]):
        tau.comps[i] = forward_transform(
            scale * rng.standard_normal(grid.shape), grid).coeffs
    return FlowState(u, dealias(tau))


def collect_one(state, params, diag=None):
    diag = diag or DiagnosticParams()
    coll = DiagnosticsCollector(params, diag, state.grid)
    coll.observe(state, 0)
    return coll.records[0], coll


class TestRecordFields:
    def test_zero_state(self):
        g = Grid(2, 16)
        st = FlowState(VectorField.zeros(g), TensorField.zeros(g))
        rec, coll = collect_one(st, ModelParams(eta=1.0))
        assert rec.u_hs == 0.0
        assert rec.tau_hs == 0.0
        assert rec.E == 0.0
        assert rec.L == 0.0
        assert rec.cross == 0.0
        # sigma = tau + I = I, so the eigenvalue floor is exactly 1
        assert rec.min_eig_sigma == pytest.approx(1.0, rel=1e-14)
        assert coll.lyapunov_violations == 0

    def test_velocity_free_state_has_no_cross_term(self):
        g = Grid(2, 16)
        x = g.coordinates()
        tau = TensorField.zeros(g)
        tau.comps[tau.pair_index(0, 1)] = forward_transform(
            np.sin(x[1]), g).coeffs
        st = FlowState(VectorField.zeros(g), tau)
        rec, _ = collect_one(st, ModelParams(eta=1.0))
        assert rec.cross == 0.0
        assert rec.L == pytest.approx(rec.tau_hs ** 2, rel=1e-13)

    def test_cross_term_hand_value(self):
        """u = 2 cos(y) e_x, tau_01 = 3 sin(y), s = 2, beta = 1:

        <u, div tau>_{H^1} = (2 pi)^2 * (1 + 1)^1 * (2*3)/2 = 6 (2 pi)^2.
        """
        g = Grid(2, 32)
        x = g.coordinates()
        u = VectorField.zeros(g)
        u.comps[0] = forward_transform(2.0 * np.cos(x[1]), g).coeffs
        tau = TensorField.zeros(g)
        tau.comps[tau.pair_index(0, 1)] = forward_transform(
            3.0 * np.sin(x[1]), g).coeffs
        st = FlowState(u, tau)
        params = ModelParams(eta=1.0, beta=1.0)
        diag = DiagnosticParams(s=2.0, k_cross=0.1)
        rec, _ = collect_one(st, params, diag)
        expected = 6.0 * TWO_PI ** 2
        assert rec.cross == pytest.approx(expected, rel=1e-12)
        assert rec.L == pytest.approx(
            rec.u_hs ** 2 + rec.tau_hs ** 2 + 0.2 * expected, rel=1e-12)

    def test_initial_energy_is_squared_norms(self):
        g = Grid(2, 16)
        st = random_state(g, seed=3, scale=0.1)
        rec, _ = collect_one(st, ModelParams(eta=1.0, beta=0.5))
        assert rec.E == pytest.approx(rec.u_hs ** 2 + rec.tau_hs ** 2,
                                      rel=1e-13)

    def test_csv_columns_and_round_trip(self):
        g = Grid(2, 16)
        st = random_state(g, seed=4, scale=0.1)
        rec, coll = collect_one(st, ModelParams(eta=1.0))
        text = diagnostics_csv(coll.records)
        lines = text.strip().split("\n")
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert lines[0].startswith("t,u_hs,tau_hs,u_l2,tau_l2,")
        values = lines[1].split(",")
        # repr floats parse back exactly
        assert float(values[1]) == rec.u_hs
        assert float(values[CSV_COLUMNS.index("E")]) == rec.E


class TestLyapunovEquivalence:
    def test_random_states_never_violate(self):
        """|2 kc <u, div tau>_{s-b}| <= u^2/2 + 2 kc^2 tau^2 for kc < 1/4
        and beta >= 1/2; checked over random states for each beta."""
        diag = DiagnosticParams(k_cross=0.1)
        for beta in (0.5, 0.75, 1.0):
            params = ModelParams(eta=1.0, beta=beta)
            coll = DiagnosticsCollector(params, diag, Grid(2, 16))
            for trial in range(70):
                st = random_state(Grid(2, 16), seed=1000 + trial, scale=2.0)
                coll.observe(st, trial)
            assert coll.lyapunov_violations == 0

    def test_check_reports_slack(self):
        g = Grid(2, 16)
        st = random_state(g, seed=5)
        params = ModelParams(eta=1.0, beta=0.5)
        rec, _ = collect_one(st, params)
        passed, slack = lyapunov_equivalence_check(rec, 0.1)
        assert passed
        assert slack >= 0.0

    def test_equivalence_bounds_l_by_e_initially(self):
        """At t=0 the two functionals agree within the cross-term margin:
        E/2 - 2 kc^2 tau^2 <= L <= 3 E/2 + 2 kc^2 tau^2 style bounds reduce
        to L in [E/2, 3E/2] for kc <= 1/4 (coarse but universal)."""
        g = Grid(2, 16)
        for trial in range(20):
            st = random_state(g, seed=300 + trial, scale=1.5)
            rec, _ = collect_one(st, ModelParams(eta=1.0, beta=0.5))
            assert 0.25 * rec.E <= rec.L <= 1.75 * rec.E


class TestPureDecayRun:
    def drift(self, dt):
        g = Grid(2, 16)
        params = ModelParams(eta=0.5, beta=0.75,
                             toggles=TermToggles.dissipation_only())
        st = make_initial_data(g, recipe="random-band", epsilon=1.0, seed=6)
        st = FlowState(VectorField.zeros(g), st.tau)
        coll = DiagnosticsCollector(params, DiagnosticParams(), g)
        integrate(st, params, StepperConfig(dt=dt, t_end=1.0),
                  [(1, lambda s, i: coll.observe(s, i))])
        energies = [r.E for r in coll.records]
        e0 = energies[0]
        return max(abs(e - e0) for e in energies) / e0, coll.records

    def test_energy_functional_is_conserved(self):
        """With only stress dissipation active and u = 0 the decay of
        ||tau||^2 exactly balances the accumulated dissipation integral,
        so the only E drift is the trapezoid quadrature error, which is
        O(dt^2) in the record spacing."""
        coarse, records = self.drift(0.01)
        fine, _ = self.drift(0.005)
        assert coarse < 1e-3
        assert 3.5 <= coarse / fine <= 4.5
        report = bootstrap_monitor(records)
        assert report.bounded_energy
        assert report.bounded_norms
        assert report.c_star < 1e-2

    def test_monotone_norm_decay(self):
        g = Grid(2, 16)
        params = ModelParams(eta=0.5, beta=0.75,
                             toggles=TermToggles.dissipation_only())
        st = make_initial_data(g, recipe="random-band", epsilon=1.0, seed=6)
        coll = DiagnosticsCollector(params, DiagnosticParams(), g)
        integrate(st, params, StepperConfig(dt=0.01, t_end=1.0),
                  [(10, lambda s, i: coll.observe(s, i))])
        taus = [r.tau_hs for r in coll.records]
        assert all(b <= a * (1.0 + 1e-12) for a, b in zip(taus, taus[1:]))


class TestIdentityResidualStream:
    def run_records(self, cadence, dt=1e-3, t_end=0.5):
        g = Grid(2, 32)
        params = ModelParams(eta=1.0, beta=0.5, b=0.5)
        st = make_initial_data(g, recipe="random-band", epsilon=0.5, seed=9)
        coll = DiagnosticsCollector(params, DiagnosticParams(), g)
        integrate(st, params, StepperConfig(dt=dt, t_end=t_end),
                  [(cadence, lambda s, i: coll.observe(s, i))])
        return coll.records, params

    def test_residual_is_second_order_in_record_spacing(self):
        """The centered-difference d/dt || . ||^2 dominates the residual;
        halving the record spacing shrinks it about 4x."""
        rec_c, params = self.run_records(50)
        rec_f, _ = self.run_records(25)
        r_coarse = max_relative_identity_residual(rec_c, params)
        r_fine = max_relative_identity_residual(rec_f, params)
        assert r_coarse > 1e-6
        assert 3.5 <= r_coarse / r_fine <= 4.5

    def test_requires_three_uniform_records(self):
        records, params = self.run_records(100, t_end=0.1)
        assert len(records) < 3
        with pytest.raises(ValueError):
            energy_identity_residual(records, params)

    def test_rejects_nonuniform_spacing(self):
        rec, params = self.run_records(100, t_end=0.45)
        # cadence 100 at dt=1e-3 over 0.45 fires at t=0, 0.1, ..., 0.4, 0.45
        with pytest.raises(ValueError):
            energy_identity_residual(rec, params)


class TestStressEigenvalueFloor:
    def test_matches_dense_solver(self):
        """Closed-form per-point eigenvalues agree with eigvalsh."""
        for d, n in ((2, 16), (3, 8)):
            g = Grid(d, n)
            st = random_state(g, seed=40 + d, scale=0.8)
            got = stress_min_eigenvalue(st)
            tri = st.tau.to_physical()
            full = np.zeros((d, d) + g.shape)
            for idx, (i, j) in enumerate(st.tau.pairs):
                full[i, j] = tri[idx]
                full[j, i] = tri[idx]
            mats = np.moveaxis(full.reshape(d, d, -1), -1, 0)
            mats = mats + np.eye(d)
            expected = np.linalg.eigvalsh(mats)[:, 0].min()
            assert got == pytest.approx(expected, rel=1e-10, abs=1e-12)

    def test_identity_floor_for_zero_stress(self):
        g = Grid(3, 8)
        st = FlowState(VectorField.zeros(g), TensorField.zeros(g))
        assert stress_min_eigenvalue(st) == pytest.approx(1.0, rel=1e-14)


class TestBootstrapMonitor:
    def test_growth_clamp_and_margin(self):
        g = Grid(2, 16)
        st = random_state(g, seed=60, scale=0.1)
        _, coll = collect_one(st, ModelParams(eta=1.0))
        report = bootstrap_monitor(coll.records)
        assert report.c_star == 0.0     # single record, no growth
        assert report.bounded_energy
        assert report.sup_e == report.e0


class TestTrajectoryDistance:
    def make_series(self, grid, seed, times=(0.0, 0.5, 1.0)):
        rng = np.random.default_rng(seed)
        ncomp = grid.d + len(TensorField.zeros(grid).pairs)
        return [(t, rng.standard_normal((ncomp,) + grid.shape))
                for t in times]

    def test_identical_series_distance_zero(self):
        g = Grid(2, 16)
        a = self.make_series(g, 1)
        times, dists, sup = trajectory_distance(a, [(t, c.copy())
                                                    for t, c in a])
        assert sup == 0.0
        assert list(times) == [0.0, 0.5, 1.0]

    def test_constant_offset_hand_value(self):
        """Adding c to one velocity component changes the L2 distance by
        c (2 pi)^(d/2); on an off-diagonal stress slot the Frobenius
        pairing doubles the square, giving c sqrt(2) (2 pi)^(d/2)."""
        g = Grid(2, 16)
        a = self.make_series(g, 2)
        c = 0.3
        b = [(t, comp.copy()) for t, comp in a]
        b[1][1][0] += c
        _, dists, sup = trajectory_distance(a, b)
        assert dists[0] == 0.0
        assert dists[1] == pytest.approx(c * TWO_PI, rel=1e-12)
        assert sup == dists[1]

        ob = [(t, comp.copy()) for t, comp in a]
        ob[2][1][g.d + 1] += c   # pair (0,1) sits right after the diagonal
        _, dists2, _ = trajectory_distance(a, ob)
        assert dists2[2] == pytest.approx(c * math.sqrt(2.0) * TWO_PI,
                                          rel=1e-12)

    def test_time_mismatch_rejected(self):
        g = Grid(2, 16)
        a = self.make_series(g, 3)
        b = self.make_series(g, 3, times=(0.0, 0.5001, 1.0))
        with pytest.raises(ValueError):
            trajectory_distance(a, b)


class TestDiagnosticParams:
    def test_k_cross_domain(self):
        with pytest.raises(ValueError):
            DiagnosticParams(k_cross=0.25)
        with pytest.raises(ValueError):
            DiagnosticParams(k_cross=0.0)
        with pytest.raises(ValueError):
            DiagnosticParams(k_cross=-0.1)

    def test_default_s_tracks_dimension(self):
        assert DiagnosticParams().resolve_s(Grid(2, 16)) == pytest.approx(2.01)
        assert DiagnosticParams().resolve_s(Grid(3, 8)) == pytest.approx(2.51)
        assert DiagnosticParams(s=3.0).resolve_s(Grid(2, 16)) == 3.0

    def test_low_regularity_warning(self):
        msgs = DiagnosticParams(s=1.9).warnings(Grid(2, 16))
        assert any("s" in m for m in msgs)
        assert DiagnosticParams(s=2.5).warnings(Grid(2, 16)) == []
