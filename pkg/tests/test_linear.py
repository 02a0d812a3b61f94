"""Dispersion relation and exact mode propagator for the damped wave pair."""

import math

import numpy as np
import pytest
import scipy.linalg

from obflow.linear import (
    decay_envelope,
    dispersion_csv,
    dispersion_roots,
    linear_mode_solution,
)

SQRT2 = math.sqrt(2.0)


def companion(k, eta, beta):
    """The per-mode system matrix d/dt (u, s) = A (u, s)."""
    return np.array([[0.0, 1.0],
                     [-0.5 * k * k, -eta * k ** (2.0 * beta)]])


class TestDispersionRoots:
    def test_overdamped_frozen_case(self):
        """eta=2, beta=1, k=1: lambda^2 + 2 lambda + 1/2 = 0 has roots
        -1 +- sqrt(2)/2."""
        r = dispersion_roots(1.0, 2.0, 1.0)
        assert r.regime == "overdamped"
        assert r.lambda_plus == pytest.approx(-1.0 + SQRT2 / 2.0, rel=1e-14)
        assert r.lambda_minus == pytest.approx(-1.0 - SQRT2 / 2.0, rel=1e-14)
        assert r.discriminant == pytest.approx(2.0, rel=1e-14)

    def test_underdamped_frozen_case(self):
        """eta=0.2, beta=1/2, k=1: roots -0.1 +- 0.7i."""
        r = dispersion_roots(1.0, 0.2, 0.5)
        assert r.regime == "underdamped"
        assert r.lambda_plus == pytest.approx(-0.1 + 0.7j, rel=1e-14)
        assert r.lambda_minus == pytest.approx(-0.1 - 0.7j, rel=1e-14)
        assert r.discriminant == pytest.approx(-1.96, rel=1e-14)

    def test_critical_case(self):
        """damping^2 = 2 k^2 collapses both roots onto -damping/2."""
        r = dispersion_roots(1.0, SQRT2, 0.75)
        assert r.regime == "critical"
        assert r.lambda_plus == pytest.approx(-SQRT2 / 2.0, rel=1e-12)
        assert r.lambda_plus == r.lambda_minus

    def test_vieta_relations(self):
        """Root sum = -eta k^(2 beta), root product = k^2 / 2.

        The product form matters: the naive quadratic formula loses the
        slow root to cancellation at large k, the implementation must not.
        """
        rng = np.random.default_rng(7)
        for _ in range(200):
            k = float(rng.uniform(0.5, 64.0))
            eta = float(rng.uniform(0.05, 5.0))
            beta = float(rng.uniform(0.25, 1.25))
            r = dispersion_roots(k, eta, beta)
            s = r.lambda_plus + r.lambda_minus
            p = r.lambda_plus * r.lambda_minus
            assert s.real == pytest.approx(-eta * k ** (2 * beta), rel=1e-12)
            assert abs(s.imag) < 1e-12 * max(1.0, abs(s.real))
            assert p.real == pytest.approx(0.5 * k * k, rel=1e-12)
            assert abs(p.imag) < 1e-12 * p.real

    def test_all_roots_decay(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            r = dispersion_roots(float(rng.uniform(0.5, 32.0)),
                                 float(rng.uniform(0.01, 4.0)),
                                 float(rng.uniform(0.25, 1.0)))
            assert r.lambda_plus.real < 0.0
            assert r.lambda_minus.real < 0.0

    def test_underdamped_frequency_formula(self):
        """k=4, eta=0.2, beta=1/2: Im = sqrt(k^2/2 - damping^2/4) = 2.8."""
        r = dispersion_roots(4.0, 0.2, 0.5)
        assert r.lambda_plus.imag == pytest.approx(2.8, rel=1e-13)

    def test_validation(self):
        with pytest.raises(ValueError):
            dispersion_roots(0.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            dispersion_roots(1.0, -1.0, 1.0)


class TestModeSolution:
    def test_matches_matrix_exponential(self):
        """Closed-form propagation equals expm(A t) across all regimes."""
        cases = [(1.0, 2.0, 1.0),     # overdamped
                 (1.0, 0.2, 0.5),     # underdamped
                 (1.0, SQRT2, 1.0),   # critical (Jordan block)
                 (16.0, 1.0, 1.0),    # stiff, large k
                 (3.0, 0.05, 0.75)]
        for k, eta, beta in cases:
            a_mat = companion(k, eta, beta)
            y0 = np.array([0.3 - 0.2j, -1.1 + 0.7j])
            for t in (0.0, 0.1, 1.0, 5.0):
                u, s = linear_mode_solution(y0[0], y0[1], k, eta, beta, t)
                ref = scipy.linalg.expm(a_mat * t) @ y0
                assert u == pytest.approx(ref[0], rel=1e-11, abs=1e-13)
                assert s == pytest.approx(ref[1], rel=1e-11, abs=1e-13)

    def test_near_critical_stability(self):
        """A discriminant within roundoff of zero must not blow up the
        eigenvector formulas; compare against expm just off the switch."""
        k = 1.0
        for eta in (SQRT2 * (1.0 + 3e-11), SQRT2 * (1.0 - 3e-11), SQRT2):
            a_mat = companion(k, eta, 1.0)
            u, s = linear_mode_solution(1.0, 0.5, k, eta, 1.0, 2.0)
            ref = scipy.linalg.expm(a_mat * 2.0) @ np.array([1.0, 0.5])
            assert u == pytest.approx(ref[0], rel=1e-9)
            assert s == pytest.approx(ref[1], rel=1e-9)

    def test_fine_step_ode_oracle(self):
        """Classic RK4 at dt=1e-5 on the raw ODE reproduces the closed
        form to ~1e-10, confirming it solves the right equation."""
        k, eta, beta, t_end = 1.0, 2.0, 1.0, 1.0
        a_mat = companion(k, eta, beta)
        y = np.array([1.0 + 0.0j, -0.25 + 0.5j])
        dt = 1e-5
        for _ in range(int(round(t_end / dt))):
            k1 = a_mat @ y
            k2 = a_mat @ (y + 0.5 * dt * k1)
            k3 = a_mat @ (y + 0.5 * dt * k2)
            k4 = a_mat @ (y + dt * k3)
            y = y + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        u, s = linear_mode_solution(1.0 + 0.0j, -0.25 + 0.5j, k, eta, beta,
                                    t_end)
        assert abs(u - y[0]) < 1e-10
        assert abs(s - y[1]) < 1e-10

    def test_semigroup_property(self):
        k, eta, beta = 2.0, 0.5, 0.75
        u0, s0 = 0.4 + 0.1j, -0.3 + 0.9j
        u1, s1 = linear_mode_solution(u0, s0, k, eta, beta, 0.7)
        u2, s2 = linear_mode_solution(u1, s1, k, eta, beta, 0.5)
        u12, s12 = linear_mode_solution(u0, s0, k, eta, beta, 1.2)
        assert u2 == pytest.approx(u12, rel=1e-12)
        assert s2 == pytest.approx(s12, rel=1e-12)

    def test_array_amplitudes(self):
        u0 = np.array([1.0 + 0j, 2.0 - 1j])
        s0 = np.array([0.0 + 0j, 1.0 + 1j])
        u, s = linear_mode_solution(u0, s0, 1.0, 2.0, 1.0, 0.5)
        assert u.shape == (2,)
        for i in range(2):
            ui, si = linear_mode_solution(u0[i], s0[i], 1.0, 2.0, 1.0, 0.5)
            assert u[i] == pytest.approx(ui, rel=1e-14)
            assert s[i] == pytest.approx(si, rel=1e-14)

    def test_zero_time_is_identity(self):
        u, s = linear_mode_solution(0.3 + 1j, -2.0 + 0j, 5.0, 0.7, 0.5, 0.0)
        assert u == pytest.approx(0.3 + 1j, rel=1e-15)
        assert s == pytest.approx(-2.0, rel=1e-15)


class TestEnvelope:
    def test_slow_root_asymptote(self):
        """For beta=1 the slow root tends to -1/(2 eta) as k grows."""
        rows = decay_envelope(1.0, 1.0, 64)
        tail = rows[-1]
        assert tail.k == 64.0
        assert tail.lambda_plus.real == pytest.approx(-0.5, rel=0.05)

    def test_rows_cover_integer_wavenumbers(self):
        rows = decay_envelope(0.5, 0.75, 8)
        assert [r.k for r in rows] == [float(k) for k in range(1, 9)]

    def test_csv_shape_and_round_trip(self):
        rows = decay_envelope(2.0, 1.0, 4)
        text = dispersion_csv(rows)
        lines = text.strip().split("\n")
        assert lines[0] == ("k,re_lambda_plus,im_lambda_plus,"
                            "re_lambda_minus,im_lambda_minus,regime")
        assert len(lines) == 5
        first = lines[1].split(",")
        assert float(first[0]) == 1.0
        assert float(first[1]) == pytest.approx(-1.0 + SQRT2 / 2.0,
                                                rel=1e-15)
