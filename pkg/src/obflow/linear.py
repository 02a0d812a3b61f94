"""Dispersion analysis of the linearized velocity-stress waves.

Per Fourier mode of magnitude k, the pair (uhat, shat) of velocity and
projected stress-divergence amplitudes obeys

    d/dt (uhat, shat) = A (uhat, shat),   A = [[0, 1], [-k^2/2, -eta k^(2 beta)]],

whose characteristic polynomial is lambda^2 + eta k^(2 beta) lambda + k^2/2.
This module evaluates the two roots with stable arithmetic, the closed-form
matrix exponential (including the defective double-root branch), and decay
envelopes over integer wavenumbers.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np

from .snapshots import atomic_write_text

# Relative discriminant size below which the double-root (Jordan) branch
# of the matrix exponential is used.
CRITICAL_TOL = 1e-10

ArrayLike = Union[complex, np.ndarray]


@dataclass(frozen=True)
class ModeAnalysis:
    """Roots and regime of one wavenumber magnitude."""

    k: float
    eta: float
    beta: float
    damping: float          # eta * k^(2 beta)
    discriminant: float     # damping^2 - 2 k^2
    lambda_plus: complex    # root with the larger real part / +Im branch
    lambda_minus: complex
    regime: str             # "underdamped" | "critical" | "overdamped"


def dispersion_roots(k: float, eta: float, beta: float) -> ModeAnalysis:
    """Solve lambda^2 + eta k^(2 beta) lambda + k^2 / 2 = 0 stably.

    Overdamped roots are computed from the numerically safe root and the
    product identity lambda_+ lambda_- = k^2 / 2, avoiding cancellation.
    """
    if k <= 0:
        raise ValueError(f"wavenumber magnitude must be positive, got {k}")
    if eta <= 0:
        raise ValueError(f"eta must be positive, got {eta}")
    damping = eta * k ** (2.0 * beta)
    disc = damping * damping - 2.0 * k * k
    if abs(disc) < CRITICAL_TOL * damping * damping:
        lam = -0.5 * damping
        return ModeAnalysis(k, eta, beta, damping, disc,
                            complex(lam), complex(lam), "critical")
    if disc < 0:
        re, im = -0.5 * damping, 0.5 * math.sqrt(-disc)
        return ModeAnalysis(k, eta, beta, damping, disc,
                            complex(re, im), complex(re, -im), "underdamped")
    big = -0.5 * (damping + math.sqrt(disc))
    small = (0.5 * k * k) / big
    return ModeAnalysis(k, eta, beta, damping, disc,
                        complex(small), complex(big), "overdamped")


def linear_mode_solution(u0: ArrayLike, s0: ArrayLike, k: float, eta: float,
                         beta: float, t: float) -> Tuple[ArrayLike, ArrayLike]:
    """Exact (uhat, shat) at time t >= 0 from initial amplitudes.

    Accepts scalars or arrays (propagated componentwise).  Near-critical
    discriminants take the Jordan branch exp(lambda t)(I + N t), N nilpotent.
    """
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    u0 = np.asarray(u0, dtype=np.complex128)
    s0 = np.asarray(s0, dtype=np.complex128)
    roots = dispersion_roots(k, eta, beta)
    if roots.regime == "critical":
        lam = roots.lambda_plus
        growth = cmath.exp(lam * t)
        defect = s0 - lam * u0
        u_t = growth * (u0 + t * defect)
        s_t = growth * (s0 + t * lam * defect)
    else:
        lp, lm = roots.lambda_plus, roots.lambda_minus
        c_plus = (s0 - lm * u0) / (lp - lm)
        c_minus = (lp * u0 - s0) / (lp - lm)
        ep, em = cmath.exp(lp * t), cmath.exp(lm * t)
        u_t = c_plus * ep + c_minus * em
        s_t = c_plus * lp * ep + c_minus * lm * em
    if u_t.ndim == 0:
        return complex(u_t), complex(s_t)
    return u_t, s_t


def decay_envelope(eta: float, beta: float, k_max: int) -> List[ModeAnalysis]:
    """Mode analyses for integer wavenumbers 1 .. k_max."""
    if k_max < 1:
        raise ValueError(f"k_max must be >= 1, got {k_max}")
    return [dispersion_roots(float(k), eta, beta) for k in range(1, k_max + 1)]


def dispersion_csv(rows: Sequence[ModeAnalysis]) -> str:
    """CSV text of a mode table (one row per wavenumber)."""
    lines = ["k,re_lambda_plus,im_lambda_plus,re_lambda_minus,im_lambda_minus,regime"]
    for row in rows:
        lines.append(",".join([
            repr(float(row.k)),
            repr(row.lambda_plus.real), repr(row.lambda_plus.imag),
            repr(row.lambda_minus.real), repr(row.lambda_minus.imag),
            row.regime,
        ]))
    return "\n".join(lines) + "\n"


def write_dispersion_csv(path, rows: Sequence[ModeAnalysis]) -> None:
    atomic_write_text(path, dispersion_csv(rows))
