"""Derivative cocycle of the magnetic flow in the frame {X, X_perp, V, V_perp}.

Writing dPhi_t(Z) = a X + b X_perp + c V + d V_perp along the orbit, the
frame commutators give the linear system

    a' = -B b + d,   b' = B a + c,   c' = lam^2 b,   d' = 0,

so b'' = -(B^2 - lam^2) b + B d.  With s = B^2 - lam^2 every solution is a
combination of the entire functions

    C(t) = sum (-s)^j t^(2j)   / (2j)!     (cos / 1 / cosh)
    S(t) = sum (-s)^j t^(2j+1) / (2j+1)!
    P2(t) = sum (-s)^j t^(2j+2) / (2j+2)!  = (1 - C)/s
    P3(t) = sum (-s)^j t^(2j+3) / (2j+3)!  = (t - S)/s

which are evaluated by power series when |s| t^2 is small, so the three
regimes join continuously at lam = B.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from magflow.errors import RegimeError, StepOverflowError
from magflow.flows import Regime

BRANCH_TOL = 1e-6
SERIES_LIMIT = 1.0
# growth_check passes when the envelope fitted at t = 1 is exceeded by at most this factor
GROWTH_SLACK = 4.0


@dataclass(frozen=True)
class VariationalState:
    a: float
    b: float
    c: float
    d: float
    init: tuple
    lam: float
    B: float
    t: float

    @property
    def regime(self) -> Regime:
        if abs(self.lam - self.B) < BRANCH_TOL:
            return Regime.PARABOLIC
        return Regime.ELLIPTIC if self.lam < self.B else Regime.HYPERBOLIC

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c, self.d])


@dataclass(frozen=True)
class GrowthBound:
    n: int
    m_n: int
    rate: float


def growth_exponent(n: int) -> int:
    """m_n from m_0 = 0, m_{n+1} = m_n + 3 + n."""
    m = 0
    for j in range(n):
        m += 3 + j
    return m


def growth_bound(n: int, E: float, B: float) -> GrowthBound:
    E_c = B * B / 2
    return GrowthBound(n, growth_exponent(n), math.sqrt(2) * math.sqrt(max(E - E_c, 0.0)) * n)


def _series(s: float, t: np.ndarray, offset: int, terms: int = 30) -> np.ndarray:
    x = -s * t * t
    term = t**offset / math.factorial(offset)
    total = term.copy()
    for j in range(1, terms):
        term = term * x / ((offset + 2 * j - 1) * (offset + 2 * j))
        total = total + term
    return total


def basis_functions(s: float, t):
    """(C, S, P2, P3) at times t for b'' = -s b."""
    t = np.asarray(t, dtype=float)
    if abs(s) * float(np.max(t * t, initial=0.0)) <= SERIES_LIMIT:
        return tuple(_series(s, t, k) for k in range(4))
    if s > 0:
        w = math.sqrt(s)
        C = np.cos(w * t)
        S = np.sin(w * t) / w
    else:
        w = math.sqrt(-s)
        C = np.cosh(w * t)
        S = np.sinh(w * t) / w
    P2 = (1 - C) / s
    P3 = (t - S) / s
    small = np.abs(s) * t * t <= SERIES_LIMIT
    if np.any(small):
        ts = t[small]
        C[small], S[small], P2[small], P3[small] = (_series(s, ts, k) for k in range(4))
    return C, S, P2, P3


def closed_form_arrays(init, lam: float, B: float, t):
    a0, b0, c0, d0 = (float(x) for x in init)
    s = B * B - lam * lam
    C, S, P2, P3 = basis_functions(s, t)
    kick = B * a0 + c0
    b = B * d0 * P2 + b0 * C + kick * S
    int_b = B * d0 * P3 + b0 * S + kick * P2
    a = a0 + np.asarray(t) * d0 - B * int_b
    c = c0 + lam * lam * int_b
    d = np.full_like(b, d0)
    return a, b, c, d


def closed_form(init, lam: float, B: float, t: float) -> VariationalState:
    if lam < 0:
        raise ValueError("speed must be non-negative")
    a, b, c, d = closed_form_arrays(init, lam, B, np.array([t]))
    return VariationalState(float(a[0]), float(b[0]), float(c[0]), float(d[0]),
                            tuple(float(x) for x in init), lam, B, t)


def propagator(lam: float, B: float, t) -> np.ndarray:
    """4x4 matrices P(t) with (a,b,c,d)(t) = P(t) (a,b,c,d)(0); shape (len(t), 4, 4)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty(t.shape + (4, 4))
    for j, e in enumerate(np.eye(4)):
        cols = closed_form_arrays(e, lam, B, t)
        for i in range(4):
            out[:, i, j] = cols[i]
    return out


def _rhs(y, lam, B):
    a, b, bd, c, d = y
    return np.array([-B * b + d, bd, -(B * B - lam * lam) * b + B * d, lam * lam * b,
                     np.zeros_like(d)])


def ode_oracle(init, lam, B, t, dt: float = 1e-3,
               max_steps: int = 10**7) -> VariationalState:
    """Classical RK4 on (a, b, b', c, d) with b'(0) = B a0 + c0.

    ``init`` entries, ``lam``, ``B`` and ``t`` may be arrays; cases are then
    integrated side by side with a common step count, each with its own
    step t_i / n <= dt.
    """
    if dt > 1e-2:
        raise ValueError("dt must be <= 1e-2")
    t_arr = np.asarray(t, dtype=float)
    n = max(1, math.ceil(float(np.max(np.abs(t_arr))) / dt - 1e-9))
    if n > max_steps:
        raise StepOverflowError(f"{n} steps exceed max_steps={max_steps}")
    h = t_arr / n
    lam_arr = np.asarray(lam, dtype=float)
    B = np.asarray(B, dtype=float)
    a0, b0, c0, d0 = (np.asarray(x, dtype=float) for x in init)
    y = np.array(np.broadcast_arrays(a0, b0, B * a0 + c0, c0, d0, h), dtype=float)[:5]
    for _ in range(n):
        k1 = _rhs(y, lam_arr, B)
        k2 = _rhs(y + h / 2 * k1, lam_arr, B)
        k3 = _rhs(y + h / 2 * k2, lam_arr, B)
        k4 = _rhs(y + h * k3, lam_arr, B)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    a, b, _, c, d = y
    if np.ndim(a) == 0:
        return VariationalState(float(a), float(b), float(c), float(d),
                                tuple(float(x) for x in init), float(lam), float(B), float(t))
    return VariationalState(a, b, c, d, tuple(init), lam, B, t)


def lyapunov_estimate(lam: float, B: float, T: float, n_grid: int = 200) -> float:
    """Slope of log|(a,b,c,d)(t)| over [T/2, T] from the initial data (1,1,1,1)."""
    if lam <= B + BRANCH_TOL:
        raise RegimeError("Lyapunov growth needs lam > B")
    if T < 20:
        raise ValueError("T must be at least 20")
    t = np.linspace(T / 2, T, n_grid)
    vec = np.array(closed_form_arrays((1, 1, 1, 1), lam, B, t))
    slope, _ = np.polyfit(t, np.log(np.linalg.norm(vec, axis=0)), 1)
    return float(slope)


@dataclass
class GrowthReport:
    lam: float
    B: float
    rate: float
    constant: float
    t: np.ndarray
    norms: np.ndarray
    ratios: np.ndarray  # norm / (C <t>^3 e^{rate t}); 1 at t = 1 by construction

    @property
    def max_ratio(self) -> float:
        return float(np.max(self.ratios))

    @property
    def bounded(self) -> bool:
        return self.max_ratio <= GROWTH_SLACK


def growth_check(lam: float, B: float, t_grid) -> GrowthReport:
    """Compare sup over unit initial data of |(a,b,c,d)(t)| with <t>^3 e^{rate t}.

    The sup is the spectral norm of the propagator. The constant is fixed by
    the value at t = 1; ``max_ratio`` reports how far the rest of the grid
    exceeds it.
    """
    rate = math.sqrt(max(lam * lam - B * B, 0.0))
    t = np.asarray(t_grid, dtype=float)
    envelope = lambda tt: (1 + tt * tt) ** 1.5 * np.exp(rate * tt)  # noqa: E731
    norms = np.linalg.norm(propagator(lam, B, t), ord=2, axis=(1, 2))
    c1 = float(np.linalg.norm(propagator(lam, B, [1.0])[0], ord=2) / envelope(1.0))
    return GrowthReport(lam, B, rate, c1, t, norms, norms / (c1 * envelope(t)))


def state_rows(init, lam: float, B: float, t_grid):
    """CSV rows t, a, b, c, d, bound_ratio for one initial condition."""
    t = np.asarray(t_grid, dtype=float)
    a, b, c, d = closed_form_arrays(init, lam, B, t)
    rep = growth_check(lam, B, t)
    scale = rep.constant * (1 + t * t) ** 1.5 * np.exp(rep.rate * t)
    nrm = np.sqrt(a * a + b * b + c * c + d * d) / max(np.linalg.norm(init), 1e-300)
    for j in range(len(t)):
        yield float(t[j]), float(a[j]), float(b[j]), float(c[j]), float(d[j]), float(nrm[j] / scale[j])
