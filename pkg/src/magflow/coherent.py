"""Laguerre polynomials and the Gaussian radial profile of lowest-level states.

Two scalings of the leading profile are provided:

* ``PAPER``:     (k / 2 pi) exp(-k r^2 / 4) Q_m(k r^2)
* ``UNIT_NORM``: (k / 2 pi) exp(-k r^2 / 4) Q_m(k r^2 / 2)

They coincide for m = 0. Only the second has squared mass k / 2 pi for
every m (Laguerre orthonormality); the first gives 5k / 2 pi at m = 1.
Reports always carry the convention name.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import integrate

MAX_DEGREE = 64


class Convention(str, enum.Enum):
    PAPER = "PaperScaling"
    UNIT_NORM = "UnitNormScaling"


@dataclass(frozen=True)
class LaguerreQ:
    """Q_m(t) = (1/m!) (d/dt - 1)^m t^m, with exact rational coefficients (ascending)."""

    m: int
    coefficients: tuple

    def __call__(self, t):
        return evaluate(self, t)

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1


@lru_cache(maxsize=None)
def _coefficients(m: int) -> tuple:
    # (n+1) L_{n+1} = (2n+1-t) L_n - n L_{n-1}
    prev = [Fraction(1)]
    if m == 0:
        return tuple(prev)
    cur = [Fraction(1), Fraction(-1)]
    for n in range(1, m):
        nxt = [Fraction(0)] * (n + 2)
        for i, c in enumerate(cur):
            nxt[i] += (2 * n + 1) * c
            nxt[i + 1] -= c
        for i, c in enumerate(prev):
            nxt[i] -= n * c
        prev, cur = cur, [c / (n + 1) for c in nxt]
    return tuple(cur)


def laguerre_q(m: int) -> LaguerreQ:
    if m < 0:
        raise ValueError("degree must be non-negative")
    if m > MAX_DEGREE:
        raise OverflowError(f"rational Laguerre coefficients capped at degree {MAX_DEGREE}")
    return LaguerreQ(m, _coefficients(m))


def laguerre_by_operator(m: int) -> tuple:
    """Coefficients of (1/m!)(d/dt - 1)^m t^m by applying the operator m times."""
    poly = [Fraction(0)] * m + [Fraction(1)]
    for _ in range(m):
        deriv = [i * poly[i] for i in range(1, len(poly))] + [Fraction(0)]
        poly = [d - c for d, c in zip(deriv, poly)]
    fact = math.factorial(m)
    return tuple(c / fact for c in poly)


def evaluate(q: LaguerreQ, t):
    """Horner evaluation in floating point (exact if t is a Fraction)."""
    if isinstance(t, Fraction):
        acc = Fraction(0)
        for c in reversed(q.coefficients):
            acc = acc * t + c
        return acc
    t = np.asarray(t, dtype=float)
    acc = np.zeros_like(t)
    for c in reversed(q.coefficients):
        acc = acc * t + float(c)
    return acc if acc.ndim else float(acc)


def positive_root_count(m: int) -> int:
    """Number of sign changes of Q_m on a fine grid covering all its roots."""
    if m == 0:
        return 0
    q = laguerre_q(m)
    # roots of L_m lie below 4m + 2
    t = np.linspace(1e-9, 4 * m + 4, 20000 * m)
    v = evaluate(q, t)
    return int(np.count_nonzero(np.signbit(v[1:]) != np.signbit(v[:-1])))


def profile(k: float, m: int, r, convention: Convention = Convention.PAPER):
    """Leading radial amplitude of the level-m localized state on L^k."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("r must be non-negative")
    convention = Convention(convention)
    arg = k * r * r if convention is Convention.PAPER else k * r * r / 2
    return k / (2 * math.pi) * np.exp(-k * r * r / 4) * evaluate(laguerre_q(m), arg)


def mass(k: float, m: int, convention: Convention) -> float:
    """2 pi * int_0^inf |profile|^2 r dr by adaptive quadrature."""

    # substitute u = k r^2 / 2, so r dr = du / k
    def integrand(u):
        r = math.sqrt(2 * u / k)
        return float(profile(k, m, r, convention)) ** 2 / k

    val, err = integrate.quad(integrand, 0, np.inf, epsabs=1e-13, epsrel=1e-13, limit=400)
    if not math.isfinite(val) or err > 1e-9 * max(1.0, abs(val)):
        raise ArithmeticError(f"quadrature did not converge (err={err})")
    return 2 * math.pi * val


@dataclass(frozen=True)
class NormDiagnostic:
    k: float
    m: int
    paper_mass: float
    unit_mass: float
    target: float  # k / 2 pi

    @property
    def paper_ratio(self) -> float:
        return self.paper_mass / self.target

    @property
    def unit_ratio(self) -> float:
        return self.unit_mass / self.target

    @property
    def flagged(self) -> bool:
        """True when PaperScaling misses k / 2 pi."""
        return abs(self.paper_ratio - 1) > 1e-6

    def as_dict(self) -> dict:
        return {
            "k": self.k, "m": self.m,
            "paper_scaling_mass": self.paper_mass, "unit_scaling_mass": self.unit_mass,
            "target": self.target, "paper_ratio": self.paper_ratio,
            "unit_ratio": self.unit_ratio, "flagged": self.flagged,
        }


def norm_diagnostic(k: float, m: int) -> NormDiagnostic:
    if k < 4:
        raise ValueError("k must be at least 4")
    return NormDiagnostic(k, m, mass(k, m, Convention.PAPER), mass(k, m, Convention.UNIT_NORM),
                          k / (2 * math.pi))


def profile_rows(k: float, m: int, r_grid, convention: Convention):
    amp = profile(k, m, r_grid, convention)
    for r, a in zip(np.asarray(r_grid, dtype=float), np.atleast_1d(amp)):
        yield float(r), float(a), Convention(convention).value
