"""Landau levels of the magnetic Laplacian on L^k and their exact identities.

With 2B(g-1) integral, kB is rational and every quantity below is a
rational number (square roots included, since their arguments are perfect
squares).  The exact path keeps ``fractions.Fraction`` until the final
conversion to float; ``exact=False`` runs the same formulas in floating
point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from magflow.errors import RangeError
from magflow.fuchsian import degree


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(x).limit_denominator(10**9)


def _sqrt(x):
    """Square root; exact when x is a Fraction that is a perfect square."""
    if isinstance(x, Fraction):
        if x < 0:
            raise ValueError(f"negative argument {x}")
        p, q = x.numerator, x.denominator
        rp, rq = math.isqrt(p), math.isqrt(q)
        if rp * rp == p and rq * rq == q:
            return Fraction(rp, rq)
        return math.sqrt(float(x))
    if isinstance(x, np.ndarray):
        return np.sqrt(np.maximum(x, 0.0))
    return math.sqrt(max(x, 0.0))


@dataclass(frozen=True)
class LandauLevel:
    k: int
    m: int
    value: float
    scaled: float
    multiplicity: Optional[int]


@dataclass(frozen=True)
class QuantizationMaps:
    """beta(s) = B s - s^2/2 and its inverse alpha, plus the shifted inverse f_k."""

    B: float

    def beta(self, s):
        return self.B * s - s * s / 2

    def alpha(self, y):
        return self.B - _sqrt(self.B * self.B - 2 * y)

    def alpha_prime(self, y):
        # the period T_E of the closed magnetic orbits at energy y
        return 1 / _sqrt(self.B * self.B - 2 * y)

    def f(self, k: int, s):
        if isinstance(self.B, Fraction):
            return self.B - Fraction(1, 2 * k) - _sqrt(self.B * self.B - 2 * s + Fraction(1, 4 * k * k))
        return self.B - 0.5 / k - _sqrt(self.B * self.B - 2 * s + 0.25 / (k * k))


def level_value(k: int, B, m: int, exact: bool = True):
    """lambda_{k,m} = kB (m + 1/2) - m(m+1)/2."""
    if exact:
        return k * _frac(B) * (m + Fraction(1, 2)) - Fraction(m * (m + 1), 2)
    return k * float(B) * (m + 0.5) - m * (m + 1) / 2


def n_levels(k: int, B) -> int:
    """floor(kB), computed exactly."""
    return math.floor(k * _frac(B))


def landau_levels(k: int, B, genus: int, exact: bool = True) -> list[LandauLevel]:
    """All levels m < floor(kB); multiplicity is None where it is not known (m = N-1)."""
    degree(float(B), genus)
    n = n_levels(k, B)
    b = _frac(B)
    p, q = b.numerator, b.denominator
    out = []
    for m in range(n):
        if exact:
            # lambda = (k p (2m+1) - q m (m+1)) / 2q, rounded once
            num = k * p * (2 * m + 1) - q * m * (m + 1)
            v, scaled = num / (2 * q), num / (2 * q * k * k)
        else:
            v = level_value(k, B, m, exact=False)
            scaled = v / (k * k)
        mult = None
        if m <= n - 2:
            # 2(g-1)(kB - 1/2 - m) = (g-1)(2kp - q - 2mq) / q
            mult = (genus - 1) * (2 * k * p - q - 2 * m * q) // q
        out.append(LandauLevel(k, m, float(v), float(scaled), mult))
    return out


def _weinstein_exact(k: int, B):
    """Integer-numerator form of both identities.

    With B = p/q every quantity shares the denominator 4 q k^2:
    lambda_{k,m} = N_m / (4q), N_m = 2kp(2m+1) - 2q m(m+1), and the
    square-root argument of f_k is R_m / (2kq)^2 with R_m a perfect square.
    """
    b = _frac(B)
    p, q = b.numerator, b.denominator
    out = []
    for m in range(n_levels(k, B)):
        n_m = 2 * k * p * (2 * m + 1) - 2 * q * m * (m + 1)
        r_m = 4 * k * k * p * p - 2 * q * n_m + q * q
        root = math.isqrt(r_m)
        if root * root != r_m:
            raise ArithmeticError(f"square-root argument not a perfect square at m={m}")
        # f_k(s) - m/k, over 2kq
        r1 = Fraction(2 * k * p - q - root - 2 * m * q, 2 * k * q)
        # s - [B(a + 1/2k) - a(a + 1/k)/2], over 4 q k^2
        r2 = Fraction(n_m - 2 * k * p * (2 * m + 1) + 2 * q * m * (m + 1), 4 * q * k * k)
        out.append((abs(float(r1)), abs(float(r2))))
    return out


def weinstein_residuals(k: int, B, exact: bool = True):
    """Per-level (|f_k(lambda/k^2) - m/k|, |lambda/k^2 - relation(m/k)|)."""
    if exact:
        return _weinstein_exact(k, B)
    maps = QuantizationMaps(float(B))
    out = []
    for m in range(n_levels(k, B)):
        s = level_value(k, B, m, exact=False) / (k * k)
        a = m / k
        r1 = maps.f(k, s) - a
        r2 = s - (maps.B * (a + 0.5 / k) - a * (a + 1 / k) / 2)
        out.append((abs(float(r1)), abs(float(r2))))
    return out


def weinstein_check(k: int, B, exact: bool = True) -> float:
    """Max residual of the two averaging-operator identities over all levels."""
    res = weinstein_residuals(k, B, exact)
    return max((max(r) for r in res), default=0.0)


@dataclass(frozen=True)
class GapReport:
    spacing: float
    inverse_period: float
    residual: float


def bohr_sommerfeld_gap(k: int, B, m: int, exact: bool = True) -> GapReport:
    """Scaled level spacing against the inverse classical period at energy beta(m/k)."""
    n = n_levels(k, B)
    if not 0 <= m or m + 1 >= n:
        raise IndexError(f"need m+1 < floor(kB) = {n}, got m = {m}")
    if not exact:
        spacing = (level_value(k, B, m + 1, False) - level_value(k, B, m, False)) / k
        maps = QuantizationMaps(float(B))
        inv = _sqrt(maps.B * maps.B - 2 * maps.beta(m / k))
        return GapReport(spacing, inv, inv - spacing)
    b = _frac(B)
    p, q = b.numerator, b.denominator
    # level difference lambda_{m+1} - lambda_m = kB - (m+1), over q
    spacing_num = k * p - (m + 1) * q
    # B^2 - 2 beta(m/k) = (k^2 p^2 - 2 k p q m + q^2 m^2) / (q k)^2
    r = k * k * p * p - 2 * k * p * q * m + q * q * m * m
    root = math.isqrt(r)
    if root * root != r:
        raise ArithmeticError("inverse-period argument is not a perfect square")
    den = q * k
    return GapReport(spacing_num / den, root / den, (root - spacing_num) / den)


@dataclass(frozen=True)
class LadderEntry:
    m: int
    h0: int
    closed_form: int

    @property
    def agrees(self) -> bool:
        return self.h0 == self.closed_form


def riemann_roch_ladder(Bk, genus: int, m_max: int) -> list[LadderEntry]:
    """dim ker Box_m = (Bk - m) 2(g-1) + 1 - g for m <= m_max, next to 2(g-1)(Bk - 1/2 - m)."""
    bk = _frac(Bk)
    p, q = bk.numerator, bk.denominator
    out = []
    for m in range(m_max + 1):
        if p - m * q < 2 * q:
            raise RangeError(f"Riemann-Roch count needs Bk - m >= 2 (Bk={bk}, m={m})")
        # over q: h0 = 2(g-1)(p - mq) + (1-g) q, closed = (g-1)(2p - q - 2mq)
        h0 = 2 * (genus - 1) * (p - m * q) + (1 - genus) * q
        closed = (genus - 1) * (2 * p - q - 2 * m * q)
        if h0 % q or closed % q:
            raise RangeError(f"non-integral dimension at m={m}: {h0}/{q}, {closed}/{q}")
        out.append(LadderEntry(m, h0 // q, closed // q))
    return out


def critical_approach(B, k_list) -> list[tuple[int, float]]:
    """Scaled top Landau level k^-2 lambda_{k, floor(kB)-1} for each k."""
    out = []
    for k in k_list:
        n = n_levels(k, B)
        if n < 1:
            raise ValueError(f"no Landau level for k={k}, B={B}")
        out.append((k, float(level_value(k, B, n - 1) / (k * k))))
    return out


def canonical_tail_statement(r: int) -> str:
    """For L = K^r the spectrum above the first r levels is lambda_r + mu_n / 2.

    mu_n is the Laplace-Beltrami spectrum of the surface, which is not
    computed here; the statement is returned as text.
    """
    lam_r = level_value(1, r, r) if r >= 1 else None
    return f"lambda_{{{r}+n}} = {lam_r} + mu_n/2  (mu_n: Laplace-Beltrami eigenvalues)"


def level_rows(k: int, B, genus: int, exact: bool = True):
    for lv in landau_levels(k, B, genus, exact):
        yield lv.k, lv.m, lv.value, lv.scaled, lv.multiplicity
