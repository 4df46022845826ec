import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from magflow.errors import IntegralityError, RangeError
from magflow.spectrum import (
    QuantizationMaps,
    bohr_sommerfeld_gap,
    canonical_tail_statement,
    critical_approach,
    landau_levels,
    level_rows,
    level_value,
    n_levels,
    riemann_roch_ladder,
    weinstein_check,
    weinstein_residuals,
)

HALF = Fraction(1, 2)


def test_landau_level_examples():
    lv = landau_levels(4, HALF, 2)
    assert [x.value for x in lv] == [1.0, 2.0]
    assert landau_levels(10, HALF, 2)[0].multiplicity == 9
    assert landau_levels(1, HALF, 2) == []
    assert landau_levels(10, HALF, 2)[-1].multiplicity is None
    with pytest.raises(IntegralityError):
        landau_levels(10, 0.3, 2)


def test_float_and_exact_levels_agree():
    for k, B in [(7, 1.5), (33, 0.5), (100, 1)]:
        ex = landau_levels(k, B, 2, exact=True)
        fl = landau_levels(k, B, 2, exact=False)
        for a, b in zip(ex, fl):
            assert a.value == pytest.approx(b.value, rel=1e-15)
            assert a.multiplicity == b.multiplicity


@pytest.mark.parametrize("B", [HALF, Fraction(1), Fraction(3, 2)])
def test_levels_monotone_and_multiplicities_positive(B):
    for k in range(1, 201):
        lv = landau_levels(k, B, 2)
        vals = [x.value for x in lv]
        assert all(b > a for a, b in zip(vals, vals[1:]))
        n = n_levels(k, B)
        for x in lv:
            if x.m <= n - 2:
                assert x.multiplicity > 0
                assert x.multiplicity == 2 * (k * B - HALF - x.m)


def test_level_value_exact():
    assert level_value(10, 1, 9) == 50
    assert level_value(4, HALF, 1) == 2
    assert level_value(4, 0.5, 1, exact=False) == 2.0


def test_quantization_map_inverses():
    for B in (0.5, 1.0, 1.5):
        q = QuantizationMaps(B)
        s = np.linspace(0, B, 1000)
        assert np.max(np.abs(q.alpha(q.beta(s)) - s)) <= 1e-12 * max(1.0, B)
        y = np.linspace(0, B * B / 2, 1000)
        assert np.max(np.abs(q.beta(q.alpha(y)) - y)) <= 1e-12


def test_alpha_prime_is_the_period():
    B = 1.0
    q = QuantizationMaps(B)
    E = np.linspace(0, B * B / 2 - 1e-6, 1000)
    assert np.max(np.abs(q.alpha_prime(E) * np.sqrt(B * B - 2 * E) - 1)) <= 1e-12
    h = 1e-6
    for e in (0.1, 0.3):
        fd = (q.alpha(e + h) - q.alpha(e - h)) / (2 * h)
        assert abs(fd - q.alpha_prime(e)) < 1e-8


def test_weinstein_examples():
    assert weinstein_check(4, HALF) <= 1e-12
    assert weinstein_check(4, 0.5, exact=False) <= 1e-12
    assert weinstein_check(100, 1) <= 1e-11
    assert weinstein_check(100, 1, exact=False) <= 1e-11
    for k in (3, 17, 60):
        assert weinstein_residuals(k, 1)[0] == (0.0, 0.0)


def test_weinstein_against_independent_fraction_evaluation():
    # evaluate f_k directly with Fractions; the square root is exact here
    for k, B in [(9, Fraction(3, 2)), (20, HALF)]:
        q = QuantizationMaps(B)
        for m in range(n_levels(k, B)):
            s = level_value(k, B, m) / (k * k)
            assert q.f(k, s) == Fraction(m, k)


def test_bohr_sommerfeld_examples():
    gap = bohr_sommerfeld_gap(10, 1, 3)
    assert gap.spacing == pytest.approx(0.6, abs=1e-15)
    assert gap.inverse_period == pytest.approx(0.7, abs=1e-15)
    assert gap.residual == pytest.approx(0.1, abs=1e-13)
    with pytest.raises(IndexError):
        bohr_sommerfeld_gap(10, 1, 9)


@given(st.integers(1, 20), st.integers(1, 20))
def test_bohr_sommerfeld_residual_grid(k, j):
    B = Fraction(j, 4)
    for m in range(max(n_levels(k, B) - 1, 0)):
        assert abs(bohr_sommerfeld_gap(k, B, m).residual * k - 1) <= 1e-10
        assert abs(bohr_sommerfeld_gap(k, float(B), m, exact=False).residual * k - 1) <= 1e-10


def test_riemann_roch_examples():
    ladder = riemann_roch_ladder(5, 2, 3)
    assert ladder[0].h0 == 9 and ladder[0].closed_form == 9
    assert ladder[3].h0 == 3 and ladder[3].agrees
    with pytest.raises(RangeError):
        riemann_roch_ladder(5, 2, 4)


def test_ladder_matches_levels():
    for k in range(4, 120):
        for B in (HALF, Fraction(1), Fraction(3, 2)):
            bk = k * B
            if bk < 2:
                continue
            lad = riemann_roch_ladder(bk, 2, math.floor(bk) - 2)
            mult = [x.multiplicity for x in landau_levels(k, B, 2)]
            assert all(e.agrees and e.h0 == mult[e.m] for e in lad)


def test_critical_approach():
    assert critical_approach(1, [10]) == [(10, 0.5)]
    (k, v), = critical_approach(HALF, [11])
    assert abs(v - 0.125) <= 0.5 / 11
    seq = critical_approach(HALF, [10, 20, 40, 80])
    gaps = [abs(v - 0.125) for _, v in seq]
    assert all(b <= a for a, b in zip(gaps, gaps[1:]))
    for k, v in critical_approach(HALF, range(2, 200)):
        assert abs(v - 0.125) * k <= 0.5
    with pytest.raises(ValueError):
        critical_approach(HALF, [1])


def test_tail_statement_and_rows():
    assert "mu_n/2" in canonical_tail_statement(1)
    rows = list(level_rows(10, HALF, 2))
    assert len(rows) == 5 and rows[0] == (10, 0, 2.5, 0.025, 9) and rows[-1][-1] is None
