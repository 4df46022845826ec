import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from magflow.errors import RegimeError
from magflow.flows import (
    FramePoint,
    Regime,
    classify,
    flow,
    horocyclic_generator,
    magnetic_generator,
    orbit_csv_rows,
    period_residual,
    trajectory,
)
from magflow.fuchsian import is_reduced
from magflow.sl2 import (
    IDENTITY,
    V,
    X,
    X_PERP,
    AlgebraElement,
    GroupElement,
    bracket,
    distance_mod_sign,
    exp_raw,
    exp_sl2,
    frame_from_disk,
)


def random_point(rng, gamma, params):
    w = 0.5 * math.sqrt(rng.random()) * complex(np.exp(1j * rng.uniform(0, 2 * math.pi)))
    return FramePoint.make(frame_from_disk(w, rng.uniform(0, 2 * math.pi)), params, gamma)


def test_magnetic_generator_examples():
    assert magnetic_generator(1, 0).isclose(X)
    assert magnetic_generator(0, 1).isclose(-V)
    assert np.array_equal(magnetic_generator(0, 1).matrix, [[0, -0.5], [0.5, 0]])
    m = magnetic_generator(1.3, 1.3)
    assert np.allclose(np.linalg.eigvals(m.matrix), 0, atol=1e-7)
    assert m.det == 0
    with pytest.raises(ValueError):
        magnetic_generator(-1, 1)


def test_horocyclic_generator():
    u = horocyclic_generator()
    assert np.array_equal(u.matrix, [[0, -1], [0, 0]])
    assert (bracket(V, X) - V).isclose(u)
    assert u.det == 0 and X_PERP.isclose(bracket(V, X))
    assert distance_mod_sign(exp_sl2(u, 2.5), GroupElement.make(1, -2.5, 0, 1)) == 0


def test_classify_examples():
    p = classify(0, 1)
    assert p.regime is Regime.ELLIPTIC and p.period == 1 and p.orbit_period == 2 * math.pi
    p = classify(0.5 * 1.7**2, 1.7)
    assert p.regime is Regime.PARABOLIC and p.period is None
    with pytest.raises(RegimeError):
        p.orbit_period
    p = classify(1, 1)
    assert p.regime is Regime.HYPERBOLIC and p.rate == 1
    assert p.E_c == 0.5 and abs(p.lam**2 - 2) < 1e-14


@given(st.floats(0, 10), st.floats(0.05, 4))
def test_regime_matches_eigenvalues(E, B):
    p = classify(E, B)
    disc = p.lam**2 - B * B  # eigenvalues are +- sqrt(disc) / 2
    if p.regime is Regime.ELLIPTIC:
        assert disc < 0
    elif p.regime is Regime.HYPERBOLIC:
        assert disc > 0
        assert abs(p.rate - math.sqrt(disc)) <= 1e-12 * max(1, p.rate)
    else:
        assert abs(disc) <= 4e-12
    assert abs(p.lam**2 - 2 * E) <= 1e-14 * max(1, 2 * E)


def test_period_residual_examples():
    assert period_residual(0, 1) <= 1e-10
    assert period_residual(0.3, 1) <= 1e-10
    with pytest.raises(RegimeError):
        period_residual(0.5, 1)
    with pytest.raises(RegimeError):
        period_residual(2.0, 1)


def test_flow_zero_and_semigroup(bolza, rng):
    for E in (0.2, 0.5, 1.3):
        params = classify(E, 1.0)
        for _ in range(10):
            p = random_point(rng, bolza, params)
            assert flow(p, 0.0, bolza).rep == p.rep
            s, t = rng.uniform(-6, 6, 2)
            a = flow(flow(p, s, bolza), t, bolza)
            b = flow(p, s + t, bolza)
            assert distance_mod_sign(a.rep, b.rep) <= 1e-9
            assert is_reduced(b.rep, bolza)


def test_elliptic_periodicity(bolza, rng):
    for _ in range(50):
        B = rng.uniform(0.3, 2.0)
        params = classify(rng.uniform(0, 0.95) * B * B / 2, B)
        p = random_point(rng, bolza, params)
        q = flow(p, params.orbit_period, bolza)
        assert distance_mod_sign(p.rep, q.rep) <= 1e-8


def _separation(m, ts, eps=1e-8):
    y = AlgebraElement(0.3, 0.7, -0.2)
    kick = exp_raw(y, eps)
    out = []
    for t in ts:
        e = exp_raw(m, t)
        disp = exp_raw(m, -t) @ kick @ e
        out.append(np.linalg.norm(disp - np.eye(2)))
    return np.array(out)


def test_hyperbolic_divergence_rate():
    B, E = 1.0, 0.625
    params = classify(E, B)
    ts = np.linspace(5, 25, 81)
    slope = np.polyfit(ts, np.log(_separation(params.generator, ts)), 1)[0]
    assert abs(slope / params.rate - 1) <= 0.02


def test_parabolic_growth_is_polynomial():
    params = classify(0.5, 1.0)
    ts = np.geomspace(10, 1000, 60)
    slope = np.polyfit(np.log(ts), np.log(_separation(params.generator, ts)), 1)[0]
    assert 0.8 <= slope <= 2.2


def test_trajectory_matches_flow(bolza, rng):
    params = classify(0.5, 1.0)
    p = random_point(rng, bolza, params)
    pts = trajectory(p.rep.matrix, params.generator, 250, 0.02, bolza)
    assert pts.shape == (251, 2, 2)
    for j in (0, 49, 50, 137, 250):
        q = flow(p, j * 0.02, bolza)
        assert distance_mod_sign(GroupElement.from_matrix(pts[j]), q.rep) <= 1e-9


def test_orbit_rows_end_at_T(bolza):
    params = classify(0.0, 1.0)
    p = FramePoint.make(IDENTITY, params, bolza)
    rows = list(orbit_csv_rows(p, 2 * math.pi, 0.05, bolza))
    assert rows[-1][0] == 2 * math.pi
    start, end = np.array(rows[0][1:5]), np.array(rows[-1][1:5])
    assert np.max(np.abs(start - end)) <= 1e-8
    assert len(rows[0]) == 7


def test_flow_rejects_bad_step(bolza):
    p = FramePoint.make(IDENTITY, classify(0.1, 1), bolza)
    with pytest.raises(ValueError):
        flow(p, 1.0, bolza, reduce_every=0)
