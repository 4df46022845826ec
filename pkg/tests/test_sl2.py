import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from magflow.sl2 import (
    IDENTITY,
    U_PLUS,
    V,
    X,
    X_PERP,
    AlgebraElement,
    GroupElement,
    bracket,
    canonical_batch,
    compose,
    disk_point,
    disk_points,
    distance_mod_sign,
    exp_batch,
    exp_raw,
    exp_reference,
    exp_reference_raw,
    exp_sl2,
    fiber_angle,
    frame_from_disk,
    frames_from_disk,
    group,
    hyp_dist,
)

coef = st.floats(-2 / math.sqrt(3), 2 / math.sqrt(3), allow_nan=False)
times = st.floats(-10, 10, allow_nan=False)


def algebra(a, b, c):
    m = AlgebraElement(a, b, c)
    # keep the Frobenius norm at most 2
    n = m.norm()
    return m * (2 / n) if n > 2 else m


def close(g: GroupElement, h: GroupElement, tol: float) -> bool:
    return distance_mod_sign(g, h) <= tol


# --- compose -----------------------------------------------------------------

def test_compose_identity_and_inverse():
    g = group(2.0, 1.0, 3.0, 2.0)
    assert compose(IDENTITY, g) == g
    assert close(compose(g, g.inverse()), IDENTITY, 1e-15)


def test_compose_diagonal():
    e = math.e
    d = group(e, 0, 0, 1 / e)
    assert close(compose(d, d), group(e * e, 0, 0, e**-2), 1e-14)


def test_canonical_sign_and_renormalization():
    g = group(-2.0, -1.0, -3.0, -2.0)
    assert g.as_tuple() == (2.0, 1.0, 3.0, 2.0)
    h = group(0.0, -2.0, 0.5, 0.0)
    assert h.m12 == 2.0 and h.m21 == -0.5
    s = group(2.0, 0.0, 0.0, 2.0)
    assert abs(s.det - 1) < 1e-15


def test_group_rejects_bad_matrices():
    with pytest.raises(ValueError):
        group(1.0, 0.0, 0.0, -1.0)
    with pytest.raises(ValueError):
        group(float("nan"), 0.0, 0.0, 1.0)


def test_canonical_batch_matches_scalar(rng):
    gs = rng.normal(size=(50, 2, 2))
    gs[:, 0, :] *= np.sign(np.linalg.det(gs))[:, None]
    gs /= np.sqrt(np.abs(np.linalg.det(gs)))[:, None, None]
    out = canonical_batch(gs)
    for g, c in zip(gs, out):
        assert np.allclose(c.ravel(), group(*g.ravel()).as_tuple(), rtol=1e-14, atol=0)


# --- brackets ----------------------------------------------------------------

def test_bracket_table():
    assert X_PERP.isclose(AlgebraElement(0.0, -0.5, -0.5))
    assert bracket(X, V).isclose(-X_PERP)
    assert bracket(X, X_PERP).isclose(-V)
    assert bracket(X_PERP, V).isclose(X)
    assert bracket(V, X).isclose(X_PERP)
    assert bracket(X_PERP, X).isclose(V)
    assert bracket(V, X_PERP).isclose(-X)


def test_horocyclic_matrix():
    assert np.array_equal(U_PLUS.matrix, np.array([[0.0, -1.0], [0.0, 0.0]]))
    assert U_PLUS.det == 0 and U_PLUS.trace == 0


@given(coef, coef, coef, coef, coef, coef)
def test_bracket_is_traceless_and_antisymmetric(a, b, c, d, e, f):
    m, n = AlgebraElement(a, b, c), AlgebraElement(d, e, f)
    p = bracket(m, n)
    full = m.matrix @ n.matrix - n.matrix @ m.matrix
    assert abs(np.trace(full)) < 1e-14
    assert np.allclose(p.matrix, full, atol=1e-15)
    assert bracket(n, m).isclose(-p, 1e-15)


# --- exponentials -------------------------------------------------------------

def test_exp_examples():
    assert exp_sl2(X, 0.0) == IDENTITY
    t = 1.7
    assert close(exp_sl2(X, t), group(math.exp(t / 2), 0, 0, math.exp(-t / 2)), 1e-15)
    assert close(exp_sl2(V, 2 * math.pi), IDENTITY, 1e-15)
    assert np.allclose(exp_raw(V, 2 * math.pi), -np.eye(2), atol=1e-15)
    assert close(exp_sl2(U_PLUS, 3.0), group(1.0, -3.0, 0.0, 1.0), 0)


def test_reference_oracle_examples():
    for m, t in [(X, 0.0), (X, 1.7), (V, 2 * math.pi)]:
        assert distance_mod_sign(exp_sl2(m, t), exp_reference(m, t)) <= 1e-10


def test_reference_agrees_over_range(rng):
    # relative max-entry norm: hyperbolic entries reach e^25
    for _ in range(300):
        m = AlgebraElement(*rng.normal(size=3))
        t = rng.uniform(-50, 50) / m.norm()
        a, b = exp_raw(m, t), exp_reference_raw(m, t)
        assert np.max(np.abs(a - b)) / max(1.0, np.max(np.abs(b))) <= 1e-10


def test_closed_form_matches_scipy_expm(rng):
    for _ in range(100):
        m = AlgebraElement(*rng.normal(size=3))
        t = rng.uniform(-20, 20) / m.norm()
        ref = expm(t * m.matrix)
        # expm itself is only good to about 1e-12 relative on large hyperbolic entries
        assert np.max(np.abs(exp_raw(m, t) - ref)) / max(1.0, np.max(np.abs(ref))) <= 1e-10


def test_small_kappa_series_is_continuous():
    m = AlgebraElement(0.5, -0.5 + 1e-13, 0.5)
    for t in [1e-3, 0.1, 1.0]:
        assert np.allclose(exp_raw(m, t), exp_reference_raw(m, t), rtol=1e-13, atol=1e-14)


def test_exp_batch_matches_scalar(rng):
    for m in [X, V, U_PLUS, AlgebraElement(0.3, -0.2, 0.9)]:
        ts = rng.uniform(-5, 5, 40)
        ts[0] = 0.0
        batch = exp_batch(m, ts)
        for t, g in zip(ts, batch):
            assert np.allclose(g, exp_raw(m, t), rtol=1e-14, atol=1e-14)


@given(coef, coef, coef, times, times)
def test_group_law(a, b, c, s, t):
    m = algebra(a, b, c)
    lhs = exp_sl2(m, s + t)
    gs, gt = exp_sl2(m, s), exp_sl2(m, t)
    rhs = compose(gs, gt)
    # rounding the product costs about eps |g_s| |g_t|, which can far exceed |g_{s+t}|
    scale = max(1.0, np.max(np.abs(gs.matrix)) * np.max(np.abs(gt.matrix)))
    assert distance_mod_sign(lhs, rhs) <= 1e-11 * scale


@given(coef, coef, coef, times)
def test_unit_determinant(a, b, c, t):
    g = exp_sl2(algebra(a, b, c), t)
    # det of a float matrix carries rounding error proportional to its products
    scale = max(1.0, abs(g.m11 * g.m22) + abs(g.m12 * g.m21))
    assert abs(g.det - 1) <= 1e-12 * scale


def _scale(g):
    return abs(g.m11 * g.m22) + abs(g.m12 * g.m21)


@given(coef, coef, coef, times, times)
def test_product_determinant(a, b, c, s, t):
    g, h = exp_sl2(algebra(a, b, c), s), exp_sl2(algebra(b, c, a), t)
    p = compose(g, h)
    assert abs(p.det - 1) <= 1e-12 * max(1.0, _scale(p) + _scale(g) + _scale(h))


# --- disk geometry ------------------------------------------------------------

def test_disk_examples():
    assert disk_point(IDENTITY) == 0
    assert hyp_dist(0, 0) == 0
    for r in [0.1, 0.5, 0.9]:
        assert abs(hyp_dist(0, r) - 2 * math.atanh(r)) < 1e-14


def test_hyp_dist_matches_line_integral():
    from scipy.integrate import quad
    r = 0.73
    val, _ = quad(lambda x: 2 / (1 - x * x), 0, r, epsabs=1e-14)
    assert abs(hyp_dist(0, r) - val) < 1e-12


def test_hyp_dist_errors():
    with pytest.raises(ValueError):
        hyp_dist(0, 1.0)
    with pytest.raises(ValueError):
        hyp_dist(float("inf"), 0)


@given(st.floats(0, 0.95), st.floats(0, 2 * math.pi), st.floats(0, 0.95), st.floats(0, 2 * math.pi))
def test_isometry_invariance(r1, a1, r2, a2):
    z, w = r1 * complex(math.cos(a1), math.sin(a1)), r2 * complex(math.cos(a2), math.sin(a2))
    g = frame_from_disk(0.3 + 0.4j, 1.0)
    gz = disk_point(compose(g, frame_from_disk(z, 0.0)))
    gw = disk_point(compose(g, frame_from_disk(w, 0.0)))
    assert abs(hyp_dist(gz, gw) - hyp_dist(z, w)) < 1e-8 * max(1.0, hyp_dist(z, w))


def test_frames_from_disk_round_trip(rng):
    w = 0.9 * np.sqrt(rng.random(100)) * np.exp(2j * np.pi * rng.random(100))
    theta = rng.uniform(0, 2 * np.pi, 100)
    gs = frames_from_disk(w, theta)
    assert np.allclose(np.linalg.det(gs), 1, atol=1e-12)
    assert np.allclose(disk_points(gs), w, atol=1e-12)
    assert np.allclose(np.exp(1j * fiber_angle(gs)), np.exp(1j * theta), atol=1e-12)


def test_fiber_angle_shifts_under_rotation(rng):
    gs = frames_from_disk(np.array([0.2 + 0.1j, -0.5j]), np.array([0.3, 2.0]))
    phi = 0.77
    rot = exp_raw(V, phi)
    d = np.exp(1j * (fiber_angle(gs @ rot) - fiber_angle(gs)))
    assert np.allclose(d, np.exp(1j * phi), atol=1e-13)
