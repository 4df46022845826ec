"""Exact 2x2 linear algebra on PSL(2,R) and sl(2,R).

Group elements act on the upper half-plane by Moebius maps; the unit-disk
picture is obtained through the fixed Cayley map ``w = (z - i)/(z + i)``,
so the base point of a frame ``g`` is ``g . i`` in H, i.e. ``0`` in D when
``g`` is a rotation.

Batched helpers work on arrays of shape ``(N, 2, 2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DET_TOL = 1e-12
RENORM_TOL = 1e-13
SIGN_TOL = 1e-12
DET_ROUNDING = 8 * 2.0**-52
SERIES_CUTOFF = 1e-4


def _canonical_tuple(m11, m12, m21, m22):
    scale = max(abs(m11), abs(m12), abs(m21), abs(m22))
    for x in (m11, m12, m21, m22):
        if abs(x) > SIGN_TOL * scale:
            if x < 0:
                return -m11, -m12, -m21, -m22
            break
    return m11, m12, m21, m22


def _det_scale(m11, m12, m21, m22) -> float:
    return abs(m11 * m22) + abs(m12 * m21)


@dataclass(frozen=True)
class GroupElement:
    """Unimodular real matrix modulo sign, stored in canonical form.

    Use :meth:`make` (or :func:`group`) to build one; it renormalizes the
    determinant and picks the sign representative whose first
    non-negligible entry is positive.
    """

    m11: float
    m12: float
    m21: float
    m22: float

    @classmethod
    def make(cls, m11, m12, m21, m22, inherited_scale: float = 0.0) -> "GroupElement":
        """Canonical element; ``inherited_scale`` adds the det scale of factors it came from."""
        vals = [float(m11), float(m12), float(m21), float(m22)]
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("non-finite matrix entry")
        det = vals[0] * vals[3] - vals[1] * vals[2]
        # rounding error of det itself; below it renormalizing only adds noise
        floor = DET_ROUNDING * (_det_scale(*vals) + inherited_scale)
        if abs(det - 1.0) <= max(RENORM_TOL, floor):
            return cls(*_canonical_tuple(*vals))
        if det <= 0:
            raise ValueError(f"determinant must be positive, got {det!r}")
        s = math.sqrt(det)
        vals = [v / s for v in vals]
        return cls(*_canonical_tuple(*vals))

    @classmethod
    def from_matrix(cls, a) -> "GroupElement":
        a = np.asarray(a, dtype=float)
        return cls.make(a[0, 0], a[0, 1], a[1, 0], a[1, 1])

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.m11, self.m12], [self.m21, self.m22]])

    @property
    def det(self) -> float:
        return self.m11 * self.m22 - self.m12 * self.m21

    @property
    def trace(self) -> float:
        return self.m11 + self.m22

    def inverse(self) -> "GroupElement":
        return GroupElement.make(self.m22, -self.m12, -self.m21, self.m11)

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return compose(self, other)

    def as_tuple(self):
        return (self.m11, self.m12, self.m21, self.m22)


IDENTITY = GroupElement(1.0, 0.0, 0.0, 1.0)


def group(m11, m12, m21, m22) -> GroupElement:
    return GroupElement.make(m11, m12, m21, m22)


def compose(g: GroupElement, h: GroupElement) -> GroupElement:
    # det(gh) = det(g) det(h) carries the det rounding of both factors
    return GroupElement.make(
        g.m11 * h.m11 + g.m12 * h.m21,
        g.m11 * h.m12 + g.m12 * h.m22,
        g.m21 * h.m11 + g.m22 * h.m21,
        g.m21 * h.m12 + g.m22 * h.m22,
        inherited_scale=_det_scale(*g.as_tuple()) + _det_scale(*h.as_tuple()),
    )


def distance_mod_sign(g: GroupElement, h: GroupElement) -> float:
    """Max-entry distance between g and the closer of +h, -h."""
    a = np.array(g.as_tuple())
    b = np.array(h.as_tuple())
    return float(min(np.max(np.abs(a - b)), np.max(np.abs(a + b))))


@dataclass(frozen=True)
class AlgebraElement:
    """Traceless matrix [[a, b], [c, -a]]."""

    a: float
    b: float
    c: float

    @classmethod
    def from_matrix(cls, m) -> "AlgebraElement":
        m = np.asarray(m, dtype=float)
        tr = m[0, 0] + m[1, 1]
        if abs(tr) > 1e-12 * max(1.0, float(np.max(np.abs(m)))):
            raise ValueError(f"matrix is not traceless (trace={tr})")
        return cls(float(m[0, 0] - tr / 2), float(m[0, 1]), float(m[1, 0]))

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, -self.a]])

    @property
    def det(self) -> float:
        return -self.a * self.a - self.b * self.c

    @property
    def trace(self) -> float:
        return 0.0

    def norm(self) -> float:
        """Frobenius norm."""
        return math.sqrt(2 * self.a * self.a + self.b * self.b + self.c * self.c)

    def __add__(self, other):
        return AlgebraElement(self.a + other.a, self.b + other.b, self.c + other.c)

    def __sub__(self, other):
        return AlgebraElement(self.a - other.a, self.b - other.b, self.c - other.c)

    def __neg__(self):
        return AlgebraElement(-self.a, -self.b, -self.c)

    def __mul__(self, s: float):
        return AlgebraElement(s * self.a, s * self.b, s * self.c)

    __rmul__ = __mul__

    def isclose(self, other, tol=1e-14) -> bool:
        return max(abs(self.a - other.a), abs(self.b - other.b), abs(self.c - other.c)) <= tol


# Frame generators in the representation used throughout.
X = AlgebraElement(0.5, 0.0, 0.0)
V = AlgebraElement(0.0, 0.5, -0.5)


def bracket(m: AlgebraElement, n: AlgebraElement) -> AlgebraElement:
    """Commutator MN - NM."""
    p = m.matrix @ n.matrix - n.matrix @ m.matrix
    # The diagonal of a commutator of traceless 2x2 matrices is exactly (x, -x).
    return AlgebraElement(float(p[0, 0]), float(p[0, 1]), float(p[1, 0]))


X_PERP = bracket(V, X)
U_PLUS = X_PERP - V


def _cos_sin_coeffs(det: float, t: float):
    """Return (C, S) with exp(tM) = C*I + S*M, where M^2 = -det * I."""
    s = det * t * t
    if abs(s) < SERIES_CUTOFF**2:
        # four-term Taylor series of cos(sqrt(s)) and sin(sqrt(s))/sqrt(s)
        c = 1.0 - s / 2 + s * s / 24 - s * s * s / 720
        sn = t * (1.0 - s / 6 + s * s / 120 - s * s * s / 5040)
        return c, sn
    if det > 0:
        k = math.sqrt(det)
        return math.cos(k * t), math.sin(k * t) / k
    k = math.sqrt(-det)
    return math.cosh(k * t), math.sinh(k * t) / k


def _hyperbolic_diagonal(m: AlgebraElement, kappa, kt):
    """Diagonal of exp(tM) for det M = -kappa^2 < 0, free of cancellation.

    c +- s a = e^{kt}(1 +- a/kappa)/2 + e^{-kt}(1 -+ a/kappa)/2, and the
    smaller of 1 +- a/kappa is evaluated as bc / (kappa (kappa + |a|)).
    """
    big = 1 + abs(m.a) / kappa
    small = m.b * m.c / (kappa * (kappa + abs(m.a)))
    up, um = (big, small) if m.a >= 0 else (small, big)
    p = np.exp(kt) / 2
    q = np.exp(-kt) / 2
    return p * up + q * um, p * um + q * up


def exp_raw(m: AlgebraElement, t: float) -> np.ndarray:
    """Closed-form exp(tM) as a plain matrix (no sign canonicalization)."""
    det = m.det
    c, s = _cos_sin_coeffs(det, t)
    if det < 0 and abs(det) * t * t >= SERIES_CUTOFF**2:
        k = math.sqrt(-det)
        d11, d22 = _hyperbolic_diagonal(m, k, k * t)
        return np.array([[float(d11), s * m.b], [s * m.c, float(d22)]])
    return np.array([[c + s * m.a, s * m.b], [s * m.c, c - s * m.a]])


def exp_sl2(m: AlgebraElement, t: float) -> GroupElement:
    """Closed-form exponential exp(tM) in PSL(2,R)."""
    return GroupElement.from_matrix(exp_raw(m, t))


def exp_reference(m: AlgebraElement, t: float, order: int = 18) -> GroupElement:
    """Scaling-and-squaring Taylor exponential; independent of the closed form."""
    return GroupElement.from_matrix(exp_reference_raw(m, t, order))


def exp_reference_raw(m: AlgebraElement, t: float, order: int = 18) -> np.ndarray:
    a = t * m.matrix
    nrm = float(np.max(np.sum(np.abs(a), axis=1)))
    squarings = max(0, int(math.ceil(math.log2(nrm / 0.25)))) if nrm > 0.25 else 0
    a = a / (2.0**squarings)
    result = np.eye(2)
    term = np.eye(2)
    for j in range(1, order + 1):
        term = term @ a / j
        result = result + term
    for _ in range(squarings):
        result = result @ result
    return result


def exp_batch(m: AlgebraElement, ts) -> np.ndarray:
    """exp(tM) for every t in ``ts``; returns shape (N, 2, 2), raw signs."""
    ts = np.asarray(ts, dtype=float)
    det = m.det
    s = det * ts * ts
    if det > 0:
        k = math.sqrt(det)
        c = np.cos(k * ts)
        sn = np.where(ts == 0, ts, np.sin(k * ts) / k)
    elif det < 0:
        k = math.sqrt(-det)
        c = np.cosh(k * ts)
        sn = np.sinh(k * ts) / k
    else:
        c = np.ones_like(ts)
        sn = ts.copy()
    small = np.abs(s) < SERIES_CUTOFF**2
    if np.any(small):
        ss = s[small]
        tt = ts[small]
        c[small] = 1.0 - ss / 2 + ss * ss / 24 - ss * ss * ss / 720
        sn[small] = tt * (1.0 - ss / 6 + ss * ss / 120 - ss * ss * ss / 5040)
    out = np.empty(ts.shape + (2, 2))
    out[..., 0, 0] = c + sn * m.a
    out[..., 0, 1] = sn * m.b
    out[..., 1, 0] = sn * m.c
    out[..., 1, 1] = c - sn * m.a
    if det < 0:
        k = math.sqrt(-det)
        d11, d22 = _hyperbolic_diagonal(m, k, k * ts)
        out[..., 0, 0] = np.where(small, out[..., 0, 0], d11)
        out[..., 1, 1] = np.where(small, out[..., 1, 1], d22)
    return out


# --- hyperbolic geometry ----------------------------------------------------

def upper_half_plane_point(g) -> complex:
    """g . i in the upper half-plane."""
    if isinstance(g, GroupElement):
        a, b, c, d = g.as_tuple()
    else:
        a, b, c, d = np.asarray(g, dtype=float).ravel()
    den = c * c + d * d
    return complex((a * c + b * d) / den, 1.0 / den)


def cayley(z: complex) -> complex:
    """Upper half-plane -> unit disk."""
    return (z - 1j) / (z + 1j)


def inverse_cayley(w: complex) -> complex:
    return 1j * (1 + w) / (1 - w)


def disk_point(g) -> complex:
    """Base point of the frame g in the Poincare disk."""
    return cayley(upper_half_plane_point(g))


def disk_points(gs: np.ndarray) -> np.ndarray:
    """Vectorized :func:`disk_point` for an array of shape (N, 2, 2)."""
    a = gs[..., 0, 0]
    b = gs[..., 0, 1]
    c = gs[..., 1, 0]
    d = gs[..., 1, 1]
    # (g.i - i)/(g.i + i) = (a i + b - i(c i + d)) / (a i + b + i(c i + d))
    num = (b + c) + 1j * (a - d)
    den = (b - c) + 1j * (a + d)
    return num / den


def hyp_dist(z, w) -> float:
    """Poincare-disk distance."""
    z = complex(z)
    w = complex(w)
    if not (math.isfinite(z.real) and math.isfinite(z.imag) and math.isfinite(w.real)
            and math.isfinite(w.imag)):
        raise ValueError("non-finite point")
    if abs(z) >= 1 or abs(w) >= 1:
        raise ValueError("points must lie in the open unit disk")
    r = abs(z - w) / abs(1 - w.conjugate() * z)
    return 2.0 * math.atanh(r)


def dist_from_origin(w):
    """Vectorized distance from 0 in the disk."""
    return 2.0 * np.arctanh(np.abs(w))


def frame_from_disk(w: complex, theta: float) -> GroupElement:
    """Frame with base point ``w`` (disk) and fiber angle ``theta``.

    Built as n(x) a(y) exp(theta V): theta is the Iwasawa angle of
    :func:`fiber_angle`.
    """
    return GroupElement.make(*frames_from_disk(np.array([w]), np.array([theta]))[0].ravel())


def frames_from_disk(w: np.ndarray, theta: np.ndarray) -> np.ndarray:
    z = 1j * (1 + w) / (1 - w)
    x = z.real
    y = z.imag
    sy = np.sqrt(y)
    c = np.cos(theta / 2)
    s = np.sin(theta / 2)
    out = np.empty(np.shape(w) + (2, 2))
    # [[sy, x/sy], [0, 1/sy]] @ [[c, s], [-s, c]]
    out[..., 0, 0] = sy * c - x / sy * s
    out[..., 0, 1] = sy * s + x / sy * c
    out[..., 1, 0] = -s / sy
    out[..., 1, 1] = c / sy
    return out


def fiber_angle(gs: np.ndarray) -> np.ndarray:
    """Iwasawa angle theta (mod 2 pi) of g = n a exp(theta V).

    Right multiplication by exp(phi V) shifts it by phi; the value is well
    defined on PSL since -g shifts it by 2 pi.
    """
    c = gs[..., 1, 0]
    d = gs[..., 1, 1]
    return 2.0 * np.arctan2(-c, d)


def canonical_batch(gs: np.ndarray) -> np.ndarray:
    """Sign-canonicalize an array of shape (N, 2, 2)."""
    flat = gs.reshape(-1, 4)
    scale = np.max(np.abs(flat), axis=1, keepdims=True)
    big = np.abs(flat) > SIGN_TOL * scale
    first = np.argmax(big, axis=1)
    sgn = np.sign(flat[np.arange(flat.shape[0]), first])
    sgn[sgn == 0] = 1.0
    return (flat * sgn[:, None]).reshape(gs.shape)
