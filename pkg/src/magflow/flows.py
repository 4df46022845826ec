"""Magnetic frame flows on Gamma \\ PSL(2,R).

At energy E the magnetic flow on the speed-lambda shell (lambda = sqrt(2E))
is conjugate, after rescaling velocities to unit length, to right
multiplication by exp(t M) with M = lambda X - B V.  Trajectories are
stepped with the closed-form exponential and pushed back into the
Dirichlet domain every ``reduce_every`` time units.

The stable horocyclic generator used here is X_perp - V = [[0, -1], [0, 0]];
the standard unipotent [[0, 1], [0, 0]] generates the time-reversed flow,
which is conjugate to it.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from magflow.errors import RegimeError
from magflow.fuchsian import FuchsianGroup, reduce, reduce_batch
from magflow.sl2 import (
    U_PLUS,
    AlgebraElement,
    GroupElement,
    disk_points,
    exp_batch,
    exp_raw,
)

REGIME_TOL = 1e-12


class Regime(str, enum.Enum):
    ELLIPTIC = "Elliptic"
    PARABOLIC = "Parabolic"
    HYPERBOLIC = "Hyperbolic"


@dataclass(frozen=True)
class MagneticParams:
    B: float
    E: float
    lam: float
    E_c: float
    regime: Regime
    period: float | None  # T_E, for E < E_c; the orbit period is 2 pi T_E
    rate: float | None  # 1/T'_lambda = sqrt(2E - B^2), for E > E_c

    @property
    def generator(self) -> AlgebraElement:
        return magnetic_generator(self.lam, self.B)

    @property
    def orbit_period(self) -> float:
        if self.period is None:
            raise RegimeError(f"no closed orbits in the {self.regime.value} regime")
        return 2 * math.pi * self.period


def classify(E: float, B: float) -> MagneticParams:
    if E < 0:
        raise ValueError("energy must be non-negative")
    if B <= 0:
        raise ValueError("B must be positive")
    E_c = B * B / 2
    lam = math.sqrt(2 * E)
    if E < E_c - REGIME_TOL:
        return MagneticParams(B, E, lam, E_c, Regime.ELLIPTIC, 1 / math.sqrt(B * B - 2 * E), None)
    if abs(E - E_c) <= REGIME_TOL:
        return MagneticParams(B, E, lam, E_c, Regime.PARABOLIC, None, None)
    return MagneticParams(B, E, lam, E_c, Regime.HYPERBOLIC, None, math.sqrt(2 * E - B * B))


def magnetic_generator(lam: float, B: float) -> AlgebraElement:
    """lambda X - B V = [[lambda/2, -B/2], [B/2, -lambda/2]]."""
    if lam < 0:
        raise ValueError("speed must be non-negative")
    return AlgebraElement(lam / 2, -B / 2, B / 2)


def horocyclic_generator() -> AlgebraElement:
    return U_PLUS


@dataclass(frozen=True)
class FramePoint:
    rep: GroupElement
    params: MagneticParams

    @classmethod
    def make(cls, g: GroupElement, params: MagneticParams, gamma: FuchsianGroup) -> "FramePoint":
        return cls(reduce(g, gamma), params)


def flow(p: FramePoint, t: float, gamma: FuchsianGroup, reduce_every: float = 1.0) -> FramePoint:
    """Magnetic flow for time t (either sign), reducing every ``reduce_every``."""
    if reduce_every <= 0:
        raise ValueError("reduce_every must be positive")
    m = p.params.generator
    n = max(1, math.ceil(abs(t) / reduce_every - 1e-12))
    h = t / n
    step = exp_raw(m, h)
    g = p.rep.matrix
    for _ in range(n):
        g = reduce_batch((g @ step)[None], gamma)[0]
    return FramePoint(GroupElement.from_matrix(g), p.params)


def trajectory(g0: np.ndarray, m: AlgebraElement, n_steps: int, dt: float,
               gamma: FuchsianGroup, reduce_every: float = 1.0) -> np.ndarray:
    """Frames at times j*dt, j = 0..n_steps, each reduced into the domain.

    Blocks of ``b = round(reduce_every/dt)`` samples share one reduced base
    frame; inside a block, samples are base @ exp(s M) with exact s.
    Returns an array of shape (n_steps + 1, 2, 2).
    """
    b = max(1, int(round(reduce_every / dt)))
    offsets = exp_batch(m, dt * np.arange(b))
    block_step = exp_raw(m, b * dt)
    n_blocks = n_steps // b + 1
    bases = np.empty((n_blocks, 2, 2))
    g = reduce_batch(np.asarray(g0, dtype=float)[None], gamma)[0]
    for q in range(n_blocks):
        bases[q] = g
        g = reduce_batch((g @ block_step)[None], gamma)[0]
    pts = np.einsum("qij,sjk->qsik", bases, offsets).reshape(-1, 2, 2)[: n_steps + 1]
    return reduce_batch(pts, gamma)


def period_residual(E: float, B: float) -> float:
    """Max-entry distance of exp(2 pi T_E M) from -I, before sign canonicalization."""
    params = classify(E, B)
    if params.regime is not Regime.ELLIPTIC:
        raise RegimeError("period_residual needs E < E_c")
    g = exp_raw(params.generator, params.orbit_period)
    return float(np.max(np.abs(g + np.eye(2))))


def orbit_csv_rows(p: FramePoint, T: float, dt: float, gamma: FuchsianGroup,
                   reduce_every: float = 1.0):
    """Rows (t, m11, m12, m21, m22, disk_re, disk_im).

    The step is T / round(T/dt), so the last row sits exactly at time T.
    """
    n = max(1, int(round(T / dt)))
    dt = T / n
    pts = trajectory(p.rep.matrix, p.params.generator, n, dt, gamma, reduce_every)
    w = disk_points(pts)
    for j in range(n + 1):
        g = GroupElement.from_matrix(pts[j])
        yield (j * dt, g.m11, g.m12, g.m21, g.m22, float(w[j].real), float(w[j].imag))
