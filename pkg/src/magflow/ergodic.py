"""Observables on Gamma \\ PSL(2,R) and their flow averages.

Observables are truncated Poincare series over a ball of group words, so
they are automorphic up to a tail that the word length and width control.
Evaluation first pushes frames into the Dirichlet domain and then keeps
only the words that can reach the center, which is what makes long
Birkhoff sums affordable.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.stats import qmc

from magflow.errors import FitError, RegimeError, SamplingError
from magflow.flows import Regime, classify, trajectory
from magflow.fuchsian import FuchsianGroup, reduce_batch, sample_hyperbolic_disk
from magflow.sl2 import (
    GroupElement,
    canonical_batch,
    disk_point,
    exp_batch,
    frames_from_disk,
    hyp_dist,
)

# Terms below exp(-40) ~ 4e-18 are dropped when pruning words.
TAIL_EXPONENT = 40.0
DOMAIN_MARGIN = 0.05
DEFAULT_LAMBDA1 = 3.8388  # first Laplace eigenvalue of the Bolza surface (literature value)


def threads() -> int:
    env = os.environ.get("MAGFLOW_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def parallel_map(fn, items):
    """Order-preserving map; runs in worker processes when MAGFLOW_THREADS > 1."""
    items = list(items)
    n = min(threads(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


# --- word balls ---------------------------------------------------------------

_BALL_CACHE: dict = {}


def word_ball(gamma: FuchsianGroup, word_len: int) -> np.ndarray:
    """Distinct group elements of word length <= word_len, shape (K, 2, 2).

    Sorted by displacement d(0, gamma.0), identity first.
    """
    key = (gamma.generators, word_len)
    if key in _BALL_CACHE:
        return _BALL_CACHE[key]
    gens = np.array([g.matrix for g in gamma.generators])
    seen = {}
    frontier = [np.eye(2)]

    def key_of(m):
        c = canonical_batch(m[None])[0]
        return tuple(np.round(c, 7).ravel())

    seen[key_of(np.eye(2))] = np.eye(2)
    for _ in range(word_len):
        nxt = []
        for m in frontier:
            for g in gens:
                p = g @ m
                kk = key_of(p)
                if kk not in seen:
                    seen[kk] = p
                    nxt.append(p)
        frontier = nxt
    ball = np.array(list(seen.values()))
    disp = displacement(ball)
    ball = ball[np.argsort(disp, kind="stable")]
    _BALL_CACHE[key] = ball
    return ball


def displacement(gs: np.ndarray) -> np.ndarray:
    """Hyperbolic distance d(i, g.i) = 2 acosh(|g|_F / sqrt 2)."""
    fro2 = np.sum(gs.reshape(-1, 4) ** 2, axis=1)
    return 2 * np.arccosh(np.sqrt(np.maximum(fro2 / 2, 1.0)))


def _as_frames(g) -> np.ndarray:
    if isinstance(g, GroupElement):
        return g.matrix[None]
    g = np.asarray(g, dtype=float)
    return g[None] if g.ndim == 2 else g


# --- observables --------------------------------------------------------------

class Observable:
    """Function on the frame bundle; ``__call__`` takes frames of shape (N, 2, 2)."""

    id: str = "observable"
    fiber_mode: Optional[int] = None  # n if f(g exp(phi V)) = e^{i n phi} f(g)
    complex_valued: bool = False

    def __call__(self, g, reduce: bool = True):
        gs = _as_frames(g)
        if reduce:
            gs = reduce_batch(gs, self.gamma)
        return self._evaluate(gs, pruned=reduce)

    def _evaluate(self, gs, pruned):  # pragma: no cover - interface
        raise NotImplementedError


@dataclass
class Constant(Observable):
    gamma: FuchsianGroup
    value: float = 1.0
    fiber_mode: Optional[int] = 0

    @property
    def id(self):
        return f"const({self.value:g})"

    def _evaluate(self, gs, pruned):
        return np.full(gs.shape[0], float(self.value))


@dataclass
class PoincareBump(Observable):
    """sum over words w of exp(-min_s |w g c^-1 - s I|_F^2 / width^2), s = +-1."""

    center: GroupElement
    width: float
    word_len: int
    gamma: FuchsianGroup
    _ball: np.ndarray = field(init=False, repr=False)
    _pruned: np.ndarray = field(init=False, repr=False)
    _cinv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not 0.05 <= self.width <= 2:
            raise ValueError("width must lie in [0.05, 2]")
        if not 0 <= self.word_len <= 5:
            raise ValueError("word_len must be at most 5")
        self._ball = word_ball(self.gamma, self.word_len)
        self._cinv = self.center.inverse().matrix
        r_c = hyp_dist(0, disk_point(self.center))
        # |h -+ I| >= e^{d(i, h.i)/2} - 1 and d(i, h.i) >= d(gamma) - r_g - r_c
        reach = 2 * math.log1p(self.width * math.sqrt(TAIL_EXPONENT))
        cutoff = reach + self.gamma.domain_radius + DOMAIN_MARGIN + r_c
        self._pruned = self._ball[displacement(self._ball) <= cutoff]

    @property
    def id(self):
        w = disk_point(self.center)
        return f"bump(c={w.real:.4f}{w.imag:+.4f}i,w={self.width:g},L={self.word_len})"

    def _evaluate(self, gs, pruned):
        words = self._pruned if pruned else self._ball
        G = gs @ self._cinv
        g11, g12, g21, g22 = G[:, 0, 0], G[:, 0, 1], G[:, 1, 0], G[:, 1, 1]
        inv_w2 = 1.0 / (self.width * self.width)
        total = np.zeros(gs.shape[0])
        for a, b, c, d in words.reshape(-1, 4):
            h11 = a * g11 + b * g21
            h12 = a * g12 + b * g22
            h21 = c * g11 + d * g21
            h22 = c * g12 + d * g22
            q = h11 * h11 + h12 * h12 + h21 * h21 + h22 * h22 + 2 - 2 * np.abs(h11 + h22)
            total += np.exp(-q * inv_w2)
        return total


@dataclass
class BaseBump:
    """Radial envelope exp(-2 (cosh d(x, c) - 1) / width^2) around a disk point c."""

    center: complex
    width: float


@dataclass
class FiberHarmonic(Observable):
    """sum over words w of rho(w g) e^{i n theta(w g)}.

    theta is the Iwasawa fiber angle, rho a :class:`BaseBump` envelope; the
    result transforms by e^{i n phi} under rotation of the frame by phi.
    With ``radial=None`` the observable is the bare e^{i n theta}, which
    is not automorphic and is only meaningful for fiber integrals.
    """

    n: int
    radial: Optional[BaseBump]
    word_len: int
    gamma: FuchsianGroup
    complex_valued: bool = True
    _ball: np.ndarray = field(init=False, repr=False)
    _pruned: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.fiber_mode = self.n
        self.complex_valued = self.n != 0
        self._ball = word_ball(self.gamma, self.word_len)
        if self.radial is None:
            self._pruned = self._ball[:1]
            return
        r_c = hyp_dist(0, self.radial.center)
        reach = math.acosh(1 + TAIL_EXPONENT * self.radial.width**2 / 2)
        cutoff = reach + self.gamma.domain_radius + DOMAIN_MARGIN + r_c
        self._pruned = self._ball[displacement(self._ball) <= cutoff]

    @property
    def id(self):
        if self.radial is None:
            return f"harmonic(n={self.n},const)"
        w = self.radial.center
        return (f"harmonic(n={self.n},c={w.real:.4f}{w.imag:+.4f}i,"
                f"w={self.radial.width:g},L={self.word_len})")

    def _phase(self, x21, x22):
        if self.n == 0:
            return 1.0
        u = (x22 - 1j * x21) / np.hypot(x21, x22)
        return u ** (2 * self.n)

    def _evaluate(self, gs, pruned):
        if self.radial is None:
            return self._phase(gs[:, 1, 0], gs[:, 1, 1]) * np.ones(gs.shape[0])
        words = self._pruned if pruned else self._ball
        zc = 1j * (1 + self.radial.center) / (1 - self.radial.center)
        cx, cy = zc.real, zc.imag
        inv_w2 = 2.0 / (self.radial.width**2)
        g11, g12, g21, g22 = gs[:, 0, 0], gs[:, 0, 1], gs[:, 1, 0], gs[:, 1, 1]
        total = np.zeros(gs.shape[0], dtype=complex if self.n else float)
        for a, b, c, d in words.reshape(-1, 4):
            x11 = a * g11 + b * g21
            x12 = a * g12 + b * g22
            x21 = c * g11 + d * g21
            x22 = c * g12 + d * g22
            den = x21 * x21 + x22 * x22
            y = 1.0 / den
            xr = (x11 * x21 + x12 * x22) * y
            cosh_m1 = ((xr - cx) ** 2 + (y - cy) ** 2) / (2 * y * cy)
            total += np.exp(-cosh_m1 * inv_w2) * self._phase(x21, x22)
        return total


@dataclass
class Product(Observable):
    left: Observable
    right: Observable

    def __post_init__(self):
        self.gamma = self.left.gamma
        self.complex_valued = self.left.complex_valued or self.right.complex_valued
        if self.left.fiber_mode is not None and self.right.fiber_mode is not None:
            self.fiber_mode = self.left.fiber_mode + self.right.fiber_mode

    @property
    def id(self):
        return f"({self.left.id})*({self.right.id})"

    def _evaluate(self, gs, pruned):
        return self.left._evaluate(gs, pruned) * self.right._evaluate(gs, pruned)


def poincare_bump(center: GroupElement, width: float, word_len: int,
                  gamma: FuchsianGroup) -> PoincareBump:
    return PoincareBump(center, width, word_len, gamma)


def default_suite(gamma: FuchsianGroup, word_len: int = 4) -> list[Observable]:
    """Two frame bumps and fiber harmonics n = 1, 2, 3."""
    from magflow.sl2 import frame_from_disk

    c1 = frame_from_disk(0j, 0.0)
    c2 = frame_from_disk(0.35 * np.exp(0.6j), 1.0)
    env = BaseBump(0.2 - 0.15j, 0.6)
    return [
        PoincareBump(c1, 0.5, word_len, gamma),
        PoincareBump(c2, 0.5, word_len, gamma),
        FiberHarmonic(1, env, word_len, gamma),
        FiberHarmonic(2, env, word_len, gamma),
        FiberHarmonic(3, env, word_len, gamma),
    ]


# --- Liouville reference --------------------------------------------------------

def _liouville_frames(gamma: FuchsianGroup, u: np.ndarray) -> np.ndarray:
    """Map points of [0,1)^3 to frames; rows outside the domain are dropped."""
    radius = gamma.domain_radius + DOMAIN_MARGIN
    rho = np.arccosh(1 + u[:, 0] * (math.cosh(radius) - 1))
    w = np.tanh(rho / 2) * np.exp(2j * np.pi * u[:, 1])
    keep = gamma.in_domain(w)
    return frames_from_disk(w[keep], 2 * np.pi * u[keep, 2])


def sample_liouville(gamma: FuchsianGroup, rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw about 0.4 n frames from normalized Liouville measure (rejection)."""
    return _liouville_frames(gamma, rng.random((n, 3)))


@dataclass
class MeanEstimate:
    mean: complex | float
    stderr: float
    n: int


def _chunk_sums(f, gamma, seed_seq, n):
    rng = np.random.default_rng(seed_seq)
    gs = sample_liouville(gamma, rng, n)
    v = f._evaluate(gs, pruned=True)
    return complex(np.sum(v)), float(np.sum(np.abs(v) ** 2)), gs.shape[0]


def liouville_average(f: Observable, gamma: FuchsianGroup, n_samples: int, seed: int,
                      chunk: int = 1 << 16) -> MeanEstimate:
    """Monte Carlo mean over the domain x fiber circle.

    Pure fiber harmonics n != 0 integrate to zero over each fiber; for
    them the mean is exactly 0 and the stderr is that of the radial part.
    """
    if n_samples < 1000:
        raise ValueError("n_samples must be at least 1000")
    n_chunks = -(-n_samples // chunk)
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    target = f
    if f.fiber_mode not in (None, 0):
        target = _RadialPart(f)
    parts = [_chunk_sums(target, gamma, children[j], min(chunk, n_samples - j * chunk))
             for j in range(n_chunks)]
    s = sum(p[0] for p in parts)
    s2 = sum(p[1] for p in parts)
    n = sum(p[2] for p in parts)
    if n == 0:
        raise SamplingError("no Liouville sample accepted")
    mean = s / n
    var = max(s2 / n - abs(mean) ** 2, 0.0)
    stderr = math.sqrt(var / max(n - 1, 1))
    if f.fiber_mode not in (None, 0):
        return MeanEstimate(0.0, stderr, n)
    return MeanEstimate(mean.real if not f.complex_valued else mean, stderr, n)


@dataclass
class _RadialPart(Observable):
    inner: Observable

    def __post_init__(self):
        self.gamma = self.inner.gamma

    def _evaluate(self, gs, pruned):
        return np.abs(self.inner._evaluate(gs, pruned))


def liouville_average_qmc(f: Observable, gamma: FuchsianGroup, m: int = 14, n_rep: int = 8,
                          seed: int = 0) -> MeanEstimate:
    """Scrambled-Sobol estimate of the same mean; stderr from replicate spread."""
    means = []
    count = 0
    for rep in range(n_rep):
        sob = qmc.Sobol(d=3, scramble=True, seed=np.random.default_rng([seed, rep]))
        gs = _liouville_frames(gamma, sob.random_base2(m))
        v = f._evaluate(gs, pruned=True)
        means.append(np.mean(v))
        count += gs.shape[0]
    means = np.array(means)
    mean = np.mean(means)
    stderr = float(np.std(means, ddof=1) / math.sqrt(n_rep))
    return MeanEstimate(mean if f.complex_valued else float(mean.real), stderr, count)


# --- Birkhoff averages ------------------------------------------------------------

def _frame(p) -> np.ndarray:
    if isinstance(p, GroupElement):
        return p.matrix
    rep = getattr(p, "rep", None)
    if rep is not None:
        return rep.matrix
    return np.asarray(p, dtype=float)


def _steps(T: float, dt: float) -> int:
    return max(1, int(round(T / dt)))


def birkhoff_values(fs: Sequence[Observable], p, E: float, B: float, n_steps: int,
                    dt: float, gamma: FuchsianGroup) -> np.ndarray:
    """f(flow(p, j dt)) for j = 0..n_steps, one row per observable."""
    params = classify(E, B)
    pts = trajectory(_frame(p), params.generator, n_steps, dt, gamma)
    dtype = complex if any(f.complex_valued for f in fs) else float
    out = np.empty((len(fs), n_steps + 1), dtype=dtype)
    for i, f in enumerate(fs):
        out[i] = f._evaluate(pts, pruned=True)
    return out


def trapezoid_prefix(values: np.ndarray, dt: float) -> np.ndarray:
    """Cumulative trapezoid integrals: entry j is the integral over [0, j dt]."""
    csum = np.cumsum(values, axis=-1)
    out = dt * (csum - 0.5 * values[..., :1] - 0.5 * values)
    out[..., 0] = 0
    return out


def birkhoff(f: Observable, p, E: float, B: float, T: float, dt: float = 0.02,
             gamma: Optional[FuchsianGroup] = None):
    """Trapezoid time average (1/T) int_0^T f(flow(p, t)) dt.

    T is split into round(T/dt) equal steps, so the step actually used is
    T / round(T/dt).
    """
    if dt > 0.05:
        raise ValueError("dt must be <= 0.05")
    if T < 1:
        raise ValueError("T must be >= 1")
    gamma = gamma or f.gamma
    n = _steps(T, dt)
    h = T / n
    vals = birkhoff_values([f], p, E, B, n, h, gamma)[0]
    avg = trapezoid_prefix(vals, h)[-1] / T
    return avg if f.complex_valued else float(avg)


@dataclass
class BirkhoffReport:
    observable_id: str
    E: float
    B: float
    T_grid: list
    discrepancies: list
    theta_hat: Optional[float]
    theta_target: float
    liouville_ref: complex | float
    stderr: float
    intercept: Optional[float] = None

    def as_dict(self) -> dict:
        ref = complex(self.liouville_ref)
        return {
            "observable_id": self.observable_id,
            "E": self.E,
            "B": self.B,
            "T_grid": [float(t) for t in self.T_grid],
            "discrepancy": [float(d) for d in self.discrepancies],
            "theta_hat": None if self.theta_hat is None else float(self.theta_hat),
            "theta_target": float(self.theta_target),
            "liouville_ref": ref.real,
            "liouville_ref_imag": ref.imag,
            "stderr": float(self.stderr),
        }


def theta_target(lambda1: float = DEFAULT_LAMBDA1, margin: float = 1e-3) -> float:
    """Largest admissible theta < 1/2 with theta (1 - theta) <= lambda1."""
    if lambda1 >= 0.25:
        return 0.5 - margin
    return (1 - math.sqrt(1 - 4 * lambda1)) / 2


def fit_decay(T_grid, disc):
    """Least-squares slope of log disc vs log T; returns (theta_hat, intercept)."""
    T = np.asarray(T_grid, dtype=float)
    d = np.asarray(disc, dtype=float)
    if T.size < 4:
        raise FitError("need at least 4 grid points")
    if np.any(d <= 0):
        raise FitError("non-positive discrepancy")
    slope, intercept = np.polyfit(np.log(T), np.log(d), 1)
    return float(-slope), float(intercept)


def start_frames(gamma: FuchsianGroup, n: int, seed: int) -> np.ndarray:
    """n Liouville-random frames; draw j uses child seed j of SeedSequence(seed)."""
    out = []
    for child in np.random.SeedSequence(seed).spawn(n):
        rng = np.random.default_rng(child)
        while True:
            gs = sample_liouville(gamma, rng, 8)
            if gs.shape[0]:
                out.append(gs[0])
                break
    return np.array(out)


def _curve_task(args):
    fs, g0, E, B, n_max, dt, gamma, idx = args
    vals = birkhoff_values(fs, g0, E, B, n_max, dt, gamma)
    prefix = trapezoid_prefix(vals, dt)
    return prefix[:, idx] / (np.asarray(idx) * dt)


def birkhoff_matrix(fs, starts, E, B, T_grid, dt, gamma) -> np.ndarray:
    """Time averages, shape (n_starts, n_observables, n_T); one trajectory per start."""
    idx = [_steps(T, dt) for T in T_grid]
    n_max = max(idx)
    tasks = [(list(fs), s, E, B, n_max, dt, gamma, idx) for s in starts]
    return np.array(parallel_map(_curve_task, tasks))


def decay_curve(f_suite: Sequence[Observable], starts, B: float, T_grid, dt: float,
                gamma: FuchsianGroup, refs: Sequence[MeanEstimate],
                lambda1: float = DEFAULT_LAMBDA1):
    """Sup-over-starts discrepancy at critical energy, per observable and for the suite.

    Returns ``(suite_report, per_observable_reports, averages)``; the suite
    discrepancy at each T is the max over observables.
    """
    starts = np.asarray(starts)
    if starts.shape[0] < 5:
        raise ValueError("need at least 5 starts")
    T_grid = [float(t) for t in T_grid]
    if len(T_grid) < 4:
        raise FitError("need at least 4 grid points")
    E = B * B / 2
    avgs = birkhoff_matrix(f_suite, starts, E, B, T_grid, dt, gamma)
    target = theta_target(lambda1)
    reports = []
    for i, f in enumerate(f_suite):
        ref = refs[i].mean
        disc = np.max(np.abs(avgs[:, i, :] - ref), axis=0)
        theta = icpt = None
        if np.max(disc) > 1e-12:
            theta, icpt = fit_decay(T_grid, disc)
        reports.append(BirkhoffReport(f.id, E, B, T_grid, disc.tolist(), theta, target, ref,
                                      refs[i].stderr, icpt))
    suite_disc = np.max([r.discrepancies for r in reports], axis=0)
    theta = icpt = None
    if np.max(suite_disc) > 1e-12:
        theta, icpt = fit_decay(T_grid, suite_disc)
    suite = BirkhoffReport("suite", E, B, T_grid, suite_disc.tolist(), theta, target, 0.0,
                           max(r.stderr for r in reports), icpt)
    return suite, reports, avgs


def trace_rows(f: Observable, p, E: float, B: float, T: float, dt: float = 0.02,
               gamma: Optional[FuchsianGroup] = None):
    """CSV rows t, value_re, value_im, running_average_re, running_average_im."""
    gamma = gamma or f.gamma
    n = _steps(T, dt)
    h = T / n
    vals = birkhoff_values([f], p, E, B, n, h, gamma)[0].astype(complex)
    prefix = trapezoid_prefix(vals, h)
    for j in range(n + 1):
        avg = vals[0] if j == 0 else prefix[j] / (j * h)
        yield j * h, vals[j].real, vals[j].imag, avg.real, avg.imag


# --- averages over closed orbits ------------------------------------------------------

def orbit_average(f: Observable, z, E: float, B: float, nodes: int = 64):
    """(1 / 2 pi T_E) int_0^{2 pi T_E} f(Phi_t z) dt by Gauss-Legendre quadrature."""
    params = classify(E, B)
    if params.regime is not Regime.ELLIPTIC:
        raise RegimeError("orbit averages need E < E_c")
    period = params.orbit_period
    x, w = np.polynomial.legendre.leggauss(nodes)
    t = (x + 1) * period / 2
    pts = _frame(z)[None] @ exp_batch(params.generator, t)
    vals = f(pts)
    avg = np.sum(w * vals) / 2
    return avg if f.complex_valued else float(avg)


def averaged_potential(V: Observable, z, E: float, B: float, nodes: int = 64) -> float:
    """Average of a base potential over the closed magnetic orbit through z."""
    if V.fiber_mode != 0:
        raise ValueError("potential must not depend on the fiber")
    return orbit_average(V, z, E, B, nodes)


def drift_invariance(V: Observable, z, E: float, B: float, s: float, nodes: int = 64) -> float:
    """|<V>(Phi_s z) - <V>(z)|."""
    params = classify(E, B)
    moved = _frame(z) @ exp_batch(params.generator, np.array([s]))[0]
    return abs(averaged_potential(V, moved, E, B, nodes) - averaged_potential(V, z, E, B, nodes))
