"""Genus-2 Bolza surface: side pairings, Dirichlet reduction, area, degree."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from magflow.errors import IntegralityError, ReductionError, SamplingError
from magflow.sl2 import GroupElement, disk_point

INTEGRALITY_TOL = 1e-9
# A translate counts as closer only if it beats the current radius by this much;
# keeps descent from cycling between points on a shared face.
DESCENT_TOL = 1e-12

_C = np.array([[1, -1j], [1, 1j]])
_C_INV = np.linalg.inv(_C)


def to_disk_matrix(g) -> np.ndarray:
    """Cayley conjugate C g C^-1, an element of SU(1,1)."""
    m = g.matrix if isinstance(g, GroupElement) else np.asarray(g, dtype=float)
    return _C @ m @ _C_INV


def from_disk_matrix(big: np.ndarray) -> GroupElement:
    m = _C_INV @ big @ _C
    if np.max(np.abs(m.imag)) > 1e-10 * max(1.0, float(np.max(np.abs(m)))):
        raise ValueError("disk matrix is not in SU(1,1)")
    return GroupElement.from_matrix(m.real)


def bolza_disk_generators() -> list[np.ndarray]:
    """Side pairings of the regular octagon with angles pi/4, in SU(1,1)."""
    alpha = 1 + math.sqrt(2)
    r = math.sqrt(2 + 2 * math.sqrt(2))
    gens = []
    for k in range(8):
        beta = r * complex(math.cos(k * math.pi / 4), math.sin(k * math.pi / 4))
        gens.append(np.array([[alpha, beta], [beta.conjugate(), alpha]]))
    return gens


@dataclass(frozen=True)
class FuchsianGroup:
    generators: tuple
    genus: int
    reduction_max_iters: int = 10_000
    inverses: tuple = field(init=False)
    disk_generators: np.ndarray = field(init=False, repr=False, compare=False)
    domain_radius: float = field(init=False)

    def __post_init__(self):
        if self.genus < 2:
            raise ValueError("genus must be at least 2")
        gens = tuple(self.generators)
        if len(gens) != 4 * self.genus:
            raise ValueError(f"expected {4 * self.genus} side pairings, got {len(gens)}")
        for g in gens:
            raw = g.m11 * g.m22 - g.m12 * g.m21
            if abs(raw - 1) > 1e-12:
                raise ValueError(f"generator not unimodular: det={raw}")
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "inverses", tuple(g.inverse() for g in gens))
        object.__setattr__(self, "disk_generators",
                           np.array([to_disk_matrix(g) for g in gens]))
        object.__setattr__(self, "domain_radius", _estimate_domain_radius(self))

    # -- Moebius action of the generators on disk points -------------------
    def act(self, k: int, w):
        big = self.disk_generators[k]
        return (big[0, 0] * w + big[0, 1]) / (big[1, 0] * w + big[1, 1])

    def in_domain(self, w) -> np.ndarray:
        """True where no side pairing moves the point closer to 0."""
        w = np.asarray(w, dtype=complex)
        r = np.abs(w)
        ok = np.ones(w.shape, dtype=bool)
        for k in range(len(self.generators)):
            ok &= np.abs(self.act(k, w)) >= r - DESCENT_TOL
        return ok


def _estimate_domain_radius(gamma: FuchsianGroup, n_rays: int = 4096) -> float:
    """Hyperbolic circumradius of the Dirichlet domain, by bisection on rays.

    The domain is convex, so each ray from 0 leaves it exactly once.
    """
    angles = 2 * np.pi * np.arange(n_rays) / n_rays
    u = np.exp(1j * angles)
    lo = np.zeros(n_rays)
    hi = np.full(n_rays, 1 - 1e-12)
    for _ in range(60):
        mid = (lo + hi) / 2
        inside = gamma.in_domain(mid * u)
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    return float(2 * np.arctanh(np.max(hi)))


def bolza_group() -> FuchsianGroup:
    gens = [from_disk_matrix(m) for m in bolza_disk_generators()]
    return FuchsianGroup(generators=tuple(gens), genus=2)


def load_group(path) -> FuchsianGroup:
    """Read {"genus": g, "generators": [[m11, m12, m21, m22], ...]} (row-major)."""
    data = json.loads(Path(path).read_text())
    gens = []
    for row in data["generators"]:
        m11, m12, m21, m22 = (float(x) for x in row)
        gens.append(GroupElement(m11, m12, m21, m22))
    return FuchsianGroup(generators=tuple(gens), genus=int(data["genus"]),
                         reduction_max_iters=int(data.get("reduction_max_iters", 10_000)))


def reduce_batch(gs: np.ndarray, gamma: FuchsianGroup) -> np.ndarray:
    """Reduce an array of frames (N, 2, 2) into the Dirichlet domain at 0."""
    from magflow.sl2 import disk_points

    gs = np.array(gs, dtype=float, copy=True)
    w = disk_points(gs)
    gens = np.array([g.matrix for g in gamma.generators])
    for _ in range(gamma.reduction_max_iters):
        r = np.abs(w)
        best = r.copy()
        best_k = np.full(w.shape, -1)
        for k in range(len(gens)):
            rk = np.abs(gamma.act(k, w))
            better = rk < best - DESCENT_TOL
            best = np.where(better, rk, best)
            best_k = np.where(better, k, best_k)
        active = np.nonzero(best_k >= 0)[0]
        if active.size == 0:
            return gs
        ks = best_k[active]
        gs[active] = gens[ks] @ gs[active]
        w[active] = disk_points(gs[active])
    raise ReductionError(f"Dirichlet descent did not stop after {gamma.reduction_max_iters} steps")


def reduce(g: GroupElement, gamma: FuchsianGroup) -> GroupElement:
    """Dirichlet-domain representative gamma*g of the coset Gamma g."""
    out = reduce_batch(g.matrix[None], gamma)[0]
    return GroupElement.from_matrix(out)


def is_reduced(g: GroupElement, gamma: FuchsianGroup) -> bool:
    return bool(gamma.in_domain(np.array([disk_point(g)]))[0])


def sample_hyperbolic_disk(rng: np.random.Generator, n: int, radius: float) -> np.ndarray:
    """Points uniform for hyperbolic area in the disk of hyperbolic radius ``radius``."""
    u = rng.random(n)
    phi = 2 * np.pi * rng.random(n)
    rho = np.arccosh(1 + u * (math.cosh(radius) - 1))
    return np.tanh(rho / 2) * np.exp(1j * phi)


def _count_hits(gamma: FuchsianGroup, seed_seq, n: int, radius: float) -> int:
    rng = np.random.default_rng(seed_seq)
    w = sample_hyperbolic_disk(rng, n, radius)
    return int(np.count_nonzero(gamma.in_domain(w)))


def area_mc(gamma: FuchsianGroup, n_samples: int, seed: int, chunk: int = 1 << 17):
    """Monte Carlo hyperbolic area of the Dirichlet domain.

    Draws hyperbolic-uniform points in a disk enclosing the domain and
    counts those the descent leaves fixed. Returns ``(area, stderr)``.
    Chunk ``j`` uses the child seed ``SeedSequence(seed).spawn`` index ``j``,
    so the result depends only on (seed, n_samples, chunk).
    """
    if n_samples < 1000:
        raise ValueError("n_samples must be at least 1000")
    radius = gamma.domain_radius + 0.05
    n_chunks = -(-n_samples // chunk)
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    sizes = [min(chunk, n_samples - j * chunk) for j in range(n_chunks)]
    hits = sum(_count_hits(gamma, children[j], sizes[j], radius) for j in range(n_chunks))
    if hits == 0:
        raise SamplingError("no sample landed in the fundamental domain")
    disk_area = 2 * math.pi * (math.cosh(radius) - 1)
    p = hits / n_samples
    return disk_area * p, disk_area * math.sqrt(p * (1 - p) / n_samples)


@dataclass(frozen=True)
class BundleData:
    B: float
    k: int
    genus: int

    def __post_init__(self):
        if self.B <= 0:
            raise ValueError("B must be positive")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        degree(self.B, self.genus)

    @property
    def degree(self) -> int:
        return degree(self.B, self.genus)


def degree(B: float, genus: int) -> int:
    """Degree 2B(g-1) of a line bundle with curvature -iB vol."""
    x = 2 * B * (genus - 1)
    n = round(x)
    if abs(x - n) > INTEGRALITY_TOL:
        raise IntegralityError(f"2B(g-1) = {x!r} is not an integer")
    return int(n)
