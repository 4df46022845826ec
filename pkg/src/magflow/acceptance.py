"""The eight end-to-end checks run by ``magflow report``.

Every check is a pure function of its seed and returns a JSON-ready dict
``{"id", "name", "passed", "details"}``; wall-clock timings are logged,
not returned, so reports stay byte-identical across runs.
"""

from __future__ import annotations

import json
import logging
import math
import time
from fractions import Fraction

import numpy as np

from magflow import coherent, ergodic, spectrum, variational
from magflow.flows import classify, period_residual
from magflow.fuchsian import area_mc, bolza_group, degree
from magflow.sl2 import AlgebraElement, exp_raw, exp_reference_raw

log = logging.getLogger(__name__)

SPECTRAL_BS = (Fraction(1, 2), Fraction(1), Fraction(3, 2))
DECAY_T_GRID = (50.0, 125.0, 320.0, 800.0, 2000.0, 5000.0)


def _result(idx: int, name: str, passed: bool, **details) -> dict:
    return {"id": idx, "name": name, "passed": bool(passed), "details": details}


def check_spectral(k_max: int = 200) -> dict:
    worst_w = 0.0
    worst_bs = 0.0
    ladder_ok = True
    for B in SPECTRAL_BS:
        for k in range(1, k_max + 1):
            worst_w = max(worst_w, spectrum.weinstein_check(k, B))
            n = spectrum.n_levels(k, B)
            for m in range(max(n - 1, 0)):
                gap = spectrum.bohr_sommerfeld_gap(k, B, m)
                worst_bs = max(worst_bs, abs(gap.residual - 1 / k))
            bk = k * B
            if bk >= 2:
                ladder = spectrum.riemann_roch_ladder(bk, 2, math.floor(bk) - 2)
                mult = [lv.multiplicity for lv in spectrum.landau_levels(k, B, 2)]
                ladder_ok &= all(e.agrees and e.h0 == mult[e.m] for e in ladder)
    passed = worst_w <= 1e-11 and worst_bs <= 1e-10 and ladder_ok
    return _result(1, "spectral_exactness", passed, weinstein_max=worst_w,
                   bohr_sommerfeld_max_dev=worst_bs, ladder_agrees=ladder_ok)


def check_period_law(seed: int) -> dict:
    rng = np.random.default_rng(np.random.SeedSequence([seed, 2]))
    worst_period = 0.0
    for _ in range(50):
        B = rng.uniform(0.2, 3.0)
        E = rng.uniform(0.0, 0.999) * B * B / 2
        worst_period = max(worst_period, period_residual(E, B))
    worst_exp = 0.0
    for _ in range(200):
        m = AlgebraElement(*rng.normal(size=3))
        t = rng.uniform(-50, 50) / m.norm()
        a = exp_raw(m, t)
        b = exp_reference_raw(m, t)
        worst_exp = max(worst_exp, float(np.max(np.abs(a - b)) / max(1.0, np.max(np.abs(b)))))
    passed = worst_period <= 1e-10 and worst_exp <= 1e-10
    return _result(2, "period_law", passed, period_residual_max=worst_period,
                   exp_relative_max=worst_exp)


def check_variational(seed: int) -> dict:
    rng = np.random.default_rng(np.random.SeedSequence([seed, 3]))
    n = 100
    B = rng.uniform(0.3, 2.0, n)
    lam = rng.uniform(0.0, 2.5, n)
    t = rng.uniform(0.5, 10.0, n)
    init = rng.normal(size=(4, n))
    rk = variational.ode_oracle(tuple(init), lam, B, t, dt=1e-3).vector
    worst_rel = 0.0
    for j in range(n):
        cf = variational.closed_form(init[:, j], lam[j], B[j], t[j]).vector
        worst_rel = max(worst_rel, float(np.linalg.norm(cf - rk[:, j]) / np.linalg.norm(rk[:, j])))

    lyap = []
    for Bv, Ev in [(1.0, 1.0), (1.0, 2.0), (0.5, 1.0), (2.0, 2.5), (1.5, 3.0)]:
        est = variational.lyapunov_estimate(math.sqrt(2 * Ev), Bv, 40.0)
        lyap.append(abs(est / math.sqrt(2 * Ev - Bv * Bv) - 1))

    Bp = 1.3
    tg = np.linspace(0.5, 10.0, 20)
    b = variational.ode_oracle((0, 0, 0, 1), Bp, Bp, tg, dt=1e-3).b
    coef = float(np.dot(b, tg**2) / np.dot(tg**2, tg**2))
    fit_res = float(np.linalg.norm(b - coef * tg**2) / np.linalg.norm(b))
    para_res = max(fit_res, abs(coef / (Bp / 2) - 1))

    passed = worst_rel <= 1e-6 and max(lyap) <= 0.02 and para_res < 1e-8
    return _result(3, "variational_oracle", passed, closed_vs_rk4_rel_max=worst_rel,
                   lyapunov_rel_dev_max=max(lyap), parabolic_fit_residual=para_res)


def check_equidistribution(seed: int, n_starts: int = 8, n_samples: int = 200_000,
                           lambda1: float = ergodic.DEFAULT_LAMBDA1) -> dict:
    gamma = bolza_group()
    suite = ergodic.default_suite(gamma)
    ss = np.random.SeedSequence([seed, 4])
    ref_seed, start_seed = (int(c.generate_state(1)[0]) for c in ss.spawn(2))
    refs = [ergodic.liouville_average(f, gamma, n_samples, ref_seed) for f in suite]
    starts = ergodic.start_frames(gamma, n_starts, start_seed)
    report, per_obs, avgs = ergodic.decay_curve(suite, starts, 1.0, DECAY_T_GRID, 0.02,
                                                gamma, refs, lambda1)
    j2000 = DECAY_T_GRID.index(2000.0)
    at_2000 = [r.discrepancies[j2000] for r in per_obs]
    harmonic = [float(np.max(np.abs(avgs[:, i, j2000])))
                for i, f in enumerate(suite) if f.fiber_mode not in (None, 0)]
    theta = report.theta_hat
    passed = (max(at_2000) <= 0.05 and theta is not None and 0.25 <= theta <= 1.1
              and max(harmonic) <= 0.02)
    return _result(4, "critical_equidistribution", passed,
                   discrepancy_T2000=dict(zip([f.id for f in suite], at_2000)),
                   theta_hat=theta, theta_target=report.theta_target,
                   harmonic_abs_max=max(harmonic), suite=report.as_dict())


def check_regimes(seed: int, n_samples: int = 200_000) -> dict:
    gamma = bolza_group()
    bump = ergodic.default_suite(gamma)[0]
    ss = np.random.SeedSequence([seed, 5])
    ref_seed, below_seed, above_seed = (int(c.generate_state(1)[0]) for c in ss.spawn(3))
    ref = ergodic.liouville_average(bump, gamma, n_samples, ref_seed)

    B, E = 1.0, 0.25
    period = classify(E, B).orbit_period
    T = round(2000 / period) * period
    below = []
    for g in ergodic.start_frames(gamma, 3, below_seed):
        avg = ergodic.birkhoff(bump, g, E, B, T, 0.02, gamma)
        orb = ergodic.orbit_average(bump, g, E, B)
        quad_err = abs(orb - ergodic.orbit_average(bump, g, E, B, nodes=640))
        sep = abs(avg - ref.mean) / (5 * (ref.stderr + quad_err))
        below.append({"orbit_gap": abs(avg - orb), "separation_ratio": sep})
    below_ok = all(r["orbit_gap"] <= 1e-6 and r["separation_ratio"] > 1 for r in below)

    starts = ergodic.start_frames(gamma, 50, above_seed)
    vals = ergodic.birkhoff_matrix([bump], starts, 1.0, B, [2000.0], 0.02, gamma)[:, 0, 0]
    spread = float(np.std(vals, ddof=1))
    passed = below_ok and spread <= 0.1
    return _result(5, "regime_separation", passed, below=below, above_std=spread,
                   above_mean=float(np.mean(vals)), liouville=ref.mean)


def check_geometry(seed: int, n_samples: int = 1_000_000) -> dict:
    area, err = area_mc(bolza_group(), n_samples, seed)
    z = abs(area - 4 * math.pi) / err
    deg = degree(0.5, 2)
    return _result(6, "geometry", z <= 3 and deg == 1, area=area, stderr=err,
                   z_score=z, degree=deg)


def check_coherent() -> dict:
    exact = all(coherent.laguerre_q(m).coefficients == coherent.laguerre_by_operator(m)
                and coherent.evaluate(coherent.laguerre_q(m), Fraction(0)) == 1
                for m in range(9))
    unit_dev = 0.0
    for k in (16, 64):
        for m in range(6):
            unit_dev = max(unit_dev, abs(coherent.mass(k, m, coherent.Convention.UNIT_NORM)
                                         - k / (2 * math.pi)))
    diags = [coherent.norm_diagnostic(k, 1) for k in (16, 64)]
    paper_dev = max(abs(d.paper_mass - 5 * d.k / (2 * math.pi)) for d in diags)
    flagged = all(d.flagged for d in diags)
    passed = exact and unit_dev <= 1e-8 and paper_dev <= 1e-6 and flagged
    return _result(7, "coherent_diagnostics", passed, laguerre_exact=exact,
                   unit_mass_dev_max=unit_dev, paper_m1_dev_max=paper_dev,
                   paper_m1_flagged=flagged,
                   diagnostics=[d.as_dict() for d in diags])


def check_determinism(seed: int) -> dict:
    """Repeat the seeded sub-computations and compare serialized results."""
    gamma = bolza_group()
    bump = ergodic.default_suite(gamma)[0]

    def once():
        a = area_mc(gamma, 100_000, seed)
        r = ergodic.liouville_average(bump, gamma, 20_000, seed)
        s = ergodic.start_frames(gamma, 2, seed)
        b = ergodic.birkhoff_matrix([bump], s, 0.5, 1.0, [100.0], 0.02, gamma)
        return json.dumps([a, r.mean, r.stderr, b.tolist()])

    first, second = once(), once()
    return _result(8, "determinism", first == second, repeat_identical=first == second)


def run_all(seed: int, lambda1: float = ergodic.DEFAULT_LAMBDA1) -> list[dict]:
    steps = [
        lambda: check_spectral(),
        lambda: check_period_law(seed),
        lambda: check_variational(seed),
        lambda: check_equidistribution(seed, lambda1=lambda1),
        lambda: check_regimes(seed),
        lambda: check_geometry(seed),
        lambda: check_coherent(),
        lambda: check_determinism(seed),
    ]
    out = []
    for step in steps:
        t0 = time.perf_counter()
        res = step()
        log.info("check %d %s: %s in %.1f s", res["id"], res["name"],
                 "pass" if res["passed"] else "FAIL", time.perf_counter() - t0)
        out.append(res)
    return out
