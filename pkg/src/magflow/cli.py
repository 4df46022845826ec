"""Command-line front end: ``magflow <command> [flags]``.

Settings resolve as flags > ``--config`` JSON file > defaults, and the
resolved config is embedded in every artifact (a ``# config:`` comment
line for CSV, a ``config`` key for JSON).  Seeded outputs depend only on
the resolved config, so equal configs give byte-identical files.

Exit codes: 0 success, 1 error (a JSON ``error`` object is printed),
2 ``report`` ran but at least one check failed.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from magflow import acceptance, coherent, ergodic, spectrum, variational
from magflow.errors import ConfigError, MagflowError
from magflow.flows import FramePoint, classify, orbit_csv_rows
from magflow.fuchsian import area_mc, bolza_group, degree, load_group
from magflow.sl2 import GroupElement, frame_from_disk

COMMANDS = ("spectrum", "orbit", "birkhoff", "decay", "variational", "area", "coherent", "report")
DEFAULT_FORMAT = {
    "spectrum": "csv", "orbit": "csv", "birkhoff": "json", "decay": "json",
    "variational": "csv", "area": "json", "coherent": "json", "report": "json",
}
OBSERVABLES = ("bump0", "bump1", "harmonic1", "harmonic2", "harmonic3")


@dataclass
class RunConfig:
    command: str
    B: float = 1.0
    E: Optional[float] = None  # None means the critical energy B^2/2
    k: int = 10
    k_list: Optional[list] = None
    m: int = 1
    genus: int = 2
    T: float = 100.0
    dt: float = 0.02
    T_grid: Optional[list] = None
    n_samples: int = 200_000
    n_starts: int = 8
    seed: int = 0
    output: Optional[str] = None
    format: Optional[str] = None
    exact_rational: bool = False
    lambda1: float = ergodic.DEFAULT_LAMBDA1
    observable: str = "bump0"
    start: Optional[list] = None  # [re, im, theta] of the start frame in the disk
    init: list = field(default_factory=lambda: [1.0, 1.0, 1.0, 1.0])
    convention: str = coherent.Convention.UNIT_NORM.value
    r_max: float = 2.0
    n_r: int = 201
    group: Optional[str] = None

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.format is None:
            self.format = DEFAULT_FORMAT[self.command]
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        if self.command in ("report", "area", "decay") and self.format != "json":
            raise ConfigError(f"{self.command} writes JSON only")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.B <= 0 or not math.isfinite(self.B):
            raise ConfigError("B must be positive")
        if self.E is not None and (self.E < 0 or not math.isfinite(self.E)):
            raise ConfigError("E must be non-negative")
        if self.dt <= 0 or self.T <= 0:
            raise ConfigError("T and dt must be positive")
        if self.k < 1 or self.genus < 2:
            raise ConfigError("need k >= 1 and genus >= 2")
        if self.observable not in OBSERVABLES:
            raise ConfigError(f"observable must be one of {', '.join(OBSERVABLES)}")
        if self.start is not None and len(self.start) != 3:
            raise ConfigError("start needs three numbers: re, im, theta")
        if len(self.init) != 4:
            raise ConfigError("init needs four numbers: a, b, c, d")
        coherent.Convention(self.convention)
        return self

    @property
    def energy(self) -> float:
        return self.B * self.B / 2 if self.E is None else self.E

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("output")
        return d


def _floats(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}") from exc


def _ints(text: str) -> list:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad integer list {text!r}") from exc


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="magflow", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    # every default is None so that only explicit flags override the config file
    add = parser.add_argument
    add("--config", help="JSON file with RunConfig fields")
    add("--B", type=float)
    add("--E", type=float)
    add("--k", type=int)
    add("--k-list", dest="k_list", type=_ints, help="comma-separated k values")
    add("--m", type=int)
    add("--genus", type=int)
    add("--T", type=float)
    add("--dt", type=float)
    add("--T-grid", dest="T_grid", type=_floats, help="comma-separated times")
    add("--n-samples", dest="n_samples", type=int)
    add("--n-starts", dest="n_starts", type=int)
    add("--seed", type=int)
    add("--output", "-o")
    add("--format", choices=("csv", "json"))
    add("--exact-rational", dest="exact_rational", action="store_const", const=True)
    add("--lambda1", type=float)
    add("--observable", choices=OBSERVABLES)
    add("--start", type=_floats, help="re,im,theta of the start frame")
    add("--init", type=_floats, help="a,b,c,d initial variational data")
    add("--convention", choices=[c.value for c in coherent.Convention])
    add("--r-max", dest="r_max", type=float)
    add("--n-r", dest="n_r", type=int)
    add("--group", help="JSON file with side-pairing generators")
    return parser


def resolve_config(argv) -> RunConfig:
    ns = vars(build_parser().parse_args(argv))
    values = {}
    if ns.get("config"):
        try:
            loaded = json.loads(Path(ns["config"]).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        names = {f.name for f in dataclasses.fields(RunConfig)}
        for key, val in loaded.items():
            key = key.replace("-", "_")
            if key not in names or key == "command":
                raise ConfigError(f"unknown config key {key!r}")
            values[key] = val
    for key, val in ns.items():
        if key != "config" and key != "command" and val is not None:
            values[key] = val
    try:
        cfg = RunConfig(command=ns["command"], **values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg.validate()


# --- commands -----------------------------------------------------------------

def _group(cfg: RunConfig):
    return load_group(cfg.group) if cfg.group else bolza_group()


def _start(cfg: RunConfig, gamma):
    if cfg.start is not None:
        re, im, theta = cfg.start
        return frame_from_disk(complex(re, im), theta)
    return GroupElement.from_matrix(ergodic.start_frames(gamma, 1, cfg.seed)[0])


def _observable(cfg: RunConfig, gamma):
    return ergodic.default_suite(gamma)[OBSERVABLES.index(cfg.observable)]


def _csv(header, rows, cfg: RunConfig) -> str:
    buf = io.StringIO()
    buf.write("# config: " + json.dumps(cfg.as_dict(), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if x is None else x for x in row])
    return buf.getvalue()


def cmd_spectrum(cfg: RunConfig):
    B = spectrum._frac(cfg.B)
    ks = cfg.k_list or [cfg.k]
    rows = [r for k in ks for r in spectrum.level_rows(k, B, cfg.genus, cfg.exact_rational)]
    if cfg.format == "csv":
        return _csv(["k", "m", "value", "scaled", "multiplicity"], rows, cfg)
    return {
        "levels": [dict(zip(["k", "m", "value", "scaled", "multiplicity"], r)) for r in rows],
        "weinstein_max": max(spectrum.weinstein_check(k, B, cfg.exact_rational) for k in ks),
        "degree": degree(cfg.B, cfg.genus),
        "critical_approach": [list(x) for x in spectrum.critical_approach(B, ks)],
    }


def cmd_orbit(cfg: RunConfig):
    gamma = _group(cfg)
    params = classify(cfg.energy, cfg.B)
    p = FramePoint.make(_start(cfg, gamma), params, gamma)
    rows = list(orbit_csv_rows(p, cfg.T, cfg.dt, gamma))
    header = ["t", "m11", "m12", "m21", "m22", "disk_re", "disk_im"]
    if cfg.format == "csv":
        return _csv(header, rows, cfg)
    start, final = np.array(rows[0][1:5]), np.array(rows[-1][1:5])
    return {
        "regime": params.regime.value,
        "samples": [dict(zip(header, r)) for r in rows],
        "final_minus_start": float(np.max(np.abs(final - start))),
    }


def cmd_birkhoff(cfg: RunConfig):
    gamma = _group(cfg)
    f = _observable(cfg, gamma)
    g0 = _start(cfg, gamma)
    if cfg.format == "csv":
        rows = ergodic.trace_rows(f, g0, cfg.energy, cfg.B, cfg.T, cfg.dt, gamma)
        return _csv(["t", "value_re", "value_im", "average_re", "average_im"], rows, cfg)
    avg = complex(ergodic.birkhoff(f, g0, cfg.energy, cfg.B, cfg.T, cfg.dt, gamma))
    ref = ergodic.liouville_average(f, gamma, cfg.n_samples, cfg.seed)
    return {
        "observable_id": f.id,
        "E": cfg.energy,
        "B": cfg.B,
        "regime": classify(cfg.energy, cfg.B).regime.value,
        "T": cfg.T,
        "average": avg.real,
        "average_imag": avg.imag,
        "liouville_ref": complex(ref.mean).real,
        "stderr": ref.stderr,
    }


def cmd_decay(cfg: RunConfig):
    gamma = _group(cfg)
    suite = ergodic.default_suite(gamma)
    T_grid = cfg.T_grid or list(acceptance.DECAY_T_GRID)
    ref_seed, start_seed = (int(c.generate_state(1)[0])
                            for c in np.random.SeedSequence(cfg.seed).spawn(2))
    refs = [ergodic.liouville_average(f, gamma, cfg.n_samples, ref_seed) for f in suite]
    starts = ergodic.start_frames(gamma, cfg.n_starts, start_seed)
    suite_rep, reports, _ = ergodic.decay_curve(suite, starts, cfg.B, T_grid, cfg.dt, gamma,
                                                refs, cfg.lambda1)
    return {"suite": suite_rep.as_dict(), "observables": [r.as_dict() for r in reports]}


def cmd_variational(cfg: RunConfig):
    lam = math.sqrt(2 * cfg.energy)
    n = max(1, int(round(cfg.T / cfg.dt)))
    t = np.linspace(0.0, cfg.T, n + 1)
    if cfg.format == "csv":
        rows = variational.state_rows(cfg.init, lam, cfg.B, t)
        return _csv(["t", "a", "b", "c", "d", "bound_ratio"], rows, cfg)
    rep = variational.growth_check(lam, cfg.B, t[1:])
    bound = variational.growth_bound(1, cfg.energy, cfg.B)
    out = {
        "lam": lam, "B": cfg.B, "regime": classify(cfg.energy, cfg.B).regime.value,
        "growth_rate": rep.rate, "max_ratio": rep.max_ratio, "bounded": rep.bounded,
        "m_1": bound.m_n,
    }
    if lam > cfg.B + variational.BRANCH_TOL and cfg.T >= 20:
        out["lyapunov_estimate"] = variational.lyapunov_estimate(lam, cfg.B, cfg.T)
    return out


def cmd_area(cfg: RunConfig):
    gamma = _group(cfg)
    area, err = area_mc(gamma, cfg.n_samples, cfg.seed)
    target = 4 * math.pi * (gamma.genus - 1)
    return {"area": area, "stderr": err, "target": target,
            "z_score": abs(area - target) / err, "genus": gamma.genus}


def cmd_coherent(cfg: RunConfig):
    r = np.linspace(0.0, cfg.r_max, cfg.n_r)
    if cfg.format == "csv":
        return _csv(["r", "amplitude", "convention"],
                    coherent.profile_rows(cfg.k, cfg.m, r, cfg.convention), cfg)
    diag = coherent.norm_diagnostic(cfg.k, cfg.m)
    return {"diagnostic": diag.as_dict(), "positive_roots": coherent.positive_root_count(cfg.m)}


def cmd_report(cfg: RunConfig):
    checks = acceptance.run_all(cfg.seed, cfg.lambda1)
    return {"checks": checks, "passed": all(c["passed"] for c in checks)}


HANDLERS = {
    "spectrum": cmd_spectrum, "orbit": cmd_orbit, "birkhoff": cmd_birkhoff,
    "decay": cmd_decay, "variational": cmd_variational, "area": cmd_area,
    "coherent": cmd_coherent, "report": cmd_report,
}


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _write(text: str, output: Optional[str]) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


def run(config: RunConfig) -> int:
    result = HANDLERS[config.command](config)
    if isinstance(result, str):
        _write(result, config.output)
        return 0
    result = {"command": config.command, "config": config.as_dict(), **result}
    _write(_json_text(result), config.output)
    if config.command == "report" and not result["passed"]:
        return 2
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stderr)
    cfg = None
    try:
        cfg = resolve_config(sys.argv[1:] if argv is None else argv)
        return run(cfg)
    except (MagflowError, ValueError, IndexError, OverflowError) as exc:
        code = getattr(exc, "code", type(exc).__name__)
        err = {"error": {"code": code, "message": str(exc)},
               "config": cfg.as_dict() if cfg else None}
        sys.stdout.write(_json_text(err))
        return 1


if __name__ == "__main__":
    sys.exit(main())
