"""Command-line front end: seeded reproducible runs emitting CSV/JSON/SVG data.

Subcommands: orbit, density, cycles, interfere, ops-check, dispersion.
Option precedence is CLI flags > config file (--config, JSON object) >
defaults; NRQ_SEED serves as the seed fallback.  Outputs are written
atomically and hashed, and identical configs with identical seeds produce
byte-identical files.
"""

import argparse
import hashlib
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .measure import (
    EmpiricalDensity,
    InterferenceConfig,
    InvalidRange,
    accumulate_density,
    cauchy_density,
    find_cycles,
    interference_experiment,
    peak_detect,
)
from .newton import IterationPolicy, iterate_orbit
from .parsing import DegreeZeroError, PolynomialSyntaxError, parse_polynomial
from .qops import NaturalUnits, klein_gordon_dispersion, ops_check

CSV_MAGIC = "# nrq-csv v1"

COMMANDS = ("orbit", "density", "cycles", "interfere", "ops-check", "dispersion")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Effective settings for one run, after precedence resolution."""

    command: str
    options: dict
    output_path: str
    output_format: str


@dataclass
class RunReport:
    command: str
    config: dict
    wall_time_s: float
    restart_count: int
    statuses: dict
    outputs: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(
            {
                "command": self.command,
                "config": self.config,
                "wall_time_s": self.wall_time_s,
                "restart_count": self.restart_count,
                "statuses": self.statuses,
                "outputs": self.outputs,
            },
            sort_keys=True,
        )


# ---------------------------------------------------------------------------
# emission


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def emit_csv(columns, rows, meta: dict | None = None) -> str:
    """CSV v1: magic line, '# key=value' metadata, header, 17-digit rows."""
    lines = [CSV_MAGIC]
    for key in sorted(meta or {}):
        lines.append(f"# {key}={_fmt((meta or {})[key])}")
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


@dataclass
class ParsedCsv:
    meta: dict
    columns: list
    cells: list

    def values(self) -> np.ndarray:
        return np.array([[float(c) for c in row] for row in self.cells], dtype=float)

    def reemit(self) -> str:
        lines = [CSV_MAGIC]
        for key in sorted(self.meta):
            lines.append(f"# {key}={self.meta[key]}")
        lines.append(",".join(self.columns))
        for row in self.cells:
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"


def parse_csv(text: str) -> ParsedCsv:
    lines = text.split("\n")
    if not lines or lines[0] != CSV_MAGIC:
        raise ValueError(f"missing {CSV_MAGIC!r} header")
    meta = {}
    i = 1
    while i < len(lines) and lines[i].startswith("# "):
        key, _, value = lines[i][2:].partition("=")
        meta[key] = value
        i += 1
    columns = lines[i].split(",")
    cells = [line.split(",") for line in lines[i + 1 :] if line]
    return ParsedCsv(meta, columns, cells)


def emit_svgdata(
    density: EmpiricalDensity,
    overlay=None,
    peaks=None,
    width: int = 640,
    height: int = 400,
) -> str:
    """Standalone SVG: axes, density polyline, optional analytic overlay and peak markers."""
    pad = 40.0
    centers = density.centers()
    dens = density.densities()
    curves = [dens]
    if overlay is not None:
        from scipy.integrate import quad

        mass, _ = quad(overlay, density.lo, density.hi, limit=200)
        curves.append(np.array([float(overlay(c)) for c in centers]) / mass)
    ymax = max(float(c.max()) for c in curves) or 1.0
    ymax *= 1.05

    def px(x):
        return pad + (x - density.lo) / (density.hi - density.lo) * (width - 2 * pad)

    def py(y):
        return height - pad - (y / ymax) * (height - 2 * pad)

    def polyline(ys, cls):
        pts = " ".join(f"{px(x):.3f},{py(y):.3f}" for x, y in zip(centers, ys))
        return f'<polyline class="{cls}" fill="none" points="{pts}"/>'

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<line class="axis" x1="{pad:.3f}" y1="{height - pad:.3f}" '
        f'x2="{width - pad:.3f}" y2="{height - pad:.3f}"/>',
        f'<line class="axis" x1="{pad:.3f}" y1="{pad:.3f}" '
        f'x2="{pad:.3f}" y2="{height - pad:.3f}"/>',
        f'<text class="tick" x="{pad:.3f}" y="{height - pad / 2:.3f}">{_fmt(density.lo)}</text>',
        f'<text class="tick" x="{width - pad:.3f}" y="{height - pad / 2:.3f}">{_fmt(density.hi)}</text>',
        polyline(dens, "density"),
    ]
    if overlay is not None:
        parts.append(polyline(curves[1], "overlay"))
    for center, height_value, _prom in peaks or []:
        parts.append(
            f'<circle class="peak" cx="{px(center):.3f}" cy="{py(height_value):.3f}" r="4"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _atomic_write(path: str, text: str):
    data = text.encode("utf-8")
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    digest = hashlib.sha256(data).hexdigest()
    return {"path": path, "sha256": digest, "bytes": len(data)}


# ---------------------------------------------------------------------------
# command implementations


def _parse_range(text: str):
    lo_str, sep, hi_str = str(text).partition(":")
    if not sep:
        raise ConfigError(f"range must be lo:hi, got {text!r}")
    try:
        lo, hi = float(lo_str), float(hi_str)
    except ValueError as exc:
        raise ConfigError(f"bad range {text!r}: {exc}") from None
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise ConfigError(f"range must satisfy lo < hi, got {text!r}")
    return lo, hi


def _problem(options):
    try:
        return parse_polynomial(options["poly"])
    except (PolynomialSyntaxError, DegreeZeroError, ValueError) as exc:
        raise ConfigError(f"bad polynomial: {exc}") from exc


def _density_rows(density: EmpiricalDensity):
    return list(zip(density.centers(), density.densities()))


def _density_meta(density: EmpiricalDensity, extra: dict) -> dict:
    meta = {
        "lo": density.lo,
        "hi": density.hi,
        "bins": density.bins,
        "in_range": density.in_range,
        "below": density.below_count,
        "above": density.above_count,
        "total": density.total,
        "restarts": density.restarts,
    }
    meta.update(extra)
    return meta


def _run_orbit(cfg: RunConfig):
    opt = cfg.options
    problem = _problem(opt)
    policy = IterationPolicy(max_steps=opt["steps"], convergence_tol=opt["tol"])
    orbit = iterate_orbit(problem, opt["x0"], policy)
    statuses = {
        "status": orbit.status.value,
        "steps_recorded": len(orbit.iterates) - 1,
        "event_step": orbit.step,
        "final": orbit.iterates[-1],
    }
    meta = {"poly": opt["poly"], "x0": opt["x0"], "status": orbit.status.value}
    rows = list(enumerate(orbit.iterates))
    if cfg.output_format == "json":
        text = json.dumps(
            {"meta": {k: _fmt(v) for k, v in meta.items()}, "iterates": list(orbit.iterates)},
            sort_keys=True,
        ) + "\n"
    else:
        text = emit_csv(("step", "x"), rows, meta)
    return text, statuses, 0


def _run_density(cfg: RunConfig):
    opt = cfg.options
    problem = _problem(opt)
    lo, hi = _parse_range(opt["range"])
    density = accumulate_density(
        problem, opt.get("x0"), opt["burnin"], opt["iters"], lo, hi, opt["bins"], seed=opt["seed"]
    )
    statuses = {"in_range": density.in_range, "below": density.below_count, "above": density.above_count}
    meta = _density_meta(density, {"poly": opt["poly"], "seed": opt["seed"]})
    if cfg.output_format == "svg":
        overlay = cauchy_density if opt.get("overlay_cauchy") else None
        text = emit_svgdata(density, overlay=overlay)
    elif cfg.output_format == "json":
        text = json.dumps(
            {
                "meta": {k: _fmt(v) for k, v in meta.items()},
                "bin_centers": density.centers().tolist(),
                "densities": density.densities().tolist(),
            },
            sort_keys=True,
        ) + "\n"
    else:
        text = emit_csv(("bin_center", "density"), _density_rows(density), meta)
    return text, statuses, density.restarts


def _run_cycles(cfg: RunConfig):
    opt = cfg.options
    problem = _problem(opt)
    lo, hi = _parse_range(opt["range"])
    scan = find_cycles(problem, opt["period"], lo, hi, opt["grid"])
    statuses = {
        "cycles_found": len(scan.cycles),
        "pole_intervals": len(scan.pole_intervals),
    }
    if cfg.output_format == "json":
        text = json.dumps(
            {
                "period": opt["period"],
                "cycles": [
                    {"points": list(c.points), "residual": c.residual} for c in scan.cycles
                ],
                "pole_intervals": [list(iv) for iv in scan.pole_intervals],
            },
            sort_keys=True,
        ) + "\n"
    else:
        rows = [
            (ci, pi, p)
            for ci, cycle in enumerate(scan.cycles)
            for pi, p in enumerate(cycle.points)
        ]
        meta = {
            "poly": opt["poly"],
            "period": opt["period"],
            "cycles": len(scan.cycles),
            "pole_intervals": len(scan.pole_intervals),
        }
        text = emit_csv(("cycle", "point_index", "x"), rows, meta)
    return text, statuses, 0


def _run_interfere(cfg: RunConfig):
    opt = cfg.options
    lo, hi = _parse_range(opt["range"])
    config = InterferenceConfig(
        delta=opt["delta"],
        iterations=opt["iters"],
        burn_in=opt["burnin"],
        lo=lo,
        hi=hi,
        bins=opt["bins"],
        x0=opt.get("x0"),
    )
    density = interference_experiment(config, seed=opt["seed"])
    peaks = peak_detect(density, opt["min_prominence"])
    statuses = {
        "peaks": [[c, h, p] for c, h, p in peaks],
        "in_range": density.in_range,
    }
    meta = _density_meta(density, {"delta": opt["delta"], "seed": opt["seed"]})
    if cfg.output_format == "svg":
        text = emit_svgdata(density, peaks=peaks)
    elif cfg.output_format == "json":
        text = json.dumps(
            {
                "meta": {k: _fmt(v) for k, v in meta.items()},
                "bin_centers": density.centers().tolist(),
                "densities": density.densities().tolist(),
                "peaks": [[c, h, p] for c, h, p in peaks],
            },
            sort_keys=True,
        ) + "\n"
    else:
        text = emit_csv(("bin_center", "density"), _density_rows(density), meta)
    return text, statuses, density.restarts


def _run_ops_check(cfg: RunConfig):
    opt = cfg.options
    if cfg.output_format != "json":
        raise ConfigError("ops-check only supports --format json")
    sizes = opt["n"] or [64]
    reports = [
        ops_check(n, spacing=opt["spacing"], seed=opt["seed"], evolve_steps=opt["steps"])
        for n in sizes
    ]
    worst = max(
        v for r in reports for k, v in r.items() if k != "n"
    )
    statuses = {"sizes": list(sizes), "worst_residual": worst}
    text = json.dumps({"reports": reports}, sort_keys=True) + "\n"
    return text, statuses, 0


def _run_dispersion(cfg: RunConfig):
    opt = cfg.options
    units = NaturalUnits(hbar=opt["hbar"], c=opt["c"])
    if opt["model"] == "kg":
        ks = np.linspace(opt["kmin"], opt["kmax"], opt["samples"])
        omegas = klein_gordon_dispersion(ks, opt["mass"], units)
        meta = {"model": "kg", "mass": opt["mass"], "c": opt["c"], "hbar": opt["hbar"]}
    else:
        from .qops import Grid, wavevector_values

        grid = Grid(opt["n"], opt["spacing"])
        ks = np.sort(wavevector_values(grid))
        hoppings = opt["t"] or [1.0]
        dx = grid.spacing
        omegas = opt["eps"] - sum(
            2.0 * t * np.cos(r * ks * dx) for r, t in enumerate(hoppings, start=1)
        )
        meta = {"model": "tb", "eps": opt["eps"], "n": opt["n"], "spacing": opt["spacing"]}
    rows = list(zip(ks, omegas))
    statuses = {"model": opt["model"], "samples": len(rows)}
    if cfg.output_format == "json":
        text = json.dumps(
            {
                "meta": {k: _fmt(v) for k, v in meta.items()},
                "k": np.asarray(ks).tolist(),
                "omega": np.asarray(omegas).tolist(),
            },
            sort_keys=True,
        ) + "\n"
    else:
        text = emit_csv(("k", "omega"), rows, meta)
    return text, statuses, 0


_RUNNERS = {
    "orbit": _run_orbit,
    "density": _run_density,
    "cycles": _run_cycles,
    "interfere": _run_interfere,
    "ops-check": _run_ops_check,
    "dispersion": _run_dispersion,
}

_EXTENSIONS = {"csv": "csv", "json": "json", "svg": "svg"}


def run(config: RunConfig) -> RunReport:
    """Execute one command and write its output atomically."""
    started = time.perf_counter()
    text, statuses, restarts = _RUNNERS[config.command](config)
    output = _atomic_write(config.output_path, text)
    echo = {k: None if v is None else _fmt(v) for k, v in sorted(config.options.items())}
    return RunReport(
        command=config.command,
        config={"options": echo,
                "output_path": config.output_path,
                "output_format": config.output_format},
        wall_time_s=time.perf_counter() - started,
        restart_count=restarts,
        statuses=statuses,
        outputs=[output],
    )


# ---------------------------------------------------------------------------
# argument handling

_DEFAULTS = {
    "orbit": {"poly": None, "x0": None, "steps": 100, "tol": 1e-12},
    "density": {
        "poly": None,
        "x0": None,
        "iters": 201000,
        "burnin": 1000,
        "bins": 200,
        "range": "-10:10",
        "seed": None,
        "overlay_cauchy": False,
    },
    "cycles": {"poly": None, "period": 1, "range": "-3:3", "grid": 1000},
    "interfere": {
        "delta": None,
        "iters": 201000,
        "burnin": 1000,
        "bins": 280,
        "range": "-2:5",
        "x0": None,
        "seed": None,
        "min_prominence": 0.05,
    },
    "ops-check": {"n": None, "spacing": 1.0, "steps": 1000, "seed": None},
    "dispersion": {
        "model": "kg",
        "mass": 1.0,
        "c": 1.0,
        "hbar": 1.0,
        "kmin": -10.0,
        "kmax": 10.0,
        "samples": 201,
        "n": 64,
        "spacing": 1.0,
        "eps": 2.0,
        "t": None,
    },
}

_REQUIRED = {
    "orbit": ("poly", "x0"),
    "density": ("poly",),
    "cycles": ("poly",),
    "interfere": ("delta",),
    "ops-check": (),
    "dispersion": (),
}

_DEFAULT_FORMAT = {
    "orbit": "csv",
    "density": "csv",
    "cycles": "json",
    "interfere": "csv",
    "ops-check": "json",
    "dispersion": "csv",
}


class _Parser(argparse.ArgumentParser):
    """Raises ConfigError instead of exiting, so errors emit one JSON line."""

    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="nrq",
        description="Newton-Raphson map experiments and periodic-grid operator checks",
    )
    parser.add_argument("--version", action="version", version=f"nrq {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text, flags):
        p = sub.add_parser(name, help=help_text, argument_default=argparse.SUPPRESS)
        for args, kwargs in flags:
            p.add_argument(*args, **kwargs)
        p.add_argument("--config", help="JSON config file (flags override it)")
        p.add_argument("--format", dest="format", choices=("csv", "json", "svg"))
        p.add_argument("--out", dest="out", help="output path (default nrq-<command>.<ext>)")
        return p

    add("orbit", "record a Newton-map orbit", [
        (("--poly",), {"help": "polynomial, e.g. 'x^2+1'"}),
        (("--x0",), {"type": float}),
        (("--steps",), {"type": int}),
        (("--tol",), {"type": float}),
    ])
    add("density", "accumulate an orbit visit density", [
        (("--poly",), {}),
        (("--x0",), {"type": float}),
        (("--iters",), {"type": int}),
        (("--burnin",), {"type": int}),
        (("--bins",), {"type": int}),
        (("--range",), {"help": "lo:hi (use --range=-10:10 for negative bounds)"}),
        (("--seed",), {"type": int}),
        (("--overlay-cauchy",), {"action": "store_true", "dest": "overlay_cauchy"}),
    ])
    add("cycles", "locate periodic cycles of the map", [
        (("--poly",), {}),
        (("--period",), {"type": int}),
        (("--range",), {}),
        (("--grid",), {"type": int}),
    ])
    add("interfere", "two-well interference density", [
        (("--delta",), {"type": float}),
        (("--iters",), {"type": int}),
        (("--burnin",), {"type": int}),
        (("--bins",), {"type": int}),
        (("--range",), {}),
        (("--x0",), {"type": float}),
        (("--seed",), {"type": int}),
        (("--min-prominence",), {"type": float, "dest": "min_prominence"}),
    ])
    add("ops-check", "operator residual report", [
        (("--n",), {"type": int, "action": "append"}),
        (("--spacing",), {"type": float}),
        (("--steps",), {"type": int}),
        (("--seed",), {"type": int}),
    ])
    add("dispersion", "emit a dispersion relation omega(k)", [
        (("--model",), {"choices": ("kg", "tb")}),
        (("--mass",), {"type": float}),
        (("--c",), {"type": float}),
        (("--hbar",), {"type": float}),
        (("--kmin",), {"type": float}),
        (("--kmax",), {"type": float}),
        (("--samples",), {"type": int}),
        (("--n",), {"type": int}),
        (("--spacing",), {"type": float}),
        (("--eps",), {"type": float}),
        (("--t",), {"type": float, "action": "append"}),
    ])
    return parser


def resolve_config(namespace: argparse.Namespace) -> RunConfig:
    """Apply precedence: CLI flags > config file > defaults (+ NRQ_SEED)."""
    command = namespace.command
    cli_options = {k: v for k, v in vars(namespace).items() if k != "command"}
    options = dict(_DEFAULTS[command])
    config_path = cli_options.pop("config", None)
    if config_path:
        try:
            with open(config_path, encoding="utf-8") as fh:
                file_options = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        if not isinstance(file_options, dict):
            raise ConfigError("config file must hold a JSON object")
        known = set(options) | {"format", "out"}
        unknown = set(file_options) - known
        if unknown:
            raise ConfigError(f"unknown config keys for {command}: {sorted(unknown)}")
        options.update(file_options)
    options.update(cli_options)

    output_format = options.pop("format", None) or _DEFAULT_FORMAT[command]
    output_path = options.pop("out", None) or f"nrq-{command}.{_EXTENSIONS[output_format]}"

    if "seed" in options and options["seed"] is None:
        env_seed = os.environ.get("NRQ_SEED")
        if env_seed is not None:
            try:
                options["seed"] = int(env_seed)
            except ValueError as exc:
                raise ConfigError(f"bad NRQ_SEED {env_seed!r}") from exc
        else:
            options["seed"] = 0

    for key in _REQUIRED[command]:
        if options.get(key) is None:
            raise ConfigError(f"missing required option --{key.replace('_', '-')}")
    return RunConfig(command, options, output_path, output_format)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        try:
            namespace = parser.parse_args(argv)
        except SystemExit as exc:  # --help / --version
            return int(exc.code or 0)
        config = resolve_config(namespace)
        report = run(config)
    except (ConfigError, InvalidRange, DegreeZeroError, PolynomialSyntaxError, ValueError) as exc:
        payload = {"error": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, PolynomialSyntaxError):
            payload["position"] = exc.position
        print(json.dumps(payload), file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - boundary: report and exit 3
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return EXIT_RUNTIME
    print(report.to_json())
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
