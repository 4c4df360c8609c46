"""Command-line front end: ``spectral-kde <command> [--config PATH] ...``.

Commands read a JSON config (validated against a published schema, with
defaults filled in), write CSV/JSON outputs plus ``manifest.json`` to
``--out``, and exit with 0 on success, 2 on configuration errors and 3 on
numerical failures.
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import logging
import math
import platform
import sys
from pathlib import Path

import jsonschema
import numpy as np
import scipy

from . import __version__
from .errors import FrameDepthError, GridError, NumericalError, SpectralBudgetError
from .estimators import SampleSet, choose_Jn
from .frames import analyze_expansion, build_frame, calibrate_cdiamond, synthesize
from .geometry import make_space
from .risk import EstimatorRecipe, rate_experiment
from .sim import RandomStream, density_sample, make_density
from .spectral import Multiplier, SpectralKernel, psi0, psi_j, random_bandlimited

log = logging.getLogger("spectral_kde")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


# ---------------------------------------------------------------------------
# schema
# ---------------------------------------------------------------------------

_SPACE = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["circle", "jacobi", "sphere2", "su2"]},
        "alpha": {"type": "number", "exclusiveMinimum": -1},
        "beta": {"type": "number", "exclusiveMinimum": -1},
        "k_max": {"type": "integer", "minimum": 1},
    },
    "required": ["kind"],
    "additionalProperties": False,
    "default": {"kind": "circle"},
}

_DENSITY = {
    "type": "object",
    "properties": {
        "form": {"enum": ["uniform", "bandlimited", "heat_mixture", "smooth", "kinked"]},
        "band": {"type": "number", "exclusiveMinimum": 0},
        "roughness": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        "centers": {"type": "array"},
        "times": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
        "weights": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "s": {"type": "number", "exclusiveMinimum": 0},
        "center": {},
        "t_max": {"type": "number", "exclusiveMinimum": 0},
        "t_min": {"type": "number", "exclusiveMinimum": 0},
        "amplitude": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
    },
    "required": ["form"],
    "additionalProperties": False,
    "default": {"form": "smooth", "s": 2.0},
}

_ESTIMATOR = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["kernel", "linear", "threshold"], "default": "kernel"},
        "s": {"type": "number", "exclusiveMinimum": 0, "default": 2.0},
        "delta": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "J": {"type": "integer", "minimum": 0},
        "b": {"type": "number", "exclusiveMinimum": 1, "default": 2.0},
        "c6": {"type": "number", "exclusiveMinimum": 0, "default": 1.0},
        "kappa": {"type": "number", "exclusiveMinimum": 0},
        "c_diamond": {"type": "number", "minimum": 1},
        "A": {"type": "number", "minimum": 4},
        "lambda_n": {"type": "number", "minimum": 0},
        "sup_norm_mode": {"type": "boolean", "default": False},
    },
    "additionalProperties": False,
    "default": {},
}

_P = {"oneOf": [{"type": "number", "minimum": 1}, {"const": "inf"}], "default": 2.0}
_SEED = {"type": "integer", "minimum": 0, "maximum": 2**64 - 1, "default": 20240917}
_THREADS = {"type": "integer", "minimum": 1, "default": 1}

SCHEMAS = {
    "estimate": {
        "type": "object",
        "properties": {
            "space": _SPACE,
            "density": _DENSITY,
            "estimator": _ESTIMATOR,
            "n": {"type": "integer", "minimum": 2, "default": 10000},
            "samples": {"type": "string"},
            "grid_resolution": {"type": "integer", "minimum": 4, "default": 64},
            "seed": _SEED,
            "threads": _THREADS,
        },
        "additionalProperties": False,
    },
    "bench-rates": {
        "type": "object",
        "properties": {
            "space": _SPACE,
            "density": _DENSITY,
            "estimator": _ESTIMATOR,
            "n_grid": {"type": "array", "items": {"type": "integer", "minimum": 2}, "minItems": 4},
            "reps": {"type": "integer", "minimum": 2, "default": 30},
            "p": _P,
            "r": {"type": "number", "minimum": 1},
            "seed": _SEED,
            "threads": _THREADS,
        },
        "required": ["n_grid"],
        "additionalProperties": False,
    },
    "frame-check": {
        "type": "object",
        "properties": {
            "space": _SPACE,
            "b": {"type": "number", "exclusiveMinimum": 1, "default": 2.0},
            "J_max": {"type": "integer", "minimum": 0, "default": 4},
            "c6": {"type": "number", "exclusiveMinimum": 0, "default": 1.0},
            "functions": {"type": "integer", "minimum": 1, "default": 10},
            "n": {"type": "integer", "minimum": 2},
            "seed": _SEED,
            "threads": _THREADS,
        },
        "additionalProperties": False,
    },
    "net": {
        "type": "object",
        "properties": {
            "space": _SPACE,
            "delta": {"type": "number", "exclusiveMinimum": 0, "default": 0.1},
            "seed": _SEED,
            "threads": _THREADS,
        },
        "additionalProperties": False,
    },
    "kernel-eval": {
        "type": "object",
        "properties": {
            "space": _SPACE,
            "multiplier": {
                "type": "object",
                "properties": {
                    "kind": {"enum": ["phi", "psi0", "psij", "root_psij", "sqdiff_psij", "heat"]},
                    "b": {"type": "number", "exclusiveMinimum": 1},
                    "j": {"type": "integer", "minimum": 0},
                },
                "required": ["kind"],
                "additionalProperties": False,
                "default": {"kind": "phi"},
            },
            "delta": {"type": "number", "exclusiveMinimum": 0, "default": 0.1},
            "center": {},
            "points": {"type": "integer", "minimum": 1, "default": 201},
            "seed": _SEED,
            "threads": _THREADS,
        },
        "additionalProperties": False,
    },
}

DEFAULT_CONFIGS = {
    "bench-rates": {"n_grid": [2**k for k in range(9, 16)]},
}


def _fill_defaults(schema: dict, cfg: dict) -> dict:
    out = copy.deepcopy(cfg)
    for key, sub in schema.get("properties", {}).items():
        if key not in out and "default" in sub:
            out[key] = copy.deepcopy(sub["default"])
        if key in out and isinstance(out[key], dict) and sub.get("type") == "object":
            out[key] = _fill_defaults(sub, out[key])
    return out


def resolve_config(command: str, raw: dict | None, overrides: dict) -> dict:
    """Validate ``raw`` (or the built-in default), apply flag overrides and fill defaults."""
    schema = SCHEMAS[command]
    cfg = copy.deepcopy(DEFAULT_CONFIGS.get(command, {}) if raw is None else raw)
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    try:
        jsonschema.validate(cfg, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None
    return _fill_defaults(schema, cfg)


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------


def _config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()


def _write(out: Path, name: str, text: str, written: list) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text, encoding="utf-8")
    written.append(name)


def _manifest(command: str, cfg: dict, written: list) -> str:
    return json.dumps(
        {
            "command": command,
            "config": cfg,
            "config_sha256": _config_hash(cfg),
            "seed": cfg.get("seed"),
            "outputs": sorted(written),
            "versions": {
                "spectral_kde": __version__,
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "python": platform.python_version(),
            },
        },
        indent=2,
        sort_keys=True,
    )


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def _point_rows(model, pts):
    pts = np.asarray(pts)
    return pts.reshape(len(pts), -1)


def _coord_header(model):
    return [f"x{i}" for i in range(max(model.point_dim, 1))]


def _build(cfg: dict):
    try:
        model = make_space(cfg["space"])
        recipe = EstimatorRecipe.from_dict(cfg["estimator"]) if "estimator" in cfg else None
        density = make_density(model, cfg["density"], RandomStream(cfg["seed"], 0).generator) if "density" in cfg else None
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, (NumericalError, SpectralBudgetError)):
            raise
        raise ConfigError(str(exc)) from exc
    return model, density, recipe


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_estimate(cfg: dict, out: Path) -> list:
    model, density, recipe = _build(cfg)
    written: list = []
    if "samples" in cfg:
        try:
            data = SampleSet.from_csv(model, Path(cfg["samples"]).read_text(encoding="utf-8"))
        except (OSError, ValueError, IndexError) as exc:
            raise ConfigError(f"cannot read samples: {exc}") from exc
    else:
        data = density_sample(density, cfg["n"], RandomStream(cfg["seed"], 1).generator)
        _write(out, "samples.csv", data.to_csv(), written)
    est = recipe.fit(model, data)
    grid = model.audit_grid(cfg["grid_resolution"])
    vals = est(grid.nodes)
    truth = density(grid.nodes) if "samples" not in cfg else np.full(len(grid), math.nan)
    rows = [list(p) + [v, t] for p, v, t in zip(_point_rows(model, grid.nodes), vals, truth)]
    _write(out, "grid.csv", _csv(_coord_header(model) + ["estimate", "truth"], rows), written)
    g = est.as_expansion()
    diag = {
        "estimator": recipe.kind,
        "n": data.n,
        "mass": g.mean(),
        "min_value": float(vals.min()),
        "negative_mass": float(-(grid.weights @ np.minimum(vals, 0.0))) + 0.0,
    }
    if recipe.kind == "threshold":
        diag.update(
            survivors=est.survivors,
            totals=[len(v) for v in est.beta_star.levels],
            J_n=est.J_n,
            lambda_n=est.lambda_n,
            kappa=est.kappa,
            A=est.A,
        )
        rows = []
        for j, (bh, bs) in enumerate(zip(est.beta_hat.levels, est.beta_star.levels)):
            for i in range(len(bh)):
                rows.append([j, i, float(bh[i]), float(bs[i]), int(bs[i] != 0)])
        _write(out, "coefficients.csv", _csv(["j", "xi_index", "beta_hat", "beta_star", "survivor"], rows), written)
    elif recipe.kind == "kernel":
        diag["delta"] = est.delta
    else:
        diag["J"] = est.J
    _write(out, "estimator.json", json.dumps(est.to_dict()), written)
    _write(out, "diagnostics.json", json.dumps(diag, indent=2), written)
    print(f"fitted {recipe.kind} estimator on n={data.n}: mass {diag['mass']!r}, min {diag['min_value']!r}")
    return written


def cmd_bench_rates(cfg: dict, out: Path) -> list:
    model, density, recipe = _build(cfg)
    p = math.inf if cfg["p"] == "inf" else float(cfg["p"])
    report = rate_experiment(
        model,
        density,
        recipe,
        cfg["n_grid"],
        cfg["reps"],
        p,
        cfg["seed"],
        threads=cfg["threads"],
        r=cfg.get("r"),
        progress=lambda n, res: log.info("n=%d risk=%.6g stderr=%.3g", n, res.mean, res.stderr),
    )
    written: list = []
    _write(out, "report.csv", report.to_csv(), written)
    _write(out, "report.json", report.to_json(), written)
    _write(out, "plot_data.txt", report.plot_data(), written)
    print(report.summary_line())
    return written


def cmd_frame_check(cfg: dict, out: Path) -> list:
    model, _, _ = _build(cfg)
    b, J, c6 = cfg["b"], cfg["J_max"], cfg["c6"]
    if "n" in cfg:
        need = choose_Jn(cfg["n"], b, model.homogeneous_dim)
        if need > J:
            raise FrameDepthError(f"frame depth {J} below J_n={need} for n={cfg['n']}")
    frame = build_frame(model, b, J, c6)
    rows = []

    t = np.linspace(0.0, b ** (J + 1), 10_000)
    tele = float(np.max(np.abs(sum(psi_j(b, j)(t) for j in range(J + 1)) - psi0(b)(t * b**-J))))
    rows.append(["telescoping", tele, 1e-12, tele <= 1e-12])
    part = float(np.max(np.abs(sum(lv.multiplier(t) ** 2 for lv in frame.levels) - psi0(b)(t * b**-J))))
    rows.append(["squared_partition", part, 1e-12, part <= 1e-12])

    gen = RandomStream(cfg["seed"], 0).generator
    probes = model.uniform_sample(gen, 1000)
    worst = 0.0
    for _ in range(cfg["functions"]):
        g = random_bandlimited(model, b ** (J - 1), gen)
        gv = g(probes)
        h = synthesize(frame, analyze_expansion(frame, g))
        worst = max(worst, float(np.max(np.abs(h(probes) - gv)) / np.max(np.abs(gv))))
    rows.append(["reconstruction_rel_sup", worst, 1e-6, worst <= 1e-6])

    cd = calibrate_cdiamond(frame)
    rows.append(["c_diamond", cd, math.inf, math.isfinite(cd) and cd >= 1])

    sizes = np.array([len(model.build_net(c6 * b**-j)) for j in range(7)], dtype=float)
    expo = float(np.polyfit(np.arange(len(sizes)) * math.log(b), np.log(sizes), 1)[0])
    d = model.homogeneous_dim
    rows.append(["net_growth_exponent", expo, d, 0.9 * d <= expo <= 1.1 * d])

    written: list = []
    _write(out, "frame_check.csv", _csv(["check", "value", "threshold", "pass"], [[r[0], r[1], r[2], bool(r[3])] for r in rows]), written)
    for name, value, thr, ok in rows:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {value!r} (threshold {thr!r})")
    if not all(r[3] for r in rows):
        raise NumericalError("frame invariant check failed")
    return written


def cmd_net(cfg: dict, out: Path) -> list:
    model, _, _ = _build(cfg)
    net = model.build_net(cfg["delta"])
    rows = [list(p) + [w] for p, w in zip(_point_rows(model, net.points), net.cell_weights)]
    written: list = []
    _write(out, "net.csv", _csv(_coord_header(model) + ["cell_weight"], rows), written)
    print(f"{model.kind} net at delta={cfg['delta']!r}: {len(net)} points, total weight {float(net.cell_weights.sum())!r}")
    return written


def cmd_kernel_eval(cfg: dict, out: Path) -> list:
    model, _, _ = _build(cfg)
    try:
        mult = Multiplier.from_descriptor(cfg["multiplier"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    kern = SpectralKernel(model, mult, cfg["delta"])
    if "center" in cfg:
        center = model.as_points(cfg["center"])
    else:
        center = 0.0 if model.point_dim == 0 else np.eye(model.point_dim)[-1]
    pts = model.uniform_sample(RandomStream(cfg["seed"], 0).generator, cfg["points"])
    if model.point_dim == 0:
        pts = np.sort(pts)
    vals = kern.matrix(center, pts)[0]
    rho = model.distance_matrix(center, pts)[0]
    rows = [list(p) + [r, v] for p, r, v in zip(_point_rows(model, pts), rho, vals)]
    written: list = []
    _write(out, "kernel.csv", _csv(_coord_header(model) + ["distance", "kernel"], rows), written)
    print(f"kernel {mult.kind} at delta={kern.delta!r}: degree {kern.k_cut}, {len(pts)} points")
    return written


COMMANDS = {
    "estimate": cmd_estimate,
    "bench-rates": cmd_bench_rates,
    "frame-check": cmd_frame_check,
    "net": cmd_net,
    "kernel-eval": cmd_kernel_eval,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spectral-kde", description="Spectral density estimation on compact spaces.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, help="JSON config file")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        sp.add_argument("--threads", type=int, help="worker threads for replications")
        sp.add_argument("--dry-run", action="store_true", help="print the resolved config and exit")
        sp.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        raw = None
        if args.config is not None:
            try:
                raw = json.loads(args.config.read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config: {exc}") from exc
        cfg = resolve_config(args.command, raw, {"seed": args.seed, "threads": args.threads})
        if args.dry_run:
            print(json.dumps(cfg, indent=2, sort_keys=True))
            return EXIT_OK
        written = COMMANDS[args.command](cfg, args.out)
        _write(args.out, "manifest.json", _manifest(args.command, cfg, written), [])
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, SpectralBudgetError, GridError, FrameDepthError, FloatingPointError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
