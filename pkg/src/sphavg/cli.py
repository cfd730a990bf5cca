"""Command-line front end.

Subcommands: region, classify, eval, scaling, blowup, decay, norms, fourier.
Experiment commands accept either ``--config file.json`` (a config or a
previous run's ``manifest.json``) or inline flags; both routes build the
same config dict, which is validated against the shipped JSON schema
before anything runs. Outputs go to ``--out`` (default
``$SPHAVG_OUT`` or ``./sphavg-out``) together with ``manifest.json``.

Exit codes: 0 success / pass, 2 experiment verdict fail, 1 usage,
validation or resolution error.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from fractions import Fraction
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .experiments import (
    BlowupProbe,
    ResolutionError,
    ScalingFamily,
    run_blowup,
    run_decay,
    run_scaling,
)
from .functions import lorentz_norm, lp_norm, parse_function_spec
from .output import (
    RunManifest,
    csv_text,
    json_text,
    atomic_write,
    projection_svg,
    slice_svg,
)
from .rational import RationalParseError
from .region import (
    MAX_ENUMERATION_N,
    ExponentPoint,
    NotInRegionError,
    build_region,
    classify,
    contains,
    diagonal_slice,
    dual_point,
    endpoint_catalogue,
    named_points,
)
from .spherical import VectorFamily, build_grid, profile, sphere_fourier

OUT_ENV = "SPHAVG_OUT"
EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --------------------------------------------------------------------------
# option syntax


_POW = re.compile(r"^\s*2\^(-?\d+)\s*$")


def _number(text: str) -> float:
    m = _POW.match(text)
    if m:
        return 2.0 ** int(m.group(1))
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"not a number: {text!r}") from None


def parse_scales(text: str) -> list[float]:
    """``2^-4..2^-9`` (dyadic run), ``2..64`` (doubling run) or a comma list."""
    if ".." in text:
        a, b = text.split("..", 1)
        ma, mb = _POW.match(a), _POW.match(b)
        if ma and mb:
            i, j = int(ma.group(1)), int(mb.group(1))
            step = 1 if j >= i else -1
            return [2.0**k for k in range(i, j + step, step)]
        lo, hi = _number(a), _number(b)
        if lo <= 0 or hi < lo:
            raise UsageError(f"bad scale range {text!r}")
        out = [lo]
        while out[-1] * 2 <= hi * (1 + 1e-12):
            out.append(out[-1] * 2)
        return out
    return [_number(t) for t in text.split(",") if t.strip()]


def parse_int_range(text: str) -> list[int]:
    """``6..18`` or ``6,8,10``."""
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            return list(range(int(a), int(b) + 1))
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"bad integer range {text!r}") from None


def parse_vectors(text: str) -> list[list[float]]:
    """``"-1,1;0,1"`` -> ``[[-1, 1], [0, 1]]``."""
    return [[_number(c) for c in row.split(",")] for row in text.split(";")]


def parse_xs(text: str) -> list[float]:
    """``lo:hi:step`` (left endpoints) or a comma list."""
    if text.count(":") == 2:
        lo, hi, step = (_number(t) for t in text.split(":"))
        if step <= 0 or hi <= lo:
            raise UsageError(f"bad x range {text!r}")
        m = int(np.ceil((hi - lo) / step - 1e-9))
        return [lo + step * i for i in range(m)]
    return [_number(t) for t in text.split(",") if t.strip()]


# --------------------------------------------------------------------------
# config validation


def load_schema(name: str) -> dict:
    text = resources.files("sphavg").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def validate_config(name: str, config: dict) -> dict:
    """Validate and fill schema defaults; raises UsageError listing JSON pointers."""
    schema = load_schema(name)
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(config), key=lambda e: list(e.absolute_path))
    if errors:
        lines = []
        for e in errors:
            pointer = "/" + "/".join(str(p) for p in e.absolute_path)
            lines.append(f"{pointer}: {e.message}")
        raise UsageError("config validation failed:\n  " + "\n  ".join(lines))
    out = dict(config)
    for key, sub in schema.get("properties", {}).items():
        if key not in out and "default" in sub:
            out[key] = sub["default"]
    return out


def _read_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None


def _config_from(args, name: str, inline: dict) -> dict:
    if args.config:
        given = [k for k, v in inline.items() if v is not None]
        if given:
            raise UsageError(f"--config cannot be combined with inline options ({', '.join(given)})")
        raw = _read_config(args.config)
        if isinstance(raw, dict) and "tool_version" in raw and isinstance(raw.get("config"), dict):
            # a run manifest: replay its resolved config
            raw = dict(raw["config"])
            command = raw.pop("command", name)
            if command != name:
                raise UsageError(f"manifest is for '{command}', not '{name}'")
    else:
        raw = {k: v for k, v in inline.items() if v is not None}
    return validate_config(name, raw)


def _grid(cfg: dict | None, n: int):
    if not cfg:
        return None
    return build_grid(n, cfg["resolution"], polar_resolution=cfg.get("polar_resolution"))


def _grid_cfg(resolution, polar):
    if resolution is None:
        return None
    out = {"resolution": resolution}
    if polar is not None:
        out["polar_resolution"] = polar
    return out


# --------------------------------------------------------------------------
# output helpers


class _Outputs:
    def __init__(self, root: Path, command: str, config: dict):
        self.root = root
        self.files: list[str] = []
        self.manifest = RunManifest(__version__, {"command": command, **config})

    def text(self, name: str, data: str):
        atomic_write(self.root / name, data)
        self.files.append(name)

    def finish(self):
        self.manifest.outputs = list(self.files)
        self.manifest.write(self.root / "manifest.json")


def _out_dir(args) -> Path:
    return Path(args.out or os.environ.get(OUT_ENV) or "sphavg-out")


# --------------------------------------------------------------------------
# commands


def cmd_region(args) -> int:
    n, fmt = args.n, args.format
    if not 2 <= n <= MAX_ENUMERATION_N:
        raise UsageError(f"region supports 2 <= n <= {MAX_ENUMERATION_N}, got n={n}")
    if fmt == "svg" and not args.slice and n != 2:
        raise UsageError("svg output needs --slice unless n = 2")
    region = build_region(n)
    out = _Outputs(_out_dir(args), "region", {"n": n, "format": fmt, "slice": bool(args.slice)})
    if args.slice:
        verts = diagonal_slice(region)
        if fmt == "svg":
            out.text(f"slice_n{n}.svg", slice_svg(verts, n))
        elif fmt == "json":
            out.text(f"slice_n{n}.json", json_text({"n": n, "vertices": [v.to_json() for v in verts]}))
        else:
            out.text(f"slice_n{n}.csv", csv_text(("name", "inv_p", "inv_r"),
                                                 [(v.name, v.s, v.t) for v in verts]))
        out.finish()
        print(f"diagonal slice n={n}: " + ", ".join(f"{v.name}=({v.s},{v.t})" for v in verts))
        return EXIT_OK
    records = endpoint_catalogue(n)
    if fmt == "svg":
        named = {r.name: r.point for r in records}
        for view in ("x1x2", "x1r", "x2r"):
            out.text(f"region_n2_{view}.svg", projection_svg(named, view))
    else:
        names = {r.point: r.name for r in records}
        duals = []
        for r in records:
            row = {"name": r.name}
            for j in range(1, n + 1):
                d = dual_point(r.point, j)
                row[f"dual_{j}"] = names.get(d, str(d))
            duals.append(row)
        if fmt == "json":
            payload = {
                "n": n,
                "inequalities": region.to_json()["inequalities"],
                "vertices": [r.to_json() for r in records],
                "duals": duals,
            }
            out.text(f"region_n{n}.json", json_text(payload))
        else:
            cols = ["name"] + [f"x{j}" for j in range(1, n + 1)] + ["xr", "orbit", "strong",
                                                                    "restricted", "weak", "restricted_weak"]
            rows = []
            for r in records:
                c = r.classification
                rows.append([r.name, *r.point.x, r.point.xr, str(r.orbit_id), c.strong,
                             c.restricted, c.weak, c.restricted_weak])
            out.text(f"vertices_n{n}.csv", csv_text(cols, rows))
            out.text(f"inequalities_n{n}.csv", csv_text(
                ["label"] + [f"a{j}" for j in range(1, n + 1)] + ["a_r", "rhs"],
                [[q.label, *q.coeff_x, q.coeff_xr, q.rhs] for q in region.inequalities]))
            out.text(f"duals_n{n}.csv", csv_text(list(duals[0]), [list(d.values()) for d in duals]))
    out.finish()
    print(f"region n={n}: {len(region.inequalities)} inequalities, {len(records)} vertices")
    return EXIT_OK


def cmd_classify(args) -> int:
    text = " ".join(args.point)
    try:
        point = ExponentPoint.parse(text)
    except RationalParseError as exc:
        raise UsageError(f"cannot parse point: {exc} (token position {exc.position})") from None
    except ValueError as exc:
        raise UsageError(f"cannot parse point: {exc}") from None
    region = build_region(point.n)
    member = contains(region, point)
    report = {"point": str(point), "membership": member.to_json()}
    if member.member:
        report["classification"] = classify(point).to_json()
    print(json_text(report), end="")
    return EXIT_OK


def cmd_eval(args) -> int:
    inline = {
        "functions": args.function,
        "xs": parse_xs(args.x) if args.x else None,
        "vectors": parse_vectors(args.vectors) if args.vectors else None,
        "grid": _grid_cfg(args.resolution, args.polar_resolution),
    }
    cfg = _config_from(args, "eval", inline)
    fs = [_function(s) for s in cfg["functions"]]
    n = len(fs)
    v = VectorFamily(np.array(cfg["vectors"])) if cfg.get("vectors") else None
    grid = _grid(cfg["grid"], n)
    vals = profile(fs, cfg["xs"], grid, v)
    out = _Outputs(_out_dir(args), "eval", cfg)
    out.text("profile.csv", csv_text(("x", "value"), zip(cfg["xs"], vals)))
    out.finish()
    print(f"evaluated T at {len(vals)} points; max {float(np.max(vals)):.12g}")
    return EXIT_OK


def _function(spec: str):
    try:
        return parse_function_spec(spec)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _write_report(args, command: str, cfg: dict, report) -> int:
    out = _Outputs(_out_dir(args), command, cfg)
    out.text(f"{command}.csv", csv_text(report.columns, report.rows))
    out.text(f"{command}.json", json_text(report.to_json()))
    out.finish()
    print(report.summary_line())
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_scaling(args) -> int:
    inline = {
        "family": args.family,
        "n": args.n,
        "point": " ".join(args.point) if args.point else None,
        "scales": parse_scales(args.eps or args.scales) if (args.eps or args.scales) else None,
        "grid": _grid_cfg(args.resolution, args.polar_resolution),
    }
    cfg = _config_from(args, "scaling", inline)
    point = _point(cfg["point"])
    family = ScalingFamily(cfg["family"], cfg["n"])
    report = run_scaling(family, point, cfg["scales"], _grid(cfg.get("grid"), cfg["n"]),
                         points_per_window=cfg["points_per_window"], tolerance=cfg["tolerance"],
                         witness_tolerance=cfg["witness_tolerance"],
                         check_witness=cfg["check_witness"])
    return _write_report(args, "scaling", cfg, report)


def _point(text: str) -> ExponentPoint:
    try:
        return ExponentPoint.parse(text)
    except ValueError as exc:
        raise UsageError(f"cannot parse point: {exc}") from None


def cmd_blowup(args) -> int:
    inline = {
        "probe": args.probe,
        "theta": args.theta,
        "ks": parse_int_range(args.k) if args.k else None,
        "bounded": True if args.bounded else None,
        "grid": _grid_cfg(args.resolution, None),
    }
    cfg = _config_from(args, "blowup", inline)
    probe = BlowupProbe(cfg["probe"], cfg.get("theta"), cfg["bounded"])
    report = run_blowup(probe, cfg["ks"], _grid(cfg.get("grid"), 2), band_factor=cfg["band_factor"])
    return _write_report(args, "blowup", cfg, report)


def cmd_decay(args) -> int:
    inline = {
        "n": args.n,
        "xi_max": args.xi_max,
        "xi_min": args.xi_min,
        "grid": _grid_cfg(args.resolution, args.polar_resolution),
    }
    cfg = _config_from(args, "decay", inline)
    report = run_decay(cfg["n"], cfg["xi_max"], _grid(cfg["grid"], cfg["n"]), xi_min=cfg["xi_min"],
                       samples_per_unit=cfg["samples_per_unit"], tolerance=cfg["tolerance"])
    return _write_report(args, "decay", cfg, report)


def cmd_norms(args) -> int:
    inline = {
        "function": args.function,
        "lp": args.lp,
        "lorentz": [s.split(",") for s in args.lorentz] if args.lorentz else None,
    }
    cfg = _config_from(args, "norms", inline)
    f = _function(cfg["function"])
    rows = []
    for p in cfg.get("lp", []):
        nv = lp_norm(f, _exponent(p))
        rows.append(("lp", p, "", nv.value, nv.method, nv.estimated_error))
    for p, q in cfg.get("lorentz", []):
        nv = lorentz_norm(f, _exponent(p), _exponent(q))
        rows.append(("lorentz", p, q, nv.value, nv.method, nv.estimated_error))
    if not rows:
        raise UsageError("norms needs at least one --lp or --lorentz")
    out = _Outputs(_out_dir(args), "norms", cfg)
    out.text("norms.csv", csv_text(("kind", "p", "q", "value", "method", "estimated_error"), rows))
    out.finish()
    for kind, p, q, value, method, err in rows:
        label = f"L^{p}" if kind == "lp" else f"L^({p},{q})"
        print(f"{label} norm = {value:.12g} ({method}, err {err:.3g})")
    return EXIT_OK


def _exponent(v) -> float:
    if isinstance(v, str) and v.strip().lower() in ("inf", "infinity"):
        return float("inf")
    return _number(str(v)) if isinstance(v, str) else float(v)


def cmd_fourier(args) -> int:
    xis = None
    if args.xi:
        xis = [[_number(c) for c in s.split(",")] for s in args.xi]
    inline = {"n": args.n, "xis": xis, "grid": _grid_cfg(args.resolution, args.polar_resolution)}
    cfg = _config_from(args, "fourier", inline)
    grid = _grid(cfg["grid"], cfg["n"])
    rows = []
    for xi in cfg["xis"]:
        val = sphere_fourier(cfg["n"], xi, grid)
        rows.append((float(np.linalg.norm(xi)), val.real, val.imag, abs(val)))
    out = _Outputs(_out_dir(args), "fourier", cfg)
    out.text("fourier.csv", csv_text(("xi", "re", "im", "abs"), rows))
    out.finish()
    print(f"evaluated surface-measure transform at {len(rows)} frequencies")
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sphavg", description="Multilinear spherical averages: geometry and experiments.")
    parser.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./sphavg-out)")
    parser.add_argument("--version", action="version", version=f"sphavg {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("region", help="inequalities, vertices, classifications, figures")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--format", choices=("json", "csv", "svg"), default="json")
    p.add_argument("--slice", action="store_true", help="diagonal slice 1/p_1 = ... = 1/p_n")
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("classify", help="membership and boundedness type of a point")
    p.add_argument("point", nargs="+", help='e.g. "3/5 3/5 ; 2/5"')
    p.set_defaults(func=cmd_classify)

    def experiment(name, helptext):
        q = sub.add_parser(name, help=helptext)
        q.add_argument("--config", help="JSON config (exclusive with inline options)")
        return q

    p = experiment("eval", "evaluate T_v on an x sweep")
    p.add_argument("--function", action="append", help="repeat once per slot, e.g. indicator:-1:1")
    p.add_argument("--x", help="lo:hi:step or comma list")
    p.add_argument("--vectors", help='rows of the vector family, e.g. "-1,1;0,1"')
    p.add_argument("--resolution", type=int)
    p.add_argument("--polar-resolution", type=int)
    p.set_defaults(func=cmd_eval)

    p = experiment("scaling", "norm-ratio scaling of an extremal family")
    p.add_argument("--family", choices=("A", "B", "C"))
    p.add_argument("--n", type=int)
    p.add_argument("--point", nargs="+")
    p.add_argument("--eps", help='e.g. "2^-4..2^-9"')
    p.add_argument("--scales", help='e.g. "2..64" or "2,4,8,16"')
    p.add_argument("--resolution", type=int)
    p.add_argument("--polar-resolution", type=int)
    p.set_defaults(func=cmd_scaling)

    p = experiment("blowup", "logarithmic blow-up probe")
    p.add_argument("--probe", choices=("E", "P", "G", "BE"))
    p.add_argument("--theta", type=float)
    p.add_argument("--k", help='e.g. "6..18"')
    p.add_argument("--bounded", action="store_true", help="replace singular inputs by indicators")
    p.add_argument("--resolution", type=int)
    p.set_defaults(func=cmd_blowup)

    p = experiment("decay", "decay of the surface-measure Fourier transform")
    p.add_argument("--n", type=int)
    p.add_argument("--xi-max", type=float)
    p.add_argument("--xi-min", type=float)
    p.add_argument("--resolution", type=int)
    p.add_argument("--polar-resolution", type=int)
    p.set_defaults(func=cmd_decay)

    p = experiment("norms", "Lebesgue and Lorentz norms of a test function")
    p.add_argument("--function")
    p.add_argument("--lp", action="append", help="exponent p (repeatable)")
    p.add_argument("--lorentz", action="append", help="p,q (repeatable)")
    p.set_defaults(func=cmd_norms)

    p = experiment("fourier", "surface-measure Fourier transform at given frequencies")
    p.add_argument("--n", type=int)
    p.add_argument("--xi", action="append", help="frequency vector, comma separated (repeatable)")
    p.add_argument("--resolution", type=int)
    p.add_argument("--polar-resolution", type=int)
    p.set_defaults(func=cmd_fourier)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"sphavg {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResolutionError as exc:
        print(f"sphavg {args.command}: resolution error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NotInRegionError, ValueError) as exc:
        print(f"sphavg {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
