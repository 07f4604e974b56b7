"""Command-line front end.

Every subcommand reads one JSON configuration (schema-checked, unknown keys
rejected, ``"version": 1`` required) and writes one output file: a
tab-separated table for curves or a JSON report for structured results.
Numbers are written with 17 significant digits and no run-dependent data
(timestamps, paths) so repeated runs are byte-identical.

Exit codes: 0 success, 2 configuration or domain error, 3 numerical
failure, 4 failed consistency check.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import os
import sys
import tempfile
from enum import Enum
from pathlib import Path

import jsonschema
import numpy as np

from .errors import ConsistencyError, DomainError, NumericalError
from .gamow import EnergyDensity, GamowState, mass_convert, semigroup_evolve, \
    survival_amplitude
from .numerics import ComplexRegion
from .poles import PoleKind, find_poles, pole_to_breit_wigner
from .radial import PotentialSpec, cross_section
from .resonance import fit_breit_wigner, window_cross_section
from .veltman import GaugeConfig, VeltmanModel, corrected_unstable_propagator, \
    dressed_propagator, find_complex_pole, naive_unstable_propagator, \
    stable_vector_propagator, ward_residual

log = logging.getLogger("resonances")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_CONSISTENCY = 0, 2, 3, 4
CONFIG_VERSION = 1


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# Schemas
# ---------------------------------------------------------------------------

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_COMPLEX = {"type": "object", "additionalProperties": False,
            "required": ["re", "im"], "properties": {"re": _NUM, "im": _NUM}}
_LINSPACE = {"type": "object", "additionalProperties": False,
             "required": ["start", "stop", "num"],
             "properties": {"start": _NUM, "stop": _NUM,
                            "num": {"type": "integer", "minimum": 1}}}
_GRID = {"oneOf": [_LINSPACE, {"type": "array", "items": _NUM, "minItems": 1}]}
_POTENTIAL = {"type": "object", "additionalProperties": False, "required": ["segments"],
              "properties": {"segments": {"type": "array", "items": {
                  "type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}}}}
_REGION = {"type": "object", "additionalProperties": False,
           "required": ["re_min", "re_max", "im_min", "im_max"],
           "properties": {k: _NUM for k in ("re_min", "re_max", "im_min", "im_max")}}
_L = {"type": "integer", "minimum": 0}
_VERSION = {"const": CONFIG_VERSION}


def _obj(required, properties):
    props = {"version": _VERSION}
    props.update(properties)
    return {"type": "object", "additionalProperties": False,
            "required": ["version"] + list(required), "properties": props}


SCHEMAS = {
    "xsec": _obj(["potential", "energies"], {
        "potential": _POTENTIAL, "energies": _GRID, "l_max": _L}),
    "poles": _obj(["potential", "l", "region"], {
        "potential": _POTENTIAL, "l": _L, "region": _REGION, "tol": _POS}),
    "fit": _obj(["source"], {
        "source": {"oneOf": [
            {"type": "object", "additionalProperties": False,
             "required": ["potential", "l"],
             "properties": {"potential": _POTENTIAL, "l": _L, "energies": _GRID}},
            {"type": "object", "additionalProperties": False, "required": ["data"],
             "properties": {"data": {"type": "string"}}},
            {"type": "object", "additionalProperties": False,
             "required": ["E0", "Gamma", "amplitude", "energies", "noise", "seed"],
             "properties": {"E0": _NUM, "Gamma": _POS, "amplitude": _NUM,
                            "background": {"type": "array", "items": _NUM,
                                           "minItems": 2, "maxItems": 2},
                            "energies": _GRID,
                            "noise": {"type": "number", "minimum": 0},
                            "seed": {"type": "integer", "minimum": 0}}}]},
        "window": {"oneOf": [
            {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
            {"type": "object", "additionalProperties": False, "required": ["pole_widths"],
             "properties": {"pole_widths": _POS,
                            "samples": {"type": "integer", "minimum": 8}}}]},
        "with_background": {"type": "boolean"},
        "pole": {"type": "object", "additionalProperties": False, "required": ["region"],
                 "properties": {"region": _REGION}},
        "tolerances": {"type": "object", "additionalProperties": False,
                       "properties": {"dE0": _POS, "dGamma": _POS}},
    }),
    "gamow": _obj(["mass", "times"], {
        "mass": {"oneOf": [
            {"type": "object", "additionalProperties": False, "required": ["M", "Gamma"],
             "properties": {"M": _POS, "Gamma": {"type": "number", "minimum": 0}}},
            {"type": "object", "additionalProperties": False, "required": ["E_R", "Gamma_R"],
             "properties": {"E_R": _POS, "Gamma_R": {"type": "number", "minimum": 0}}},
            {"type": "object", "additionalProperties": False, "required": ["s_R"],
             "properties": {"s_R": _COMPLEX}}]},
        "times": _GRID,
        "time_unit": {"enum": ["absolute", "lifetime"]}}),
    "ward": _obj(["M", "samples"], {
        "M": _POS,
        "threshold": _POS,
        "samples": {"oneOf": [
            {"type": "array", "minItems": 1, "items": {
                "type": "object", "additionalProperties": False,
                "required": ["xi", "Gamma", "q"],
                "properties": {"xi": _NUM, "Gamma": {"type": "number", "minimum": 0},
                               "q": {"type": "array", "items": _NUM,
                                     "minItems": 4, "maxItems": 4}}}},
            {"type": "object", "additionalProperties": False,
             "required": ["n", "seed", "xi", "Gamma", "q_max"],
             "properties": {"n": {"type": "integer", "minimum": 1},
                            "seed": {"type": "integer", "minimum": 0},
                            "xi": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
                            "Gamma": {"type": "array", "items": {"type": "number", "minimum": 0},
                                      "minItems": 2, "maxItems": 2},
                            "q_max": _POS}}]}}),
    "dyson": _obj(["model", "s_grid"], {
        "model": {"type": "object", "additionalProperties": False,
                  "required": ["g", "M", "m"],
                  "properties": {"g": _POS, "M": _POS, "m": _POS}},
        "s_grid": _GRID}),
}


# ---------------------------------------------------------------------------
# Output formatting
# ---------------------------------------------------------------------------

def fmt(x) -> str:
    """Full-precision decimal text for a real number."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def to_json(obj, indent: int = 0) -> str:
    """Deterministic JSON with 17-digit floats and complex as {re, im}."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        obj = dataclasses.asdict(obj)
    if isinstance(obj, Enum):
        obj = obj.value
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, (complex, np.complexfloating)):
        return to_json({"re": obj.real, "im": obj.imag}, indent)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        items = [pad + to_json(v, indent + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def tsv(header, rows, comments=()) -> str:
    lines = [f"# {c}" for c in comments]
    lines.append("\t".join(header))
    lines.extend("\t".join(fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def write_atomic(path: Path, text: str) -> None:
    """Write via a temporary file in the target directory and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# Config helpers
# ---------------------------------------------------------------------------

def load_config(command: str, path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    try:
        jsonschema.validate(cfg, SCHEMAS[command])
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config {path}: {where}: {exc.message}") from exc
    return cfg


def _grid(block) -> np.ndarray:
    if isinstance(block, dict):
        return np.linspace(block["start"], block["stop"], block["num"])
    return np.asarray(block, dtype=float)


def _potential(block) -> PotentialSpec:
    return PotentialSpec(tuple(tuple(s) for s in block["segments"]))


def _region(block) -> ComplexRegion:
    return ComplexRegion(block["re_min"], block["re_max"], block["im_min"], block["im_max"])


def _read_table(path: Path):
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            try:
                rows.append([float(p) for p in parts[:2]])
            except ValueError:
                continue  # header
    if not rows:
        raise ConfigError(f"no numeric rows in {path}")
    data = np.asarray(rows)
    return data[:, 0], data[:, 1]


# ---------------------------------------------------------------------------
# Subcommands; each returns (text, exit_code)
# ---------------------------------------------------------------------------

def cmd_xsec(cfg, base: Path):
    pot = _potential(cfg["potential"])
    l_max = cfg.get("l_max", 4)
    table = cross_section(pot, l_max, _grid(cfg["energies"]))
    header = ["E"] + [f"sigma_l{l}" for l in range(l_max + 1)] + ["sigma_total"]
    rows = [[e, *p, t] for e, p, t in zip(table.energies, table.partial, table.total)]
    return tsv(header, rows)


def cmd_poles(cfg, base: Path):
    pot = _potential(cfg["potential"])
    region = _region(cfg["region"])
    kwargs = {"tol": cfg["tol"]} if "tol" in cfg else {}
    poles = find_poles(pot, cfg["l"], region, **kwargs)
    log.info("found %d poles", len(poles))
    report = {"l": cfg["l"], "region": cfg["region"], "count": len(poles),
              "poles": [p.to_dict() for p in poles]}
    return to_json(report) + "\n"


def _fit_source(src, base: Path):
    if "data" in src:
        path = Path(src["data"])
        if not path.is_absolute():
            path = base / path
        return _read_table(path), None
    if "potential" in src:
        pot = _potential(src["potential"])
        if "energies" not in src:
            return (None, None), (pot, src["l"])
        E = _grid(src["energies"])
        return (E, cross_section(pot, src["l"], E).partial[:, src["l"]]), (pot, src["l"])
    E = _grid(src["energies"])
    b0, b1 = src.get("background", [0.0, 0.0])
    q = 0.25 * src["Gamma"] ** 2
    y = src["amplitude"] * q / ((E - src["E0"]) ** 2 + q) + b0 + b1 * E
    rng = np.random.default_rng(src["seed"])
    y = y + src["noise"] * rng.standard_normal(E.size)
    return (E, y), None


def cmd_fit(cfg, base: Path):
    (E, sigma), scattering = _fit_source(cfg["source"], base)
    pole = None
    if "pole" in cfg:
        if scattering is None:
            raise ConfigError("a pole comparison needs an inline potential source")
        pot, l = scattering
        found = [p for p in find_poles(pot, l, _region(cfg["pole"]["region"]))
                 if p.kind is PoleKind.RESONANCE and p.k_pole.real > 0]
        if len(found) != 1:
            raise ConsistencyError(f"expected one resonance pole in the region, found {len(found)}",
                                   diagnostics={"poles": [p.to_dict() for p in found]})
        pole = found[0]
    window = cfg.get("window")
    if E is None and not isinstance(window, dict):
        raise ConfigError("an inline potential needs an energy grid or a window in pole widths")
    if isinstance(window, dict):
        if pole is None:
            raise ConfigError("a window in pole widths needs a pole region")
        E0p, Gp = pole_to_breit_wigner(pole)
        E, sigma = window_cross_section(scattering[0], scattering[1], E0p, Gp,
                                        window["pole_widths"], window.get("samples", 201))
        window = None
    fit = fit_breit_wigner(E, sigma, tuple(window) if window else None,
                           cfg.get("with_background", True))
    report = {"fit": fit.to_dict()}
    if pole is not None:
        E0p, Gp = pole_to_breit_wigner(pole)
        dE0 = abs(fit.E0 - E0p) / Gp
        dG = abs(fit.Gamma - Gp) / Gp
        report["pole"] = {**pole.to_dict(), "E0": E0p, "Gamma": Gp,
                          "dE0_over_Gamma": dE0, "dGamma_over_Gamma": dG}
        tol = cfg.get("tolerances")
        if tol:
            ok = dE0 <= tol.get("dE0", math.inf) and dG <= tol.get("dGamma", math.inf)
            report["pole"]["within_tolerances"] = ok
            if not ok:
                raise ConsistencyError(
                    f"fit deviates from the pole beyond tolerances: dE0/Gamma={dE0:.3g}, "
                    f"dGamma/Gamma={dG:.3g}", diagnostics=report)
    return to_json(report) + "\n"


def cmd_gamow(cfg, base: Path):
    mblock = cfg["mass"]
    if "s_R" in mblock:
        mass = mass_convert(s_R=complex(mblock["s_R"]["re"], mblock["s_R"]["im"]))
    else:
        mass = mass_convert(**mblock)
    if not mass.Gamma_R > 0:
        raise DomainError("the survival quadrature needs a positive width")
    times = _grid(cfg["times"])
    if cfg.get("time_unit", "absolute") == "lifetime":
        times = times / mass.Gamma_R
    if np.any(times < 0):
        raise DomainError("negative times: Gamow states evolve only forward")
    state = GamowState(mass)
    density = EnergyDensity.from_mass(mass)
    rows = []
    for t in times:
        p_semi = semigroup_evolve(state, t).survival_probability
        p_quad = abs(survival_amplitude(density, t)) ** 2
        rows.append([t, p_semi, p_quad, p_quad / p_semi if p_semi > 0 else math.inf])
    comments = [f"E_R={fmt(mass.E_R)}", f"Gamma_R={fmt(mass.Gamma_R)}"]
    return tsv(["t", "semigroup", "quadrature", "ratio"], rows, comments)


def _ward_samples(block, M):
    if isinstance(block, list):
        return [GaugeConfig(s["xi"], M, s["Gamma"], tuple(s["q"])) for s in block]
    rng = np.random.default_rng(block["seed"])
    out = []
    while len(out) < block["n"]:
        xi = rng.uniform(*block["xi"])
        gamma = rng.uniform(*block["Gamma"])
        q = rng.uniform(-block["q_max"], block["q_max"], 4)
        cfg = GaugeConfig(xi, M, gamma, tuple(q))
        # keep clear of poles of any of the three forms
        if min(abs(cfg.q2 - M * M), abs(cfg.q2 - xi * M * M), abs(cfg.q2)) < 0.1 * M * M:
            continue
        out.append(cfg)
    return out


def cmd_ward(cfg, base: Path):
    M = cfg["M"]
    thr = cfg.get("threshold", 1e-12)
    rows = []
    counts = {"stable": 0, "naive": 0, "corrected": 0}
    for s in _ward_samples(cfg["samples"], M):
        stable = GaugeConfig(s.xi, s.M, 0.0, s.q)
        res = {"stable": ward_residual(stable_vector_propagator, stable),
               "naive": ward_residual(naive_unstable_propagator, s),
               "corrected": ward_residual(corrected_unstable_propagator, s)}
        row = {"xi": s.xi, "Gamma": s.Gamma, "q": list(s.q), "q2": s.q2}
        for k, v in res.items():
            row[f"{k}_residual"] = v
            row[f"{k}_pass"] = v < thr
            counts[k] += v < thr
        rows.append(row)
    report = {"M": M, "threshold": thr, "n": len(rows),
              "passed": counts, "samples": rows}
    return to_json(report) + "\n"


def cmd_dyson(cfg, base: Path):
    m = cfg["model"]
    model = VeltmanModel(m["g"], m["M"], m["m"])
    sig = model.sigma()
    pole = find_complex_pole(model)
    rows = []
    for s in _grid(cfg["s_grid"]):
        d = dressed_propagator(sig, model.M ** 2, s)
        rows.append([s, abs(d), d.real, d.imag])
    comments = [f"s_R_re={fmt(pole.s_R.real)}", f"s_R_im={fmt(pole.s_R.imag)}",
                f"M={fmt(pole.M)}", f"Gamma={fmt(pole.Gamma)}"]
    return tsv(["s", "abs_Delta", "re_Delta", "im_Delta"], rows, comments)


COMMANDS = {"xsec": cmd_xsec, "poles": cmd_poles, "fit": cmd_fit,
            "gamow": cmd_gamow, "ward": cmd_ward, "dyson": cmd_dyson}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="resonances",
                                     description="Resonance analysis toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--out", type=Path, default=None,
                       help="output file (standard output if omitted)")
        p.add_argument("--verbose", action="store_true")
    return parser


def run(command: str, config: Path, out: Path | None = None) -> int:
    """Execute one subcommand; returns the process exit code."""
    try:
        cfg = load_config(command, config)
        text = COMMANDS[command](cfg, Path(config).resolve().parent)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConsistencyError as exc:
        print(f"consistency check failed: {exc}", file=sys.stderr)
        if exc.diagnostics:
            print(to_json(exc.diagnostics, 0) if _serialisable(exc.diagnostics)
                  else repr(exc.diagnostics), file=sys.stderr)
        return EXIT_CONSISTENCY
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if out is None:
        sys.stdout.write(text)
    else:
        write_atomic(out, text)
    return EXIT_OK


def _serialisable(obj) -> bool:
    try:
        to_json(obj)
    except TypeError:
        return False
    return True


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    return run(args.command, args.config, args.out)


if __name__ == "__main__":
    sys.exit(main())
