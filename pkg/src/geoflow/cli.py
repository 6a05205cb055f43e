"""``geoflow list|simulate|verify`` — batch front end over JSON run configs.

Exit codes: 0 every configured check passed, 2 a check failed, 1 the config
was invalid or the run raised.  The config schema lives next to this module
in ``config_schema.json`` and is described in ``docs/config.md``.
"""
from __future__ import annotations

import argparse
import copy
import json
import math
import os
import sys
import time
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .actions import builtin_scenarios, sample_horizontal
from .dynamics import CotangentState, IntegratorConfig, geodesic_error, integrate
from .errors import GeoflowError, HypothesisFailed, InvalidConfig
from .liealg import random_element, random_group_element, parse_algebra
from .metrics import MetricSpec, default_sectional
from .verify import (
    completeness_check,
    conservation_certificate,
    hamiltonian_function,
    horizontal_regularity,
    left_polys,
    m_coordinates,
    moment_components,
    n_coordinates,
    right_polys,
    shift_polys,
    torus_dimension,
    IntegralFamily,
    bi_invariant_family,
)

ALL_CHECKS = ["completeness", "horizontal_regularity", "torus_dimension", "conservation"]

DEFAULTS = {
    "metric": {"left": "identity", "right": None},
    "integrator": {"h": 1e-3, "T": 10.0, "method": "lie-rk4", "reprojection": True},
    "initial": {"kind": None, "g": "identity", "m": None, "scale": 1.0},
    "family": ["bi-invariant"],
    "degrees": None,
    "shift_lambdas": [0.1, 0.5, 1.0],
    "checks": list(ALL_CHECKS),
    "samples": {"completeness": 20, "horizontal_regularity": 100, "torus_dimension": 100,
                "conservation": 1},
    "seed": 0,
    "tolerances": {"tol_rank": 1e-8, "drift": 1e-7},
    "watch": None,
    "output": {"dir": ".", "report": None, "csv": "trajectory.csv"},
    "record_wall_clock": False,
}


# --------------------------------------------------------------------------
# 17-significant-digit JSON
# --------------------------------------------------------------------------

def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def dumps(obj, indent=2) -> str:
    """JSON text with every float written as ``%.17g``."""

    def enc(o, level):
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{pad}{json.dumps(k)}: {enc(v, level + 1)}" for k, v in o.items()]
            return "{\n" + ",\n".join(items) + "\n" + end + "}"
        if isinstance(o, list):
            if not o:
                return "[]"
            return "[\n" + ",\n".join(pad + enc(v, level + 1) for v in o) + "\n" + end + "]"
        if isinstance(o, float):
            if not math.isfinite(o):
                return json.dumps(str(o))
            text = format(o, ".17g")
            return text if any(c in text for c in ".en") else text + ".0"
        return json.dumps(o)

    return enc(_plain(obj), 0) + "\n"


# --------------------------------------------------------------------------
# Config handling
# --------------------------------------------------------------------------

def load_schema():
    return json.loads(resources.files("geoflow").joinpath("config_schema.json").read_text())


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def resolve_config(raw: dict, seed=None) -> dict:
    """Validate against the schema and fill in every default."""
    if not isinstance(raw, dict):
        raise InvalidConfig("config must be a JSON object")
    try:
        jsonschema.validate(raw, load_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise InvalidConfig(f"{where}: {exc.message}") from None
    cfg = _merge(DEFAULTS, raw)
    if seed is not None:
        cfg["seed"] = int(seed)
    return cfg


def load_config(path, seed=None) -> dict:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidConfig(f"cannot read config {path}: {exc}") from None
    return resolve_config(raw, seed)


class Scenario:
    """Objects built from a resolved config."""

    def __init__(self, cfg, catalog=None):
        catalog = builtin_scenarios() if catalog is None else catalog
        self.action = None
        spec = None
        if "scenario" in cfg:
            name = cfg["scenario"]["name"]
            if name not in catalog:
                raise InvalidConfig(f"unknown scenario {name!r}; available: {sorted(catalog)}")
            self.action = catalog[name].build(**cfg["scenario"].get("parameters", {}))
            spec = self.action.spec
        if "algebra" in cfg:
            alg = parse_algebra(cfg["algebra"])
            if spec is not None and alg != spec:
                raise InvalidConfig(f"algebra {cfg['algebra']} does not match scenario algebra {spec!r}")
            spec = alg
        if spec is None:
            raise InvalidConfig("config needs a 'scenario' or an 'algebra'")
        self.spec = spec
        self.metric = MetricSpec(self._side(cfg["metric"]["left"]), self._side(cfg["metric"]["right"]))
        ic = cfg["integrator"]
        self.integrator = IntegratorConfig(ic["h"], ic["T"], ic["method"], ic["reprojection"])
        self.degrees = cfg["degrees"]
        self.lambdas = tuple(cfg["shift_lambdas"])
        self.tol_rank = cfg["tolerances"]["tol_rank"]

    def _side(self, side):
        if side is None or side == "identity":
            return side
        return default_sectional(self.spec, side["a"], side["b"], side.get("D"))

    def shift_element(self):
        left = self.metric.left
        if left is None or isinstance(left, str):
            raise InvalidConfig("shift integrals need a sectional left metric")
        return left.a

    def family(self, names) -> IntegralFamily:
        spec = self.spec
        fam = IntegralFamily(spec, [], "+".join(names))
        for name in names:
            if name == "bi-invariant":
                part = bi_invariant_family(spec)
            elif name == "m-coordinates":
                part = m_coordinates(spec)
            elif name == "n-coordinates":
                part = n_coordinates(spec)
            elif name == "left-polys":
                part = left_polys(spec, self.degrees)
            elif name == "right-polys":
                part = right_polys(spec, self.degrees)
            elif name == "moment":
                if self.action is None:
                    raise InvalidConfig("the 'moment' family needs a scenario")
                part = moment_components(self.action)
            elif name == "shift":
                part = shift_polys(self.shift_element(), self.degrees, self.lambdas)
            elif name == "hamiltonian":
                part = IntegralFamily(spec, [hamiltonian_function(self.metric, spec)])
            else:  # pragma: no cover - excluded by the schema
                raise InvalidConfig(f"unknown family {name!r}")
            fam.functions.extend(part.functions)
        return fam

    def conserved_family(self) -> IntegralFamily:
        fam = left_polys(self.spec, self.degrees) + right_polys(self.spec, self.degrees)
        left = self.metric.left
        if self.metric.right is None and not (left is None or isinstance(left, str)):
            # argument-shift integrals are conserved by the left-only flow
            fam = fam + shift_polys(self.metric.left.a, self.degrees, self.lambdas)
        return fam


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _out_dir(cfg, out):
    return Path(out if out is not None else cfg["output"]["dir"])


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------

def cmd_list(catalog=None, as_json=False, stream=None) -> int:
    """Print the scenario catalog with parameter signatures."""
    stream = sys.stdout if stream is None else stream
    if catalog is None:
        catalog = {} if os.environ.get("GEOFLOW_EMPTY_CATALOG") else builtin_scenarios()
    entries = list(catalog.values())
    if as_json:
        stream.write(dumps([e.to_json() for e in entries]))
    else:
        for e in entries:
            stream.write(f"{e.signature()}\n    {e.description}\n")
    return 0


def _report_header(cfg, command):
    head = {"command": command, "version": __version__, "seed": cfg["seed"]}
    if "scenario" in cfg:
        head["scenario"] = cfg["scenario"]
    head["tolerances"] = cfg["tolerances"]
    head["config"] = cfg
    return head


def run_verify(cfg, catalog=None) -> dict:
    """Run the configured checks and return the report (no I/O)."""
    sc = Scenario(cfg, catalog)
    seed = cfg["seed"]
    ns = cfg["samples"]
    checks = {}
    if "completeness" in cfg["checks"]:
        rep = completeness_check(sc.family(cfg["family"]), ns["completeness"], seed, sc.tol_rank)
        checks["completeness"] = rep.to_json()
    needs_action = {"horizontal_regularity", "torus_dimension", "conservation"} & set(cfg["checks"])
    if needs_action and sc.action is None:
        raise InvalidConfig(f"checks {sorted(needs_action)} need a scenario")
    if "horizontal_regularity" in cfg["checks"]:
        rep = horizontal_regularity(sc.action, ns["horizontal_regularity"], seed, sc.degrees, sc.tol_rank)
        checks["horizontal_regularity"] = rep.to_json()
    if "torus_dimension" in cfg["checks"]:
        try:
            rep = torus_dimension(sc.action, ns["torus_dimension"], seed, sc.tol_rank)
            d = rep.to_json()
            d["passed"] = rep.supported
        except HypothesisFailed as exc:
            d = {"passed": False, "error": str(exc), "dimension": None}
        checks["torus_dimension"] = d
    if "conservation" in cfg["checks"]:
        rep = conservation_certificate(sc.metric, sc.action, sc.conserved_family(), sc.integrator,
                                       seed, ns["conservation"], tol=cfg["tolerances"]["drift"])
        checks["conservation"] = rep.to_json()
    report = _report_header(cfg, "verify")
    report["checks"] = checks
    if "torus_dimension" in checks:
        report["torus_dimension"] = checks["torus_dimension"].get("dimension")
    report["passed"] = all(c["passed"] for c in checks.values())
    return report


def _initial_state(cfg, sc: Scenario):
    ini = cfg["initial"]
    seed = cfg["seed"]
    rng = np.random.default_rng(seed)
    kind = ini["kind"] or ("horizontal" if sc.action is not None else "random")
    if kind == "horizontal":
        if sc.action is None:
            raise InvalidConfig("horizontal initial data needs a scenario")
        m = sample_horizontal(sc.action, seed, 1)[0]
    elif kind == "random":
        m = random_element(sc.spec, rng)
        m = m / m.norm()
    else:
        if ini["m"] is None or len(ini["m"]) != sc.spec.dim:
            raise InvalidConfig(f"explicit initial m needs {sc.spec.dim} coordinates")
        m = sc.spec.element(ini["m"])
    m = m * ini["scale"]
    g = sc.spec.identity() if ini["g"] == "identity" else random_group_element(sc.spec, rng)
    return CotangentState(g, m), kind


def _default_watch(sc: Scenario):
    degrees = sc.spec.degrees if sc.degrees is None else sc.degrees
    watch = ["H"] + [f"p{k}(m)" for k in degrees] + [f"p{k}(n)" for k in degrees]
    if sc.action is not None:
        watch.append("moment")
    return watch


def run_simulate(cfg, catalog=None):
    """Integrate one trajectory; returns ``(summary, trajectory)``."""
    sc = Scenario(cfg, catalog)
    x0, kind = _initial_state(cfg, sc)
    watch = cfg["watch"] if cfg["watch"] is not None else _default_watch(sc)
    try:
        shift = sc.shift_element() if any(w.startswith("p") and "+" in w for w in watch) else None
        traj = integrate(sc.metric, x0, sc.integrator, watch, sc.action, shift)
    except ValueError as exc:
        raise InvalidConfig(str(exc)) from None
    summary = _report_header(cfg, "simulate")
    summary["initial_kind"] = kind
    summary["steps"] = sc.integrator.steps
    summary["rows"] = len(traj)
    summary["drift"] = traj.drift
    summary["relative_drift"] = traj.relative_drift
    summary["unitarity_defect"] = traj.unitarity_defect()
    if sc.metric.is_bi_invariant:
        summary["geodesic_error"] = geodesic_error(traj)
    tol = cfg["tolerances"]["drift"]
    summary["passed"] = all(v <= tol for v in traj.relative_drift.values())
    return summary, traj


def _finish(report, cfg, out, name, as_json, started):
    if cfg["record_wall_clock"]:
        report["wall_clock_seconds"] = time.perf_counter() - started
    text = dumps(report)
    path = _out_dir(cfg, out) / (cfg["output"]["report"] or name)
    _write(path, text)
    if as_json:
        sys.stdout.write(text)
    else:
        sys.stdout.write(f"{'PASS' if report['passed'] else 'FAIL'}: report written to {path}\n")
    return 0 if report["passed"] else 2


def cmd_verify(config, seed=None, out=None, as_json=False, catalog=None) -> int:
    """Run checks from a config path (or resolved dict); returns the exit code."""
    started = time.perf_counter()
    try:
        cfg = resolve_config(config, seed) if isinstance(config, dict) else load_config(config, seed)
        report = run_verify(cfg, catalog)
        return _finish(report, cfg, out, "report.json", as_json, started)
    except (GeoflowError, ValueError, OSError) as exc:
        print(f"geoflow verify: error: {exc}", file=sys.stderr)
        return 1


def cmd_simulate(config, seed=None, out=None, as_json=False, catalog=None) -> int:
    """Integrate one trajectory; writes the CSV and a drift summary JSON."""
    started = time.perf_counter()
    try:
        cfg = resolve_config(config, seed) if isinstance(config, dict) else load_config(config, seed)
        summary, traj = run_simulate(cfg, catalog)
        csv_path = _out_dir(cfg, out) / cfg["output"]["csv"]
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        traj.to_csv(csv_path)
        summary["csv"] = csv_path.name
        return _finish(summary, cfg, out, "simulate.json", as_json, started)
    except (GeoflowError, ValueError, OSError) as exc:
        print(f"geoflow simulate: error: {exc}", file=sys.stderr)
        return 1


def build_parser():
    p = argparse.ArgumentParser(prog="geoflow", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"geoflow {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    lp = sub.add_parser("list", help="print the scenario catalog")
    lp.add_argument("--json", action="store_true", help="machine-readable JSON array")
    for name, helptext in (("simulate", "integrate one trajectory"), ("verify", "run certification checks")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--config", required=True, help="RunConfig JSON file")
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--json", action="store_true", help="also print the report to stdout")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    if args.command == "list":
        return cmd_list(as_json=args.json)
    if args.command == "verify":
        return cmd_verify(args.config, args.seed, args.out, args.json)
    return cmd_simulate(args.config, args.seed, args.out, args.json)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
