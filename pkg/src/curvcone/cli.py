"""Command-line front end.

Exit codes: 0 when every asserted check passes, 1 on a check failure (the
failure list is printed to stderr as JSON), 2 on a usage or configuration
error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .cones import parse_family
from .curvop import ContractViolation, SymOperator, identity, load_operator, sharp_adjoint, sharp_coadjoint
from .flows import FIELDS, FieldSpec
from .liealg import ALGEBRAS, ParameterError, build_algebra

EXPERIMENTS = (
    "membership",
    "flow",
    "theorem1",
    "theorem2",
    "kahler_lemma",
    "bochner",
    "pinching_a",
    "pinching_b",
    "pinching_c",
    "pinching_d",
    "trace_harnack",
    "constrained",
)

_NATURAL = ("n", "samples", "trials", "starts")
_REAL = ("h", "eps", "s", "p", "t_end")
_STRING = ("experiment", "family", "output", "R", "R0", "field")
FIELDS_ALLOWED = frozenset(_NATURAL + _REAL + _STRING + ("seed",))


class UsageError(Exception):
    """Bad command line or configuration."""


# ---------------------------------------------------------------- config


def validate_config(cfg) -> dict:
    """Strict check of an experiment configuration; returns a normalized copy."""
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    unknown = sorted(set(cfg) - FIELDS_ALLOWED)
    if unknown:
        raise UsageError(f"unknown config fields: {', '.join(unknown)}")
    if "experiment" not in cfg:
        raise UsageError("config needs an 'experiment' field")
    if cfg["experiment"] not in EXPERIMENTS:
        raise UsageError(f"unknown experiment {cfg['experiment']!r}")
    if "seed" not in cfg:
        raise UsageError("config needs a 'seed' field")
    seed = cfg["seed"]
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise UsageError("seed must be an integer in [0, 2^64)")
    for k in _NATURAL:
        if k in cfg:
            v = cfg[k]
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise UsageError(f"{k} must be a positive integer")
    for k in _REAL:
        if k in cfg:
            v = cfg[k]
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise UsageError(f"{k} must be a finite number")
    for k in _STRING:
        if k in cfg and not isinstance(cfg[k], str):
            raise UsageError(f"{k} must be a string")
    if "field" in cfg and cfg["field"] not in FIELDS:
        raise UsageError(f"unknown field {cfg['field']!r}")
    if "family" in cfg:
        try:
            parse_family(cfg["family"], cfg.get("n", 4))
        except (ParameterError, ValueError) as e:
            raise UsageError(f"family: {e}") from e
    return dict(cfg)


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as e:
        raise UsageError(f"cannot read config: {e}") from e
    except json.JSONDecodeError as e:
        raise UsageError(f"config is not valid JSON: {e}") from e
    return validate_config(cfg)


def _operator(spec: str | None, L) -> SymOperator:
    if spec is None or spec == "identity":
        return identity(L)
    try:
        R = load_operator(spec)
    except (OSError, KeyError, ValueError) as e:
        raise UsageError(f"cannot load operator {spec!r}: {e}") from e
    if R.algebra is not L:
        raise UsageError(f"operator lives on {R.algebra.label}, expected {L.label}")
    return R


def _flow_algebra(cfg):
    if "family" in cfg:
        return parse_family(cfg["family"], cfg.get("n", 4)).algebra
    if cfg.get("R0") not in (None, "identity"):
        return load_operator(cfg["R0"]).algebra
    return build_algebra("so", cfg.get("n", 4))


def run(cfg: dict) -> ex.ExperimentResult:
    """Run a validated configuration."""
    name = cfg["experiment"]
    seed = cfg["seed"]
    n = cfg.get("n")
    trials = cfg.get("trials", 10)
    if name == "membership":
        fam = parse_family(cfg.get("family", "fullso"), n or 4)
        R = _operator(cfg.get("R"), fam.algebra)
        return ex.membership(R, fam, cfg.get("h", 0.0), cfg.get("starts", 32), seed)
    if name == "flow":
        L = _flow_algebra(cfg)
        fam = parse_family(cfg["family"], cfg.get("n", 4)) if "family" in cfg else None
        R0 = _operator(cfg.get("R0"), L)
        spec = FieldSpec(cfg.get("field", "ricci"), eps=cfg.get("eps", 0.0), s=cfg.get("s", 0.0))
        return ex.flow(R0, spec, cfg.get("t_end", 0.1), cfg.get("samples", 50), fam, cfg.get("h", 0.0), seed,
                       starts=cfg.get("starts", 2))
    if name == "theorem1":
        return ex.theorem1(n or 4, trials, seed, starts=cfg.get("starts", 8))
    if name == "theorem2":
        return ex.theorem2(n or 4, trials, seed, starts=cfg.get("starts", 8))
    if name == "kahler_lemma":
        return ex.kahler_lemma(n or 2, trials, seed)
    if name == "bochner":
        return ex.bochner(n or 3, trials, seed)
    if name.startswith("pinching_"):
        return ex.pinching(name[-1], seed, n=n, samples=cfg.get("samples", 20), starts=cfg.get("starts", 8))
    if name == "trace_harnack":
        return ex.trace_harnack(n or 4, trials, seed)
    if name == "constrained":
        return ex.constrained(n or 2, cfg.get("family", "krank1"), cfg.get("p", 0.5), cfg.get("s", 0.01), trials, seed)
    raise UsageError(f"unknown experiment {name!r}")  # pragma: no cover


# ---------------------------------------------------------------- output


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def write_csv(rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(ex.CSV_COLUMNS)
        for row in rows:
            w.writerow(["" if v is None else repr(float(v)) for v in row])


def emit(result: ex.ExperimentResult, output: str | None = None, csv_path: str | None = None) -> int:
    doc = json.dumps(_jsonable(result.to_dict()), indent=2, ensure_ascii=False)
    if output:
        Path(output).write_text(doc + "\n", encoding="utf-8")
        if result.rows is not None and csv_path is None:
            csv_path = str(Path(output).with_suffix(".csv"))
    else:
        print(doc)
    if csv_path and result.rows is not None:
        write_csv(result.rows, csv_path)
    if result.failures:
        print(json.dumps(_jsonable({"failures": result.failures})), file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------- subcommands


def structure_quadruples(L) -> list:
    """Nonzero structure constants as [a, b, k, value] with [b_a, b_b] = sum_k value b_k."""
    a, b, k = np.nonzero(np.abs(L.structure) > 1e-15)
    return [[int(i), int(j), int(m), float(L.structure[i, j, m])] for i, j, m in zip(a, b, k)]


def cmd_algebra(a) -> int:
    L = build_algebra(a.name, a.n)
    out = {"label": L.label, "name": L.name, "n": L.n, "dim": L.dim, "ad_invariant": L.ad_invariant}
    if a.dump:
        Path(a.dump).write_text(json.dumps(structure_quadruples(L)) + "\n", encoding="utf-8")
        out["structure_file"] = a.dump
    print(json.dumps(out, indent=2))
    return 0


def cmd_sharp(a) -> int:
    try:
        R = load_operator(a.input)
    except (OSError, KeyError, ValueError) as e:
        raise UsageError(f"cannot load operator {a.input!r}: {e}") from e
    try:
        S = sharp_adjoint(R) if a.form == "adjoint" else sharp_coadjoint(R)
    except ContractViolation as e:
        raise UsageError(str(e)) from e
    print(json.dumps(S.to_dict()))
    return 0


def cmd_membership(a) -> int:
    cfg = {"experiment": "membership", "family": a.family, "seed": a.seed, "h": a.h, "starts": a.starts, "n": a.n}
    if a.R:
        cfg["R"] = a.R
    return emit(run(validate_config(cfg)), a.output)


def cmd_flow(a) -> int:
    cfg = {"experiment": "flow", "seed": a.seed, "field": a.field, "eps": a.eps, "t_end": a.t_end,
           "samples": a.samples, "h": a.h, "n": a.n, "s": a.s}
    if a.R0:
        cfg["R0"] = a.R0
    if a.family:
        cfg["family"] = a.family
    return emit(run(validate_config(cfg)), a.output, a.csv)


def _s_values(text: str) -> tuple:
    try:
        vals = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as e:
        raise UsageError(f"--s expects comma-separated numbers, got {text!r}") from e
    if not vals or any(v <= 0 for v in vals):
        raise UsageError("--s values must be positive")
    return vals if len(vals) > 1 else (vals[0], vals[0] / 2)


def cmd_kahler(a) -> int:
    if a.check == "lemma":
        res = ex.kahler_lemma(a.n, a.trials, a.seed, s_values=_s_values(a.s))
    else:
        res = ex.bochner(a.n, a.trials, a.seed)
    return emit(res, a.output)


def cmd_verify(a) -> int:
    cfg = {"experiment": a.suite, "seed": a.seed, "n": a.n, "trials": a.trials, "starts": a.starts}
    return emit(run(validate_config(cfg)), a.output)


def cmd_experiment(a) -> int:
    cfg = load_config(a.config)
    return emit(run(cfg), cfg.get("output"))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="curvcone", description="Curvature cones, reaction ODEs and membership oracles.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("algebra", help="describe a metric Lie algebra")
    s.add_argument("--name", choices=ALGEBRAS, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--dump", metavar="PATH", help="write structure constants as [a, b, k, value] quadruples")
    s.set_defaults(fn=cmd_algebra)

    s = sub.add_parser("sharp", help="apply the # operator to an operator file")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--form", choices=("adjoint", "coadjoint"), default="adjoint")
    s.set_defaults(fn=cmd_sharp)

    s = sub.add_parser("membership", help="minimum of R(v, v-bar) over a cone family")
    s.add_argument("--R", help="operator JSON file (default: identity)")
    s.add_argument("--family", required=True)
    s.add_argument("--n", type=int, default=4)
    s.add_argument("--h", type=float, default=0.0)
    s.add_argument("--starts", type=int, default=32)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--output")
    s.set_defaults(fn=cmd_membership)

    s = sub.add_parser("flow", help="integrate a reaction ODE and track margins")
    s.add_argument("--R0", help="initial operator JSON file (default: identity)")
    s.add_argument("--field", choices=FIELDS, default="ricci")
    s.add_argument("--eps", type=float, default=0.0)
    s.add_argument("--s", type=float, default=0.0)
    s.add_argument("--t-end", dest="t_end", type=float, default=0.1)
    s.add_argument("--samples", type=int, default=50)
    s.add_argument("--family")
    s.add_argument("--n", type=int, default=4)
    s.add_argument("--h", type=float, default=0.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--output")
    s.add_argument("--csv", help="trajectory CSV path")
    s.set_defaults(fn=cmd_flow)

    s = sub.add_parser("kahler", help="Kähler identity checks")
    s.add_argument("--check", choices=("lemma", "bochner"), required=True)
    s.add_argument("--n", type=int, default=2)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--s", default="1e-3,5e-4", help="comma-separated step sizes")
    s.add_argument("--trials", type=int, default=10)
    s.add_argument("--output")
    s.set_defaults(fn=cmd_kahler)

    s = sub.add_parser("verify", help="certificate batteries")
    s.add_argument("--suite", choices=("theorem1", "theorem2"), required=True)
    s.add_argument("--n", type=int, default=4)
    s.add_argument("--trials", type=int, default=10)
    s.add_argument("--starts", type=int, default=8)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--output")
    s.set_defaults(fn=cmd_verify)

    s = sub.add_parser("experiment", help="run a JSON experiment configuration")
    s.add_argument("--config", required=True)
    s.set_defaults(fn=cmd_experiment)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else 0
    try:
        return args.fn(args)
    except (UsageError, ParameterError) as e:
        print(f"curvcone: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
