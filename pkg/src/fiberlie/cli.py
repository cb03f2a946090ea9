"""Batch front end: ``fiberlie --input job.json [--output report.json]``.

A job file is strict JSON naming one task and its objects.  Reports are JSON
with sorted keys, so identical jobs and seeds give byte-identical output.
Exit status: 0 completed, 2 completed with truncation flags, 1 error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from typing import Any

import jsonschema
import numpy as np

from . import __version__
from .distributions import (
    CLOSED, DEFAULT_GB_BUDGET, DEFAULT_MAX_DEPTH, Distribution, closure_certificate, dinfty,
    involutive_closure, rank_profile,
)
from .fields import PAVectorField
from .fw_sets import STRATEGIES, FwConstructible, FwSet, projection_probe
from .geometry import AffineChart, GrStarChart, ValidationError, build_constraints, isometry_scan
from .groebner import IdealChain, as_element, buchberger, chain_stationarity, member, reduce
from .integrator import BlowUpError, build_leaf, verify_tangency
from .poly import GradedPolynomial, PolynomialParseError, VarSplit, to_rational

log = logging.getLogger("fiberlie")

TASKS = ("bracket-closure", "dinfty", "leaf", "groebner", "chain", "projection-probe", "isometry-scan")
RANDOMIZED = ("projection-probe", "isometry-scan")
JOB_VERSION = 1

_number = {"type": ["number", "string"]}
_point = {"type": "array", "items": _number}
_strings = {"type": "array", "items": {"type": "string"}}
_range = {"type": "array", "items": _number, "minItems": 2, "maxItems": 2}

PARAMS_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "max_depth": {"type": "integer", "minimum": 0},
        "max_degree": {"type": "integer", "minimum": 0},
        "gb_budget": {"type": "integer", "minimum": 1},
        "tolerance": {"type": "number", "exclusiveMinimum": 0},
        "strategy": {"enum": list(STRATEGIES)},
        "samples": {"type": "integer", "minimum": 1},
        "sample_box": {"type": "array", "items": _range},
        "points": {"type": "array", "items": _point},
        "z0": _point,
        "box": _range,
        "resolution": {"type": "integer", "minimum": 2},
        "h": {"type": "number", "exclusiveMinimum": 0},
        "fd_step": {"type": ["number", "null"], "exclusiveMinimum": 0},
        "reduce": {"type": "array", "items": {"type": ["string", "array"], "items": {"type": "string"}}},
        "neighborhood_radius": _number,
        "pairs": {"type": "array", "items": {"type": "array", "items": _point, "minItems": 2, "maxItems": 2}},
        "isotropy": {"type": "boolean"},
        "unimodular": {"type": "boolean"},
        "embed": {"type": "boolean"},
        "attempt_budget": {"type": "integer", "minimum": 1},
        "density_threshold": {"type": "number", "minimum": 0, "maximum": 1},
        "grid_box": {"type": "array", "items": _range},
    },
}

CHART_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["dim"],
    "properties": {
        "dim": {"type": "integer", "minimum": 1},
        "gamma": {"type": "object", "patternProperties": {r"^\d+,\d+,\d+$": {"type": "string"}},
                  "additionalProperties": False},
        "metric": {"type": "array", "items": {"type": "array", "items": {"type": ["string", "number"]}}},
    },
}

JOB_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["version", "task"],
    "properties": {
        "version": {"const": JOB_VERSION},
        "task": {"enum": list(TASKS)},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "split": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 2, "maxItems": 2},
        "fields": {"type": "object", "additionalProperties": _strings},
        "distribution": {
            "type": "object", "additionalProperties": False, "required": ["generators"],
            "properties": {"generators": {"type": "array", "items": {"type": "string"}, "minItems": 1},
                           "plane_dim": {"type": ["integer", "null"], "minimum": 1}},
        },
        "set": {
            "type": "object", "additionalProperties": False, "required": ["equations"],
            "properties": {"equations": _strings, "negative": _strings},
        },
        "polynomials": {"type": "array", "items": {"type": ["string", "array"], "items": {"type": "string"}}},
        "stages": {"type": "array", "items": _strings, "minItems": 1},
        "chart": CHART_SCHEMA,
        "target_chart": CHART_SCHEMA,
        "params": PARAMS_SCHEMA,
    },
    "allOf": [
        {"if": {"properties": {"task": {"enum": ["bracket-closure", "dinfty", "leaf"]}}},
         "then": {"required": ["split", "fields", "distribution"]}},
        {"if": {"properties": {"task": {"const": "groebner"}}}, "then": {"required": ["split", "polynomials"]}},
        {"if": {"properties": {"task": {"const": "chain"}}}, "then": {"required": ["split", "stages"]}},
        {"if": {"properties": {"task": {"const": "projection-probe"}}}, "then": {"required": ["split", "set"]}},
        {"if": {"properties": {"task": {"const": "isometry-scan"}}}, "then": {"required": ["chart"]}},
    ],
}


class JobError(Exception):
    def __init__(self, message: str, path: str = "", position: int | None = None, kind: str = "job"):
        super().__init__(message)
        self.message, self.path, self.position, self.kind = message, path, position, kind

    def to_json(self) -> dict:
        out = {"kind": self.kind, "message": self.message, "path": self.path}
        if self.position is not None:
            out["position"] = self.position
        return out


def _pointer(parts) -> str:
    return "".join("/" + str(p).replace("~", "~0").replace("/", "~1") for p in parts)


def validate_job(job: Any) -> None:
    validator = jsonschema.Draft202012Validator(JOB_SCHEMA)
    errors = sorted(validator.iter_errors(job), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    if errors:
        e = errors[0]
        raise JobError(e.message, _pointer(e.absolute_path), kind="schema")


class _Loader:
    """Turns job objects into library objects, keeping JSON pointers for errors."""

    def __init__(self, job: dict):
        self.job = job
        self.split = VarSplit(*job["split"]) if "split" in job else None

    def poly(self, text: str, path: str, split: VarSplit | None = None) -> GradedPolynomial:
        try:
            return GradedPolynomial.parse(text, split or self.split)
        except PolynomialParseError as exc:
            raise JobError(exc.message, path, exc.position, kind="parse") from None

    def rational(self, value, path: str):
        try:
            return to_rational(value)
        except (ValueError, TypeError) as exc:
            raise JobError(str(exc), path, kind="value") from None

    def point(self, values, path: str, length: int | None = None) -> list:
        if length is not None and len(values) != length:
            raise JobError(f"expected {length} coordinates, got {len(values)}", path, kind="value")
        return [self.rational(v, f"{path}/{i}") for i, v in enumerate(values)]

    def fields(self) -> dict[str, PAVectorField]:
        out = {}
        for name, comps in self.job["fields"].items():
            path = _pointer(["fields", name])
            if len(comps) != self.split.nvars:
                raise JobError(f"field needs {self.split.nvars} components", path, kind="value")
            polys = [self.poly(c, f"{path}/{i}") for i, c in enumerate(comps)]
            out[name] = PAVectorField(polys, name=name, split=self.split)
        return out

    def distribution(self) -> Distribution:
        fields = self.fields()
        spec = self.job["distribution"]
        gens = []
        for i, name in enumerate(spec["generators"]):
            if name not in fields:
                raise JobError(f"undefined field {name!r}", f"/distribution/generators/{i}", kind="reference")
            gens.append(fields[name])
        try:
            return Distribution(gens, plane_dim=spec.get("plane_dim"), provenance=spec["generators"])
        except ValueError as exc:
            raise JobError(str(exc), "/distribution", kind="value") from None


class _Timer:
    def __init__(self):
        self.stages: dict[str, float] = {}

    def __call__(self, name: str):
        timer = self

        class _Stage:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                timer.stages[name] = round(time.perf_counter() - self.t0, 6)
                log.info("stage %s took %.3fs", name, timer.stages[name])

        return _Stage()


def _random_points(rng: np.random.Generator, box, count: int, dim: int) -> list[list]:
    """Rational points on a 1/8 lattice inside ``box``, drawn from ``rng``."""
    if box is None:
        box = [(-2, 2)] * dim
    if len(box) != dim:
        raise JobError(f"sample_box needs {dim} ranges", "/params/sample_box", kind="value")
    box = [(to_rational(lo), to_rational(hi)) for lo, hi in box]
    steps = 8
    return [[lo + (hi - lo) * to_rational(int(rng.integers(0, steps + 1))) / steps for lo, hi in box]
            for _ in range(count)]


def _effective_config(job: dict, args) -> dict:
    params = dict(job.get("params", {}))
    for flag in ("max_depth", "max_degree", "gb_budget", "samples", "tolerance", "strategy"):
        value = getattr(args, flag, None)
        if value is not None:
            params[flag] = value
    params.setdefault("max_depth", DEFAULT_MAX_DEPTH)
    params.setdefault("gb_budget", DEFAULT_GB_BUDGET)
    seed = getattr(args, "seed", None)
    if seed is None:
        seed = job.get("seed")
    if job["task"] in RANDOMIZED and seed is None:
        raise JobError("a seed is required for randomized tasks", "/seed", kind="schema")
    return {"task": job["task"], "seed": seed, "params": params}


def _closure(loader: _Loader, params: dict, timer: _Timer):
    P = loader.distribution()
    with timer("closure"):
        C = involutive_closure(P, max_depth=params.get("max_depth", DEFAULT_MAX_DEPTH),
                               gb_budget=params.get("gb_budget", DEFAULT_GB_BUDGET),
                               max_degree=params.get("max_degree"))
    return P, C


def _sample_points(loader, params, seed, dim, path="/params/points"):
    if "points" in params:
        return [loader.point(p, f"{path}/{i}", dim) for i, p in enumerate(params["points"])]
    if "samples" in params:
        rng = np.random.default_rng(seed if seed is not None else 0)
        return _random_points(rng, params.get("sample_box"), params["samples"], dim)
    return []


def task_bracket_closure(loader, cfg, timer):
    params = cfg["params"]
    P, C = _closure(loader, params, timer)
    result = {"closure": C.to_json(), "gb_steps": C.gb_steps, "generator_count": len(C.generators)}
    if C.closure_state == CLOSED:
        with timer("certificate"):
            result["certificate"] = closure_certificate(C)
    points = _sample_points(loader, params, cfg["seed"], loader.split.nvars)
    if points:
        with timer("ranks"):
            result["rank_profile"] = rank_profile(C, points).to_json()
    flags = [] if C.closure_state == CLOSED else [f"closure {C.closure_state} at depth {C.bracket_depth_reached}"]
    return result, flags


def task_dinfty(loader, cfg, timer):
    params = cfg["params"]
    P, C = _closure(loader, params, timer)
    if P.plane_dim is None:
        raise JobError("dinfty needs distribution.plane_dim", "/distribution/plane_dim", kind="value")
    with timer("minors"):
        S = dinfty(P, C)
    result = {"closure_state": C.closure_state, "bracket_depth": C.bracket_depth_reached,
              "generator_count": len(C.generators), "set": S.to_json(), "minor_index": S.provenance,
              "certified_empty": S.certified_empty()}
    points = _sample_points(loader, params, cfg["seed"], loader.split.nvars)
    if points:
        result["membership"] = [{"point": [str(v) for v in p], "member": S.member(p)} for p in points]
    flags = ["D-infinity is an outer approximation (closure truncated)"] if S.outer_approximation else []
    return result, flags


def task_leaf(loader, cfg, timer):
    params = cfg["params"]
    P, C = _closure(loader, params, timer)
    if C.closure_state != CLOSED:
        raise JobError(f"closure is {C.closure_state}; leaf charts need a closed distribution",
                       "/params/max_depth", kind="value")
    if "z0" not in params:
        raise JobError("leaf needs params.z0", "/params", kind="schema")
    z0 = [float(v) for v in loader.point(params["z0"], "/params/z0", loader.split.nvars)]
    box = [float(loader.rational(v, f"/params/box/{i}")) for i, v in enumerate(params.get("box", [-1, 1]))]
    if len(box) != 2:
        raise JobError("box must be [lo, hi]", "/params/box", kind="value")
    with timer("leaf"):
        chart = build_leaf(C, z0, box=tuple(box), resolution=params.get("resolution", 21),
                           h=params.get("h", 1e-3))
    with timer("tangency"):
        report = verify_tangency(chart, C, tolerance=params.get("tolerance", 1e-6),
                                 fd_step=params.get("fd_step", 1e-4))
    result = {"closure_state": C.closure_state, "flow_order": [C.provenance[i] for i in chart.field_indices],
              "rank_constant_on_grid": chart.rank_constant, "tangency": report.to_json()}
    return result, [], chart.to_csv()


def task_groebner(loader, cfg, timer):
    params = cfg["params"]
    gens = []
    for i, entry in enumerate(loader.job["polynomials"]):
        comps = [entry] if isinstance(entry, str) else entry
        gens.append(as_element([loader.poly(c, f"/polynomials/{i}" + ("" if isinstance(entry, str) else f"/{j}"))
                                for j, c in enumerate(comps)]))
    ranks = {g.rank for g in gens}
    if len(ranks) > 1:
        raise JobError("all module elements need the same number of components", "/polynomials", kind="value")
    with timer("buchberger"):
        basis = buchberger(gens, budget=params.get("gb_budget", DEFAULT_GB_BUDGET))
    result = {"basis": [[str(c) for c in g.components] for g in basis.generators],
              "is_groebner": basis.is_groebner, "steps": basis.steps}
    if "reduce" in params:
        rows = []
        for i, entry in enumerate(params["reduce"]):
            comps = [entry] if isinstance(entry, str) else entry
            f = as_element([loader.poly(c, f"/params/reduce/{i}") for c in comps])
            nf = reduce(f, basis)
            rows.append({"input": [str(c) for c in f.components], "normal_form": [str(c) for c in nf.components],
                         "member": member(f, basis) if basis.is_groebner else None})
        result["reductions"] = rows
    return result, [] if basis.is_groebner else ["Gröbner budget exhausted; basis is partial"]


def task_chain(loader, cfg, timer):
    params = cfg["params"]
    stages = [[loader.poly(t, f"/stages/{k}/{i}") for i, t in enumerate(st)]
              for k, st in enumerate(loader.job["stages"])]
    try:
        chain = IdealChain(stages)
    except ValueError as exc:
        raise JobError(str(exc), "/stages", kind="value") from None
    points = _sample_points(loader, params, cfg["seed"], loader.split.nvars)
    if not points:
        raise JobError("chain needs params.points or params.samples", "/params", kind="schema")
    with timer("stationarity"):
        report = chain_stationarity(chain, points, params.get("neighborhood_radius", "1/100"),
                                    budget=params.get("gb_budget", DEFAULT_GB_BUDGET))
    return report.to_json(), []


def task_projection_probe(loader, cfg, timer):
    params = cfg["params"]
    spec = loader.job["set"]
    pos = FwSet(loader.split, [loader.poly(t, f"/set/equations/{i}") for i, t in enumerate(spec["equations"])])
    S = pos
    if "negative" in spec:
        S = FwConstructible(pos, FwSet(loader.split, [loader.poly(t, f"/set/negative/{i}")
                                                      for i, t in enumerate(spec["negative"])]))
    points = _sample_points(loader, params, cfg["seed"], loader.split.n)
    if not points:
        raise JobError("projection-probe needs params.points or params.samples", "/params", kind="schema")
    with timer("probe"):
        try:
            report = projection_probe(S, points, strategy=params.get("strategy", "auto"),
                                      tolerance=params.get("tolerance", 1e-9),
                                      budget=params.get("attempt_budget", 20), seed=cfg["seed"],
                                      box=params.get("grid_box"),
                                      density_threshold=params.get("density_threshold", 0.9))
        except ValueError as exc:
            raise JobError(str(exc), "/params", kind="value") from None
    flags = ["set is an outer approximation"] if report.outer_approximation else []
    return report.to_json(), flags, report.to_csv()


def task_isometry_scan(loader, cfg, timer):
    params = cfg["params"]
    job = loader.job
    try:
        source = AffineChart.from_json(job["chart"])
        target = AffineChart.from_json(job["target_chart"]) if "target_chart" in job else None
    except PolynomialParseError as exc:
        raise JobError(exc.message, "/chart", exc.position, kind="parse") from None
    except ValueError as exc:
        raise JobError(str(exc), "/chart", kind="value") from None
    pair = GrStarChart(source, target)
    n = pair.n
    if "pairs" in params:
        pairs = [(loader.point(p[0], f"/params/pairs/{i}/0", n), loader.point(p[1], f"/params/pairs/{i}/1", n))
                 for i, p in enumerate(params["pairs"])]
    elif "samples" in params:
        rng = np.random.default_rng(cfg["seed"])
        pts = _random_points(rng, params.get("sample_box"), 2 * params["samples"], n)
        pairs = list(zip(pts[0::2], pts[1::2]))
    else:
        raise JobError("isometry-scan needs params.pairs or params.samples", "/params", kind="schema")
    try:
        constraints = build_constraints(pair, isotropy=params.get("isotropy", False),
                                        unimodular=params.get("unimodular", False))
    except ValueError as exc:
        raise JobError(str(exc), "/params/isotropy", kind="value") from None
    with timer("scan"):
        report = isometry_scan(pair, constraints, pairs, max_depth=params.get("max_depth", 4),
                               gb_budget=params.get("gb_budget", DEFAULT_GB_BUDGET),
                               strategy=params.get("strategy", "auto"), tolerance=params.get("tolerance", 1e-9),
                               seed=cfg["seed"], attempt_budget=params.get("attempt_budget", 20),
                               embed=params.get("embed", False))
    result = report.to_json()
    result["constraints"] = constraints.to_json()
    return result, list(report.truncations)


RUNNERS = {
    "bracket-closure": task_bracket_closure,
    "dinfty": task_dinfty,
    "leaf": task_leaf,
    "groebner": task_groebner,
    "chain": task_chain,
    "projection-probe": task_projection_probe,
    "isometry-scan": task_isometry_scan,
}


def _jsonable(obj):
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return str(obj)


def run(job: dict, args=None) -> tuple[dict, int, str | None]:
    """Run a parsed job; returns (report, exit code, optional CSV side output)."""
    args = args or argparse.Namespace()
    validate_job(job)
    cfg = _effective_config(job, args)
    if cfg["params"].get("strategy") not in (None, *STRATEGIES):
        raise JobError(f"unknown strategy {cfg['params']['strategy']!r}", "/params/strategy", kind="schema")
    timer = _Timer()
    loader = _Loader(job)
    out = RUNNERS[job["task"]](loader, cfg, timer)
    result, flags = out[0], out[1]
    csv_text = out[2] if len(out) > 2 else None
    report = {
        "tool": "fiberlie",
        "version": __version__,
        "task": job["task"],
        "config": {"job": job, "effective": cfg},
        "truncated": bool(flags),
        "flags": flags,
        "result": result,
    }
    if getattr(args, "timings", False):
        report["timings"] = timer.stages
    return report, 2 if flags else 0, csv_text


def dumps(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, default=_jsonable, ensure_ascii=False) + "\n"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fiberlie", description=__doc__.splitlines()[0])
    p.add_argument("--input", required=True, help="job file (JSON)")
    p.add_argument("--output", help="report file; stdout if omitted")
    p.add_argument("--csv", help="CSV side output for leaf grids and projection probes")
    p.add_argument("--seed", type=int)
    p.add_argument("--max-degree", type=int, dest="max_degree")
    p.add_argument("--max-depth", type=int, dest="max_depth")
    p.add_argument("--gb-budget", type=int, dest="gb_budget")
    p.add_argument("--samples", type=int)
    p.add_argument("--tolerance", type=float)
    p.add_argument("--strategy", choices=list(STRATEGIES))
    p.add_argument("--timings", action="store_true", help="include per-stage timings (breaks byte-identity)")
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--version", action="version", version=f"fiberlie {__version__}")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print(dumps({"error": {"kind": "flag", "message": "seed must be a u64", "path": "/seed"}}),
              file=sys.stderr, end="")
        return 1
    try:
        with open(args.input, encoding="utf-8") as fh:
            text = fh.read()
        try:
            job = json.loads(text)
        except json.JSONDecodeError as exc:
            raise JobError(f"invalid JSON: {exc.msg}", "", exc.pos, kind="json") from None
        report, code, csv_text = run(job, args)
    except JobError as exc:
        print(dumps({"error": exc.to_json()}), file=sys.stderr, end="")
        return 1
    except (OSError, ValidationError, BlowUpError, ValueError) as exc:
        print(dumps({"error": {"kind": type(exc).__name__, "message": str(exc), "path": ""}}),
              file=sys.stderr, end="")
        return 1
    text = dumps(report)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.csv and csv_text is not None:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(csv_text)
    return code

