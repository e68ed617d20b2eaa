"""Experiment config files: a single JSON document describing geometry,
ambient set, mappings, schedules, anchor/start points, and run options.

Minimal example (the canonical one ships in configs/two_halfspaces.json):

    {
      "geometry": {"name": "sq_norm", "dim": 2},
      "mappings": [
        {"type": "projection", "set": {"type": "halfspace", "a": [1, 0], "b": 0}},
        {"type": "projection", "set": {"type": "halfspace", "a": [0, 1], "b": 0}}
      ],
      "anchor": [1, 1],
      "start": [1, 1],
      "run": {"residual_tol": 1e-4, "audit": true, "seed": 7}
    }

Unspecified keys take documented defaults; parse_config() -> ExperimentSpec
round-trips through ExperimentSpec.canonical().
"""

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DimensionMismatch, ParseError, SchemaError, ScheduleViolation
from .geometry import make_geometry
from .halpern import Schedules, make_schedules
from .mappings import identity_mapping, projection_mapping, resolvent_mapping
from .sets import Box, set_dimension, set_from_config

TOP_KEYS = {"geometry", "ambient", "mappings", "schedules", "anchor", "start", "run"}
RUN_KEYS = {"max_iter", "residual_tol", "audit", "seed", "output", "reference", "scheme"}
SCHEDULE_KEYS = {"alpha", "beta", "c", "theta", "delta", "gamma"}

DEFAULT_MAX_ITER = 200_000
DEFAULT_RESIDUAL_TOL = 1e-8
AMBIENT_SPAN = 1e6


def default_ambient(geometry_name, dim):
    """Large box so the ambient projection is a cheap clamp that still
    exercises the projection step; the entropy box stays inside int dom f."""
    lo = 1e-6 if geometry_name == "neg_entropy" else -AMBIENT_SPAN
    return Box([lo] * dim, [AMBIENT_SPAN] * dim)


@dataclass
class ExperimentSpec:
    geometry: dict
    ambient: dict
    mappings: list
    schedules: dict
    anchor: list
    start: list
    max_iter: int = DEFAULT_MAX_ITER
    residual_tol: float = DEFAULT_RESIDUAL_TOL
    audit: bool = False
    seed: int = 0
    output: Optional[str] = None
    reference: Optional[list] = None
    scheme: str = "auto"

    def canonical(self):
        """Fully-resolved plain dict; feeding it back through parse_config
        reproduces an equal spec."""
        run = {
            "max_iter": self.max_iter,
            "residual_tol": self.residual_tol,
            "audit": self.audit,
            "seed": self.seed,
            "scheme": self.scheme,
        }
        if self.output is not None:
            run["output"] = self.output
        if self.reference is not None:
            run["reference"] = list(self.reference)
        return {
            "geometry": dict(self.geometry),
            "ambient": dict(self.ambient),
            "mappings": [dict(m) for m in self.mappings],
            "schedules": dict(self.schedules),
            "anchor": list(self.anchor),
            "start": list(self.start),
            "run": run,
        }

    @property
    def dim(self):
        return int(self.geometry["dim"])

    def build_geometry(self):
        g = dict(self.geometry)
        name = g.pop("name")
        dim = g.pop("dim")
        return make_geometry(name, dim, **g)

    def build_ambient(self):
        return set_from_config(self.ambient)

    def build_mappings(self, geom):
        built = []
        for node in self.mappings:
            kind = node["type"]
            if kind == "projection":
                built.append(projection_mapping(geom, set_from_config(node["set"])))
            elif kind == "resolvent":
                built.append(resolvent_mapping(geom, node["M"], node["q"],
                                               step=node.get("step", 1.0)))
            elif kind == "identity":
                built.append(identity_mapping())
            else:  # pragma: no cover - guarded by validation
                raise SchemaError(f"unknown mapping type {kind!r}")
        return built

    def build_schedules(self) -> Schedules:
        s = self.schedules
        alpha = s["alpha"]
        if alpha["form"] == "power":
            anchor_form = ("power", float(alpha["exponent"]))
        else:
            anchor_form = ("const", float(alpha["value"]))
        try:
            return make_schedules(
                anchor_form=anchor_form,
                beta=float(s["beta"]),
                c=float(s["c"]),
                theta=float(s["theta"]),
                delta=float(s["delta"]),
                gamma=float(s["gamma"]),
            )
        except ScheduleViolation as exc:
            raise SchemaError(str(exc)) from exc


def _require_keys(node, allowed, where):
    for key in node:
        if key not in allowed:
            raise SchemaError(f"unknown key {key!r} in {where}")


def _as_float_list(value, where):
    if not isinstance(value, (list, tuple)) or not value:
        raise SchemaError(f"{where} must be a nonempty list of numbers")
    out = []
    for v in value:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise SchemaError(f"{where} must contain only numbers")
        out.append(float(v))
    if not all(np.isfinite(out)):
        raise SchemaError(f"{where} has non-finite entries")
    return out


def _check_dim(name, actual, expected):
    if actual is not None and actual != expected:
        raise DimensionMismatch(
            f"{name} has dimension {actual} but the geometry has dimension {expected}"
        )


def _validate_geometry(node):
    if not isinstance(node, dict):
        raise SchemaError("'geometry' must be an object")
    _require_keys(node, {"name", "dim", "p"}, "'geometry'")
    if "name" not in node or "dim" not in node:
        raise SchemaError("'geometry' requires keys 'name' and 'dim'")
    name = node["name"]
    if name not in ("sq_norm", "p_power", "neg_entropy"):
        raise SchemaError(f"unknown geometry name {name!r}")
    dim = node["dim"]
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise SchemaError(f"'geometry.dim' must be a positive integer, got {dim!r}")
    out = {"name": name, "dim": dim}
    if name == "p_power":
        if "p" not in node:
            raise SchemaError("'geometry' with name 'p_power' requires key 'p'")
        p = float(node["p"])
        if not p > 1.0:
            raise SchemaError(f"'geometry.p' must exceed 1, got {p}")
        out["p"] = p
    elif "p" in node:
        raise SchemaError(f"'geometry.p' is only valid for p_power, not {name!r}")
    return out


def _validate_set(node, dim, where):
    cset = set_from_config(node)  # raises SchemaError on malformed descriptors
    _check_dim(where, set_dimension(cset), dim)
    return cset.to_config()


def _validate_mapping(node, dim, index):
    where = f"'mappings[{index}]'"
    if not isinstance(node, dict) or "type" not in node:
        raise SchemaError(f"{where} must be an object with a 'type' key")
    kind = node["type"]
    if kind == "projection":
        _require_keys(node, {"type", "set"}, where)
        if "set" not in node:
            raise SchemaError(f"{where} of type 'projection' requires key 'set'")
        return {"type": "projection", "set": _validate_set(node["set"], dim, where)}
    if kind == "resolvent":
        _require_keys(node, {"type", "M", "q", "step"}, where)
        if "M" not in node or "q" not in node:
            raise SchemaError(f"{where} of type 'resolvent' requires keys 'M' and 'q'")
        M = node["M"]
        if (not isinstance(M, list) or not M
                or any(not isinstance(row, list) or len(row) != len(M) for row in M)):
            raise SchemaError(f"{where}.M must be a square matrix (list of equal-length rows)")
        _check_dim(f"{where}.M", len(M), dim)
        q = _as_float_list(node["q"], f"{where}.q")
        _check_dim(f"{where}.q", len(q), dim)
        step = float(node.get("step", 1.0))
        if not step > 0.0:
            raise SchemaError(f"{where}.step must be positive")
        return {"type": "resolvent",
                "M": [[float(v) for v in row] for row in M],
                "q": q, "step": step}
    if kind == "identity":
        _require_keys(node, {"type"}, where)
        return {"type": "identity"}
    raise SchemaError(f"unknown mapping type {kind!r} in {where}")


def _validate_schedules(node):
    if node is None:
        node = {}
    if not isinstance(node, dict):
        raise SchemaError("'schedules' must be an object")
    _require_keys(node, SCHEDULE_KEYS, "'schedules'")
    alpha = node.get("alpha", {"form": "power", "exponent": 1.0})
    if isinstance(alpha, (int, float)) and not isinstance(alpha, bool):
        alpha = {"form": "const", "value": float(alpha)}
    if not isinstance(alpha, dict) or alpha.get("form") not in ("power", "const"):
        raise SchemaError("'schedules.alpha' must be {'form': 'power', 'exponent': a} "
                          "or {'form': 'const', 'value': v}")
    if alpha["form"] == "power":
        _require_keys(alpha, {"form", "exponent"}, "'schedules.alpha'")
        exponent = float(alpha.get("exponent", 1.0))
        if not exponent > 0.0:
            raise SchemaError("'schedules.alpha.exponent' must be positive")
        alpha = {"form": "power", "exponent": exponent}
    else:
        _require_keys(alpha, {"form", "value"}, "'schedules.alpha'")
        value = float(alpha.get("value", 0.5))
        if not 0.0 < value < 1.0:
            raise SchemaError("'schedules.alpha.value' must lie in (0, 1)")
        alpha = {"form": "const", "value": value}

    def mix(name, default):
        v = node.get(name, default)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise SchemaError(f"'schedules.{name}' must be a number")
        v = float(v)
        if not 0.0 < v < 1.0:
            raise SchemaError(f"'schedules.{name}' must lie strictly between 0 and 1, got {v}")
        return v

    beta = mix("beta", 0.5)
    c = mix("c", beta)
    theta = mix("theta", 1.0 / 3.0)
    delta = mix("delta", 1.0 / 3.0)
    gamma = mix("gamma", 1.0 / 3.0)
    if abs(theta + delta + gamma - 1.0) > 1e-14:
        raise SchemaError(
            f"'schedules' weights theta, delta, gamma must sum to 1, "
            f"got {theta + delta + gamma:.17g}"
        )
    return {"alpha": alpha, "beta": beta, "c": c,
            "theta": theta, "delta": delta, "gamma": gamma}


def spec_from_dict(doc, where="config"):
    """Validate a parsed JSON document into an ExperimentSpec."""
    if not isinstance(doc, dict):
        raise SchemaError(f"{where} must be a JSON object")
    _require_keys(doc, TOP_KEYS, where)
    for key in ("geometry", "mappings", "anchor", "start"):
        if key not in doc:
            raise SchemaError(f"{where} is missing required key {key!r}")

    geometry = _validate_geometry(doc["geometry"])
    dim = geometry["dim"]

    if "ambient" in doc and doc["ambient"] is not None:
        ambient = _validate_set(doc["ambient"], dim, "'ambient'")
    else:
        ambient = default_ambient(geometry["name"], dim).to_config()

    raw_mappings = doc["mappings"]
    if not isinstance(raw_mappings, list) or not raw_mappings:
        raise SchemaError("'mappings' must be a nonempty list")
    mappings = [_validate_mapping(m, dim, i) for i, m in enumerate(raw_mappings)]

    schedules = _validate_schedules(doc.get("schedules"))

    anchor = _as_float_list(doc["anchor"], "'anchor'")
    _check_dim("'anchor'", len(anchor), dim)
    start = _as_float_list(doc["start"], "'start'")
    _check_dim("'start'", len(start), dim)

    run = doc.get("run", {})
    if not isinstance(run, dict):
        raise SchemaError("'run' must be an object")
    _require_keys(run, RUN_KEYS, "'run'")
    max_iter = run.get("max_iter", DEFAULT_MAX_ITER)
    if not isinstance(max_iter, int) or isinstance(max_iter, bool) or max_iter < 1:
        raise SchemaError(f"'run.max_iter' must be a positive integer, got {max_iter!r}")
    residual_tol = float(run.get("residual_tol", DEFAULT_RESIDUAL_TOL))
    if not residual_tol >= 0.0:
        raise SchemaError("'run.residual_tol' must be nonnegative")
    audit = run.get("audit", False)
    if not isinstance(audit, bool):
        raise SchemaError("'run.audit' must be a boolean")
    seed = run.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise SchemaError("'run.seed' must be an integer")
    output = run.get("output")
    if output is not None and not isinstance(output, str):
        raise SchemaError("'run.output' must be a string path prefix")
    reference = run.get("reference")
    if reference is not None:
        reference = _as_float_list(reference, "'run.reference'")
        _check_dim("'run.reference'", len(reference), dim)
    scheme = run.get("scheme", "auto")
    if scheme not in ("auto", "pair", "family"):
        raise SchemaError(f"'run.scheme' must be auto, pair or family, got {scheme!r}")
    if scheme == "pair" and len(mappings) != 2:
        raise SchemaError("'run.scheme' pair requires exactly two mappings")

    return ExperimentSpec(
        geometry=geometry, ambient=ambient, mappings=mappings,
        schedules=schedules, anchor=anchor, start=start,
        max_iter=max_iter, residual_tol=residual_tol, audit=audit,
        seed=seed, output=output, reference=reference, scheme=scheme,
    )


def parse_config(path):
    """Load, parse, and validate an experiment config file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"config {path} is not valid JSON: {exc.msg} at line {exc.lineno}, "
            f"column {exc.colno}"
        ) from exc
    return spec_from_dict(doc, where=f"config {path}")


def dump_config(spec, path):
    """Write the canonical form of a spec back to disk."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(spec.canonical(), fh, indent=2, sort_keys=True)
        fh.write("\n")
