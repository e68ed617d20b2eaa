"""Command-line front end.

    bregfix run    --config exp.json [--out PREFIX] [--audit]
    bregfix verify {geometry,metrics,projection,mappings,solver,all}
    bregfix sweep  --config exp.json --grid grid.json [--out PREFIX]

Exit codes for ``run``: 0 converged with clean audits, 2 iteration budget
exhausted, 3 audit violations, 4 I/O failure, 65 bad config. ``sweep`` uses
64 for an empty grid. The environment variable BREGFIX_SEED overrides the
config seed (probe and sample generation only; iterations are deterministic).
"""

import argparse
import copy
import json
import os
import sys
import warnings

import numpy as np

from . import verify as verify_mod
from .config import parse_config
from .errors import BregfixError, ParseError, SchemaError, ScheduleWarning
from .halpern import (
    STATUS_CONVERGED,
    SolverConfig,
    reference_limit,
    run_family,
    run_pair,
)

EXIT_OK = 0
EXIT_ITER_BUDGET = 2
EXIT_AUDIT_VIOLATIONS = 3
EXIT_IO_ERROR = 4
EXIT_USAGE = 64
EXIT_BAD_CONFIG = 65


def _fmt(value):
    if value is None:
        return ""
    return "%.17g" % value


def exit_code_for(result):
    """Map a RunResult onto the documented run exit codes."""
    if result.audit_violations > 0:
        return EXIT_AUDIT_VIOLATIONS
    if result.status != STATUS_CONVERGED:
        return EXIT_ITER_BUDGET
    return EXIT_OK


def write_trace_csv(path, trace):
    n_res = len(trace[0].residuals) if trace else 0
    res_cols = ",".join(f"residual_{i + 1}" for i in range(n_res))
    header = f"n,residual_max,{res_cols},step_size,dist_to_ref,fejer_gap"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for rec in trace:
            cells = [str(rec.n), _fmt(max(rec.residuals))]
            cells.extend(_fmt(r) for r in rec.residuals)
            cells.append(_fmt(rec.step_size))
            cells.append(_fmt(rec.dist_to_ref))
            cells.append(_fmt(rec.fejer_gap))
            fh.write(",".join(cells) + "\n")


def write_summary(path, result, reference):
    final = [float(v) for v in result.final]
    doc = {
        "final": final,
        "status": result.status,
        "iterations": result.iterations,
        "audit_violations": result.audit_violations,
        "reference": None if reference is None else [float(v) for v in reference],
        "final_distance_to_reference": (
            None if reference is None
            else float(np.linalg.norm(result.final - np.asarray(reference)))
        ),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def _effective_seed(spec):
    env = os.environ.get("BREGFIX_SEED")
    if env is not None:
        return int(env)
    return spec.seed


def _resolve_reference(spec, geom, mappings, seed):
    if spec.reference is not None:
        return np.asarray(spec.reference, dtype=np.float64)
    fixed_sets = [m.fixed_set for m in mappings]
    if any(fs is None for fs in fixed_sets):
        return None
    try:
        return reference_limit(geom, fixed_sets, np.asarray(spec.anchor),
                               rng=np.random.default_rng(seed))
    except BregfixError as exc:
        print(f"note: reference projection unavailable ({exc})", file=sys.stderr)
        return None


def _execute(spec, audit_override=False):
    geom = spec.build_geometry()
    ambient = spec.build_ambient()
    mappings = spec.build_mappings(geom)
    schedules = spec.build_schedules()
    seed = _effective_seed(spec)
    reference = _resolve_reference(spec, geom, mappings, seed)
    audit = spec.audit or audit_override
    if audit and reference is None:
        print("note: audits need a reference fixed point; none is available, "
              "so audits are skipped", file=sys.stderr)
    cfg = SolverConfig(
        geometry=geom,
        ambient=ambient,
        anchor=np.asarray(spec.anchor, dtype=np.float64),
        start=np.asarray(spec.start, dtype=np.float64),
        schedules=schedules,
        max_iter=spec.max_iter,
        residual_tol=spec.residual_tol,
        audit=audit,
        reference=reference,
    )
    scheme = spec.scheme
    if scheme == "auto":
        scheme = "pair" if len(mappings) == 2 else "family"
    if scheme == "pair":
        result = run_pair(geom, cfg, mappings[0], mappings[1])
    else:
        result = run_family(geom, cfg, mappings)
    return result, reference


def cmd_run(args):
    try:
        spec = parse_config(args.config)
    except (ParseError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG

    out_prefix = args.out or spec.output
    if out_prefix is None:
        out_prefix = os.path.splitext(os.path.basename(args.config))[0]

    try:
        result, reference = _execute(spec, audit_override=args.audit)
    except BregfixError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG

    try:
        os.makedirs(os.path.dirname(out_prefix) or ".", exist_ok=True)
        write_trace_csv(out_prefix + ".trace.csv", result.trace)
        write_summary(out_prefix + ".summary", result, reference)
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_IO_ERROR

    print(f"status={result.status} iterations={result.iterations} "
          f"audit_violations={result.audit_violations}")
    print(f"final={[float(v) for v in result.final]}")
    if reference is not None:
        dist = float(np.linalg.norm(result.final - np.asarray(reference)))
        print(f"distance_to_reference={dist:.6e}")
    return exit_code_for(result)


def cmd_verify(args):
    seed = int(os.environ.get("BREGFIX_SEED", "0"))
    try:
        results = verify_mod.run_suites(args.suite, seed=seed)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    failures = 0
    for r in results:
        print(r.line())
        failures += 0 if r.passed else 1
    total = len(results)
    print(f"{total - failures}/{total} properties passed")
    return EXIT_OK if failures == 0 else 1


def _parse_grid(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read grid {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"grid {path} is not valid JSON: {exc.msg} at line {exc.lineno}") from exc
    if not isinstance(doc, dict):
        raise SchemaError("grid must be a JSON object with 'alpha' and/or 'beta' lists")
    for key in doc:
        if key not in ("alpha", "beta"):
            raise SchemaError(f"unknown grid key {key!r}")
    if not doc:
        return []
    alphas = doc.get("alpha", [{"form": "power", "exponent": 1.0}])
    betas = doc.get("beta", [0.5])
    if not isinstance(alphas, list) or not isinstance(betas, list):
        raise SchemaError("grid 'alpha' and 'beta' must be lists")
    cells = []
    for a in alphas:
        if isinstance(a, (int, float)) and not isinstance(a, bool):
            cells_a = {"form": "power", "exponent": float(a)}
        elif isinstance(a, dict) and a.get("form") in ("power", "const"):
            cells_a = a
        else:
            raise SchemaError(f"grid alpha entry {a!r} must be a power exponent or a form object")
        for b in betas:
            if isinstance(b, bool) or not isinstance(b, (int, float)) or not 0.0 < b < 1.0:
                raise SchemaError(f"grid beta entry {b!r} must be a number in (0, 1)")
            cells.append((cells_a, float(b)))
    return cells


def cmd_sweep(args):
    try:
        spec = parse_config(args.config)
        cells = _parse_grid(args.grid)
    except (ParseError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    if not cells:
        print("error: the sweep grid is empty", file=sys.stderr)
        return EXIT_USAGE

    out_prefix = args.out or spec.output
    if out_prefix is None:
        out_prefix = os.path.splitext(os.path.basename(args.config))[0]

    rows = []
    worst = EXIT_OK
    for alpha_node, beta in cells:
        cell = copy.deepcopy(spec)
        cell.schedules = dict(cell.schedules)
        cell.schedules["alpha"] = alpha_node
        cell.schedules["beta"] = beta
        cell.schedules["c"] = beta
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", ScheduleWarning)
            try:
                result, reference = _execute(cell)
            except BregfixError as exc:
                print(f"error: {exc}", file=sys.stderr)
                return EXIT_BAD_CONFIG
            flagged = any(issubclass(w.category, ScheduleWarning) for w in caught)
        dist = (None if reference is None
                else float(np.linalg.norm(result.final - np.asarray(reference))))
        if alpha_node["form"] == "power":
            a_desc, a_val = "power", alpha_node["exponent"]
        else:
            a_desc, a_val = "const", alpha_node["value"]
        rows.append((a_desc, a_val, beta, result.status, result.iterations,
                     dist, flagged))
        worst = max(worst, exit_code_for(result))

    path = out_prefix + ".sweep.csv"
    try:
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("alpha_form,alpha_value,beta,status,iterations,"
                     "final_dist_to_ref,schedule_warning\n")
            for a_desc, a_val, beta, status, iters, dist, flagged in rows:
                fh.write(f"{a_desc},{_fmt(a_val)},{_fmt(beta)},{status},{iters},"
                         f"{_fmt(dist)},{int(flagged)}\n")
    except OSError as exc:
        print(f"error: cannot write sweep output: {exc}", file=sys.stderr)
        return EXIT_IO_ERROR

    print(f"wrote {len(rows)} sweep rows to {path}")
    return worst


def build_parser():
    parser = argparse.ArgumentParser(
        prog="bregfix",
        description="Bregman-geometry fixed-point experiments and self checks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment config")
    p_run.add_argument("--config", required=True, help="path to the JSON experiment config")
    p_run.add_argument("--out", default=None, help="output path prefix")
    p_run.add_argument("--audit", action="store_true",
                       help="audit every iteration regardless of the config")
    p_run.set_defaults(func=cmd_run)

    p_verify = sub.add_parser("verify", help="run a property suite")
    p_verify.add_argument("suite",
                          choices=list(verify_mod.SUITE_NAMES) + ["all"],
                          help="which suite to run")
    p_verify.set_defaults(func=cmd_verify)

    p_sweep = sub.add_parser("sweep", help="run a schedule parameter grid")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--grid", required=True, help="path to the JSON grid file")
    p_sweep.add_argument("--out", default=None)
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
