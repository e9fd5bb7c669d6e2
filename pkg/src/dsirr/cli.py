"""Command-line front end.

Subcommands: check, build-quiver, realize, verify, reduce, leg.  Every
run writes a machine-readable JSON report (stdout by default); exit
status 0 means nonempty/verified/success, 1 means empty/falsified, 2
means undecided or error.  Randomized paths are reproducible through
--seed.
"""

from __future__ import annotations

import argparse
import json
import sys

from .assembly import (
    build_global_quiver,
    decide_ds,
    instance_from_json,
    realize_numeric,
    rep_from_json,
    rep_to_json,
    verify_instance,
)
from .irregular import irregular_type_from_json
from .jets import ConnectionJet
from .orbits import (
    greedy_marking,
    leg_dimensions,
    orbit_spec_from_json,
    orbit_spec_to_json,
    normal_form_matrix,
    realize_leg,
)
from .quiver import quiver_from_json, quiver_to_json, to_dot
from .roots import CartanData, cb_solvable
from .serialize import matrix_from_json, matrix_to_json, scalar_to_json

SCHEMA_VERSION = 1


class SchemaError(ValueError):
    """Input does not match the documented JSON schema."""


def _require(data, key, path, kind=None):
    if not isinstance(data, dict):
        raise SchemaError(f"expected an object at {path or '/'}")
    if key not in data:
        raise SchemaError(f"missing required key at {path}/{key}")
    value = data[key]
    if kind is not None and not isinstance(value, kind):
        raise SchemaError(f"wrong type at {path}/{key}")
    return value


def _validate_instance_shape(data):
    _require(data, "rank", "", int)
    inf = _require(data, "infinity", "", dict)
    it = _require(inf, "irregular_type", "/infinity", dict)
    _require(it, "k", "/infinity/irregular_type", int)
    blocks = _require(it, "blocks", "/infinity/irregular_type", list)
    for i, b in enumerate(blocks):
        _require(b, "coeffs", f"/infinity/irregular_type/blocks/{i}", list)
        _require(b, "mult", f"/infinity/irregular_type/blocks/{i}", int)
    _require(inf, "residue_blocks", "/infinity", list)
    for j, p in enumerate(data.get("finite_poles", [])):
        _require(p, "position", f"/finite_poles/{j}")
        _require(p, "orbit", f"/finite_poles/{j}", dict)


def _load_json(path):
    if path == "-":
        return json.load(sys.stdin)
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def _load_instance(path, exact):
    data = _load_json(path)
    _validate_instance_shape(data)
    return instance_from_json(data, exact)


def _verdict_report(verdict, quiver_json):
    report = {
        "schema_version": SCHEMA_VERSION,
        "verdict": "undecided" if verdict.undecided else ("nonempty" if verdict.nonempty else "empty"),
        "quiver": quiver_json,
        "delta": verdict.delta,
        "detail": verdict.detail,
    }
    if verdict.nonempty:
        report["dim"] = verdict.dim
    if verdict.failed_condition is not None:
        report["failed_condition"] = verdict.failed_condition
    if verdict.witness is not None:
        order = quiver_json["vertices"]
        report["witness"] = [
            {v: w[i] for i, v in enumerate(order) if w[i]} for w in verdict.witness
        ]
    return report


def _emit_dot(args, quiver, dims, zeta):
    if args.dot:
        with open(args.dot, "w", encoding="utf-8") as f:
            f.write(to_dot(quiver, dims, zeta, full=args.dot_mode == "full"))


def cmd_check(args):
    data = _load_json(args.input)
    if "vertices" in data:  # raw (Q, v, zeta) payload from build-quiver
        quiver, dims, zeta = quiver_from_json(data)
        if dims is None or zeta is None:
            raise SchemaError("quiver payload needs dims and zeta")
        cartan = CartanData.from_quiver(quiver)
        verdict = cb_solvable(cartan, cartan.vec(dims), zeta, max_nodes=args.max_decompositions)
        quiver_json = quiver_to_json(quiver, dims, zeta)
        _emit_dot(args, quiver, dims, zeta)
        report = _verdict_report(verdict, quiver_json)
    else:
        _validate_instance_shape(data)
        instance = instance_from_json(data, exact=True)
        ds = decide_ds(instance, max_nodes=args.max_decompositions)
        _emit_dot(args, ds.gq.quiver, ds.gq.dims, ds.gq.zeta)
        report = _verdict_report(ds.verdict, quiver_to_json(ds.gq.quiver, ds.gq.dims, ds.gq.zeta))
    code = 2 if report["verdict"] == "undecided" else (0 if report["verdict"] == "nonempty" else 1)
    return report, code


def cmd_build_quiver(args):
    instance = _load_instance(args.input, exact=not args.float_mode)
    gq = build_global_quiver(instance)
    payload = quiver_to_json(gq.quiver, gq.dims, gq.zeta)
    payload["schema_version"] = SCHEMA_VERSION
    _emit_dot(args, gq.quiver, gq.dims, gq.zeta)
    return payload, 0


def cmd_realize(args):
    if args.exact_mode:
        raise SchemaError("realize runs in float mode (drop --exact)")
    try:
        instance = _load_instance(args.input, exact=True)
    except ValueError:
        instance = _load_instance(args.input, exact=False)
    gq = build_global_quiver(instance.as_float())
    result = realize_numeric(
        gq, attempts=args.attempts, seed=args.seed, tol=args.tolerance or 1e-8
    )
    report = {
        "schema_version": SCHEMA_VERSION,
        "success": result.success,
        "residual": result.residual,
        "attempts": result.attempts,
        "seed": result.seed,
    }
    if result.success:
        report["rep"] = rep_to_json(gq, result.rep)
        report["verification"] = verify_instance(gq, result.rep)
    return report, 0 if result.success else 1


def cmd_verify(args):
    data = _load_json(args.input)
    inst_data = _require(data, "instance", "", dict)
    _validate_instance_shape(inst_data)
    instance = instance_from_json(inst_data, exact=not args.float_mode)
    gq = build_global_quiver(instance.as_float() if instance.exact else instance)
    rep = rep_from_json(gq, _require(data, "rep", "", dict))
    report = verify_instance(gq, rep, rtol=args.tolerance or 1e-8)
    report["schema_version"] = SCHEMA_VERSION
    return report, 0 if report["all_ok"] else 1


def cmd_reduce(args):
    from .reduction import normalize

    data = _load_json(args.input)
    exact = args.exact_mode
    T = irregular_type_from_json(_require(data, "irregular_type", "", dict), exact)
    jet_data = _require(data, "jet", "", dict)
    k = _require(jet_data, "k", "/jet", int)
    depth = _require(jet_data, "depth", "/jet", int)
    coeffs = _require(jet_data, "coeffs", "/jet", list)
    if len(coeffs) != depth + 1:
        raise SchemaError("wrong number of matrices at /jet/coeffs")
    n = T.n
    jet = ConnectionJet(n, k, tuple(matrix_from_json(c, n, n, exact) for c in coeffs))
    try:
        out = normalize(jet, T, rtol=args.tolerance or 1e-8)
    except ValueError as e:
        return {"schema_version": SCHEMA_VERSION, "compatible": False, "detail": str(e)}, 1
    report = {
        "schema_version": SCHEMA_VERSION,
        "compatible": True,
        "exponent": matrix_to_json(out.exponent),
        "gauge": [{"degree": d, "matrix": matrix_to_json(x)} for d, x in out.factors],
        "reduced": [matrix_to_json(c) for c in out.reduced.coeffs],
        "depth": out.depth,
    }
    return report, 0


def cmd_leg(args):
    data = _load_json(args.input)
    exact = args.exact_mode
    n = _require(data, "n", "", int)
    spec = orbit_spec_from_json(_require(data, "orbit", "", dict), n, exact)
    marking = greedy_marking(spec)
    matrix = normal_form_matrix(spec)
    if "matrix" in data:
        matrix = matrix_from_json(data["matrix"], n, n, exact)
    try:
        leg = realize_leg(matrix, marking)
    except ValueError as e:
        return {"schema_version": SCHEMA_VERSION, "ok": False, "detail": str(e)}, 1
    report = {
        "schema_version": SCHEMA_VERSION,
        "ok": True,
        "orbit": orbit_spec_to_json(spec),
        "marking": [scalar_to_json(m) for m in marking],
        "leg_dimensions": leg_dimensions(spec, marking),
        "maps": {
            a.id: {
                "fwd": matrix_to_json(leg.rep.fwd[a.id]),
                "rev": matrix_to_json(leg.rep.rev[a.id]),
            }
            for a in leg.rep.quiver.arrows
        },
    }
    return report, 0


COMMANDS = {
    "check": cmd_check,
    "build-quiver": cmd_build_quiver,
    "realize": cmd_realize,
    "verify": cmd_verify,
    "reduce": cmd_reduce,
    "leg": cmd_leg,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dsirr",
        description="decide, realize and verify additive irregular Deligne-Simpson instances",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("check", "decide non-emptiness from a problem file (exact scalars)"),
        ("build-quiver", "synthesize (Q, v, zeta) from a problem file"),
        ("realize", "search for a stable numeric point (float mode)"),
        ("verify", "run all invariant checks on a representation"),
        ("reduce", "formal reduction of a connection jet against a type"),
        ("leg", "marking, leg dimensions and chain maps of an orbit"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("input", help="input JSON path ('-' for stdin)")
        p.add_argument("-o", "--output", default=None, help="report path (default stdout)")
        p.add_argument("--exact", dest="exact_mode", action="store_true", help="exact scalars")
        p.add_argument("--float", dest="float_mode", action="store_true", help="float scalars")
        p.add_argument("--tolerance", type=float, default=None, help="relative tolerance override")
        p.add_argument("--max-decompositions", type=int, default=200_000,
                       help="search cap before reporting undecided")
        p.add_argument("--seed", type=int, default=0, help="seed for randomized paths")
        p.add_argument("--dot", default=None, help="write Graphviz DOT here")
        p.add_argument("--dot-mode", choices=["basic", "full"], default="basic",
                       help="full adds the parameters to vertex labels")
        p.add_argument("--attempts", type=int, default=50, help="realizer restarts")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        report, code = COMMANDS[args.command](args)
    except SchemaError as e:
        report, code = {"schema_version": SCHEMA_VERSION, "error": str(e)}, 2
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as e:
        report, code = {"schema_version": SCHEMA_VERSION, "error": f"{type(e).__name__}: {e}"}, 2
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as f:
            f.write(text + "\n")
    else:
        print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
