"""``mmot`` command line.

Exit codes: 0 success or positive verdict, 2 input error, 3 refuted,
4 inconclusive, 5 audit failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import __version__
from .certify import audit_certificate, certify_plan
from .core import (
    DEFAULT_GRID_CAP, MODES, NOT_MONOTONE, GridTooLarge, InvalidInstance, InvalidPlan,
    MmotError, plan_errors, support_of, validate_instance,
)
from .monotone import (
    BRUTE, DEFAULT_NMAX, EXACT, INCONCLUSIVE, MONOTONE, VIOLATED, check_monotone_bruteforce,
    check_monotone_exact,
)
from .serialize import (
    certificate_from_dict, certificate_to_dict, instance_from_dict, instance_to_dict,
    load_json, num_out, plan_from_dict, plan_to_dict, support_from_dict, tuple_to_dict,
    witness_to_dict,
)
from .solver import solve_primal
from .splitting import NotMonotone, ambient_tuple
from .suite import COST_NAMES, gen_instance, run_suite

EXIT_OK, EXIT_INPUT, EXIT_REFUTED, EXIT_INCONCLUSIVE, EXIT_AUDIT = 0, 2, 3, 4, 5

log = logging.getLogger("mmot")


class InputError(Exception):
    pass


def _global_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    s = argparse.SUPPRESS
    p.add_argument("--mode", choices=MODES, default=s,
                   help="arithmetic (default: $MMOT_MODE, else the instance file, else rational)")
    p.add_argument("--seed", type=int, default=s, help="seed for gen and suite (default 0)")
    p.add_argument("--grid-cap", type=int, default=s,
                   help=f"largest product grid accepted (default {DEFAULT_GRID_CAP})")
    p.add_argument("--json", action="store_true", default=s, help="machine-readable output only")
    p.add_argument("-v", "--verbose", action="count", default=s)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags()
    parser = argparse.ArgumentParser(prog="mmot", parents=[common],
                                     description="Discrete multi-marginal optimal transport.")
    parser.add_argument("--version", action="version", version=f"mmot {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[common], help="solve the transport LP")
    p.add_argument("instance")
    p.add_argument("--out", help="write the result JSON here")

    p = sub.add_parser("check", parents=[common], help="test a plan's support for cyclical monotonicity")
    p.add_argument("instance")
    p.add_argument("plan")
    p.add_argument("--method", choices=(EXACT, BRUTE), default=EXACT)
    p.add_argument("--nmax", type=int, default=DEFAULT_NMAX)

    p = sub.add_parser("tuple", parents=[common], help="splitting tuple for a support on the full grid")
    p.add_argument("instance")
    p.add_argument("--support", required=True, help="plan JSON or {\"points\": [...]}")
    p.add_argument("--base", help="base point as i1,i2,...,id (default: smallest support cell)")

    p = sub.add_parser("certify", parents=[common], help="certify or refute optimality of a plan")
    p.add_argument("instance")
    p.add_argument("plan")
    p.add_argument("--out", help="write the certificate JSON here")

    p = sub.add_parser("audit", parents=[common], help="re-check a certificate without solving")
    p.add_argument("instance")
    p.add_argument("plan")
    p.add_argument("cert")

    p = sub.add_parser("gen", parents=[common], help="generate a random instance")
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--sizes", help="comma-separated sizes (default: 2 on every axis)")
    p.add_argument("--cost", choices=COST_NAMES, default="random")
    p.add_argument("--point-marginals", action="store_true", help="one atom per marginal")
    p.add_argument("--out")

    p = sub.add_parser("suite", parents=[common], help="batch solve / certify / refute")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--cost", choices=COST_NAMES, default="random")
    p.add_argument("--dims", default="2,3,4", help="choices of d")
    p.add_argument("--max-size", type=int, default=4)
    p.add_argument("--point-marginals", action="store_true")
    p.add_argument("--force-violation", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    return parser


def _opt(args, name, default=None):
    return getattr(args, name, default)


def _mode(args, data=None) -> str:
    m = _opt(args, "mode") or os.environ.get("MMOT_MODE") or (data or {}).get("arithmetic")
    m = m or "rational"
    if m not in MODES:
        raise InputError(f"unknown mode {m!r}")
    return m


def _read(path) -> dict:
    try:
        return load_json(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def _load_instance(args):
    data = _read(args.instance)
    mode = _mode(args, data)
    try:
        inst = instance_from_dict(data, mode)
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise InputError(f"malformed instance {args.instance}: {exc}") from exc
    errs = validate_instance(inst)
    if errs:
        raise InputError("invalid instance: " + "; ".join(errs))
    return inst


def _load_plan(path, inst):
    data = _read(path)
    if "plan" in data and "entries" not in data:
        data = data["plan"]
    try:
        plan = plan_from_dict(data, inst.mode)
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise InputError(f"malformed plan {path}: {exc}") from exc
    errs = plan_errors(inst, plan)
    if errs:
        raise InputError("invalid plan: " + "; ".join(errs))
    return plan


def _emit(obj, args, path=None) -> None:
    text = json.dumps(obj, separators=(",", ":")) if _opt(args, "json") else json.dumps(obj, indent=2)
    if path:
        with open(path, "w") as fh:
            fh.write(json.dumps(obj, indent=2) + "\n")
    print(text)


def cmd_solve(args) -> int:
    inst = _load_instance(args)
    res = solve_primal(inst, grid_cap=_opt(args, "grid_cap", DEFAULT_GRID_CAP))
    out = {
        "value": num_out(res.optimal_value),
        "plan": plan_to_dict(res.optimal_plan),
        "potentials": [[num_out(v) for v in p] for p in res.dual_tuple.potentials],
        "gap": num_out(res.gap),
    }
    _emit(out, args, args.out)
    return EXIT_OK


def verdict_to_dict(v) -> dict:
    out = {"result": v.result, "method": v.method}
    if v.n_max is not None:
        out["nmax"] = v.n_max
    if v.tuple is not None:
        out["tuple"] = tuple_to_dict(v.tuple)
    if v.witness is not None:
        out["witness"] = witness_to_dict(v.witness)
    return out


def cmd_check(args) -> int:
    inst = _load_instance(args)
    plan = _load_plan(args.plan, inst)
    support = support_of(plan, inst.mode)
    if args.method == EXACT:
        v = check_monotone_exact(support, inst, _opt(args, "grid_cap", DEFAULT_GRID_CAP))
    else:
        v = check_monotone_bruteforce(support, inst, args.nmax)
    _emit(verdict_to_dict(v), args)
    return {MONOTONE: EXIT_OK, VIOLATED: EXIT_REFUTED, INCONCLUSIVE: EXIT_INCONCLUSIVE}[v.result]


def cmd_tuple(args) -> int:
    inst = _load_instance(args)
    try:
        support = support_from_dict(_read(args.support))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed support file {args.support}: {exc!r}") from exc
    if not len(support):
        raise InputError("support is empty")
    for p in support:
        if len(p) != inst.d or any(not 0 <= i < n for i, n in zip(p, inst.sizes)):
            raise InputError(f"support point {list(p)} outside the grid")
    base = None
    if args.base:
        try:
            base = tuple(int(v) for v in args.base.split(","))
        except ValueError as exc:
            raise InputError(f"bad --base {args.base!r}") from exc
        if base not in support:
            raise InputError(f"base point {list(base)} is not in the support")
    base = base or support.base_point()
    try:
        t = ambient_tuple(support, inst, base, _opt(args, "grid_cap", DEFAULT_GRID_CAP))
    except NotMonotone as exc:
        _emit({"result": VIOLATED, "witness": witness_to_dict(exc.witness)}, args)
        return EXIT_REFUTED
    _emit(tuple_to_dict(t, base), args)
    return EXIT_OK


def cmd_certify(args) -> int:
    inst = _load_instance(args)
    plan = _load_plan(args.plan, inst)
    cert = certify_plan(inst, plan, _opt(args, "grid_cap", DEFAULT_GRID_CAP))
    _emit(certificate_to_dict(cert), args, args.out)
    return EXIT_REFUTED if cert.verdict == NOT_MONOTONE else EXIT_OK


def cmd_audit(args) -> int:
    inst = _load_instance(args)
    data = _read(args.plan)
    if "plan" in data and "entries" not in data:
        data = data["plan"]
    try:
        plan = plan_from_dict(data, inst.mode)
        cert = certificate_from_dict(_read(args.cert), inst.mode)
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise InputError(f"malformed plan or certificate: {exc}") from exc
    report = audit_certificate(inst, plan, cert)
    if _opt(args, "json"):
        _emit({"ok": report.ok, "failures": list(report.failures)}, args)
    else:
        print("audit passed" if report.ok else "audit FAILED")
        for f in report.failures:
            print(f"  {f}")
    return EXIT_OK if report.ok else EXIT_AUDIT


def _int_list(text, what):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise InputError(f"bad {what} {text!r}") from exc


def cmd_gen(args) -> int:
    sizes = _int_list(args.sizes, "--sizes") if args.sizes else [2] * args.d
    try:
        inst = gen_instance(args.d, sizes, args.cost, _opt(args, "seed", 0), _mode(args),
                            point_marginals=args.point_marginals)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    text = json.dumps(instance_to_dict(inst), indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_suite(args) -> int:
    report = run_suite(
        args.count, seed=_opt(args, "seed", 0), mode=_mode(args), cost_name=args.cost,
        d_choices=tuple(_int_list(args.dims, "--dims")), max_size=args.max_size,
        min_size=1 if args.point_marginals else 2,
        point_marginals=args.point_marginals, force_violation=args.force_violation,
        workers=args.workers,
    )
    s = report.summary()
    if _opt(args, "json"):
        _emit(s, args)
    else:
        print(f"{s['certified']}/{s['instances']} certified, {s['audited']} audited, "
              f"{s['refuted']}/{s['perturbed']} perturbed plans refuted, "
              f"{len(s['failures'])} failures")
        for f in s["failures"]:
            print(f"  instance {f['instance']}: {f['message']}")
    return EXIT_OK if not s["failures"] else EXIT_REFUTED


COMMANDS = {
    "solve": cmd_solve, "check": cmd_check, "tuple": cmd_tuple, "certify": cmd_certify,
    "audit": cmd_audit, "gen": cmd_gen, "suite": cmd_suite,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    level = {0: logging.WARNING, 1: logging.INFO}.get(_opt(args, "verbose", 0) or 0, logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (InputError, InvalidInstance, InvalidPlan, GridTooLarge) as exc:
        print(f"mmot: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except MmotError as exc:
        print(f"mmot: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
