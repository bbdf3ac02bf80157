"""Optimality certificates for transport plans and their offline audit.

A certificate carries the full potential vectors.  Auditing needs nothing
but the instance, the plan and the certificate: if the potentials sit below
the cost everywhere, touch it on the plan's support, and integrate against
the marginals to the plan's cost, then every other plan costs at least as
much (weak duality).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .core import (
    AMBIENT, DEFAULT_GRID_CAP, FLOAT_TOL, NOT_MONOTONE, OPTIMAL, RATIONAL, Certificate,
    Instance, InvalidInstance, TransportPlan, plan_cost, plan_errors,
    support_of, validate_instance,
)
from .monotone import check_monotone_exact
from .serialize import instance_hash
from .splitting import base_bounds, extend_by_infconvolution, normalize_at_base, verify_tuple


class CertificationError(Exception):
    pass


def certify_plan(instance: Instance, plan: TransportPlan,
                 grid_cap: int = DEFAULT_GRID_CAP) -> Certificate:
    errs = validate_instance(instance)
    if errs:
        raise InvalidInstance("; ".join(errs))
    value = plan_cost(instance, plan)
    support = support_of(plan, instance.mode)
    digest = instance_hash(instance)
    verdict = check_monotone_exact(support, instance, grid_cap)
    if not verdict.monotone:
        return Certificate(digest, value, None, None, NOT_MONOTONE, verdict.witness)
    base = support.base_point()
    t = extend_by_infconvolution(verdict.tuple, support, instance)
    t = normalize_at_base(t, base, instance, support)
    report = verify_tuple(t, support, instance, AMBIENT)
    if not report.ok:
        raise CertificationError(f"extended tuple failed verification: {report.violations[:3]}")
    dual = _integrate(t, instance)
    if not _close(dual, value, instance.mode):
        raise CertificationError(f"plan cost {value} != integrated potentials {dual}")
    return Certificate(digest, value, t, base, OPTIMAL)


def unattained(t, instance: Instance) -> list[tuple[int, int]]:
    """Points whose potential is strictly below ``min (c - other potentials)``.

    Tuples produced by the inf-convolution extension have none.
    """
    tol = 0 if instance.mode == RATIONAL else FLOAT_TOL
    table = instance.cost_table
    best: list[list] = [[None] * n for n in instance.sizes]
    for cell in instance.grid():
        slack = table[cell] - t.total(cell)
        for k, i in enumerate(cell):
            if best[k][i] is None or slack < best[k][i]:
                best[k][i] = slack
    return [(k, i) for k, row in enumerate(best) for i, s in enumerate(row) if s > tol]


def _integrate(t, instance: Instance):
    return sum(
        (p * w for k in range(instance.d) for p, w in zip(t.potentials[k], instance.mu(k)) if w),
        instance.zero,
    )


def _close(a, b, mode) -> bool:
    if mode == RATIONAL:
        return a == b
    return abs(a - b) <= FLOAT_TOL


@dataclass(frozen=True)
class AuditReport:
    failures: tuple[str, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.failures

    def __bool__(self):
        return self.ok


def audit_certificate(instance: Instance, plan: TransportPlan, cert: Certificate) -> AuditReport:
    """Re-check an Optimal certificate without solving anything.

    Checks the instance hash, the plan's marginals, the stated value, the
    potentials' shape and finiteness, ``sum phi <= c`` on the whole grid,
    equality on the support, the integral identity, that every potential
    value is attained in its fiber, and the base point (smallest support
    tuple) with its normalization.  A NotMonotone certificate is audited by
    re-evaluating its witness.
    """
    fails: list[str] = []
    if cert.instance_hash != instance_hash(instance):
        fails.append("instance hash mismatch")
    for e in plan_errors(instance, plan):
        fails.append(f"plan: {e}")
    if fails:
        return AuditReport(tuple(fails))
    mode = instance.mode
    value = plan_cost(instance, plan)
    if not _close(value, cert.plan_cost, mode):
        fails.append(f"stated value {cert.plan_cost} != plan cost {value}")
    support = support_of(plan, mode)

    if cert.verdict == NOT_MONOTONE:
        w = cert.witness
        if w is None:
            fails.append("NotMonotone certificate without witness")
        else:
            if any(tuple(p) not in support for p in w.points):
                fails.append("witness uses points outside the support")
            elif not w.is_improving(instance):
                fails.append("witness does not improve cost")
        return AuditReport(tuple(fails))
    if cert.verdict != OPTIMAL:
        return AuditReport((f"unknown verdict {cert.verdict!r}",))

    t = cert.tuple
    if t is None or len(t.potentials) != instance.d or any(
        len(p) != n for p, n in zip(t.potentials, instance.sizes)
    ):
        return AuditReport(tuple(fails + ["potentials missing or mis-shaped"]))
    if any(isinstance(v, float) and not math.isfinite(v) for p in t.potentials for v in p):
        fails.append("non-finite potential")
        return AuditReport(tuple(fails))
    report = verify_tuple(t, support, instance, AMBIENT)
    for v in report.violations[:10]:
        fails.append(f"{v.kind} violated at {list(v.cell)} (slack {v.slack})")
    if len(report.violations) > 10:
        fails.append(f"... {len(report.violations) - 10} more tuple violations")
    dual = _integrate(t, instance)
    if not _close(dual, value, mode):
        fails.append(f"integrated potentials {dual} != plan cost {value}")
    for k, i in unattained(t, instance):
        fails.append(f"potential {k} at point {i} is not attained anywhere in its fiber")

    base = cert.base_point
    if base is None or tuple(base) not in support:
        fails.append("base point missing or not in the support")
    else:
        base = tuple(base)
        if base != support.base_point():
            fails.append(f"base point {list(base)} is not the smallest support tuple")
        c0 = instance.cost_table[base]
        if not _close(t.potentials[0][base[0]], c0, mode):
            fails.append("first potential at base differs from the cost at base")
        for k in range(1, instance.d):
            if not _close(t.potentials[k][base[k]], instance.zero, mode):
                fails.append(f"potential {k} is not zero at base")
        for k, i, excess in base_bounds(t, base, instance):
            fails.append(f"potential {k} exceeds the base-section cost at point {i} by {excess}")
    return AuditReport(tuple(fails))
