"""Seeded instance generation and the solve / certify / refute batch harness."""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .certify import audit_certificate, certify_plan
from .core import (
    BUILTIN_COSTS, NOT_MONOTONE, OPTIMAL, RATIONAL, Instance, MmotError,
    TransportPlan, make_instance, plan_cost, raw_cost,
)
from .solver import solve_primal

log = logging.getLogger(__name__)

COST_NAMES = ("random",) + BUILTIN_COSTS


class UnknownCost(MmotError, ValueError):
    pass


def gen_instance(d: int, sizes, cost_name: str = "random", seed: int = 0,
                 mode: str = RATIONAL, point_marginals: bool = False) -> Instance:
    """Random instance, deterministic in ``seed``.

    Marginals are positive integer weights 1..8 normalized to one (or a
    single atom per axis with ``point_marginals``).  ``"random"`` draws a
    tensor of rationals ``p/q`` with ``0 <= p <= 64`` and ``1 <= q <= 16``;
    builtin costs put the points equispaced on [0, 1].
    """
    if d < 2:
        raise ValueError("d must be at least 2")
    sizes = [int(n) for n in sizes]
    if len(sizes) != d or any(n < 1 for n in sizes):
        raise ValueError(f"need {d} sizes, each at least 1")
    if cost_name not in COST_NAMES:
        raise UnknownCost(f"unknown cost {cost_name!r}; choose from {', '.join(COST_NAMES)}")
    rng = np.random.default_rng(seed)
    marginals = []
    for n in sizes:
        if point_marginals:
            w = [Fraction(0)] * n
            w[int(rng.integers(n))] = Fraction(1)
        else:
            raw = [int(v) for v in rng.integers(1, 9, size=n)]
            w = [Fraction(v, sum(raw)) for v in raw]
        marginals.append(w)
    if cost_name == "random":
        grid = int(np.prod(sizes))
        nums = rng.integers(0, 65, size=grid)
        dens = rng.integers(1, 17, size=grid)
        flat = [Fraction(int(p), int(q)) for p, q in zip(nums, dens)]
        tensor = np.array(flat, dtype=object).reshape(sizes).tolist()
        inst = make_instance(tensor, marginals, RATIONAL)
    else:
        coords = [[Fraction(i, n - 1) if n > 1 else Fraction(0) for i in range(n)] for n in sizes]
        inst = make_instance(None, marginals, RATIONAL, coords=coords, builtin=cost_name)
    return inst.with_mode(mode)


def swap_partners(plan: TransportPlan, instance: Instance, strict: bool = True):
    """Exchange one coordinate between two support atoms.

    Moves mass ``m = min(mass_a, mass_b)`` from ``a, b`` to the two cells
    obtained by swapping coordinate ``k`` of ``a`` and ``b``; marginals are
    unchanged.  Returns the first such plan (atoms and axes in lexicographic
    order) whose cost strictly exceeds the original, or ``None``.
    """
    atoms = sorted(plan.entries)
    base = raw_cost(instance, plan.items())
    for x in range(len(atoms)):
        for y in range(x + 1, len(atoms)):
            a, b = atoms[x], atoms[y]
            for k in range(1, instance.d):
                if a[k] == b[k]:
                    continue
                a2 = a[:k] + (b[k],) + a[k + 1:]
                b2 = b[:k] + (a[k],) + b[k + 1:]
                m = min(plan.entries[a], plan.entries[b])
                entries = dict(plan.entries)
                entries[a] -= m
                entries[b] -= m
                entries[a2] = entries.get(a2, 0) + m
                entries[b2] = entries.get(b2, 0) + m
                new = TransportPlan.from_entries(entries, instance.mode)
                cost = raw_cost(instance, new.items())
                if cost > base or (not strict and cost >= base):
                    return new
    return None


@dataclass
class InstanceRecord:
    index: int
    seed: int
    d: int
    sizes: tuple
    value: object = None
    certified: bool = False
    audited: bool = False
    perturbed: bool = False
    refuted: bool = False
    witness_ok: bool = False
    failures: list = field(default_factory=list)


@dataclass
class SuiteReport:
    records: list

    @property
    def certified(self) -> int:
        return sum(r.certified for r in self.records)

    @property
    def refuted(self) -> int:
        return sum(r.refuted for r in self.records)

    @property
    def failures(self) -> list:
        return [(r.index, f) for r in self.records for f in r.failures]

    def summary(self) -> dict:
        return {
            "instances": len(self.records),
            "certified": self.certified,
            "audited": sum(r.audited for r in self.records),
            "perturbed": sum(r.perturbed for r in self.records),
            "refuted": self.refuted,
            "failures": [{"instance": i, "message": m} for i, m in self.failures],
        }


def run_one(index: int, seed: int, d: int, sizes, cost_name: str = "random",
            mode: str = RATIONAL, point_marginals: bool = False,
            force_violation: bool = False) -> InstanceRecord:
    rec = InstanceRecord(index, seed, d, tuple(sizes))
    try:
        inst = gen_instance(d, sizes, cost_name, seed, mode, point_marginals)
        res = solve_primal(inst)
        rec.value = res.optimal_value
        cert = certify_plan(inst, res.optimal_plan)
        rec.certified = cert.verdict == OPTIMAL
        if not rec.certified:
            rec.failures.append("optimal plan was not certified")
        elif cert.plan_cost != res.optimal_value and mode == RATIONAL:
            rec.failures.append("certified value differs from LP value")
        rec.audited = audit_certificate(inst, res.optimal_plan, cert).ok
        if not rec.audited:
            rec.failures.append("certificate failed audit")
        bad = swap_partners(res.optimal_plan, inst)
        if bad is None:
            if force_violation:
                rec.failures.append("no cost-increasing swap exists")
            return rec
        rec.perturbed = True
        cert2 = certify_plan(inst, bad)
        if cert2.verdict == NOT_MONOTONE:
            rec.refuted = True
            rec.witness_ok = cert2.witness.is_improving(inst)
            if not rec.witness_ok:
                rec.failures.append("witness does not improve cost")
        else:
            rec.failures.append(
                f"perturbed plan (cost {plan_cost(inst, bad)} > {res.optimal_value}) was certified"
            )
    except MmotError as exc:
        rec.failures.append(f"{type(exc).__name__}: {exc}")
    return rec


def suite_jobs(count: int, seed: int = 0, d_choices=(2, 3, 4), min_size: int = 2,
               max_size: int = 4):
    """``(index, instance_seed, d, sizes)`` for each suite instance."""
    rng = np.random.default_rng(seed)
    jobs = []
    for i in range(count):
        d = int(rng.choice(d_choices))
        sizes = tuple(int(v) for v in rng.integers(min_size, max_size + 1, size=d))
        jobs.append((i, int(rng.integers(2**31)), d, sizes))
    return jobs


def _run_job(args):
    job, kw = args
    return run_one(*job, **kw)


def run_suite(count: int, seed: int = 0, mode: str = RATIONAL, cost_name: str = "random",
              d_choices=(2, 3, 4), min_size: int = 2, max_size: int = 4,
              point_marginals: bool = False, force_violation: bool = False,
              workers: int = 1) -> SuiteReport:
    """Solve, certify, audit and refute a perturbation on ``count`` seeded instances."""
    if count < 1:
        raise ValueError("count must be at least 1")
    jobs = suite_jobs(count, seed, d_choices, min_size, max_size)
    kw = dict(cost_name=cost_name, mode=mode, point_marginals=point_marginals,
              force_violation=force_violation)
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            records = list(pool.map(_run_job, [(j, kw) for j in jobs]))
    else:
        records = [run_one(*j, **kw) for j in jobs]
    for r in records:
        log.info("instance %d d=%d sizes=%s value=%s certified=%s refuted=%s",
                 r.index, r.d, r.sizes, r.value, r.certified, r.refuted)
    return SuiteReport(records)
