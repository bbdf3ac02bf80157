"""Cyclical monotonicity of a finite support set.

The exact test decides whether potentials exist on the product of the
support's projections that sit below the cost and touch it on the support.
When they do not, the Farkas vector of that system is a signed measure with
zero marginals; its positive part lives on the support and its negative part
is a cheaper rearrangement.  Scaling both to integer multiplicities turns
the pair into explicit points and permutations.
"""
from __future__ import annotations

import itertools
import logging
import math
from collections import defaultdict, deque
from dataclasses import dataclass
from fractions import Fraction

from . import lp
from .core import (
    DEFAULT_GRID_CAP, FLOAT, FLOAT_TOL, NEG_INF, PROJECTIONS, RATIONAL, Instance, MmotError,
    RearrangementWitness, SplittingTuple, SupportSet, check_grid, cost_eval, raw_cost,
)

log = logging.getLogger(__name__)

MONOTONE = "Monotone"
VIOLATED = "Violated"
INCONCLUSIVE = "Inconclusive"
EXACT = "exact"
BRUTE = "brute"

DEFAULT_NMAX = 3
DEFAULT_NODE_CAP = 10**7


class MarginalMismatch(MmotError, ValueError):
    pass


class NonRationalInput(MmotError, TypeError):
    pass


class NotImproving(MmotError, ValueError):
    pass


class CertificateInvalid(MmotError, ValueError):
    pass


class BudgetExceeded(MmotError):
    pass


@dataclass(frozen=True)
class MonotonicityVerdict:
    result: str
    method: str
    tuple: SplittingTuple | None = None
    witness: RearrangementWitness | None = None
    n_max: int | None = None

    @property
    def monotone(self) -> bool:
        return self.result == MONOTONE

    @property
    def violated(self) -> bool:
        return self.result == VIOLATED


@dataclass(frozen=True)
class SplittingSystem:
    """Feasibility system for potentials on ``prod p_k(support)``.

    Row ``r`` belongs to ``cells[r]``; it is an equality when the cell is in
    the support.  Variable ``offsets[k] + j`` is the potential of point
    ``proj[k][j]`` on axis ``k``.
    """

    support: SupportSet
    proj: list
    cells: list
    offsets: list
    constraints: list

    @property
    def n_vars(self) -> int:
        return self.offsets[-1] + len(self.proj[-1])


def splitting_system(support: SupportSet, instance: Instance,
                     grid_cap: int = DEFAULT_GRID_CAP) -> SplittingSystem:
    d = instance.d
    proj = support.projections(d)
    check_grid(math.prod(len(p) for p in proj), grid_cap)
    offsets, acc = [], 0
    for p in proj:
        offsets.append(acc)
        acc += len(p)
    pos = [{v: j for j, v in enumerate(p)} for p in proj]
    on_support = set(support.points)
    cells = list(itertools.product(*proj))
    cons = []
    for cell in cells:
        row = [0] * acc
        for k, i in enumerate(cell):
            row[offsets[k] + pos[k][i]] = 1
        rel = lp.EQ if cell in on_support else lp.LE
        cons.append((row, rel, cost_eval(instance, cell)))
    return SplittingSystem(support, proj, cells, offsets, cons)


def _potentials_from_point(system: SplittingSystem, point, instance: Instance) -> SplittingTuple:
    pots = []
    for k, n in enumerate(instance.sizes):
        vec = [NEG_INF] * n
        for j, i in enumerate(system.proj[k]):
            vec[i] = point[system.offsets[k] + j]
        pots.append(tuple(vec))
    return SplittingTuple(tuple(pots), PROJECTIONS)


def check_monotone_exact(support: SupportSet, instance: Instance,
                         grid_cap: int = DEFAULT_GRID_CAP) -> MonotonicityVerdict:
    """Decide cyclical monotonicity of ``support`` by LP feasibility.

    Points off the projections get potential ``-inf`` in the returned tuple.
    In float mode a refutation is re-derived in exact arithmetic on the
    binary values of the costs, so that the witness can be built exactly.
    """
    if not len(support):
        raise ValueError("support set is empty")
    system = splitting_system(support, instance, grid_cap)
    res = lp.check_feasibility(system.constraints, system.n_vars,
                               free=range(system.n_vars), mode=instance.mode)
    if isinstance(res, lp.Feasible):
        return MonotonicityVerdict(MONOTONE, EXACT, tuple=_potentials_from_point(system, res.point, instance))

    exact_inst = instance
    cert = res.certificate
    if instance.mode == FLOAT:
        exact_inst = instance.with_mode(RATIONAL)
        exact_sys = splitting_system(support, exact_inst, grid_cap)
        res_q = lp.check_feasibility(exact_sys.constraints, exact_sys.n_vars,
                                     free=range(exact_sys.n_vars), mode=RATIONAL)
        if isinstance(res_q, lp.Feasible):
            # the float test was within rounding of feasible; the exact answer wins
            point = tuple(float(v) for v in res_q.point)
            return MonotonicityVerdict(MONOTONE, EXACT, tuple=_potentials_from_point(system, point, instance))
        cert = res_q.certificate
    alpha, alpha_prime = improving_pair_from_certificate(cert, support, exact_inst)
    w = extract_witness(alpha, alpha_prime, exact_inst)
    if instance.mode == FLOAT:
        before, after = w.recompute(instance)
        w = RearrangementWitness(w.points, w.permutations, before, after)
    return MonotonicityVerdict(VIOLATED, EXACT, witness=w)


def improving_pair_from_certificate(certificate, support: SupportSet, instance: Instance):
    """Split a Farkas vector of the splitting system into ``(alpha, alpha')``.

    Both are dicts from grid cell to mass, normalized to total mass one, with
    ``alpha`` on the support, equal marginals, and ``cost(alpha') < cost(alpha)``.
    """
    system = splitting_system(support, instance, grid_cap=10**18)
    if len(certificate) != len(system.cells):
        raise CertificateInvalid(f"certificate has {len(certificate)} entries, system has {len(system.cells)} rows")
    exact = instance.mode == RATIONAL
    tol = 0 if exact else FLOAT_TOL
    on_support = set(support.points)
    pos, neg = {}, {}
    for cell, y in zip(system.cells, certificate):
        if cell not in on_support and y > tol:
            raise CertificateInvalid(f"positive multiplier {y} on inequality row {cell}")
        if y > tol:
            pos[cell] = y
        elif y < -tol:
            neg[cell] = -y
    for k in range(instance.d):
        bal = defaultdict(lambda: 0)
        for cell, y in zip(system.cells, certificate):
            bal[cell[k]] += y
        if any(abs(v) > tol for v in bal.values()):
            raise CertificateInvalid(f"multipliers do not cancel along axis {k}")
    gain = raw_cost(instance, pos.items()) - raw_cost(instance, neg.items())
    if not gain > tol:
        raise CertificateInvalid("certificate does not separate: y.c <= 0")
    total = sum(pos.values())
    alpha = {c: m / total for c, m in sorted(pos.items())}
    alpha_prime = {c: m / total for c, m in sorted(neg.items())}
    return alpha, alpha_prime


def _axis_marginals(measure, d):
    out = [defaultdict(lambda: Fraction(0)) for _ in range(d)]
    for cell, m in measure.items():
        for k, i in enumerate(cell):
            out[k][i] += m
    return [{i: v for i, v in sorted(o.items()) if v} for o in out]


def extract_witness(alpha, alpha_prime, instance: Instance) -> RearrangementWitness:
    """Turn a strictly improving pair of rational measures into points and permutations.

    Multiplies both measures by the least common multiple ``tau`` of their
    denominators, lists the cells of ``tau * alpha`` with multiplicity in
    lexicographic order, and matches the cells of ``tau * alpha'`` onto
    those rows axis by axis (ties resolved by ascending row index).  The
    witness then satisfies ``cost_before == tau * cost(alpha)`` and
    ``cost_after == tau * cost(alpha')``.
    """
    items = list(alpha.items()) + list(alpha_prime.items())
    if any(not isinstance(m, (Fraction, int)) for _, m in items):
        raise NonRationalInput("extract_witness needs Fraction masses")
    if any(m < 0 for _, m in items):
        raise ValueError("masses must be nonnegative")
    d = instance.d
    if _axis_marginals(alpha, d) != _axis_marginals(alpha_prime, d):
        raise MarginalMismatch("alpha and alpha' have different marginals")
    tau = 1
    for _, m in items:
        tau = math.lcm(tau, Fraction(m).denominator)
    rows = [cell for cell, m in sorted(alpha.items()) for _ in range(int(m * tau))]
    targets = [cell for cell, m in sorted(alpha_prime.items()) for _ in range(int(m * tau))]
    n = len(rows)

    # axis 0 stays in place: give every row a target with the same first coordinate
    by_first = defaultdict(deque)
    for q in targets:
        by_first[q[0]].append(q)
    assigned = [by_first[p[0]].popleft() for p in rows]

    perms = []
    for k in range(1, d):
        pool = defaultdict(deque)
        for m, p in enumerate(rows):
            pool[p[k]].append(m)
        perms.append(tuple(pool[q[k]].popleft() for q in assigned))

    zero = instance.zero
    before = sum((cost_eval(instance, p) for p in rows), zero)
    after = sum((cost_eval(instance, q) for q in assigned), zero)
    w = RearrangementWitness(tuple(rows), tuple(perms), before, after)
    if not after < before:
        raise NotImproving(f"rearranged cost {after} is not below {before}")
    log.debug("witness with n=%d (tau=%d)", n, tau)
    return w


def check_monotone_bruteforce(support: SupportSet, instance: Instance, n_max: int = DEFAULT_NMAX,
                              node_cap: int = DEFAULT_NODE_CAP) -> MonotonicityVerdict:
    """Search rearrangements of up to ``n_max`` support points for a strict improvement.

    Refutation only: finding nothing yields ``Inconclusive``.
    """
    if n_max < 2:
        raise ValueError("n_max must be at least 2")
    d = instance.d
    margin = 0 if instance.mode == RATIONAL else FLOAT_TOL
    pts = list(support.points)
    evals = 0
    for n in range(2, n_max + 1):
        perms = list(itertools.permutations(range(n)))
        for chosen in itertools.combinations_with_replacement(pts, n):
            before = sum((cost_eval(instance, p) for p in chosen), instance.zero)
            for sigmas in itertools.product(perms, repeat=d - 1):
                evals += 1
                if evals > node_cap:
                    raise BudgetExceeded(f"more than {node_cap} rearrangements evaluated")
                after = instance.zero
                for i in range(n):
                    cell = (chosen[i][0],) + tuple(chosen[s[i]][k + 1] for k, s in enumerate(sigmas))
                    after += cost_eval(instance, cell)
                if before - after > margin:
                    w = RearrangementWitness(tuple(chosen), tuple(sigmas), before, after)
                    return MonotonicityVerdict(VIOLATED, BRUTE, witness=w, n_max=n_max)
    return MonotonicityVerdict(INCONCLUSIVE, BRUTE, n_max=n_max)
