"""Splitting tuples: construct on a finite support, extend to the grid, normalize, verify."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    AMBIENT, DEFAULT_GRID_CAP, FLOAT, FLOAT_TOL, PROJECTIONS, RATIONAL, Index, Instance,
    MmotError, RearrangementWitness, SplittingTuple, SupportSet,
)
from .monotone import check_monotone_exact


class NotMonotone(MmotError):
    def __init__(self, witness: RearrangementWitness):
        super().__init__(
            f"support is not cyclically monotone: {witness.n} points rearrange "
            f"from cost {witness.cost_before} to {witness.cost_after}"
        )
        self.witness = witness


class InputNotSplitting(MmotError, ValueError):
    pass


class BasePointNotInG(MmotError, ValueError):
    pass


class InfinitePotentialAtBase(MmotError, ValueError):
    pass


@dataclass(frozen=True)
class Violation:
    kind: str  # "inequality" or "equality"
    cell: Index
    slack: object


@dataclass(frozen=True)
class TupleReport:
    violations: tuple[Violation, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def splitting_for_finite(G: SupportSet, instance: Instance,
                         grid_cap: int = DEFAULT_GRID_CAP) -> SplittingTuple:
    """A tuple on ``prod p_k(G)``, exact on ``G``; raises :class:`NotMonotone` otherwise."""
    verdict = check_monotone_exact(G, instance, grid_cap)
    if not verdict.monotone:
        raise NotMonotone(verdict.witness)
    return verdict.tuple


def _arrays(t: SplittingTuple, instance: Instance) -> list[np.ndarray]:
    dtype = np.float64 if instance.mode == FLOAT else object
    out = []
    for k, p in enumerate(t.potentials):
        shape = [1] * instance.d
        shape[k] = len(p)
        out.append(np.array(p, dtype=dtype).reshape(shape))
    return out


def _sum_table(phis: list[np.ndarray]):
    total = phis[0]
    for p in phis[1:]:
        total = total + p
    return total


def _as_tuple(phis: list[np.ndarray], instance: Instance, domain: str) -> SplittingTuple:
    pots = []
    for p in phis:
        flat = p.reshape(-1).tolist()
        if instance.mode == FLOAT:
            flat = [float(v) for v in flat]
        pots.append(tuple(flat))
    return SplittingTuple(tuple(pots), domain)


def extend_by_infconvolution(t: SplittingTuple, G: SupportSet, instance: Instance) -> SplittingTuple:
    """Replace each potential in turn by ``min (c - the others)`` over the full grid.

    Axis 1 is updated first against the original potentials of axes 2..d,
    axis ``i+1`` against the updated axes 1..i and the original axes i+2..d.
    A ``-inf`` potential never wins a minimum, so a tuple defined only on the
    support's projections becomes finite everywhere.
    """
    report = verify_tuple(t, G, instance, t.domain)
    if not report.ok:
        v = report.violations[0]
        raise InputNotSplitting(
            f"input tuple fails {v.kind} at {list(v.cell)} (slack {v.slack}); "
            f"{len(report.violations)} violation(s)"
        )
    table = instance.cost_table
    phis = _arrays(t, instance)
    d = instance.d
    for i in range(d):
        rest = table
        for j in range(d):
            if j != i:
                rest = rest - phis[j]
        other_axes = tuple(j for j in range(d) if j != i)
        new = rest.min(axis=other_axes, keepdims=True) if other_axes else rest
        phis[i] = new
    if any(
        isinstance(v, float) and math.isinf(v)
        for p in phis for v in p.reshape(-1).tolist()
    ):
        raise InputNotSplitting("extension produced an infinite potential")
    return _as_tuple(phis, instance, AMBIENT)


def normalize_at_base(t: SplittingTuple, base: Index, instance: Instance,
                      G: SupportSet | None = None) -> SplittingTuple:
    """Shift constants so that ``phi_1(x1) = c(x)`` and ``phi_k(xk) = 0`` at ``base``.

    The pointwise sum of the potentials is unchanged, so a splitting tuple
    stays splitting; afterwards each ``phi_k`` sits below the cost with the
    other coordinates frozen at ``base``.
    """
    base = tuple(base)
    if G is not None and base not in G:
        raise BasePointNotInG(f"base point {list(base)} is not in G")
    at_base = [t.potentials[k][i] for k, i in enumerate(base)]
    if any(isinstance(v, float) and not math.isfinite(v) for v in at_base):
        raise InfinitePotentialAtBase(f"potentials at base are {at_base}")
    shift = sum(at_base[1:], instance.zero)
    pots = [tuple(v + shift for v in t.potentials[0])]
    for k in range(1, instance.d):
        pots.append(tuple(v - at_base[k] for v in t.potentials[k]))
    return SplittingTuple(tuple(pots), t.domain)


def _domain_axes(G: SupportSet, instance: Instance, domain: str) -> list[list[int]]:
    if domain == AMBIENT:
        return [list(range(n)) for n in instance.sizes]
    if domain == PROJECTIONS:
        return G.projections(instance.d)
    raise ValueError(f"unknown domain {domain!r}")


def verify_tuple(t: SplittingTuple, G: SupportSet, instance: Instance,
                 domain: str = AMBIENT) -> TupleReport:
    """Check ``sum phi <= c`` on the domain and ``sum phi == c`` on ``G``.

    ``-inf`` satisfies every inequality and breaks every equality.
    """
    tol = 0 if instance.mode == RATIONAL else FLOAT_TOL
    axes = _domain_axes(G, instance, domain)
    on_g = set(G.points)
    bad = []
    if len(t.potentials) != instance.d or any(
        len(p) != n for p, n in zip(t.potentials, instance.sizes)
    ):
        raise ValueError("tuple shape does not match the instance")
    table = instance.cost_table
    for cell in itertools.product(*axes):
        total = t.total(cell)
        c = table[cell]
        if isinstance(total, float) and total == -math.inf:
            if cell in on_g:
                bad.append(Violation("equality", cell, math.inf))
            continue
        slack = c - total
        if slack < -tol:
            bad.append(Violation("inequality", cell, slack))
        elif cell in on_g and slack > tol:
            bad.append(Violation("equality", cell, slack))
    return TupleReport(tuple(bad))


def base_bounds(t: SplittingTuple, base: Index, instance: Instance) -> list[tuple[int, int, object]]:
    """Cells where ``phi_k(x) > c(base with coordinate k replaced by x)``.

    Returns ``(axis, point, excess)`` triples; empty when the bounds hold.
    """
    tol = 0 if instance.mode == RATIONAL else FLOAT_TOL
    table = instance.cost_table
    out = []
    for k, n in enumerate(instance.sizes):
        for i in range(n):
            cell = list(base)
            cell[k] = i
            excess = t.potentials[k][i] - table[tuple(cell)]
            if excess > tol:
                out.append((k, i, excess))
    return out


def ambient_tuple(G: SupportSet, instance: Instance, base: Index | None = None,
                  grid_cap: int = DEFAULT_GRID_CAP) -> SplittingTuple:
    """Finite support to normalized ambient tuple: solve, extend, normalize."""
    t = splitting_for_finite(G, instance, grid_cap)
    t = extend_by_infconvolution(t, G, instance)
    return normalize_at_base(t, base if base is not None else G.base_point(), instance, G)
