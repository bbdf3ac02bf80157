"""Primal and dual LP formulations of the multi-marginal transport problem.

The primal has one variable per grid cell (lexicographic order) and one
equality row per (axis, point); the rows of each axis sum to the total mass,
so ``d - 1`` of them are redundant and the LP kernel carries the redundancy.
The dual has one free variable per (axis, point) and one ``<=`` row per cell.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import lp
from .core import (
    AMBIENT, DEFAULT_GRID_CAP, CostSpec, Instance, InvalidInstance, Marginal, Space,
    SplittingTuple, SupportSet, TransportPlan, check_grid, support_of, validate_instance,
)

log = logging.getLogger(__name__)


class SolverError(Exception):
    pass


@dataclass(frozen=True)
class SolveResult:
    optimal_plan: TransportPlan
    optimal_value: object
    dual_tuple: SplittingTuple
    gap: object


def _offsets(sizes):
    out, acc = [], 0
    for n in sizes:
        out.append(acc)
        acc += n
    return out, acc


def _prepare(instance: Instance, grid_cap: int):
    errs = validate_instance(instance)
    if errs:
        raise InvalidInstance("; ".join(errs))
    check_grid(instance.grid_size, grid_cap)
    cells = list(instance.grid())
    table = instance.cost_table
    return cells, [table[c] for c in cells]


def primal_lp(instance: Instance, cells, costs) -> lp.LinearProgram:
    off, n_rows = _offsets(instance.sizes)
    rows = [[0] * len(cells) for _ in range(n_rows)]
    for j, cell in enumerate(cells):
        for k, i in enumerate(cell):
            rows[off[k] + i][j] = 1
    rhs = [w for k in range(instance.d) for w in instance.mu(k)]
    return lp.LinearProgram.build(costs, [(r, lp.EQ, b) for r, b in zip(rows, rhs)])


def dual_lp(instance: Instance, cells, costs) -> lp.LinearProgram:
    off, n_vars = _offsets(instance.sizes)
    obj = [w for k in range(instance.d) for w in instance.mu(k)]
    cons = []
    for cell, c in zip(cells, costs):
        row = [0] * n_vars
        for k, i in enumerate(cell):
            row[off[k] + i] += 1
        cons.append((row, lp.LE, c))
    return lp.LinearProgram.build(obj, cons, free=range(n_vars), sense="maximize")


def _split(instance: Instance, flat) -> list[list]:
    off, _ = _offsets(instance.sizes)
    return [list(flat[o:o + n]) for o, n in zip(off, instance.sizes)]


def solve_primal(instance: Instance, grid_cap: int = DEFAULT_GRID_CAP,
                 iteration_limit: int = lp.DEFAULT_ITERATION_LIMIT) -> SolveResult:
    """Minimize ``sum c * pi`` over plans with the instance's marginals."""
    from .splitting import normalize_at_base

    cells, costs = _prepare(instance, grid_cap)
    out = lp.solve_lp(primal_lp(instance, cells, costs), mode=instance.mode,
                      iteration_limit=iteration_limit)
    if out.status is not lp.Status.OPTIMAL:
        raise SolverError(f"primal LP ended {out.status.value}")
    plan = TransportPlan.from_entries(zip(cells, out.primal), instance.mode)
    phi = SplittingTuple.of(_split(instance, out.dual), AMBIENT)
    value = out.objective_value
    dual_value = _dual_value(instance, phi)
    support = support_of(plan, instance.mode)
    if len(support):
        phi = normalize_at_base(phi, support.base_point(), instance, support)
    log.debug("primal solved in %d pivots, value %s", out.pivots, value)
    return SolveResult(plan, value, phi, value - dual_value)


def solve_dual(instance: Instance, grid_cap: int = DEFAULT_GRID_CAP,
               iteration_limit: int = lp.DEFAULT_ITERATION_LIMIT):
    """Maximize ``sum_k <phi_k, mu_k>`` subject to ``sum_k phi_k <= c`` on the grid.

    Returns ``(tuple, value)``.
    """
    cells, costs = _prepare(instance, grid_cap)
    out = lp.solve_lp(dual_lp(instance, cells, costs), mode=instance.mode,
                      iteration_limit=iteration_limit)
    if out.status is not lp.Status.OPTIMAL:
        raise SolverError(f"dual LP ended {out.status.value}")
    return SplittingTuple.of(_split(instance, out.primal), AMBIENT), out.objective_value


def _dual_value(instance: Instance, phi: SplittingTuple):
    return sum(
        (p * w for k in range(instance.d) for p, w in zip(phi.potentials[k], instance.mu(k))),
        instance.zero,
    )


def duality_gap(instance: Instance, grid_cap: int = DEFAULT_GRID_CAP):
    """Primal minimum minus dual maximum, each from its own LP solve."""
    primal = solve_primal(instance, grid_cap).optimal_value
    _, dual = solve_dual(instance, grid_cap)
    return primal - dual


def restrict_to_projections(instance: Instance, support: SupportSet, marginals) -> Instance:
    """Instance on ``prod p_k(support)`` with the given full-axis ``marginals``.

    Points outside the projections must carry zero weight in ``marginals``.
    """
    proj = support.projections(instance.d)
    sub = instance.cost_table[np.ix_(*proj)]
    spaces = tuple(
        Space(s.id, tuple(s.labels[i] for i in proj[k]))
        for k, s in enumerate(instance.spaces)
    )
    marg = tuple(
        Marginal(k, tuple(marginals[k][i] for i in proj[k])) for k in range(instance.d)
    )
    return Instance(spaces, marg, CostSpec(tensor=sub.tolist()), instance.mode)
