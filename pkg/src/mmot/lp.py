"""Small dense simplex kernel with dual values and Farkas certificates.

Two arithmetic modes are supported.  ``"rational"`` runs the tableau on
``gmpy2.mpq`` and returns :class:`fractions.Fraction`; ``"float"`` runs on
Python floats with a pivot tolerance.  Both use Bland's rule, so the pivot
sequence is deterministic and the method terminates on degenerate programs.

Sign conventions
----------------
For ``minimize c.x`` the dual vector ``y`` satisfies ``c.x* == b.y`` at an
optimum, with ``y_r >= 0`` on ``>=`` rows and ``y_r <= 0`` on ``<=`` rows.
For ``maximize`` the signs flip (``y_r >= 0`` on ``<=`` rows), so that
``b.y`` is still the optimal objective value.

An infeasibility certificate ``y`` satisfies ``y_r <= 0`` on ``<=`` rows,
``y_r >= 0`` on ``>=`` rows, ``(y A)_j <= 0`` for nonnegative variables,
``(y A)_j == 0`` for free variables and ``y.b > 0``.  Any feasible ``x``
would then give ``0 >= (y A) x >= y.b > 0``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Sequence

import gmpy2

log = logging.getLogger(__name__)

LE, EQ, GE = "<=", "==", ">="
RELATIONS = (LE, EQ, GE)

FLOAT_PIVOT_TOL = 1e-10
FLOAT_FEAS_TOL = 1e-9
DEFAULT_ITERATION_LIMIT = 10**6


class LpError(Exception):
    pass


class DimensionMismatch(LpError):
    pass


class IterationLimit(LpError):
    pass


class Status(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


@dataclass(frozen=True)
class Constraint:
    coeffs: tuple
    relation: str
    rhs: object


@dataclass(frozen=True)
class LinearProgram:
    """``sense`` of ``objective`` subject to ``constraints``.

    ``free`` lists the variables with lower bound minus infinity; every other
    variable is nonnegative.
    """

    objective: tuple
    constraints: tuple[Constraint, ...]
    free: frozenset = frozenset()
    sense: str = "minimize"

    @classmethod
    def build(cls, objective, constraints, free=(), sense="minimize"):
        rows = tuple(
            c if isinstance(c, Constraint) else Constraint(tuple(c[0]), c[1], c[2])
            for c in constraints
        )
        return cls(tuple(objective), rows, frozenset(free), sense)

    @property
    def n_vars(self) -> int:
        return len(self.objective)

    def check(self) -> None:
        n = self.n_vars
        if self.sense not in ("minimize", "maximize"):
            raise ValueError(f"unknown sense {self.sense!r}")
        for k, row in enumerate(self.constraints):
            if len(row.coeffs) != n:
                raise DimensionMismatch(
                    f"constraint {k} has {len(row.coeffs)} coefficients, expected {n}"
                )
            if row.relation not in RELATIONS:
                raise ValueError(f"constraint {k}: unknown relation {row.relation!r}")
            if isinstance(row.rhs, float) and not math.isfinite(row.rhs):
                raise ValueError(f"constraint {k}: rhs must be finite")
        if any(not 0 <= j < n for j in self.free):
            raise DimensionMismatch("free variable index out of range")


@dataclass(frozen=True)
class LpOutcome:
    status: Status
    primal: tuple = ()
    dual: tuple = ()
    objective_value: object = None
    infeasibility_certificate: tuple | None = None
    pivots: int = 0


@dataclass(frozen=True)
class Feasible:
    point: tuple


@dataclass(frozen=True)
class Infeasible:
    certificate: tuple


class _Field:
    """Scalar conversion and zero tests for one arithmetic mode."""

    def __init__(self, mode: str):
        if mode not in ("rational", "float"):
            raise ValueError(f"unknown arithmetic mode {mode!r}")
        self.mode = mode
        self.exact = mode == "rational"
        self.zero = gmpy2.mpq(0) if self.exact else 0.0
        self.one = gmpy2.mpq(1) if self.exact else 1.0
        self.tol = 0 if self.exact else FLOAT_PIVOT_TOL

    def conv(self, x):
        if self.exact:
            if isinstance(x, float):
                return gmpy2.mpq(Fraction(x))
            return gmpy2.mpq(x)
        return float(x)

    def back(self, x):
        if self.exact:
            return Fraction(int(x.numerator), int(x.denominator))
        return float(x)

    def pos(self, x) -> bool:
        return x > self.tol

    def neg(self, x) -> bool:
        return x < -self.tol

    def nonzero(self, x) -> bool:
        return x > self.tol or x < -self.tol


class _Tableau:
    """Dense tableau in equality standard form ``A x = b, x >= 0, b >= 0``.

    ``basis_col[r]`` starts as a unit column for row ``r`` (slack or
    artificial), so the current basis inverse can always be read from those
    columns.
    """

    def __init__(self, F: _Field, rows, rhs, unit_col, n_cols, artificial):
        self.F = F
        self.T = rows
        self.b = rhs
        self.unit_col = unit_col
        self.basis = list(unit_col)
        self.n = n_cols
        self.artificial = artificial
        self.pivots = 0
        self.z = None

    def pivot(self, r: int, j: int) -> None:
        T, b, F = self.T, self.b, self.F
        row = T[r]
        p = row[j]
        if p != F.one:
            inv = F.one / p
            for k in range(self.n):
                if row[k]:
                    row[k] = row[k] * inv
            b[r] = b[r] * inv
        nz = [k for k in range(self.n) if row[k]]
        br = b[r]
        for i, other in enumerate(T):
            if i == r:
                continue
            f = other[j]
            if not f:
                continue
            for k in nz:
                other[k] = other[k] - f * row[k]
            other[j] = F.zero
            b[i] = b[i] - f * br
            if not F.exact and abs(b[i]) < F.tol:
                b[i] = 0.0
        if self.z is not None:
            f = self.z[j]
            if f:
                for k in nz:
                    self.z[k] = self.z[k] - f * row[k]
                self.z[j] = F.zero
        self.basis[r] = j
        self.pivots += 1

    def duals(self, cost) -> list:
        """``y = c_B B^-1`` in the row space of the tableau."""
        F = self.F
        y = []
        for r in range(len(self.T)):
            col = self.unit_col[r]
            s = F.zero
            for i, bi in enumerate(self.basis):
                cb = cost[bi]
                if cb:
                    t = self.T[i][col]
                    if t:
                        s = s + cb * t
            y.append(s)
        return y

    def price(self, cost) -> None:
        """Set the reduced-cost row ``c - c_B B^-1 A`` for ``cost``."""
        z = list(cost)
        for i, row in enumerate(self.T):
            cb = cost[self.basis[i]]
            if cb:
                for k in range(self.n):
                    if row[k]:
                        z[k] = z[k] - cb * row[k]
        self.z = z

    def run(self, cost, allowed: Sequence[int], limit) -> str:
        """Minimize ``cost`` over columns in ``allowed`` with Bland's rule."""
        F = self.F
        self.price(cost)
        while True:
            in_basis = set(self.basis)
            enter = next(
                (j for j in allowed if j not in in_basis and F.neg(self.z[j])), None
            )
            if enter is None:
                return "optimal"
            leave = None
            best = None
            for r, row in enumerate(self.T):
                a = row[enter]
                if not F.pos(a):
                    continue
                ratio = self.b[r] / a
                if (
                    best is None
                    or ratio < best - F.tol
                    or (abs(ratio - best) <= F.tol and self.basis[r] < self.basis[leave])
                ):
                    best, leave = ratio, r
            if leave is None:
                return "unbounded"
            if self.pivots >= limit:
                raise IterationLimit(f"pivot limit {limit} reached")
            self.pivot(leave, enter)
            log.debug("pivot row %d col %d", leave, enter)


def solve_lp(lp: LinearProgram, mode: str = "rational",
             iteration_limit: int = DEFAULT_ITERATION_LIMIT) -> LpOutcome:
    """Two-phase primal simplex with Bland's rule."""
    lp.check()
    F = _Field(mode)
    if F.exact:
        # exact arithmetic terminates under Bland's rule; the limit only guards floats
        iteration_limit = math.inf
    n = lp.n_vars
    maximize = lp.sense == "maximize"

    # structural columns: x_j (or x_j+ and x_j-) for free variables
    col_of: list[list[tuple[int, int]]] = []
    n_struct = 0
    for j in range(n):
        if j in lp.free:
            col_of.append([(n_struct, 1), (n_struct + 1, -1)])
            n_struct += 2
        else:
            col_of.append([(n_struct, 1)])
            n_struct += 1

    m = len(lp.constraints)
    flip = []
    rels = []
    for con in lp.constraints:
        rhs = F.conv(con.rhs)
        f = F.neg(rhs)
        flip.append(f)
        rel = con.relation
        if f:
            rel = {LE: GE, GE: LE, EQ: EQ}[rel]
        rels.append(rel)

    n_slack = sum(1 for r in rels if r != EQ)
    n_art = sum(1 for r in rels if r != LE)
    n_cols = n_struct + n_slack + n_art
    rows, rhs_vec, unit_col = [], [], []
    artificial = set()
    slack_next = n_struct
    art_next = n_struct + n_slack
    for r, con in enumerate(lp.constraints):
        sgn = -1 if flip[r] else 1
        row = [F.zero] * n_cols
        for j, a in enumerate(con.coeffs):
            if a:
                v = F.conv(a) * sgn
                for col, s in col_of[j]:
                    row[col] = v if s == 1 else -v
        rel = rels[r]
        if rel == LE:
            row[slack_next] = F.one
            unit_col.append(slack_next)
            slack_next += 1
        else:
            if rel == GE:
                row[slack_next] = -F.one
                slack_next += 1
            row[art_next] = F.one
            unit_col.append(art_next)
            artificial.add(art_next)
            art_next += 1
        rows.append(row)
        rhs_vec.append(F.conv(con.rhs) * sgn)

    tab = _Tableau(F, rows, rhs_vec, unit_col, n_cols, artificial)
    real_cols = [j for j in range(n_cols) if j not in artificial]

    def to_original_rows(y_std):
        return tuple(F.back(-v if flip[r] else v) for r, v in enumerate(y_std))

    if artificial:
        cost1 = [F.one if j in artificial else F.zero for j in range(n_cols)]
        tab.run(cost1, list(range(n_cols)), iteration_limit)
        w = sum((tab.b[r] for r, bj in enumerate(tab.basis) if bj in artificial), F.zero)
        if w > (0 if F.exact else FLOAT_FEAS_TOL):
            y = tab.duals(cost1)
            return LpOutcome(Status.INFEASIBLE, infeasibility_certificate=to_original_rows(y),
                             pivots=tab.pivots)
        # drive zero-level artificials out of the basis where possible
        for r in range(m):
            if tab.basis[r] in artificial:
                for j in real_cols:
                    if F.nonzero(tab.T[r][j]):
                        tab.pivot(r, j)
                        break

    cost2 = [F.zero] * n_cols
    for j in range(n):
        cj = F.conv(lp.objective[j])
        if maximize:
            cj = -cj
        for col, s in col_of[j]:
            cost2[col] = cj if s == 1 else -cj
    state = tab.run(cost2, real_cols, iteration_limit)
    if state == "unbounded":
        return LpOutcome(Status.UNBOUNDED, pivots=tab.pivots)

    xs = [F.zero] * n_cols
    for r, bj in enumerate(tab.basis):
        xs[bj] = tab.b[r]
    primal = []
    for j in range(n):
        v = F.zero
        for col, s in col_of[j]:
            v = v + xs[col] if s == 1 else v - xs[col]
        primal.append(F.back(v))
    y = to_original_rows(tab.duals(cost2))
    if maximize:
        y = tuple(-v for v in y)
    obj = sum((F.back(F.conv(c)) * x for c, x in zip(lp.objective, primal)),
              Fraction(0) if F.exact else 0.0)
    return LpOutcome(Status.OPTIMAL, primal=tuple(primal), dual=y,
                     objective_value=obj, pivots=tab.pivots)


def check_feasibility(constraints, n_vars: int, free=(), mode: str = "rational",
                      iteration_limit: int = DEFAULT_ITERATION_LIMIT):
    """Return :class:`Feasible` with a point or :class:`Infeasible` with a certificate."""
    zero = Fraction(0) if mode == "rational" else 0.0
    lp = LinearProgram.build([zero] * n_vars, constraints, free=free)
    out = solve_lp(lp, mode=mode, iteration_limit=iteration_limit)
    if out.status is Status.INFEASIBLE:
        return Infeasible(out.infeasibility_certificate)
    return Feasible(out.primal)


def verify_farkas(lp: LinearProgram, y, tol=0) -> bool:
    """Check an infeasibility certificate by direct multiplication."""
    if len(y) != len(lp.constraints):
        return False
    for con, v in zip(lp.constraints, y):
        if con.relation == LE and v > tol:
            return False
        if con.relation == GE and v < -tol:
            return False
    for j in range(lp.n_vars):
        s = sum(v * con.coeffs[j] for con, v in zip(lp.constraints, y))
        if j in lp.free:
            if abs(s) > tol:
                return False
        elif s > tol:
            return False
    yb = sum(v * con.rhs for con, v in zip(lp.constraints, y))
    return yb > tol
