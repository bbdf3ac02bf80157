"""Domain types shared by every other module: instances, plans, tuples, witnesses."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

RATIONAL = "rational"
FLOAT = "float"
MODES = (RATIONAL, FLOAT)

SUPPORT_THRESHOLD = 1e-12
FLOAT_SUM_TOL = 1e-12
FLOAT_MARGINAL_TOL = 1e-9
FLOAT_TOL = 1e-9
DEFAULT_GRID_CAP = 10**6
COULOMB_FLOOR = 1e-6
BUILTIN_COSTS = ("pairwise_quadratic", "coulomb", "product")

NEG_INF = -math.inf

Index = tuple  # tuple[int, ...], one point index per axis


class MmotError(Exception):
    pass


class IndexOutOfRange(MmotError, IndexError):
    pass


class InvalidPlan(MmotError, ValueError):
    pass


class InvalidInstance(MmotError, ValueError):
    pass


class GridTooLarge(MmotError):
    pass


def to_number(x, mode: str):
    """Coerce a JSON-ish scalar to the arithmetic of ``mode``.

    Floats given in rational mode are read through their decimal repr, so
    ``0.1`` becomes ``1/10``.
    """
    if mode == RATIONAL:
        if isinstance(x, Fraction):
            return x
        if isinstance(x, float):
            if not math.isfinite(x):
                raise ValueError(f"non-finite value {x!r}")
            return Fraction(repr(x))
        if isinstance(x, str):
            return Fraction(x.strip())
        return Fraction(x)
    if mode == FLOAT:
        if isinstance(x, str):
            return float(Fraction(x.strip()))
        return float(x)
    raise ValueError(f"unknown arithmetic mode {mode!r}")


def tolerance(mode: str):
    return 0 if mode == RATIONAL else FLOAT_TOL


@dataclass(frozen=True)
class Space:
    id: int
    labels: tuple[str, ...]
    coords: tuple | None = None

    @property
    def size(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class Marginal:
    space_id: int
    weights: tuple


@dataclass(frozen=True)
class CostSpec:
    """Either a dense ``tensor`` or a builtin cost ``name`` with ``params``."""

    tensor: object = None
    builtin: str | None = None
    params: Mapping = field(default_factory=dict)

    @property
    def variant(self) -> str:
        return "tensor" if self.builtin is None else "builtin"


@dataclass(frozen=True, eq=False)
class Instance:
    spaces: tuple[Space, ...]
    marginals: tuple[Marginal, ...]
    cost: CostSpec
    mode: str = RATIONAL

    @property
    def d(self) -> int:
        return len(self.spaces)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(s.size for s in self.spaces)

    @property
    def grid_size(self) -> int:
        return math.prod(self.sizes)

    @property
    def zero(self):
        return Fraction(0) if self.mode == RATIONAL else 0.0

    def mu(self, axis: int) -> tuple:
        return self.marginals[axis].weights

    def grid(self) -> Iterator[Index]:
        return itertools.product(*(range(n) for n in self.sizes))

    def with_mode(self, mode: str) -> "Instance":
        if mode == self.mode:
            return self
        marg = tuple(
            Marginal(m.space_id, tuple(_convert(w, mode) for w in m.weights))
            for m in self.marginals
        )
        spaces = tuple(
            Space(s.id, s.labels,
                  None if s.coords is None
                  else tuple(tuple(_convert(v, mode) for v in c) for c in s.coords))
            for s in self.spaces
        )
        cost = self.cost
        if cost.variant == "tensor":
            arr = np.asarray(cost.tensor, dtype=object)
            conv = np.vectorize(lambda v: _convert(v, mode), otypes=[object])(arr)
            cost = CostSpec(tensor=conv.tolist() if arr.ndim else conv.item())
        return Instance(spaces, marg, cost, mode)

    def with_cost_table(self, table) -> "Instance":
        """Same spaces and marginals, tensor cost ``table``."""
        arr = np.asarray(table, dtype=object)
        return Instance(self.spaces, self.marginals, CostSpec(tensor=arr.tolist()), self.mode)

    def with_marginals(self, weights: Sequence[Sequence]) -> "Instance":
        marg = tuple(Marginal(k, tuple(w)) for k, w in enumerate(weights))
        return Instance(self.spaces, marg, self.cost, self.mode)

    @cached_property
    def cost_table(self) -> np.ndarray:
        """Dense cost array over the product grid.

        ``dtype=object`` holding Fractions in rational mode, ``float64`` otherwise.
        """
        if self.cost.variant == "tensor":
            arr = np.asarray(self.cost.tensor, dtype=object)
            if arr.shape != self.sizes:
                raise InvalidInstance(f"cost tensor shape {arr.shape} != grid {self.sizes}")
            out = np.empty(arr.shape, dtype=object)
            for idx in np.ndindex(arr.shape):
                out[idx] = to_number(arr[idx], self.mode)
        else:
            out = _builtin_table(self)
        if self.mode == FLOAT:
            return out.astype(np.float64)
        return out


def _convert(x, mode):
    if mode == RATIONAL:
        return Fraction(x) if isinstance(x, float) else to_number(x, mode)
    return float(x)


def _coord(space: Space, i: int) -> tuple:
    if space.coords is None or space.coords[i] is None:
        raise InvalidInstance(f"space {space.id} point {i} has no coordinate")
    return space.coords[i]


def _sqdist(a, b):
    return sum((u - v) * (u - v) for u, v in zip(a, b))


def _builtin_table(inst: Instance) -> np.ndarray:
    name = inst.cost.builtin
    params = dict(inst.cost.params or {})
    mode = inst.mode
    out = np.empty(inst.sizes, dtype=object)
    pts = [[_coord(s, i) for i in range(s.size)] for s in inst.spaces]
    d = inst.d
    if name == "pairwise_quadratic":
        for idx in inst.grid():
            xs = [pts[k][i] for k, i in enumerate(idx)]
            out[idx] = sum(
                (_sqdist(xs[a], xs[b]) for a in range(d) for b in range(a + 1, d)),
                inst.zero,
            )
    elif name == "coulomb":
        floor = float(params.get("floor", COULOMB_FLOOR))
        for idx in inst.grid():
            xs = [pts[k][i] for k, i in enumerate(idx)]
            v = 0.0
            for a in range(d):
                for b in range(a + 1, d):
                    v += 1.0 / max(math.sqrt(float(_sqdist(xs[a], xs[b]))), floor)
            # sqrt leaves the rationals; rational mode stores the binary value exactly
            out[idx] = Fraction(v) if mode == RATIONAL else v
    elif name == "product":
        w = [to_number(v, mode) for v in params.get("w", [1])]
        raw = np.empty(inst.sizes, dtype=object)
        for idx in inst.grid():
            p = to_number(1, mode)
            for k, i in enumerate(idx):
                p = p * sum((a * b for a, b in zip(pts[k][i], w)), inst.zero)
            raw[idx] = p
        if "offset" in params:
            offset = to_number(params["offset"], mode)
        else:
            offset = max(inst.zero, -min(raw.flat))
        for idx in inst.grid():
            out[idx] = raw[idx] + offset
    else:
        raise InvalidInstance(f"unknown builtin cost {name!r}")
    return out


@dataclass(frozen=True, eq=False)
class TransportPlan:
    """Sparse measure on the product grid; zero-mass cells are absent."""

    entries: Mapping[Index, object]

    @classmethod
    def from_entries(cls, entries: Mapping | Iterable, mode: str = RATIONAL) -> "TransportPlan":
        items = entries.items() if isinstance(entries, Mapping) else entries
        acc: dict = {}
        for idx, mass in items:
            idx = tuple(int(i) for i in idx)
            acc[idx] = acc.get(idx, 0) + to_number(mass, mode)
        thr = 0 if mode == RATIONAL else SUPPORT_THRESHOLD
        kept = {k: acc[k] for k in sorted(acc) if acc[k] > thr}
        return cls(MappingProxyType(kept))

    def __eq__(self, other):
        return isinstance(other, TransportPlan) and dict(self.entries) == dict(other.entries)

    def __len__(self):
        return len(self.entries)

    def items(self):
        return self.entries.items()

    def total_mass(self):
        return sum(self.entries.values())


@dataclass(frozen=True)
class SupportSet:
    points: tuple[Index, ...]

    @classmethod
    def of(cls, points: Iterable) -> "SupportSet":
        return cls(tuple(sorted({tuple(int(i) for i in p) for p in points})))

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)

    def __contains__(self, p):
        return tuple(p) in set(self.points)

    def projections(self, d: int) -> list[list[int]]:
        return [sorted({p[k] for p in self.points}) for k in range(d)]

    def base_point(self) -> Index:
        return min(self.points)


PROJECTIONS = "projections"
AMBIENT = "ambient"


@dataclass(frozen=True)
class SplittingTuple:
    """Potentials ``phi[k][i]`` for each axis; ``-inf`` allowed.

    ``domain`` says where ``sum phi <= c`` has been certified: on the product
    of support projections or on the whole grid.
    """

    potentials: tuple[tuple, ...]
    domain: str = AMBIENT

    @classmethod
    def of(cls, potentials, domain: str = AMBIENT) -> "SplittingTuple":
        return cls(tuple(tuple(p) for p in potentials), domain)

    def total(self, idx: Index):
        return sum((self.potentials[k][i] for k, i in enumerate(idx)), 0)


@dataclass(frozen=True)
class RearrangementWitness:
    """``points`` from the support and permutations for axes 2..d (0-based).

    After rearrangement row ``i`` is ``(x_1^(i), x_2^(s_2(i)), ..., x_d^(s_d(i)))``.
    """

    points: tuple[Index, ...]
    permutations: tuple[tuple[int, ...], ...]
    cost_before: object
    cost_after: object

    @property
    def n(self) -> int:
        return len(self.points)

    def rearranged(self) -> list[Index]:
        out = []
        for i, p in enumerate(self.points):
            row = [p[0]] + [self.points[s[i]][k + 1] for k, s in enumerate(self.permutations)]
            out.append(tuple(row))
        return out

    def recompute(self, instance: Instance) -> tuple:
        before = sum((cost_eval(instance, p) for p in self.points), instance.zero)
        after = sum((cost_eval(instance, p) for p in self.rearranged()), instance.zero)
        return before, after

    def is_improving(self, instance: Instance) -> bool:
        before, after = self.recompute(instance)
        margin = 0 if instance.mode == RATIONAL else FLOAT_TOL
        return before - after > margin


OPTIMAL = "Optimal"
NOT_MONOTONE = "NotMonotone"


@dataclass(frozen=True)
class Certificate:
    instance_hash: str
    plan_cost: object
    tuple: SplittingTuple | None
    base_point: Index | None
    verdict: str
    witness: RearrangementWitness | None = None


def cost_eval(instance: Instance, point: Sequence[int]):
    idx = tuple(point)
    if len(idx) != instance.d:
        raise IndexOutOfRange(f"expected {instance.d} indices, got {len(idx)}")
    for k, (i, n) in enumerate(zip(idx, instance.sizes)):
        if not 0 <= i < n:
            raise IndexOutOfRange(f"index {i} out of range for axis {k} (size {n})")
    v = instance.cost_table[idx]
    return float(v) if instance.mode == FLOAT else v


def marginals_of(plan: TransportPlan, instance: Instance) -> list[list]:
    out = [[instance.zero] * n for n in instance.sizes]
    for idx, mass in plan.items():
        for k, i in enumerate(idx):
            out[k][i] += mass
    return out


def support_of(plan: TransportPlan, mode: str = RATIONAL) -> SupportSet:
    thr = 0 if mode == RATIONAL else SUPPORT_THRESHOLD
    return SupportSet.of(idx for idx, m in plan.items() if m > thr)


def plan_errors(instance: Instance, plan: TransportPlan) -> list[str]:
    errs = []
    for idx, mass in plan.items():
        if len(idx) != instance.d or any(not 0 <= i < n for i, n in zip(idx, instance.sizes)):
            errs.append(f"entry {list(idx)} outside the grid {list(instance.sizes)}")
        if mass <= 0:
            errs.append(f"entry {list(idx)} has nonpositive mass {mass}")
    if errs:
        return errs
    exact = instance.mode == RATIONAL
    for k, got in enumerate(marginals_of(plan, instance)):
        for i, (g, want) in enumerate(zip(got, instance.mu(k))):
            bad = g != want if exact else abs(g - want) > FLOAT_MARGINAL_TOL
            if bad:
                errs.append(f"axis {k} point {i}: plan marginal {g} != {want}")
    return errs


def plan_cost(instance: Instance, plan: TransportPlan):
    errs = plan_errors(instance, plan)
    if errs:
        raise InvalidPlan("; ".join(errs))
    return raw_cost(instance, plan.items())


def raw_cost(instance: Instance, items) -> object:
    """``sum mass * c`` without validating marginals."""
    return sum((m * cost_eval(instance, idx) for idx, m in items), instance.zero)


def validate_instance(instance: Instance) -> list[str]:
    """Every invariant violation as a message; empty list means valid."""
    errs: list[str] = []
    if instance.mode not in MODES:
        errs.append(f"unknown arithmetic mode {instance.mode!r}")
        return errs
    if instance.d < 1:
        errs.append("instance needs at least one space")
        return errs
    for s in instance.spaces:
        if s.size < 1:
            errs.append(f"space {s.id} is empty")
        if len(set(s.labels)) != len(s.labels):
            errs.append(f"space {s.id} has duplicate point labels")
    if len(instance.marginals) != instance.d:
        errs.append(f"{len(instance.marginals)} marginals for {instance.d} spaces")
    for k, (m, s) in enumerate(zip(instance.marginals, instance.spaces)):
        if len(m.weights) != s.size:
            errs.append(f"marginal {k} has {len(m.weights)} weights, space has {s.size} points")
        if any(w < 0 for w in m.weights):
            errs.append(f"marginal {k} has a negative weight")
        total = sum(m.weights)
        off = total != 1 if instance.mode == RATIONAL else abs(total - 1) > FLOAT_SUM_TOL
        if off:
            errs.append(f"marginal {k} sums to {_fmt(total)}")
    cost = instance.cost
    if cost.variant == "builtin":
        if cost.builtin not in BUILTIN_COSTS:
            errs.append(f"unknown builtin cost {cost.builtin!r}")
            return errs
        for s in instance.spaces:
            if s.coords is None or len(s.coords) != s.size or any(c is None for c in s.coords):
                errs.append(f"builtin cost {cost.builtin} needs coordinates on every point of space {s.id}")
        if errs:
            return errs
    else:
        shape = np.asarray(cost.tensor, dtype=object).shape
        if shape != instance.sizes:
            errs.append(f"cost tensor shape {list(shape)} != grid {list(instance.sizes)}")
            return errs
    try:
        table = instance.cost_table
    except (InvalidInstance, ValueError, TypeError, ZeroDivisionError) as exc:
        errs.append(f"cost could not be evaluated: {exc}")
        return errs
    flat = list(np.asarray(table).flat)
    if any(isinstance(v, float) and not math.isfinite(v) for v in flat):
        errs.append("cost values must be finite")
    elif any(v < 0 for v in flat):
        errs.append("cost must be ≥ 0")
    return errs


def _fmt(x) -> str:
    if isinstance(x, Fraction):
        return str(float(x)) if x.denominator in (1, 2, 4, 5, 8, 10) else str(x)
    return f"{x:.12g}"


def check_grid(n_cells: int, cap: int) -> None:
    if n_cells > cap:
        raise GridTooLarge(f"grid has {n_cells} cells, cap is {cap}")


def make_instance(cost=None, marginals=None, mode: str = RATIONAL, *, coords=None,
                  builtin: str | None = None, params=None, labels=None) -> Instance:
    """Build an :class:`Instance` from plain Python values.

    ``cost`` is a nested list (dense tensor) unless ``builtin`` is given, in
    which case ``coords[k][i]`` supplies the coordinate vector of point ``i``
    on axis ``k`` (scalars are promoted to 1-vectors).
    """
    if coords is not None:
        coords = [[c if isinstance(c, (list, tuple)) else (c,) for c in axis] for axis in coords]
        sizes = [len(axis) for axis in coords]
    elif cost is not None:
        sizes = list(np.asarray(cost, dtype=object).shape)
    else:
        sizes = [len(m) for m in marginals]
    if marginals is None:
        marginals = [[Fraction(1, n)] * n for n in sizes]
    spaces = []
    for k, n in enumerate(sizes):
        lab = tuple(labels[k]) if labels is not None else tuple(str(i) for i in range(n))
        cs = None
        if coords is not None:
            cs = tuple(tuple(to_number(v, mode) for v in c) for c in coords[k])
        spaces.append(Space(k, lab, cs))
    marg = tuple(
        Marginal(k, tuple(to_number(w, mode) for w in m)) for k, m in enumerate(marginals)
    )
    if builtin is not None:
        spec = CostSpec(builtin=builtin, params=MappingProxyType(dict(params or {})))
    else:
        spec = CostSpec(tensor=cost)
    return Instance(tuple(spaces), marg, spec, mode)
