"""JSON readers and writers for instances, plans, tuples, verdicts and certificates.

Rationals travel as ``"p/q"`` strings so that nothing is rounded on the way
through a file; ``-inf`` potentials are written as the string ``"-inf"``.
"""
from __future__ import annotations

import hashlib
import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np

from .core import (
    FLOAT, RATIONAL, Certificate, CostSpec, Instance, Marginal, RearrangementWitness,
    Space, SplittingTuple, SupportSet, TransportPlan, to_number,
)
from types import MappingProxyType


def num_out(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, float):
        if x == -math.inf:
            return "-inf"
        if math.isinf(x) or math.isnan(x):
            return str(x)
        return x
    if isinstance(x, (int, np.integer)):
        return int(x)
    return x


def num_in(x, mode: str):
    if isinstance(x, str) and x.strip() in ("-inf", "-Infinity"):
        return -math.inf
    return to_number(x, mode)


def _nested_out(a):
    if isinstance(a, (list, tuple)):
        return [_nested_out(v) for v in a]
    return num_out(a)


def _nested_in(a, mode):
    if isinstance(a, list):
        return [_nested_in(v, mode) for v in a]
    return to_number(a, mode)


def instance_to_dict(inst: Instance) -> dict:
    spaces = []
    for s in inst.spaces:
        pts = []
        for i, lab in enumerate(s.labels):
            p = {"label": lab}
            if s.coords is not None:
                p["coord"] = [num_out(v) for v in s.coords[i]]
            pts.append(p)
        spaces.append({"points": pts})
    if inst.cost.variant == "tensor":
        tensor = np.asarray(inst.cost.tensor, dtype=object).tolist()
        cost = {"tensor": _nested_out(tensor)}
    else:
        cost = {"builtin": inst.cost.builtin,
                "params": {k: _nested_out(v) for k, v in dict(inst.cost.params).items()}}
    return {
        "spaces": spaces,
        "marginals": [[num_out(w) for w in m.weights] for m in inst.marginals],
        "cost": cost,
        "arithmetic": inst.mode,
    }


def instance_from_dict(data: dict, mode: str | None = None) -> Instance:
    mode = mode or data.get("arithmetic", RATIONAL)
    if mode not in (RATIONAL, FLOAT):
        raise ValueError(f"unknown arithmetic mode {mode!r}")
    spaces = []
    for k, s in enumerate(data["spaces"]):
        pts = s["points"]
        labels = tuple(str(p.get("label", i)) if isinstance(p, dict) else str(p)
                       for i, p in enumerate(pts))
        coords = None
        if pts and all(isinstance(p, dict) and "coord" in p for p in pts):
            coords = tuple(
                tuple(to_number(v, mode) for v in
                      (p["coord"] if isinstance(p["coord"], list) else [p["coord"]]))
                for p in pts
            )
        spaces.append(Space(k, labels, coords))
    marg = tuple(
        Marginal(k, tuple(to_number(w, mode) for w in m)) for k, m in enumerate(data["marginals"])
    )
    cost = data["cost"]
    if "tensor" in cost:
        spec = CostSpec(tensor=_nested_in(cost["tensor"], mode))
    elif "builtin" in cost:
        spec = CostSpec(builtin=cost["builtin"],
                        params=MappingProxyType(dict(cost.get("params") or {})))
    else:
        raise ValueError("cost must carry either 'tensor' or 'builtin'")
    return Instance(tuple(spaces), marg, spec, mode)


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def instance_hash(inst: Instance) -> str:
    """sha256 over the canonical JSON serialization of ``inst``."""
    body = instance_to_dict(inst)
    return hashlib.sha256(canonical_json(body).encode()).hexdigest()


def plan_to_dict(plan: TransportPlan) -> dict:
    return {"entries": [{"idx": list(idx), "mass": num_out(m)} for idx, m in plan.items()]}


def plan_from_dict(data: dict, mode: str = RATIONAL) -> TransportPlan:
    return TransportPlan.from_entries(
        ((tuple(e["idx"]), e["mass"]) for e in data["entries"]), mode
    )


def support_from_dict(data: dict) -> SupportSet:
    """Accept a plan, a solve result, or ``{"points": [[i1, ..., id], ...]}``."""
    if "plan" in data and "entries" not in data:
        data = data["plan"]
    if "entries" in data:
        return SupportSet.of(tuple(e["idx"]) for e in data["entries"]
                             if to_number(e.get("mass", 1), FLOAT) > 0)
    return SupportSet.of(tuple(p) for p in data["points"])


def tuple_to_dict(t: SplittingTuple, base=None) -> dict:
    out = {"potentials": [[num_out(v) for v in p] for p in t.potentials], "domain": t.domain}
    if base is not None:
        out["base"] = list(base)
    return out


def tuple_from_dict(data: dict, mode: str = RATIONAL) -> SplittingTuple:
    return SplittingTuple.of(
        [[num_in(v, mode) for v in p] for p in data["potentials"]],
        data.get("domain", "ambient"),
    )


def witness_to_dict(w: RearrangementWitness) -> dict:
    return {
        "points": [list(p) for p in w.points],
        "permutations": [list(s) for s in w.permutations],
        "cost_before": num_out(w.cost_before),
        "cost_after": num_out(w.cost_after),
    }


def witness_from_dict(data: dict, mode: str = RATIONAL) -> RearrangementWitness:
    return RearrangementWitness(
        tuple(tuple(p) for p in data["points"]),
        tuple(tuple(s) for s in data["permutations"]),
        to_number(data["cost_before"], mode),
        to_number(data["cost_after"], mode),
    )


def certificate_to_dict(cert: Certificate) -> dict:
    out = {
        "hash": cert.instance_hash,
        "value": num_out(cert.plan_cost),
        "base": list(cert.base_point) if cert.base_point is not None else None,
        "potentials": (
            [[num_out(v) for v in p] for p in cert.tuple.potentials]
            if cert.tuple is not None else None
        ),
        "verdict": cert.verdict,
    }
    if cert.witness is not None:
        out["witness"] = witness_to_dict(cert.witness)
    return out


def certificate_from_dict(data: dict, mode: str = RATIONAL) -> Certificate:
    pots = data.get("potentials")
    return Certificate(
        instance_hash=data["hash"],
        plan_cost=to_number(data["value"], mode),
        tuple=None if pots is None else SplittingTuple.of(
            [[num_in(v, mode) for v in p] for p in pots], "ambient"),
        base_point=None if data.get("base") is None else tuple(data["base"]),
        verdict=data["verdict"],
        witness=witness_from_dict(data["witness"], mode) if data.get("witness") else None,
    )


def load_json(path) -> dict:
    return json.loads(Path(path).read_text())


def dump_json(obj, path=None) -> str:
    text = json.dumps(obj, indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text
