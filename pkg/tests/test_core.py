from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mmot.core import (
    FLOAT, IndexOutOfRange, InvalidPlan, SupportSet, TransportPlan, cost_eval, make_instance,
    marginals_of, plan_cost, support_of, validate_instance,
)
from mmot.suite import gen_instance

H = Fraction(1, 2)


def test_cost_eval_pairwise_quadratic(cube):
    assert cost_eval(cube, (0, 0, 0)) == 0
    assert cost_eval(cube, (0, 1, 0)) == 2


def test_cost_eval_tensor_lookup():
    inst = make_instance([[0, 1], [7, 3]])
    assert cost_eval(inst, (1, 0)) == 7


def test_cost_eval_out_of_range(square):
    with pytest.raises(IndexOutOfRange):
        cost_eval(square, (0, 2))
    with pytest.raises(IndexOutOfRange):
        cost_eval(square, (0,))


def test_builtin_coulomb_and_product():
    inst = make_instance(coords=[[0, 1], [0, 1]], builtin="coulomb")
    assert cost_eval(inst, (0, 1)) == 1
    assert cost_eval(inst, (1, 1)) == Fraction(1e6)
    prod = make_instance(coords=[[-1, 1], [-1, 2]], builtin="product", params={"w": [1]})
    # raw products -1*-1=1, -1*2=-2, 1*-1=-1, 1*2=2; offset lifts the minimum to 0
    assert [cost_eval(prod, c) for c in [(0, 0), (0, 1), (1, 0), (1, 1)]] == [3, 0, 1, 4]
    assert validate_instance(prod) == []


def test_plan_cost_examples(cube, square):
    assert plan_cost(cube, TransportPlan.from_entries({(0, 0, 0): H, (1, 1, 1): H})) == 0
    assert plan_cost(square, TransportPlan.from_entries({(0, 1): H, (1, 0): H})) == 1


def test_plan_cost_rejects_wrong_marginals(square):
    with pytest.raises(InvalidPlan):
        plan_cost(square, TransportPlan.from_entries({(0, 0): 1}))


def _random_plan(rng, sizes):
    dense = rng.integers(0, 4, size=sizes)
    dense[(0,) * len(sizes)] += 1
    total = int(dense.sum())
    entries = {idx: Fraction(int(dense[idx]), total) for idx in np.ndindex(*sizes) if dense[idx]}
    return dense, total, TransportPlan.from_entries(entries)


@pytest.mark.parametrize("seed", range(5))
def test_plan_cost_matches_dense_sum(seed):
    rng = np.random.default_rng(seed)
    dense, total, plan = _random_plan(rng, (2, 2, 2))
    cost = [[[Fraction(int(rng.integers(0, 20)), int(rng.integers(1, 9))) for _ in range(2)]
             for _ in range(2)] for _ in range(2)]
    marg = [[Fraction(int(v), total) for v in dense.sum(axis=tuple(j for j in range(3) if j != k))]
            for k in range(3)]
    inst = make_instance(cost, marg)
    oracle = sum(Fraction(int(dense[i, j, k]), total) * cost[i][j][k]
                 for i in range(2) for j in range(2) for k in range(2))
    assert plan_cost(inst, plan) == oracle


def test_marginals_examples():
    inst = make_instance([[0]], [[1], [1]])
    assert marginals_of(TransportPlan.from_entries({(0, 0): 1}), inst) == [[1], [1]]
    cube = make_instance(coords=[[0, 1]] * 3, builtin="pairwise_quadratic")
    m = marginals_of(TransportPlan.from_entries({(0, 0, 0): H, (1, 1, 1): H}), cube)
    assert m == [[H, H]] * 3


@pytest.mark.parametrize("seed", range(5))
def test_marginals_match_dense_accumulation(seed):
    rng = np.random.default_rng(100 + seed)
    sizes = (3, 2, 4)
    dense, total, plan = _random_plan(rng, sizes)
    inst = make_instance(np.zeros(sizes, dtype=int).tolist(),
                         [[Fraction(1, n)] * n for n in sizes])
    got = marginals_of(plan, inst)
    for k in range(3):
        acc = np.zeros(sizes[k], dtype=int)
        for idx in np.ndindex(*sizes):
            acc[idx[k]] += dense[idx]
        assert got[k] == [Fraction(int(v), total) for v in acc]


def test_support_of():
    assert support_of(TransportPlan.from_entries({(0, 0): 1})).points == ((0, 0),)
    s = support_of(TransportPlan.from_entries({(0, 0, 0): H, (1, 1, 1): H}))
    assert len(s) == 2


def test_support_drops_float_dust():
    entries = {(0, 0): 0.5 - 1e-15, (1, 1): 0.5, (0, 1): 1e-15}
    plan = TransportPlan.from_entries(entries, FLOAT)
    assert support_of(plan, FLOAT).points == ((0, 0), (1, 1))
    # the threshold applies to plans built elsewhere too
    raw = TransportPlan(entries)
    assert (0, 1) not in support_of(raw, FLOAT)


def test_validate_instance_reports():
    bad = make_instance([[0, 1], [1, 0]], [[0.5, 0.6], [0.5, 0.5]])
    assert any("marginal 0 sums to 1.1" in e for e in validate_instance(bad))
    neg = make_instance([[0, -1], [1, 0]])
    assert "cost must be ≥ 0" in validate_instance(neg)
    assert validate_instance(make_instance([[0, 1], [1, 0]])) == []


def test_validate_reports_every_violation():
    inst = make_instance([[0, -1], [1, 0]], [[0.5, 0.6], [-0.5, 1.5]])
    errs = validate_instance(inst)
    assert len(errs) >= 3


def test_validate_builtin_needs_coords():
    inst = make_instance([[0, 1], [1, 0]])
    inst = type(inst)(inst.spaces, inst.marginals, type(inst.cost)(builtin="coulomb"), inst.mode)
    assert any("coordinates" in e for e in validate_instance(inst))


def test_validate_tensor_shape():
    inst = make_instance([[0, 1], [1, 0]])
    inst = type(inst)(inst.spaces, inst.marginals, type(inst.cost)(tensor=[[0, 1, 2]]), inst.mode)
    assert any("shape" in e for e in validate_instance(inst))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), lam=st.fractions(0, 1))
def test_plan_cost_is_linear(seed, lam):
    from mmot.solver import solve_primal
    from mmot.suite import swap_partners

    inst = gen_instance(3, [2, 2, 2], "random", seed)
    a = solve_primal(inst).optimal_plan
    b = swap_partners(a, inst) or a
    mix = {}
    for plan, w in ((a, lam), (b, 1 - lam)):
        for idx, m in plan.items():
            mix[idx] = mix.get(idx, 0) + w * m
    mixed = TransportPlan.from_entries(mix)
    assert plan_cost(inst, mixed) == lam * plan_cost(inst, a) + (1 - lam) * plan_cost(inst, b)
    for k, w in enumerate(marginals_of(mixed, inst)):
        assert sum(w) == 1


def test_pairwise_quadratic_symmetric():
    inst = make_instance(coords=[[0, Fraction(1, 3), 1]] * 3, builtin="pairwise_quadratic")
    for idx in inst.grid():
        for perm in [(1, 0, 2), (2, 1, 0), (1, 2, 0)]:
            assert cost_eval(inst, idx) == cost_eval(inst, tuple(idx[p] for p in perm))


def test_support_projections_carry_all_mass():
    inst = gen_instance(3, [3, 2, 3], "random", 4)
    from mmot.solver import solve_primal

    plan = solve_primal(inst).optimal_plan
    proj = support_of(plan).projections(3)
    for k, w in enumerate(marginals_of(plan, inst)):
        assert sum(w[i] for i in proj[k]) == 1
    assert SupportSet.of(plan.entries).points == support_of(plan).points
