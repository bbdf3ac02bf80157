import itertools
from fractions import Fraction

import numpy as np
import pytest

from mmot.core import (
    FLOAT, PROJECTIONS, SupportSet, cost_eval, make_instance, raw_cost,
    support_of,
)
from mmot.monotone import (
    BudgetExceeded, CertificateInvalid, MarginalMismatch, NonRationalInput, NotImproving,
    check_monotone_bruteforce, check_monotone_exact, extract_witness,
    improving_pair_from_certificate, splitting_system,
)
from mmot import lp
from mmot.solver import restrict_to_projections, solve_primal
from mmot.suite import gen_instance, swap_partners

H = Fraction(1, 2)
SWAP = SupportSet.of([(0, 1), (1, 0)])
DIAG = SupportSet.of([(0, 0), (1, 1)])


def test_exact_diagonal_monotone(square):
    v = check_monotone_exact(DIAG, square)
    assert v.monotone
    assert v.tuple.domain == PROJECTIONS
    assert v.tuple.potentials == ((0, 0), (0, 0))


def test_exact_swap_violated(square):
    v = check_monotone_exact(SWAP, square)
    assert v.violated
    w = v.witness
    assert w.n == 2
    assert w.permutations == ((1, 0),)
    assert (w.cost_before, w.cost_after) == (2, 0)


def test_exact_three_marginal_example(cube):
    G = SupportSet.of([(0, 0, 0), (1, 1, 0)])
    v = check_monotone_exact(G, cube)
    assert v.monotone
    phi = v.tuple.potentials
    cells = list(itertools.product((0, 1), (0, 1), (0,)))
    for cell in cells:
        s = sum(phi[k][i] for k, i in enumerate(cell))
        c = cost_eval(cube, cell)
        assert s == c if cell in G else s <= c
    # the unused point of axis 3 is off the projection
    assert phi[2][1] == -float("inf")


def test_bruteforce_examples(square):
    assert check_monotone_bruteforce(SWAP, square, 2).violated
    assert check_monotone_bruteforce(DIAG, square, 3).result == "Inconclusive"
    with pytest.raises(ValueError):
        check_monotone_bruteforce(DIAG, square, 1)


def test_bruteforce_budget(cube):
    with pytest.raises(BudgetExceeded):
        check_monotone_bruteforce(SupportSet.of([(0, 0, 0), (1, 1, 1), (0, 1, 1)]), cube, 3, node_cap=10)


def _random_support(rng, inst, k):
    cells = list(inst.grid())
    pick = rng.choice(len(cells), size=k, replace=False)
    return SupportSet.of(cells[i] for i in pick)


def test_exact_and_bruteforce_cross_check():
    rng = np.random.default_rng(11)
    violated = 0
    for seed in range(20):
        inst = gen_instance(3, [2, 2, 2], "random", seed)
        G = _random_support(rng, inst, int(rng.integers(2, 6)))
        exact = check_monotone_exact(G, inst)
        brute = check_monotone_bruteforce(G, inst, n_max=3)
        if brute.violated:
            assert exact.violated, "brute force found a rearrangement the LP missed"
            assert brute.witness.is_improving(inst)
        if exact.violated:
            violated += 1
            assert exact.witness.is_improving(inst)
            big = check_monotone_bruteforce(G, inst, n_max=max(3, exact.witness.n))
            assert big.violated
    assert violated >= 5


def test_extract_witness_swap(square):
    diag = {(0, 0): H, (1, 1): H}
    anti = {(0, 1): H, (1, 0): H}
    w = extract_witness(anti, diag, square)
    assert w.n == 2
    assert w.permutations == ((1, 0),)
    assert (w.cost_before, w.cost_after) == (2, 0)
    with pytest.raises(NotImproving):
        extract_witness(diag, anti, square)


def test_extract_witness_degenerate(cube):
    with pytest.raises(NotImproving):
        extract_witness({(0, 0, 0): 1}, {(0, 0, 0): 1}, cube)


def test_extract_witness_input_errors(square):
    with pytest.raises(MarginalMismatch):
        extract_witness({(0, 1): 1}, {(0, 0): 1}, square)
    with pytest.raises(NonRationalInput):
        extract_witness({(0, 1): 0.5, (1, 0): 0.5}, {(0, 0): 0.5, (1, 1): 0.5}, square)


def test_improving_pair_swap(square):
    system = splitting_system(SWAP, square)
    res = lp.check_feasibility(system.constraints, system.n_vars, free=range(system.n_vars))
    alpha, alpha_p = improving_pair_from_certificate(res.certificate, SWAP, square)
    # hand enumeration: the only zero-marginal signed measure on {0,1}^2 up to scale
    # is +1 on the anti-diagonal and -1 on the diagonal
    assert alpha == {(0, 1): H, (1, 0): H}
    assert alpha_p == {(0, 0): H, (1, 1): H}


def test_improving_pair_rejects_bad_certificate(square):
    with pytest.raises(CertificateInvalid):
        improving_pair_from_certificate([0, 0, 0, 0], SWAP, square)
    with pytest.raises(CertificateInvalid):
        improving_pair_from_certificate([1, 0, 0, 0], SWAP, square)


def _marg(measure, d):
    out = [dict() for _ in range(d)]
    for cell, m in measure.items():
        for k, i in enumerate(cell):
            out[k][i] = out[k].get(i, 0) + m
    return out


def test_random_violations_round_trip():
    hits = 0
    for seed in range(40):
        inst = gen_instance(3, [3, 2, 3], "random", seed)
        plan = swap_partners(solve_primal(inst).optimal_plan, inst)
        if plan is None:
            continue
        G = support_of(plan)
        system = splitting_system(G, inst)
        res = lp.check_feasibility(system.constraints, system.n_vars, free=range(system.n_vars))
        if isinstance(res, lp.Feasible):
            continue
        hits += 1
        alpha, alpha_p = improving_pair_from_certificate(res.certificate, G, inst)
        assert _marg(alpha, 3) == _marg(alpha_p, 3)
        assert all(c in G for c in alpha)
        assert raw_cost(inst, alpha_p.items()) < raw_cost(inst, alpha.items())
        w = extract_witness(alpha, alpha_p, inst)
        tau = 1
        for m in list(alpha.values()) + list(alpha_p.values()):
            tau = np.lcm(tau, m.denominator)
        # independent re-evaluation of both sums
        assert sum(cost_eval(inst, p) for p in w.points) == tau * raw_cost(inst, alpha.items())
        assert sum(cost_eval(inst, p) for p in w.rearranged()) == tau * raw_cost(inst, alpha_p.items())
        assert w.cost_after < w.cost_before
        assert all(p in G for p in w.points)
        for s in w.permutations:
            assert sorted(s) == list(range(w.n))
    assert hits >= 20


def test_invariant_under_separable_shift():
    rng = np.random.default_rng(5)
    for seed in range(15):
        inst = gen_instance(3, [2, 3, 2], "random", seed)
        G = _random_support(rng, inst, 3)
        g = [[Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 5))) for _ in range(n)]
             for n in inst.sizes]
        table = inst.cost_table.copy()
        for cell in inst.grid():
            table[cell] += sum(g[k][i] for k, i in enumerate(cell))
        table = table - min(table.flat) if min(table.flat) < 0 else table
        shifted = inst.with_cost_table(table)
        assert check_monotone_exact(G, inst).result == check_monotone_exact(G, shifted).result


def test_monotone_verdict_matches_definition_ii():
    rng = np.random.default_rng(8)
    checked = 0
    for seed in range(10):
        inst = gen_instance(3, [3, 2, 3], "random", seed)
        G = support_of(solve_primal(inst).optimal_plan)
        assert check_monotone_exact(G, inst).monotone
        for _ in range(5):
            weights = [Fraction(int(rng.integers(1, 10))) for _ in G]
            total = sum(weights)
            alpha = {p: w / total for p, w in zip(G, weights)}
            marg = [[0] * n for n in inst.sizes]
            for cell, m in alpha.items():
                for k, i in enumerate(cell):
                    marg[k][i] += m
            sub = restrict_to_projections(inst, G, marg)
            best = solve_primal(sub).optimal_value
            assert raw_cost(inst, alpha.items()) <= best
            checked += 1
    assert checked == 50


def test_float_mode_witness():
    inst = make_instance([[0, 1], [1, 0]], mode=FLOAT)
    v = check_monotone_exact(SWAP, inst)
    assert v.violated
    assert isinstance(v.witness.cost_before, float)
    assert v.witness.cost_before - v.witness.cost_after > 1e-9


def test_empty_support_rejected(square):
    with pytest.raises(ValueError):
        check_monotone_exact(SupportSet.of([]), square)
