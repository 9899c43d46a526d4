import numpy as np
import pytest

from shufflesim import gf2, oracle, simon, solver
from shufflesim.ledger import DepthLedger
from shufflesim.simon import InstanceKind

from conftest import make_rng


def test_round_layer_count_sequential():
    # one chase layer per level plus d uncompute layers: 2d+1 total
    for d in (0, 1, 2):
        rng = make_rng("layers", d)
        inst = simon.sample_simon(2, rng)
        orc = oracle.sample_shuffling(inst, d, rng)
        res = solver.run_simon_round(orc, rng)
        assert res.oracle_layers == 2 * d + 1


def test_round_layer_count_parallel_uncompute():
    # folding the uncompute into one simultaneous-read layer gives d+2
    for d in (1, 2):
        rng = make_rng("parlayers", d)
        inst = simon.sample_simon(2, rng)
        orc = oracle.sample_shuffling(inst, d, rng)
        res = solver.run_simon_round(orc, rng, uncompute="parallel")
        assert res.oracle_layers == d + 2
    with pytest.raises(ValueError):
        solver.run_simon_round(orc, make_rng("bad"), uncompute="zigzag")


def test_round_j_orthogonal_to_shift():
    rng = make_rng("ortho")
    inst = simon.sample_simon(3, rng)
    orc = oracle.sample_shuffling(inst, 1, rng)
    s = gf2.BitVector(inst.s, 3)
    for _ in range(50):
        res = solver.run_simon_round(orc, rng)
        assert gf2.dot(res.j, s) == 0


def test_round_j_orthogonal_with_parallel_uncompute():
    rng = make_rng("ortho-par")
    inst = simon.sample_simon(2, rng)
    orc = oracle.sample_shuffling(inst, 1, rng)
    s = gf2.BitVector(inst.s, 2)
    for _ in range(40):
        res = solver.run_simon_round(orc, rng, uncompute="parallel")
        assert gf2.dot(res.j, s) == 0


def test_round_core_value_comes_from_table():
    # chase inputs stay on the shuffle's chain, so the core read never
    # lands outside the level set and never reports bot
    for d in (0, 2):
        rng = make_rng("core", d)
        inst = simon.sample_simon(3, rng)
        orc = oracle.sample_shuffling(inst, d, rng)
        values = set(int(v) for v in inst.table)
        for _ in range(10):
            res = solver.run_simon_round(orc, rng)
            assert res.core_value is not None
            assert res.core_value in values


def test_round_j_uniform_on_one_to_one():
    # injective instances erase all structure; j is uniform over 2^n
    rng = make_rng("uniform-j")
    inst = simon.sample_one_to_one(3, rng)
    orc = oracle.sample_shuffling(inst, 0, rng)
    counts = np.zeros(8, dtype=int)
    trials = 10_000
    for _ in range(trials):
        counts[solver.run_simon_round(orc, rng).j.value] += 1
    expected = trials / 8
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    # df = 7: mean 7, sd sqrt(14)
    assert chi2 < 7 + 4 * np.sqrt(14)


def test_search_n1_needs_no_rounds():
    # n=1 admits a single candidate shift; path confirmation settles it
    rng = make_rng("n1")
    inst = simon.sample_simon(1, rng)
    orc = oracle.sample_shuffling(inst, 0, rng)
    led = DepthLedger()
    s = solver.solve_search(orc, None, rng, led)
    assert s.value == 1
    assert led.circuits_invoked == 0


def test_search_recovers_shift():
    rng = make_rng("search")
    for trial in range(200):
        inst = simon.sample_simon(3, rng)
        orc = oracle.sample_shuffling(inst, 2, rng)
        s = solver.solve_search(orc, None, rng)
        assert simon.verify_shift(inst, s.value)


def test_search_round_budget_is_modest():
    rng = make_rng("budget")
    used = []
    for _ in range(100):
        inst = simon.sample_simon(3, rng)
        orc = oracle.sample_shuffling(inst, 1, rng)
        led = DepthLedger()
        solver.solve_search(orc, None, rng, led)
        used.append(led.circuits_invoked)
    assert np.mean(used) <= 3 + 3


def test_search_rejects_one_to_one():
    rng = make_rng("promise")
    inst = simon.sample_one_to_one(2, rng)
    orc = oracle.sample_shuffling(inst, 0, rng)
    with pytest.raises(solver.SolverError):
        solver.solve_search(orc, None, rng)


def test_decision_correct_on_both_kinds():
    rng = make_rng("decide")
    for trial in range(40):
        inst = simon.sample_decision_instance(3, rng)
        orc = oracle.sample_shuffling(inst, 1, rng)
        got = solver.solve_decision(orc, 3 + 10, rng)
        assert got is inst.kind


def test_decision_zero_rounds_falls_back_to_exhaustion():
    # with no samples the null space is everything; path checks still decide
    rng = make_rng("zero-rounds")
    simon_inst = simon.sample_simon(3, rng)
    got = solver.solve_decision(oracle.sample_shuffling(simon_inst, 0, rng), 0, rng)
    assert got is InstanceKind.SIMON
    flat = simon.sample_one_to_one(3, rng)
    got = solver.solve_decision(oracle.sample_shuffling(flat, 0, rng), 0, rng)
    assert got is InstanceKind.ONE_TO_ONE


def test_decision_candidate_cap():
    rng = make_rng("cap")
    inst = simon.sample_simon(3, rng)
    orc = oracle.sample_shuffling(inst, 0, rng)
    with pytest.raises(solver.SolverError):
        solver.solve_decision(orc, 0, rng, candidate_cap=3)


def test_ledger_accumulates_across_rounds():
    rng = make_rng("acct")
    inst = simon.sample_simon(2, rng)
    orc = oracle.sample_shuffling(inst, 1, rng)
    led = DepthLedger()
    for k in range(1, 4):
        solver.run_simon_round(orc, rng, led)
        assert led.circuits_invoked == k
        assert led.oracle_layers_total == k * 3
