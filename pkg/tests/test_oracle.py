import json

import numpy as np
import pytest

from conftest import make_rng
from shufflesim.ledger import DepthLedger
from shufflesim.oracle import (
    BOT,
    IncrementalInjection,
    LazyShufflingOracle,
    OracleError,
    sample_shuffling,
)
from shufflesim.simon import sample_one_to_one, sample_simon


def _oracle(n, d, seed, backend="materialized", **kw):
    rng = make_rng("oracle", seed)
    inst = sample_simon(n, rng)
    return inst, sample_shuffling(inst, d, rng, backend=backend, **kw)


def test_d0_is_the_bare_instance():
    inst, o = _oracle(2, 0, 1)
    for x in range(4):
        assert o.query_point(0, x) == inst.value(x)
    # rest of the 2n-bit domain answers bot
    for x in range(4, 16):
        assert o.query_point(0, x) is BOT


def test_levels_are_injective():
    _, o = _oracle(2, 1, 2)
    values = [o.query_point(0, x) for x in range(64)]
    assert len(set(values)) == 64


def test_chain_composes_to_instance():
    for backend in ("materialized", "lazy"):
        inst, o = _oracle(2, 1, 3, backend=backend)
        for x in range(4):
            mid = o.query_point(0, x)
            assert o.query_point(1, mid) == inst.value(x)


def test_repeat_query_stable():
    for backend in ("materialized", "lazy"):
        _, o = _oracle(2, 2, 4, backend=backend)
        first = o.query_point(1, 77)
        for _ in range(3):
            assert o.query_point(1, 77) == first


def test_path_query_d0():
    inst, o = _oracle(3, 0, 5)
    p = o.query_path(6)
    assert p.points == (6, inst.value(6))
    assert p.x0 == 6 and p.final == inst.value(6)


def test_path_matches_pointwise_queries():
    for backend in ("materialized", "lazy"):
        inst, o = _oracle(2, 2, 6, backend=backend)
        p = o.query_path(3)
        for level in range(3):
            assert o.query_point(level, p.points[level]) == p.points[level + 1]
        assert p.final == inst.value(3)


def test_level_sets_structure():
    inst, o = _oracle(2, 1, 7)
    sets = o.level_sets()
    assert sets.at(0) == frozenset(range(4))
    assert len(sets.at(1)) == 4
    assert sets.at(1) == frozenset(o.query_point(0, x) for x in range(4))
    for y in sets.at(1):
        assert o.query_point(1, y) is not BOT
    # off the level set the core is undefined
    off = next(iter(set(range(64)) - sets.at(1)))
    assert o.query_point(1, off) is BOT


def test_lazy_has_no_level_sets():
    _, o = _oracle(2, 1, 8, backend="lazy")
    with pytest.raises(OracleError):
        o.level_sets()


def test_materialized_cap_enforced():
    rng = make_rng("oracle", 9)
    inst = sample_simon(6, rng)
    with pytest.raises(OracleError):
        sample_shuffling(inst, 3, rng, backend="materialized")  # 30 bits > 20


def test_answer_encoding_roundtrip():
    _, o = _oracle(2, 1, 10)
    for level, value in ((0, 5), (1, 3)):
        assert o.decode_answer(level, o.encode_answer(level, BOT)) is BOT
        assert o.decode_answer(level, o.encode_answer(level, value)) == value
        assert o.encode_answer(level, BOT) == 1 << o.value_bits(level)
    assert o.value_bits(0) == 6 and o.value_bits(1) == 2
    assert o.answer_bits(0) == 7 and o.answer_bits(1) == 3


def test_ledger_counts_classical_and_core():
    _, o = _oracle(2, 1, 11)
    led = DepthLedger()
    o.query_path(0, led)
    assert led.classical_queries == 1 and led.core_evaluations == 1
    y = o.query_point(0, 0, led)
    assert led.classical_queries == 2 and led.core_evaluations == 1
    o.query_point(1, y, led)  # on the level set: core evaluation
    assert led.core_evaluations == 2


def test_path_query_cost_knob():
    inst, _ = _oracle(2, 1, 12)
    rng = make_rng("oracle", 12, "b")
    o = sample_shuffling(inst, 1, rng, path_query_cost=3)
    led = DepthLedger()
    o.query_path(1, led)
    assert led.classical_queries == 3


def test_transcript_serializes():
    rng = make_rng("oracle", 13)
    inst = sample_simon(2, rng)
    o = sample_shuffling(inst, 1, rng, record_transcript=True)
    o.query_path(2)
    o.query_point(1, 63)
    text = json.dumps(o.transcript)
    entries = json.loads(text)
    assert entries[0]["level"] == 0 and entries[0]["input"] == 2
    assert all(e["answer"] == "bot" or isinstance(e["answer"], int) for e in entries)


def test_domain_guards():
    _, o = _oracle(2, 1, 14)
    with pytest.raises(OracleError):
        o.query_point(2, 0)
    with pytest.raises(OracleError):
        o.query_point(0, 64)
    with pytest.raises(OracleError):
        o.query_path(4)  # path roots live in the embedded domain


# -- incremental injection ---------------------------------------------------


def test_injection_single_point():
    inj = IncrementalInjection(1, make_rng("inj", 0))
    assert inj.reveal(0) == 0


def test_injection_first_reveal_uniform():
    counts = np.zeros(8, dtype=int)
    for t in range(10_000):
        counts[IncrementalInjection(8, make_rng("inj", 1, t)).reveal(3)] += 1
    chi2 = float(np.sum((counts - 1250.0) ** 2 / 1250.0))
    assert chi2 < 7 + 4 * np.sqrt(14)  # df = 7


def test_injection_completes_to_permutation():
    inj = IncrementalInjection(8, make_rng("inj", 2))
    images = [inj.reveal(x) for x in range(8)]
    assert sorted(images) == list(range(8))


# -- backend equivalence -----------------------------------------------------


def test_backends_agree_in_distribution():
    """Same instance, same query sequence: f_0 probe at 5, then a core probe
    at 33 whose membership the lazy backend must sample at odds 4/63."""
    inst = sample_simon(2, make_rng("equiv", "inst"))
    runs = 10_000
    stats = {}
    for backend in ("materialized", "lazy"):
        first = np.zeros(64, dtype=int)
        joint = np.zeros((8, 3), dtype=int)
        for t in range(runs):
            o = sample_shuffling(inst, 1, make_rng("equiv", backend, t), backend=backend)
            y = o.query_point(0, 5)
            core = o.query_point(1, 33)
            first[y] += 1
            bucket = 0 if core is BOT else (1 if core == min(inst.table) else 2)
            joint[y % 8, bucket] += 1
        stats[backend] = (first, joint)
        # first reveal is uniform over the 64-point codomain
        chi2 = float(np.sum((first - runs / 64) ** 2 / (runs / 64)))
        assert chi2 < 63 + 4 * np.sqrt(126), backend
        # core outcome: bot with 1 - 1/16, each table value with 1/32
        outcome = joint.sum(axis=0)
        expected = np.array([runs * 15 / 16, runs / 32, runs / 32])
        chi2 = float(np.sum((outcome - expected) ** 2 / expected))
        assert chi2 < 2 + 4 * np.sqrt(4), backend  # df = 2
    # two-sample comparison over the joint cells
    a, b = stats["materialized"][1].ravel(), stats["lazy"][1].ravel()
    keep = (a + b) > 0
    chi2 = float(np.sum((a[keep] - b[keep]) ** 2 / (a[keep] + b[keep])))
    df = int(keep.sum()) - 1
    assert chi2 < df + 4 * np.sqrt(2 * df)


# -- lazy backend exactness guards -------------------------------------------


def test_lazy_membership_refusal_then_off_chain_probe_errors():
    _, o = _oracle(2, 1, 15, backend="lazy")
    banned = None
    for w in range(40, 64):
        if o.query_point(1, w) is BOT:
            banned = w
            break
    assert banned is not None
    with pytest.raises(OracleError):
        o.query_point(0, 17)  # off-chain reveal is no longer exact


def test_lazy_on_chain_queries_fine_after_refusal():
    inst, o = _oracle(2, 1, 16, backend="lazy")
    for w in range(40, 64):
        if o.query_point(1, w) is BOT:
            break
    # path queries stay exact: they only touch chain points
    for x in range(4):
        assert o.query_path(x).final == inst.value(x)


def test_lazy_weave_probe_detected():
    _, o = _oracle(2, 2, 17, backend="lazy")
    y = o.query_point(1, 17)  # mid-level probe; 17 is not an f_0 image
    z = (y + 1) % 256
    with pytest.raises(OracleError):
        o.query_point(2, z)


def test_lazy_one_to_one_paths():
    rng = make_rng("oracle", 18)
    inst = sample_one_to_one(3, rng)
    o = sample_shuffling(inst, 2, rng, backend="lazy")
    finals = {o.query_path(x).final for x in range(8)}
    assert len(finals) == 8
