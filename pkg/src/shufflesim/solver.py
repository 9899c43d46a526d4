"""Shallow quantum solver for the shuffled Simon problem.

One round chases the shuffle forward through d+1 oracle layers, measures the
core answer register, uncomputes the d intermediate registers in reverse, and
Fourier-samples the input register. Every sampled j is orthogonal to the
hidden shift on Simon instances and uniform on one-to-one instances, so GF(2)
elimination over collected rounds recovers the shift or certifies full rank.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from . import qsim
from .gf2 import BitMatrix, BitVector, null_space_basis
from .ledger import DepthLedger
from .oracle import BOT, ShufflingOracle
from .simon import InstanceKind


class SolverError(Exception):
    pass


@dataclass(frozen=True)
class RoundResult:
    """One Fourier sample: the measured j, the core value observed mid-round,
    and the depth accounting for the round's circuit."""

    j: BitVector
    core_value: int | None
    oracle_layers: int
    ledger: DepthLedger


def solver_layout(n: int, d: int) -> qsim.RegisterLayout:
    """Q holds the n-bit input; N0..Nd hold the per-level answers (with their
    bot flag bits), the last being the n+1-bit core answer."""
    names = ["Q"] + [f"N{i}" for i in range(d + 1)]
    widths = [n] + [(d + 2) * n + 1] * d + [n + 1]
    return qsim.RegisterLayout(tuple(names), tuple(widths))


def _input_register(i: int) -> str:
    return "Q" if i == 0 else f"N{i - 1}"


def run_simon_round(
    oracle: ShufflingOracle,
    rng: np.random.Generator,
    ledger: DepthLedger | None = None,
    uncompute: str = "sequential",
) -> RoundResult:
    """One solver round; exactly 2d+1 oracle layers with the default
    sequential uncompute, d+2 with the single simultaneous-read layer."""
    if uncompute not in ("sequential", "parallel"):
        raise ValueError(f"unknown uncompute schedule {uncompute!r}")
    n, d = oracle.n, oracle.d
    ledger = ledger if ledger is not None else DepthLedger()
    ledger.record_circuit()
    layout = solver_layout(n, d)
    state = qsim.init_uniform(layout, "Q")
    for i in range(d + 1):
        state = qsim.apply_oracle_xor(state, oracle, [(i, _input_register(i), f"N{i}")], ledger)
    raw_core, state = qsim.measure_register(state, f"N{d}", rng)
    core = oracle.decode_answer(d, raw_core)
    if uncompute == "sequential":
        for i in reversed(range(d)):
            state = qsim.apply_oracle_xor(state, oracle, [(i, _input_register(i), f"N{i}")], ledger)
    elif d > 0:
        spec = [(i, _input_register(i), f"N{i}") for i in reversed(range(d))]
        state = qsim.apply_oracle_xor(state, oracle, spec, ledger)
    for i in range(d):
        leftover = state.register_values(f"N{i}")
        if leftover != {0}:
            raise SolverError(f"uncompute left N{i} holding {sorted(leftover)}")
    state = qsim.hadamard_register(state, "Q")
    j, _ = qsim.measure_register(state, "Q", rng)
    return RoundResult(
        j=BitVector(j, n),
        core_value=None if core is BOT else int(core),
        oracle_layers=ledger.oracle_layers_current_circuit,
        ledger=ledger.snapshot(),
    )


def _null_vectors(rows: list[BitVector], n: int) -> list[BitVector]:
    matrix = BitMatrix(tuple(rows), n)
    return null_space_basis(matrix)


def solve_search(
    oracle: ShufflingOracle,
    max_rounds: int | None,
    rng: np.random.Generator,
    ledger: DepthLedger | None = None,
) -> BitVector:
    """Recover the hidden shift of a Simon instance.

    Rounds accumulate until the sample matrix has rank n-1; the unique
    nonzero null vector is then confirmed against two classical path queries,
    and sampling resumes on a failed confirmation.
    """
    n = oracle.n
    if max_rounds is None:
        max_rounds = 4 * n + 16
    ledger = ledger if ledger is not None else DepthLedger()
    rows: list[BitVector] = []
    rounds = 0
    while True:
        basis = _null_vectors(rows, n)
        if not basis:
            raise SolverError("sample matrix reached full rank; instance violates the promise")
        if len(basis) == 1:
            candidate = basis[0]
            base = oracle.query_path(0, ledger)
            probe = oracle.query_path(candidate.value, ledger)
            if base.final == probe.final:
                return candidate
        if rounds >= max_rounds:
            raise SolverError(f"rank deficiency persists after {max_rounds} rounds")
        rows.append(run_simon_round(oracle, rng, ledger).j)
        rounds += 1


def solve_decision(
    oracle: ShufflingOracle,
    rounds: int,
    rng: np.random.Generator,
    ledger: DepthLedger | None = None,
    candidate_cap: int = 4096,
) -> InstanceKind:
    """Decide Simon versus one-to-one.

    Full-rank samples certify one-to-one outright. Otherwise every nonzero
    null-space vector is path-checked (cheapest first); an equal pair of path
    endpoints is conclusive for Simon, since injective instances admit none.
    """
    n = oracle.n
    ledger = ledger if ledger is not None else DepthLedger()
    rows = [run_simon_round(oracle, rng, ledger).j for _ in range(rounds)]
    basis = _null_vectors(rows, n)
    if not basis:
        return InstanceKind.ONE_TO_ONE
    if (1 << len(basis)) - 1 > candidate_cap:
        raise SolverError(
            f"{(1 << len(basis)) - 1} null-space candidates exceed the cap of "
            f"{candidate_cap}; collect more rounds"
        )
    candidates = set()
    for r in range(1, len(basis) + 1):
        for combo in combinations(basis, r):
            v = 0
            for b in combo:
                v ^= b.value
            if v:
                candidates.add(v)
    base = oracle.query_path(0, ledger).final
    for v in sorted(candidates):
        if oracle.query_path(v, ledger).final == base:
            return InstanceKind.SIMON
    return InstanceKind.ONE_TO_ONE
