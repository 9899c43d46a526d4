"""Sparse structured-state simulator and distance measures.

States live on a named register layout and are stored as dicts mapping
register-value tuples to amplitudes; the solver's access pattern keeps the
support polynomial, so no dense 2^W vector is ever built except for the
explicit conversion helpers. Oracle answers are XORed into target registers
(a basis permutation), Hadamard layers act on one register, and measurement
collapses one register by the Born rule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ledger import DepthLedger
from .oracle import ShufflingOracle

PRUNE_TOL = 1e-12
NORM_TOL = 1e-9
DENSE_WIDTH_CAP = 20
SUPPORT_CAP = 1 << 12


class SimulatorError(Exception):
    pass


@dataclass(frozen=True)
class RegisterLayout:
    """Ordered named registers; register 0 occupies the least significant
    bits of the packed dense index."""

    names: tuple[str, ...]
    widths: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.names) != len(self.widths):
            raise ValueError("names and widths must have equal length")
        if len(set(self.names)) != len(self.names):
            raise ValueError(f"duplicate register names in {self.names}")
        for name, w in zip(self.names, self.widths):
            if w < 1:
                raise ValueError(f"register {name!r} must have positive width, got {w}")

    @classmethod
    def of(cls, **widths: int) -> "RegisterLayout":
        return cls(tuple(widths), tuple(widths.values()))

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise SimulatorError(f"no register named {name!r} in {self.names}") from None

    def width(self, name: str) -> int:
        return self.widths[self.index(name)]

    def offset(self, name: str) -> int:
        return sum(self.widths[: self.index(name)])

    @property
    def total_width(self) -> int:
        return sum(self.widths)


class SparseState:
    """Normalized pure state over a layout, sparse in the computational basis."""

    __slots__ = ("layout", "amps")

    def __init__(self, layout: RegisterLayout, amps: dict[tuple[int, ...], complex]):
        self.layout = layout
        self.amps = {cfg: complex(a) for cfg, a in amps.items() if abs(a) > PRUNE_TOL}
        for cfg in self.amps:
            if len(cfg) != len(layout.names):
                raise SimulatorError(f"config {cfg} does not match layout {layout.names}")
            for v, w in zip(cfg, layout.widths):
                if not 0 <= v < (1 << w):
                    raise SimulatorError(f"config {cfg} out of range for widths {layout.widths}")
        norm = self.norm()
        if abs(norm - 1.0) > NORM_TOL:
            raise SimulatorError(f"state norm {norm} drifted beyond {NORM_TOL}")

    def norm(self) -> float:
        return float(np.sqrt(sum(abs(a) ** 2 for a in self.amps.values())))

    @property
    def support_size(self) -> int:
        return len(self.amps)

    def amplitude(self, values: dict[str, int]) -> complex:
        if set(values) != set(self.layout.names):
            raise SimulatorError(f"amplitude lookup must name every register in {self.layout.names}")
        cfg = tuple(values[name] for name in self.layout.names)
        return self.amps.get(cfg, 0j)

    def register_values(self, name: str) -> set[int]:
        idx = self.layout.index(name)
        return {cfg[idx] for cfg in self.amps}


def basis_state(layout: RegisterLayout, values: dict[str, int] | None = None) -> SparseState:
    values = values or {}
    cfg = tuple(values.get(name, 0) for name in layout.names)
    return SparseState(layout, {cfg: 1.0 + 0j})


def init_uniform(layout: RegisterLayout, register: str) -> SparseState:
    """Uniform superposition on one register, all others zero."""
    idx = layout.index(register)
    w = layout.width(register)
    amp = 2 ** (-w / 2)
    zeros = [0] * len(layout.names)
    amps = {}
    for v in range(1 << w):
        zeros[idx] = v
        amps[tuple(zeros)] = amp
    return SparseState(layout, amps)


QuerySpec = tuple[int, str, str]


def _validate_query_spec(state: SparseState, oracle: ShufflingOracle, query_spec) -> list[tuple[int, int, int]]:
    if not query_spec:
        raise SimulatorError("query spec must contain at least one (level, in, target) entry")
    layout = state.layout
    resolved = []
    targets = set()
    for level, in_reg, target_reg in query_spec:
        i_idx = layout.index(in_reg)
        t_idx = layout.index(target_reg)
        if layout.widths[i_idx] > oracle.domain_bits + 1:
            raise SimulatorError(
                f"input register {in_reg!r} is wider than the {oracle.domain_bits}-bit "
                "domain plus its flag bit"
            )
        want = oracle.answer_bits(level)
        if layout.widths[t_idx] != want:
            raise SimulatorError(
                f"target register {target_reg!r} has width {layout.widths[t_idx]}, "
                f"level {level} answers need {want}"
            )
        if t_idx in targets:
            raise SimulatorError(f"target register {target_reg!r} used twice in one layer")
        if t_idx == i_idx:
            raise SimulatorError(f"register {in_reg!r} cannot be its own query target")
        targets.add(t_idx)
        resolved.append((level, i_idx, t_idx))
    return resolved


def apply_oracle_xor(
    state: SparseState,
    oracle: ShufflingOracle,
    query_spec,
    ledger: DepthLedger | None = None,
) -> SparseState:
    """One parallel oracle layer: for every (level, in, target) entry, XOR the
    flag-encoded answer for the input register's value into the target.

    Counts as a single oracle layer on the ledger no matter how many levels
    the spec queries. Every entry reads its input register's pre-layer value
    (only the domain bits; a flag bit above them is ignored), so overlapping
    read/write registers across entries stay well defined. Unitary (an
    involution on basis states given fixed inputs), so applying the same
    layer twice restores the state.
    """
    resolved = _validate_query_spec(state, oracle, query_spec)
    mask = oracle.domain_size - 1
    answer_maps = []
    for level, i_idx, _ in resolved:
        values = sorted({cfg[i_idx] & mask for cfg in state.amps})
        answers = oracle.values_at(level, values, ledger=ledger)
        answer_maps.append(dict(zip(values, answers)))
    new_amps: dict[tuple[int, ...], complex] = {}
    for cfg, amp in state.amps.items():
        out = list(cfg)
        for (level, i_idx, t_idx), amap in zip(resolved, answer_maps):
            out[t_idx] ^= amap[cfg[i_idx] & mask]
        new_amps[tuple(out)] = amp
    if ledger is not None:
        ledger.record_oracle_layer()
    return SparseState(state.layout, new_amps)


def hadamard_register(state: SparseState, register: str) -> SparseState:
    """Hadamard on every qubit of one register."""
    idx = state.layout.index(register)
    w = state.layout.width(register)
    scale = 2 ** (-w / 2)
    new_amps: dict[tuple[int, ...], complex] = {}
    for cfg, amp in state.amps.items():
        v = cfg[idx]
        base = list(cfg)
        for j in range(1 << w):
            sign = -1.0 if (v & j).bit_count() & 1 else 1.0
            base[idx] = j
            key = tuple(base)
            new_amps[key] = new_amps.get(key, 0j) + sign * scale * amp
    return SparseState(state.layout, new_amps)


def measure_register(
    state: SparseState, register: str, rng: np.random.Generator
) -> tuple[int, SparseState]:
    """Born-rule measurement of one register; returns (outcome, collapsed).

    Outcomes are enumerated in sorted order, so a fixed generator state fixes
    the outcome; re-measuring the same register is then deterministic.
    """
    idx = state.layout.index(register)
    marginal: dict[int, float] = {}
    for cfg, amp in state.amps.items():
        marginal[cfg[idx]] = marginal.get(cfg[idx], 0.0) + abs(amp) ** 2
    outcomes = sorted(marginal)
    probs = np.array([marginal[v] for v in outcomes])
    probs = probs / probs.sum()
    pick = int(np.searchsorted(np.cumsum(probs), rng.random(), side="right"))
    pick = min(pick, len(outcomes) - 1)
    outcome = outcomes[pick]
    keep = {cfg: a for cfg, a in state.amps.items() if cfg[idx] == outcome}
    scale = 1.0 / np.sqrt(sum(abs(a) ** 2 for a in keep.values()))
    return outcome, SparseState(state.layout, {c: a * scale for c, a in keep.items()})


def dense_statevector(state: SparseState, width_cap: int = DENSE_WIDTH_CAP) -> np.ndarray:
    """Pack the sparse state into a full 2^W vector (W capped)."""
    w = state.layout.total_width
    if w > width_cap:
        raise SimulatorError(f"total width {w} exceeds the dense cap of {width_cap} bits")
    vec = np.zeros(1 << w, dtype=np.complex128)
    offsets = [state.layout.offset(name) for name in state.layout.names]
    for cfg, amp in state.amps.items():
        idx = 0
        for v, off in zip(cfg, offsets):
            idx |= v << off
        vec[idx] = amp
    return vec


def state_from_dense(layout: RegisterLayout, vec: np.ndarray) -> SparseState:
    if vec.shape != (1 << layout.total_width,):
        raise SimulatorError(f"vector length {vec.shape} does not match layout width")
    amps = {}
    for idx in np.flatnonzero(np.abs(vec) > PRUNE_TOL):
        rest = int(idx)
        cfg = []
        for w in layout.widths:
            cfg.append(rest & ((1 << w) - 1))
            rest >>= w
        amps[tuple(cfg)] = complex(vec[idx])
    return SparseState(layout, amps)


@dataclass(frozen=True)
class MixedEnsemble:
    """Statistical mixture of sparse pure states on one layout."""

    components: tuple[tuple[float, SparseState], ...]

    def __post_init__(self) -> None:
        if not self.components:
            raise ValueError("ensemble needs at least one component")
        total = sum(p for p, _ in self.components)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"ensemble probabilities sum to {total}, expected 1")
        first = self.components[0][1].layout
        for _, s in self.components:
            if s.layout != first:
                raise ValueError("ensemble components must share one layout")

    @classmethod
    def pure(cls, state: SparseState) -> "MixedEnsemble":
        return cls(((1.0, state),))

    @classmethod
    def uniform(cls, states) -> "MixedEnsemble":
        states = list(states)
        p = 1.0 / len(states)
        return cls(tuple((p, s) for s in states))


def _as_ensemble(x) -> MixedEnsemble:
    if isinstance(x, SparseState):
        return MixedEnsemble.pure(x)
    if isinstance(x, MixedEnsemble):
        return x
    raise TypeError(f"expected SparseState or MixedEnsemble, got {type(x).__name__}")


def _sparse_dot(a: dict, b: dict) -> complex:
    if len(b) < len(a):
        return np.conj(_sparse_dot(b, a))
    return sum(np.conj(amp) * b[cfg] for cfg, amp in a.items() if cfg in b)


def _coords_and_weights(a: MixedEnsemble, b: MixedEnsemble, support_cap: int):
    """Exact coordinates of both ensembles' components in an orthonormal
    basis of their joint span.

    The span dimension is at most the component count, so pooled ensembles
    with wide supports stay tractable; the cap guards the quadratic cost.
    """
    vecs = [s.amps for _, s in a.components] + [s.amps for _, s in b.components]
    if len(vecs) > support_cap:
        raise SimulatorError(f"{len(vecs)} components exceed the cap of {support_cap}")
    k = len(vecs)
    union = {cfg for amps in vecs for cfg in amps}
    if k * len(union) <= 1 << 24:
        index = {cfg: i for i, cfg in enumerate(sorted(union))}
        dense = np.zeros((k, len(index)), dtype=np.complex128)
        for i, amps in enumerate(vecs):
            for cfg, amp in amps.items():
                dense[i, index[cfg]] = amp
        gram = dense @ dense.conj().T
        gram = (gram + gram.conj().T) / 2
    else:
        gram = np.empty((k, k), dtype=np.complex128)
        for i in range(k):
            for j in range(i, k):
                gram[i, j] = _sparse_dot(vecs[i], vecs[j])
                gram[j, i] = np.conj(gram[i, j])
    w, u = np.linalg.eigh(gram)
    keep = w > 1e-12
    basis = u[:, keep] / np.sqrt(w[keep])
    coords = basis.conj().T @ gram
    ka = len(a.components)
    return coords[:, :ka], coords[:, ka:]


def _density(coords: np.ndarray, probs) -> np.ndarray:
    return (coords * np.asarray(probs)) @ coords.conj().T


def _sqrtm_psd(rho: np.ndarray) -> np.ndarray:
    w, u = np.linalg.eigh((rho + rho.conj().T) / 2)
    w = np.clip(w, 0.0, None)
    # drop eigensolver noise so it cannot leak into downstream sums
    w[w < w.max(initial=0.0) * 1e-12] = 0.0
    return (u * np.sqrt(w)) @ u.conj().T


def _fidelity_once(a: MixedEnsemble, b: MixedEnsemble, support_cap: int) -> float:
    ca, cb = _coords_and_weights(a, b, support_cap)
    rho = _density(ca, [p for p, _ in a.components])
    sigma = _density(cb, [p for p, _ in b.components])
    # nuclear-norm form of Uhlmann fidelity: spurious singular values enter
    # linearly instead of through a square root, so they stay ~1e-16
    sv = np.linalg.svd(_sqrtm_psd(rho) @ _sqrtm_psd(sigma), compute_uv=False)
    return float(sv.sum())


def fidelity(a, b, support_cap: int = SUPPORT_CAP) -> float:
    """Uhlmann fidelity tr sqrt(sqrt(rho) sigma sqrt(rho)), in [0, 1].

    Averaged over both argument orders so the result is exactly symmetric;
    each one-sided evaluation already agrees to solver precision.
    """
    a, b = _as_ensemble(a), _as_ensemble(b)
    if a is b or a.components == b.components:
        # identical descriptions are the same density matrix; skipping the
        # solver keeps B(rho, rho) at exactly zero instead of sqrt(eps)
        return 1.0
    f = (_fidelity_once(a, b, support_cap) + _fidelity_once(b, a, support_cap)) / 2.0
    return min(max(f, 0.0), 1.0)


def bures_distance(a, b, support_cap: int = SUPPORT_CAP) -> float:
    """B(rho, sigma) = sqrt(2 - 2 F); upper-bounds trace distance."""
    f = fidelity(a, b, support_cap=support_cap)
    return float(np.sqrt(max(0.0, 2.0 - 2.0 * f)))


def trace_distance(a, b, support_cap: int = SUPPORT_CAP) -> float:
    """Half the trace norm of rho - sigma."""
    a, b = _as_ensemble(a), _as_ensemble(b)
    ca, cb = _coords_and_weights(a, b, support_cap)
    rho = _density(ca, [p for p, _ in a.components])
    sigma = _density(cb, [p for p, _ in b.components])
    w = np.linalg.eigvalsh(rho - sigma)
    return float(np.abs(w).sum() / 2.0)
