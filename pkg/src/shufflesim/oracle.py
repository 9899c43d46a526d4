"""The d-shuffling oracle: d uniform injections stacked on top of a hidden
function, with materialized and lazily-sampled backends.

A depth-d shuffling of an instance f on n bits acts on the domain Z_2^((d+2)n).
Levels 0..d-1 are uniform random permutations f_0..f_{d-1}. Level d is the
core function: on the image S_d of the embedded Z_2^n under f_{d-1} o ... o f_0
it returns the instance value of the originating root, elsewhere bot. Points
x in Z_2^n embed as zero-padded integers, so the embedding is the identity on
ints. Answers carry a bot flag bit above the value bits at every level, which
keeps base and shadowed applications on one register layout.

Both backends expose the same query surface and the same answer distribution
on identical query sequences. The lazy backend reveals injections on demand
and keeps every committed fact consistent: revealed pairs f_i(x) = y, chain
prefixes chased from embedded roots, and membership refutations recorded when
a core query off the revealed chains is answered bot. Query patterns whose
exact conditional law would require reweighting against those refutations
(off-chain reveals or interleaved mid-level probes after a refutation) raise
OracleError instead of answering from a biased distribution; no supported
algorithm produces them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ledger import DepthLedger
from .simon import SimonInstance


class OracleError(Exception):
    pass


class _BotType:
    _instance = None

    def __new__(cls) -> "_BotType":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "bot"


BOT = _BotType()

MATERIALIZED_CAP_BITS = 20


@dataclass(frozen=True)
class Path:
    """One full chase x_0 -> f_0(x_0) -> ... -> f(x_0); points[0] is the
    embedded start, points[-1] the n-bit instance value."""

    points: tuple[int, ...]

    @property
    def x0(self) -> int:
        return self.points[0]

    @property
    def final(self) -> int:
        return self.points[-1]


@dataclass(frozen=True)
class LevelSets:
    """S_0..S_d: the embedded domain and its images down the shuffle."""

    sets: tuple[frozenset[int], ...]

    def at(self, j: int) -> frozenset[int]:
        return self.sets[j]


class IncrementalInjection:
    """Uniform random injection on [0, size), revealed point by point.

    Unrevealed images are drawn uniformly from the unused codomain (rejection
    sampling, exact), so any reveal order yields the distribution of a
    fully-sampled uniform injection restricted to the queried points.
    """

    def __init__(self, size: int, rng: np.random.Generator) -> None:
        if size < 1:
            raise ValueError(f"size must be positive, got {size}")
        self.size = size
        self._rng = rng
        self._fwd: dict[int, int] = {}
        self._rev: dict[int, int] = {}

    def known(self, x: int) -> bool:
        return x in self._fwd

    def reveal(self, x: int, reject=None) -> int:
        if not 0 <= x < self.size:
            raise OracleError(f"point {x} outside domain of size {self.size}")
        if x in self._fwd:
            return self._fwd[x]
        if len(self._fwd) >= self.size:
            raise OracleError("injection exhausted")
        while True:
            y = _draw_uniform(self._rng, self.size)
            if y in self._rev:
                continue
            if reject is not None and reject(y):
                continue
            break
        self.force(x, y)
        return y

    def force(self, x: int, y: int) -> None:
        # Commit a pair decided by an external conditional-sampling step.
        if x in self._fwd or y in self._rev:
            raise OracleError("pair conflicts with revealed injection state")
        self._fwd[x] = y
        self._rev[y] = x

    def is_image(self, y: int) -> bool:
        return y in self._rev

    def preimage(self, y: int) -> int:
        return self._rev[y]

    def image_count(self) -> int:
        return len(self._rev)

    def revealed_sources(self):
        return self._fwd.keys()


def _draw_uniform(rng: np.random.Generator, size: int) -> int:
    if size <= 1 << 62:
        return int(rng.integers(size))
    # Wide domains exceed the generator's integer range; sizes here are powers
    # of two, so masked random bytes stay exactly uniform.
    if size & (size - 1):
        raise OracleError(f"wide domain size {size} must be a power of two")
    nbytes = ((size - 1).bit_length() + 7) // 8
    return int.from_bytes(rng.bytes(nbytes), "little") & (size - 1)


class ShufflingOracle:
    """Shared query surface for both backends."""

    def __init__(
        self,
        instance: SimonInstance,
        d: int,
        path_query_cost: int | None = None,
        record_transcript: bool = False,
    ) -> None:
        if d < 0:
            raise ValueError(f"depth must be nonnegative, got {d}")
        self.instance = instance
        self.n = instance.n
        self.d = d
        self.domain_bits = (d + 2) * instance.n
        self.domain_size = 1 << self.domain_bits
        self.path_query_cost = path_query_cost if path_query_cost is not None else 1
        self.transcript: list[dict] | None = [] if record_transcript else None

    def value_bits(self, level: int) -> int:
        self._check_level(level)
        return self.domain_bits if level < self.d else self.n

    def answer_bits(self, level: int) -> int:
        return self.value_bits(level) + 1

    def encode_answer(self, level: int, value) -> int:
        if value is BOT:
            return 1 << self.value_bits(level)
        return int(value)

    def decode_answer(self, level: int, encoded: int):
        if encoded >> self.value_bits(level):
            return BOT
        return encoded

    def query_point(self, level: int, x: int, ledger: DepthLedger | None = None):
        """Classical query: the level's function value, BOT off the core's
        domain at level d."""
        self._check_level(level)
        self._check_point(x)
        answer = self._answer(level, x)
        if ledger is not None:
            ledger.record_classical()
            if level == self.d and answer is not BOT:
                ledger.record_core()
        self._record(level, x, answer)
        return answer

    def values_at(self, level: int, xs, ledger: DepthLedger | None = None) -> list[int]:
        """Bulk answers for superposed application, already flag-encoded.

        Does not count classical queries; the caller accounts for the oracle
        layer. Core evaluations are still tallied per answered point.
        """
        self._check_level(level)
        answers = []
        core_hits = 0
        for x in xs:
            self._check_point(x)
            a = self._answer(level, x)
            if level == self.d and a is not BOT:
                core_hits += 1
            answers.append(self.encode_answer(level, a))
        if ledger is not None and core_hits:
            ledger.record_core(core_hits)
        return answers

    def query_path(self, x0: int, ledger: DepthLedger | None = None) -> Path:
        """Chase the full chain from an embedded root to its instance value."""
        if not 0 <= x0 < (1 << self.n):
            raise OracleError(f"path queries start in the embedded domain, got {x0}")
        points = [x0]
        for level in range(self.d + 1):
            answer = self._answer(level, points[-1])
            if answer is BOT:
                raise OracleError("path left the core's domain; backend state is inconsistent")
            self._record(level, points[-1], answer)
            points.append(int(answer))
        if ledger is not None:
            ledger.record_classical(self.path_query_cost)
            ledger.record_core()
        return Path(tuple(points))

    def level_sets(self) -> LevelSets:
        raise OracleError("level sets require the materialized backend")

    def _answer(self, level: int, x: int):
        raise NotImplementedError

    def _check_level(self, level: int) -> None:
        if not 0 <= level <= self.d:
            raise OracleError(f"level {level} outside 0..{self.d}")

    def _check_point(self, x: int) -> None:
        if not 0 <= x < self.domain_size:
            raise OracleError(f"point {x} outside the {self.domain_bits}-bit domain")

    def _record(self, level: int, x: int, answer) -> None:
        if self.transcript is not None:
            self.transcript.append(
                {"level": level, "input": int(x), "answer": "bot" if answer is BOT else int(answer)}
            )


class MaterializedShufflingOracle(ShufflingOracle):
    """Backend with fully sampled permutation tables; domain capped to keep
    the tables in memory."""

    def __init__(
        self,
        instance: SimonInstance,
        d: int,
        rng: np.random.Generator,
        materialized_cap: int = MATERIALIZED_CAP_BITS,
        **kwargs,
    ) -> None:
        super().__init__(instance, d, **kwargs)
        if self.domain_bits > materialized_cap:
            raise OracleError(
                f"(d+2)n = {self.domain_bits} bits exceeds the materialized cap "
                f"of {materialized_cap}; use the lazy backend"
            )
        size = self.domain_size
        self.tables = [rng.permutation(size).astype(np.int64) for _ in range(d)]
        points = np.arange(1 << self.n, dtype=np.int64)
        self._level_points = [points]
        for table in self.tables:
            points = table[points]
            self._level_points.append(points)
        self._core_table = np.full(size, -1, dtype=np.int64)
        self._core_table[self._level_points[-1]] = instance.table

    def _answer(self, level: int, x: int):
        if level < self.d:
            return int(self.tables[level][x])
        v = self._core_table[x]
        return BOT if v < 0 else int(v)

    def level_sets(self) -> LevelSets:
        return LevelSets(tuple(frozenset(int(p) for p in pts) for pts in self._level_points))


class LazyShufflingOracle(ShufflingOracle):
    """Backend that reveals the injections on demand."""

    def __init__(self, instance: SimonInstance, d: int, rng: np.random.Generator, **kwargs) -> None:
        super().__init__(instance, d, **kwargs)
        self._rng = rng
        self._levels = [IncrementalInjection(self.domain_size, rng) for _ in range(d)]
        # Deepest revealed chain point per root; roots default to (0, root).
        self._frontier: dict[int, tuple[int, int]] = {}
        # Chain membership of revealed points: (level, point) -> root.
        self._chain_root: dict[tuple[int, int], int] = {}
        # Points committed to lie outside S_j, keyed by level j >= 1.
        self._banned: dict[int, set[int]] = {j: set() for j in range(1, d + 1)}

    # -- shared plumbing ---------------------------------------------------

    def _answer(self, level: int, x: int):
        if level < self.d:
            return self._reveal(level, x)
        return self._resolve_core(x)

    def _frontier_of(self, root: int) -> tuple[int, int]:
        return self._frontier.get(root, (0, root))

    def _root_at(self, level: int, point: int) -> int | None:
        if level == 0:
            return point if point < (1 << self.n) else None
        return self._chain_root.get((level, point))

    def _bans_active(self) -> bool:
        return any(self._banned[j] for j in self._banned)

    # -- forward reveals ---------------------------------------------------

    def _reveal(self, level: int, x: int) -> int:
        inj = self._levels[level]
        if inj.known(x):
            return inj.reveal(x)
        on_chain = self._root_at(level, x) is not None
        if not on_chain and self._bans_active():
            # An off-chain reveal competes with refuted slots whose exact
            # conditional weights depend on every open chain; answering
            # uniformly here would skew the joint law.
            raise OracleError(
                "off-chain reveal after a membership refutation is outside the "
                "lazy backend's exact domain; use the materialized backend"
            )
        reject = (lambda y: self._closure_hits_ban(y, level + 1)) if on_chain else None
        y = inj.reveal(x, reject=reject)
        if on_chain:
            self._extend_chains(level, x)
        return y

    def _closure_hits_ban(self, point: int, level: int) -> bool:
        # Follow already-revealed links forward; True if the walk meets a
        # membership refutation, making `point` unusable as a chain point.
        while True:
            if 1 <= level <= self.d and point in self._banned[level]:
                return True
            if level >= self.d or not self._levels[level].known(point):
                return False
            point = self._levels[level].reveal(point)
            level += 1

    def _extend_chains(self, level: int, x: int) -> None:
        root = self._root_at(level, x)
        if root is None:
            return
        lvl, pt = self._frontier_of(root)
        if (lvl, pt) != (level, x):
            return
        while lvl < self.d and self._levels[lvl].known(pt):
            pt = self._levels[lvl].reveal(pt)
            lvl += 1
            self._chain_root[(lvl, pt)] = root
        self._frontier[root] = (lvl, pt)

    # -- core resolution ---------------------------------------------------

    def _resolve_core(self, x: int):
        # Walk back through revealed links. The walk ends at level 0 (exact
        # answer), at a refuted point (bot), or at an unrevealed link, where
        # membership is sampled at its exact conditional probability.
        level, point = self.d, x
        while True:
            if level >= 1 and point in self._banned[level]:
                return BOT
            if level == 0 or not self._levels[level - 1].is_image(point):
                break
            point = self._levels[level - 1].preimage(point)
            level -= 1
        if level == 0:
            if point < (1 << self.n):
                self._extend_chains(0, point)
                return self.instance.value(point)
            return BOT
        self._check_unweaved(level)
        open_roots = [r for r in range(1 << self.n) if self._frontier_of(r)[0] < level]
        taken = self._levels[level - 1].image_count()
        excluded = len(self._excluded_images(level))
        available = self.domain_size - taken - excluded
        if open_roots and self._rng.random() * available < len(open_roots):
            chosen = open_roots[int(self._rng.integers(len(open_roots)))]
            self._route_root_through(chosen, level, point)
            return self._chase_root_to_core(chosen)
        self._banned[level].add(point)
        return BOT

    def _check_unweaved(self, level: int) -> None:
        # The sampled membership probability treats the open chains' arrival
        # points at `level` as exchangeable over the unused images, which
        # holds only while no unrevealed prefix can merge into a mid-level
        # revealed link. Stray probes at non-image points break that.
        for t in range(1, level):
            below = self._levels[t - 1]
            for y in self._levels[t].revealed_sources():
                if not below.is_image(y):
                    raise OracleError(
                        "core membership at this point is entangled with "
                        "mid-level probe reveals; use the materialized backend"
                    )

    def _excluded_images(self, level: int) -> set[int]:
        # Unused level-(level-1) images that revealed links connect to a
        # refuted point at or above `level`; open chains cannot land there.
        out = set()
        for t in range(level, self.d + 1):
            for b in self._banned[t]:
                pt, lvl = b, t
                while lvl > level and self._levels[lvl - 1].is_image(pt):
                    pt = self._levels[lvl - 1].preimage(pt)
                    lvl -= 1
                if lvl == level and not self._levels[level - 1].is_image(pt):
                    out.add(pt)
        return out

    def _route_root_through(self, root: int, level: int, point: int) -> None:
        # Commit `root`'s chain to pass through `point` at `level`: fresh
        # uniform intermediates up to level-1, then the forced final link.
        lvl, pt = self._frontier_of(root)
        while lvl < level - 1:
            self._reveal(lvl, pt)
            lvl, pt = self._frontier_of(root)
        if lvl != level - 1:
            raise OracleError("chain routing overshot its target level")
        self._levels[level - 1].force(pt, point)
        self._extend_chains(level - 1, pt)

    def _chase_root_to_core(self, root: int) -> int:
        lvl, pt = self._frontier_of(root)
        while lvl < self.d:
            self._reveal(lvl, pt)
            lvl, pt = self._frontier_of(root)
        return self.instance.value(root)


def sample_shuffling(
    instance: SimonInstance,
    d: int,
    rng: np.random.Generator,
    backend: str = "materialized",
    materialized_cap: int = MATERIALIZED_CAP_BITS,
    path_query_cost: int | None = None,
    record_transcript: bool = False,
) -> ShufflingOracle:
    """Sample a depth-d shuffling of the instance, choosing the backend."""
    kwargs = {"path_query_cost": path_query_cost, "record_transcript": record_transcript}
    if backend == "materialized":
        return MaterializedShufflingOracle(
            instance, d, rng, materialized_cap=materialized_cap, **kwargs
        )
    if backend == "lazy":
        return LazyShufflingOracle(instance, d, rng, **kwargs)
    raise ValueError(f"unknown backend {backend!r}")
