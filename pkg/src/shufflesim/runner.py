"""Command line experiment runner.

Subcommands sample fresh problem instances per trial, run a strategy against
them, and emit aggregate rows as JSON (canonical: sorted keys) or CSV with a
fixed header. Reruns with the same seed produce byte-identical files, serial
or parallel: every trial draws from its own seed stream keyed by
(seed, cell index, trial index), results aggregate in trial order, and the
seconds column stays 0.0 unless timing is requested.

Defaults can be overridden by environment variables SHUFFLESIM_SEED,
SHUFFLESIM_TRIALS, SHUFFLESIM_BACKEND, SHUFFLESIM_JOBS; command line flags
win over the environment.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .hiding import (
    check_find_bound,
    check_hiding_bound,
    estimate_membership,
    sample_hidden_sets,
)
from .ledger import DepthLedger, DepthViolation
from .oracle import BOT, OracleError, sample_shuffling
from .qsim import init_uniform
from .schemes import (
    SchemeBudget,
    classical_collision_adversary,
    run_d_cq,
    run_d_qc,
    solver_cq_decision_adversary,
    solver_qc_decision_adversary,
    truncated_quantum_adversary,
    wilson_interval,
)
from .simon import sample_decision_instance, sample_one_to_one, sample_simon, verify_shift
from .solver import SolverError, solve_decision, solve_search, solver_layout

CSV_HEADER = [
    "experiment",
    "n",
    "d",
    "adversary",
    "trials",
    "success",
    "ci_lo",
    "ci_hi",
    "oracle_layers_mean",
    "classical_queries_mean",
    "seconds",
]


@dataclass(frozen=True)
class ResultRecord:
    experiment: str
    n: int
    d: int
    adversary: str
    trials: int
    success: float
    ci_lo: float
    ci_hi: float
    oracle_layers_mean: float
    classical_queries_mean: float
    seconds: float


@dataclass(frozen=True)
class _Cell:
    experiment: str
    n: int
    d: int
    adversary: str
    trial: str
    backend: str
    params: tuple


# -- per-trial work, module level so worker processes can import it --------


def _layers_per_circuit(ledger: DepthLedger) -> float:
    if ledger.circuits_invoked == 0:
        return 0.0
    return ledger.oracle_layers_total / ledger.circuits_invoked


def _trial_solve(n, d, backend, params, rng):
    instance = sample_simon(n, rng)
    oracle = sample_shuffling(instance, d, rng, backend=backend)
    ledger = DepthLedger()
    try:
        found = solve_search(oracle, params.get("max_rounds"), rng, ledger)
        ok = verify_shift(instance, found.value)
    except (SolverError, OracleError):
        ok = False
    return ok, _layers_per_circuit(ledger), ledger.classical_queries


def _trial_decision(n, d, backend, params, rng):
    instance = sample_decision_instance(n, rng)
    oracle = sample_shuffling(instance, d, rng, backend=backend)
    ledger = DepthLedger()
    guess = solve_decision(oracle, params["rounds"], rng, ledger)
    return guess is instance.kind, _layers_per_circuit(ledger), ledger.classical_queries


def _trial_classical(n, d, backend, params, rng):
    instance = sample_simon(n, rng)
    oracle = sample_shuffling(instance, d, rng, backend=backend)
    ledger = DepthLedger()
    guess = classical_collision_adversary(oracle, params["q"], rng, ledger)
    ok = guess is not None and verify_shift(instance, guess)
    return ok, _layers_per_circuit(ledger), ledger.classical_queries


def _trial_truncated(n, d, backend, params, rng):
    instance = sample_decision_instance(n, rng)
    oracle = sample_shuffling(instance, d, rng, backend=backend)
    guess, ledger = truncated_quantum_adversary(oracle, params["budget"], rng)
    return guess is instance.kind, _layers_per_circuit(ledger), ledger.classical_queries


def _trial_cq(n, d, backend, params, rng):
    rounds = params["rounds"]
    instance = sample_decision_instance(n, rng)
    oracle = sample_shuffling(instance, d, rng, backend=backend)
    budget = SchemeBudget(depth=2 * d + 1, circuits=rounds)
    guess, ledger = run_d_cq(solver_cq_decision_adversary(n, d, rounds), oracle, budget, rng)
    return guess is instance.kind, _layers_per_circuit(ledger), ledger.classical_queries


def _trial_qc(n, d, backend, params, rng):
    rounds = params["rounds"]
    instance = sample_decision_instance(n, rng)
    oracle = sample_shuffling(instance, d, rng, backend=backend)
    budget = SchemeBudget(depth=2 * d + 1)
    guess, ledger = run_d_qc(solver_qc_decision_adversary(n, d, rounds), oracle, budget, rng)
    return guess is instance.kind, _layers_per_circuit(ledger), ledger.classical_queries


def _trial_violating(n, d, backend, params, rng):
    # deliberately requests 2d+1 layers against a 2d budget; never returns
    instance = sample_decision_instance(n, rng)
    oracle = sample_shuffling(instance, d, rng, backend=backend)
    budget = SchemeBudget(depth=2 * d, circuits=1)
    run_d_cq(solver_cq_decision_adversary(n, d, 1), oracle, budget, rng)
    raise RuntimeError("depth violation was not raised")


_TRIALS = {
    "solve": _trial_solve,
    "decision": _trial_decision,
    "classical": _trial_classical,
    "truncated": _trial_truncated,
    "cq-solver": _trial_cq,
    "qc-solver": _trial_qc,
    "violating": _trial_violating,
}


def _run_trial(packed):
    name, n, d, backend, params, entropy = packed
    rng = np.random.default_rng(np.random.SeedSequence(entropy))
    return _TRIALS[name](n, d, backend, dict(params), rng)


def run_cells(cells, trials: int, seed: int, jobs: int = 1, timing: bool = False) -> list[ResultRecord]:
    records = []
    for cell_idx, cell in enumerate(cells):
        start = time.perf_counter()
        packed = [
            (cell.trial, cell.n, cell.d, cell.backend, cell.params, (seed, cell_idx, t))
            for t in range(trials)
        ]
        if jobs > 1:
            chunk = max(1, trials // (jobs * 4))
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_run_trial, packed, chunksize=chunk))
        else:
            results = [_run_trial(p) for p in packed]
        successes = sum(1 for ok, _, _ in results if ok)
        lo, hi = wilson_interval(successes, trials)
        records.append(
            ResultRecord(
                experiment=cell.experiment,
                n=cell.n,
                d=cell.d,
                adversary=cell.adversary,
                trials=trials,
                success=successes / trials,
                ci_lo=lo,
                ci_hi=hi,
                oracle_layers_mean=float(np.mean([r[1] for r in results])),
                classical_queries_mean=float(np.mean([r[2] for r in results])),
                seconds=round(time.perf_counter() - start, 3) if timing else 0.0,
            )
        )
    return records


# -- output ------------------------------------------------------------------


def records_to_json(records: list[ResultRecord]) -> str:
    return json.dumps([asdict(r) for r in records], indent=2, sort_keys=True) + "\n"


def records_to_csv(records: list[ResultRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in records:
        writer.writerow([getattr(r, field) for field in CSV_HEADER])
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _emit_records(records, args) -> None:
    text = records_to_csv(records) if args.format == "csv" else records_to_json(records)
    _emit(text, args.out)


# -- argument plumbing -------------------------------------------------------


def _env(name: str, cast, default):
    raw = os.environ.get(f"SHUFFLESIM_{name}")
    if raw is None:
        return default
    try:
        return cast(raw)
    except ValueError as exc:
        raise SystemExit(f"SHUFFLESIM_{name}={raw!r}: {exc}")


def parse_range(text: str) -> list[int]:
    """Grid axis syntax: '3', '2,5,7', or '2..6' (inclusive)."""
    values: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..", 1)
            values.extend(range(int(lo), int(hi) + 1))
        else:
            values.append(int(part))
    if not values:
        raise ValueError(f"empty range {text!r}")
    return values


def _add_common(p: argparse.ArgumentParser, ranged: bool) -> None:
    kind = parse_range if ranged else int
    hint = "single value or range like 2..6 or 2,4" if ranged else "single value"
    p.add_argument("--n", type=kind, default=None, help=f"problem size ({hint})")
    p.add_argument("--d", type=kind, default=None, help=f"shuffling depth ({hint})")
    p.add_argument("--trials", type=int, default=None, help="trials per grid cell")
    p.add_argument("--seed", type=int, default=None, help="master seed")
    p.add_argument("--backend", choices=["materialized", "lazy"], default=None)
    p.add_argument("--jobs", type=int, default=None, help="worker processes (1 = serial)")
    p.add_argument("--timing", action="store_true", help="record wall time (breaks byte-identical reruns)")
    p.add_argument("--out", default=None, help="output path, '-' or omitted for stdout")
    p.add_argument("--format", choices=["json", "csv"], default="json")


def _resolve_common(args, default_trials: int) -> None:
    args.seed = args.seed if args.seed is not None else _env("SEED", int, 0)
    args.trials = args.trials if args.trials is not None else _env("TRIALS", int, default_trials)
    args.backend = args.backend if args.backend is not None else _env("BACKEND", str, "materialized")
    args.jobs = args.jobs if args.jobs is not None else _env("JOBS", int, 1)
    if args.jobs < 1:
        raise SystemExit("--jobs must be at least 1")


def _as_list(value, fallback: int) -> list[int]:
    if value is None:
        return [fallback]
    return value if isinstance(value, list) else [value]


# -- subcommands -------------------------------------------------------------


def _cmd_solve(args) -> None:
    _resolve_common(args, default_trials=200)
    n = args.n if args.n is not None else 3
    d = args.d if args.d is not None else 1
    params = ()
    if args.max_rounds is not None:
        params = (("max_rounds", args.max_rounds),)
    cells = [_Cell("solve", n, d, "solver", "solve", args.backend, params)]
    _emit_records(run_cells(cells, args.trials, args.seed, args.jobs, args.timing), args)


def _cell_for(experiment: str, kind: str, n: int, d: int, backend: str, args) -> _Cell:
    q = getattr(args, "q", None)
    budget = getattr(args, "budget", None)
    rounds = getattr(args, "rounds", None)
    if kind == "solver":
        return _Cell(experiment, n, d, "solver", "solve", backend, ())
    if kind == "classical":
        return _Cell(experiment, n, d, kind, kind, backend, (("q", q if q is not None else 16),))
    if kind == "truncated":
        return _Cell(
            experiment, n, d, kind, kind, backend,
            (("budget", budget if budget is not None else d),),
        )
    if kind in ("decision", "cq-solver", "qc-solver"):
        return _Cell(
            experiment, n, d, kind, kind, backend,
            (("rounds", rounds if rounds is not None else n + 10),),
        )
    if kind == "violating":
        return _Cell(experiment, n, d, kind, kind, backend, ())
    raise SystemExit(f"unknown adversary kind {kind!r}")


def _cmd_sweep(args) -> None:
    _resolve_common(args, default_trials=100)
    kinds = [k.strip() for k in args.adversaries.split(",") if k.strip()]
    cells = [
        _cell_for("sweep", kind, n, d, args.backend, args)
        for n in _as_list(args.n, 3)
        for d in _as_list(args.d, 1)
        for kind in kinds
    ]
    _emit_records(run_cells(cells, args.trials, args.seed, args.jobs, args.timing), args)


def _cmd_adversary(args) -> None:
    _resolve_common(args, default_trials=200)
    cells = [
        _cell_for("adversary", args.kind, n, d, args.backend, args)
        for n in _as_list(args.n, 3)
        for d in _as_list(args.d, 1)
    ]
    _emit_records(run_cells(cells, args.trials, args.seed, args.jobs, args.timing), args)


def _cmd_o2h(args) -> None:
    _resolve_common(args, default_trials=2000)
    n = args.n if args.n is not None else 2
    d = args.d if args.d is not None else 2
    l = args.l
    if not 1 <= l <= d:
        raise SystemExit(f"--l must be in 1..{d}")
    rng = np.random.default_rng(np.random.SeedSequence((args.seed, 0)))

    def sampler(r):
        return sample_shuffling(sample_simon(n, r), d, r, backend="materialized")

    membership = [
        asdict(estimate_membership(sampler, j, l, args.trials, rng)) for j in range(l, d + 1)
    ]

    layout = solver_layout(n, d)
    state = init_uniform(layout, "Q")
    spec = ((l, "Q", f"N{l}"),)
    pairs = []
    for _ in range(args.samples):
        oracle = sampler(rng)
        pairs.append((oracle, sample_hidden_sets(oracle, rng)))
    hiding = check_hiding_bound(state, pairs, l, spec)
    find = check_find_bound(state, sampler(rng), spec, l, rng, resamples=args.resamples)

    report = {
        "n": n,
        "d": d,
        "l": l,
        "membership": membership,
        "hiding": {
            "lhs": hiding.lhs_bures,
            "rhs": hiding.rhs,
            "per_sample_pass": hiding.per_sample_holds,
            "samples": hiding.samples,
            "max_per_sample_slack": hiding.max_per_sample_slack,
            "mean_p_find": hiding.mean_p_find,
            "pooled_holds": hiding.pooled_holds,
        },
        "find_bound": asdict(find),
    }
    _emit(json.dumps(report, indent=2, sort_keys=True) + "\n", args.out)


def _cmd_sample_oracle(args) -> None:
    _resolve_common(args, default_trials=1)
    n = args.n if args.n is not None else 3
    d = args.d if args.d is not None else 1
    rng = np.random.default_rng(np.random.SeedSequence((args.seed, 0)))
    if args.kind == "simon":
        instance = sample_simon(n, rng)
    elif args.kind == "one-to-one":
        instance = sample_one_to_one(n, rng)
    else:
        instance = sample_decision_instance(n, rng)
    oracle = sample_shuffling(instance, d, rng, backend=args.backend, record_transcript=True)
    paths = [list(oracle.query_path(x).points) for x in range(min(args.paths, 1 << n))]
    probe_x = int(rng.integers(oracle.domain_size))
    probe = oracle.query_point(d, probe_x)
    report = {
        "instance": instance.to_json_dict(),
        "d": d,
        "backend": args.backend,
        "paths": paths,
        "core_probe": {"x": probe_x, "answer": "bot" if probe is BOT else int(probe)},
        "transcript": oracle.transcript,
    }
    _emit(json.dumps(report, indent=2, sort_keys=True) + "\n", args.out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shufflesim",
        description="Experiments on depth-d shufflings of Simon instances.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="search-success statistics for the full solver")
    _add_common(p, ranged=False)
    p.add_argument("--max-rounds", type=int, default=None)
    p.set_defaults(fn=_cmd_solve)

    p = sub.add_parser("sweep", help="separation table over an n x d grid")
    _add_common(p, ranged=True)
    p.add_argument(
        "--adversaries",
        default="solver,truncated",
        help="comma list of solver,classical,truncated,decision,cq-solver,qc-solver",
    )
    p.add_argument("--q", type=int, default=None, help="classical path-query budget")
    p.add_argument("--budget", type=int, default=None, help="oracle-layer budget (truncated)")
    p.add_argument("--rounds", type=int, default=None, help="sample rounds (decision strategies)")
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("adversary", help="restricted-resource strategies")
    _add_common(p, ranged=True)
    p.add_argument(
        "--kind",
        required=True,
        choices=["classical", "truncated", "decision", "cq-solver", "qc-solver", "violating"],
    )
    p.add_argument("--q", type=int, default=None, help="classical path-query budget")
    p.add_argument("--budget", type=int, default=None, help="oracle-layer budget (truncated)")
    p.add_argument("--rounds", type=int, default=None, help="sample rounds (decision strategies)")
    p.set_defaults(fn=_cmd_adversary)

    p = sub.add_parser("o2h", help="hiding, find-probability, and membership reports")
    _add_common(p, ranged=False)
    p.add_argument("--l", type=int, default=1, help="hiding round index")
    p.add_argument("--samples", type=int, default=40, help="oracle draws for the pooled bound")
    p.add_argument("--resamples", type=int, default=200, help="hidden-set redraws for the find bound")
    p.set_defaults(fn=_cmd_o2h)

    p = sub.add_parser("sample-oracle", help="dump one sampled oracle and transcript as JSON")
    _add_common(p, ranged=False)
    p.add_argument("--kind", choices=["simon", "one-to-one", "random"], default="simon")
    p.add_argument("--paths", type=int, default=4, help="path queries to include")
    p.set_defaults(fn=_cmd_sample_oracle)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.fn(args)
    except DepthViolation as exc:
        print(
            f"aborted: {exc} ({len(exc.ledger.violations)} violation(s) recorded)",
            file=sys.stderr,
        )
        return 3
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
