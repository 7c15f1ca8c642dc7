"""Command-line front end: run trials, sweep a parameter, inspect a ratings file, self-check."""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import harness
from .core import IID, NONIID, NonIIDInstance, top_m
from .ratings import ingest_ratings

_ALGO_FOR = {"run-iid": "iid", "run-noniid": "noniid", "run-uniform": "uniform"}

# argparse dest -> ExperimentConfig field
_FLAG_FIELDS = {
    "algo": "algorithm",
    "n": "n",
    "m": "m",
    "agents": "K",
    "horizon": "T",
    "trials": "trials",
    "seed": "master_seed",
    "ratings": "ratings",
    "min_count": "min_count",
    "sweep_axis": "sweep_axis",
    "sweep_values": "sweep_values",
    "means": "means",
    "gap": "gap",
    "spread": "spread",
    "workers": "workers",
    "out": "out",
}


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(","))


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(","))


def _experiment_flags(p: argparse.ArgumentParser, with_algo: bool) -> None:
    # defaults stay None so that only flags actually given override the config file
    p.add_argument("--config", help="flat key = value file; flags override it")
    if with_algo:
        p.add_argument("--algo", choices=harness.ALGORITHMS)
    p.add_argument("--n", type=int, help="number of arms (synthetic instances)")
    p.add_argument("--m", type=int, help="how many top arms to identify")
    p.add_argument("--agents", type=int, help="number of agents K")
    p.add_argument("--horizon", type=int, help="time horizon T (pulls per agent)")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--ratings", help="user_id,item_id,rating file instead of a synthetic instance")
    p.add_argument("--min-count", type=int)
    p.add_argument("--means", type=_float_list, help="explicit comma-separated arm means")
    p.add_argument("--gap", type=float, help="spacing of synthetic means from 0.9 down")
    p.add_argument("--spread", type=float, help="per-agent heterogeneity for non-IID synthetic")
    p.add_argument("--workers", type=int, help="worker threads for trials")
    p.add_argument("--out", help="CSV output path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="collabtop", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, algo in _ALGO_FOR.items():
        p = sub.add_parser(name, help=f"run trials of the {algo} algorithm")
        _experiment_flags(p, with_algo=False)

    p = sub.add_parser("sweep", help="run trials across a T-grid or K-grid")
    _experiment_flags(p, with_algo=True)
    p.add_argument("--sweep-axis", choices=harness.SWEEP_AXES)
    p.add_argument("--sweep-values", type=_int_list, help="comma-separated grid values")

    p = sub.add_parser("ingest", help="summarize the instance built from a ratings file")
    p.add_argument("--ratings", required=True)
    p.add_argument("--mode", choices=(IID, NONIID), default=IID)
    p.add_argument("--agents", type=int, default=10)
    p.add_argument("--min-count", type=int, default=1)
    p.add_argument("--m", type=int, default=5, help="how many top items to list")
    p.add_argument("--out", help="write per-arm means as CSV here")

    p = sub.add_parser("verify", help="run the randomized oracle-equivalence checks")
    p.add_argument("--cases", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    return parser


def config_from_args(args: argparse.Namespace) -> tuple[harness.ExperimentConfig, str | None]:
    values = harness.load_config(args.config) if args.config else {}
    for dest, name in _FLAG_FIELDS.items():
        v = getattr(args, dest, None)
        if v is not None:
            values[name] = v
    if args.command in _ALGO_FOR:
        values["algorithm"] = _ALGO_FOR[args.command]
        values.pop("sweep_axis", None)
        values.pop("sweep_values", None)
    elif not values.get("sweep_axis"):
        raise SystemExit("sweep needs --sweep-axis and --sweep-values (or a config file giving them)")
    out = values.pop("out", None)
    return harness.ExperimentConfig(**values), out


def _run(args) -> int:
    config, out = config_from_args(args)
    records = harness.run_trials(config)
    if out:
        harness.emit_csv(records, out)
    else:
        harness.write_csv(records, sys.stdout)
    for s in harness.summarize(records):
        print(
            f"{s.algorithm} n={s.n} m={s.m} K={s.K} T={s.T}: "
            f"error rate {s.error_rate:.4f} over {s.trials} trials, mean words {s.mean_words:.1f}",
            file=sys.stderr,
        )
    return 0


def _ingest(args) -> int:
    inst = ingest_ratings(args.ratings, args.mode, args.agents, args.min_count)
    if isinstance(inst, NonIIDInstance):
        means = inst.global_means
        print(f"{inst.n} arms over {inst.K} groups")
    else:
        means = inst.means
        print(f"{inst.n} arms")
    m = min(args.m, inst.n)
    best = sorted(top_m(means, m), key=lambda a: (-means[a - 1], a))
    for arm in best:
        print(f"  item {inst.labels[arm - 1]}: mean {means[arm - 1]:.4f}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("item_id,mean\n")
            for label, mu in zip(inst.labels, means):
                fh.write(f"{label},{float(mu)!r}\n")
    return 0


def _verify(args) -> int:
    from . import verify

    failures = 0
    for name, ok, detail in verify.run_all(args.cases, np.random.default_rng(args.seed)):
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        failures += not ok
    return 1 if failures else 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        if args.command == "ingest":
            return _ingest(args)
        if args.command == "verify":
            return _verify(args)
        return _run(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
