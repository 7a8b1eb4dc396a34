"""Command-line interface: ``gtlab <verb> [flags]``.

Verbs: ``rates`` (rate-curve CSV), ``simulate`` (one Monte-Carlo estimate),
``sweep`` (estimates over a grid of test counts), ``oracle-check`` (ML against
the heuristics on tiny instances) and ``dump-matrix``.  Configuration errors
exit with status 2.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import harness, rates
from .core import ChannelKind, ChannelModel, generate_bernoulli_matrix
from .decoders import Algorithm
from .errors import ConfigError, DomainError

ORACLE_MAX_P = 12
ORACLE_MAX_K = 2

CHANNEL_CHOICES = [c.value for c in ChannelKind]
DECODER_CHOICES = [a.value for a in Algorithm]


def _formatter(prog):
    return argparse.ArgumentDefaultsHelpFormatter(prog, max_help_position=32)


def _add_experiment_flags(sp: argparse.ArgumentParser, *, with_n: bool) -> None:
    sp.add_argument("--config", type=Path, help="JSON experiment config; explicit flags are ignored when given")
    sp.add_argument("--p", type=int, help="number of items")
    group = sp.add_mutually_exclusive_group()
    group.add_argument("--k", type=int, help="number of defectives")
    group.add_argument("--theta", type=float, help="sparsity exponent; sets k = round(p**theta)")
    if with_n:
        ng = sp.add_mutually_exclusive_group()
        ng.add_argument("--n", type=int, help="number of tests")
        ng.add_argument(
            "--n-multiple",
            type=float,
            help="number of tests as a multiple of the decoder's theoretical budget",
        )
    sp.add_argument("--channel", choices=CHANNEL_CHOICES, default="noiseless", help="noise model")
    sp.add_argument("--rho", type=float, default=0.0, help="noise level (flip probability)")
    sp.add_argument("--decoder", choices=DECODER_CHOICES, default="dd", help="decoding algorithm")
    sp.add_argument("--alpha", type=float, help="stage-one threshold fraction (default: midpoint of valid range)")
    sp.add_argument("--beta", type=float, help="stage-two threshold fraction (default: midpoint of valid range)")
    sp.add_argument("--nu", type=float, default=1.0, help="design parameter: inclusion probability is nu/k")
    sp.add_argument("--trials", type=int, default=100, help="Monte-Carlo trials")
    sp.add_argument("--seed", type=int, default=0, help="64-bit master seed")
    sp.add_argument("--threads", type=int, help=f"worker threads (default: ${harness.THREADS_ENV} or CPU count)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gtlab", description="Noisy group testing under Bernoulli designs.")
    sub = parser.add_subparsers(dest="verb", required=True, metavar="VERB")

    sp = sub.add_parser("rates", help="tabulate achievable and converse rates", formatter_class=_formatter)
    sp.add_argument("--model", choices=harness.RATE_MODELS, required=True, help="noise model")
    sp.add_argument("--rho", type=float, action="append", help="noise level; repeat for several curves")
    sp.add_argument("--theta-steps", type=int, default=99, help="number of theta grid points")
    sp.add_argument("--theta-min", type=float, default=0.01, help="smallest theta")
    sp.add_argument("--theta-max", type=float, default=0.99, help="largest theta")
    sp.add_argument("--nu", type=float, default=1.0, help="design parameter for the Z-channel achievable rate")
    sp.add_argument("--out", type=Path, help="output CSV path (default: stdout)")

    sp = sub.add_parser("simulate", help="estimate the error probability of one configuration", formatter_class=_formatter)
    _add_experiment_flags(sp, with_n=True)
    sp.add_argument("--csv", type=Path, help="also write the result row to this CSV file")

    sp = sub.add_parser("sweep", help="estimate the error probability over a grid of test counts", formatter_class=_formatter)
    _add_experiment_flags(sp, with_n=False)
    sp.add_argument("--n-from", type=int, required=True, help="smallest number of tests")
    sp.add_argument("--n-to", type=int, required=True, help="largest number of tests")
    sp.add_argument("--n-steps", type=int, default=10, help="grid points (linearly spaced, rounded)")
    sp.add_argument("--out", type=Path, help="output CSV path (default: stdout)")

    sp = sub.add_parser("oracle-check", help="compare ML with the heuristic decoders on tiny instances", formatter_class=_formatter)
    sp.add_argument("--p", type=int, default=10, help=f"number of items (at most {ORACLE_MAX_P})")
    sp.add_argument("--k", type=int, default=2, help=f"number of defectives (at most {ORACLE_MAX_K})")
    sp.add_argument("--n", type=int, default=harness.ORACLE_DEFAULT_N, help="number of tests")
    sp.add_argument("--channel", choices=CHANNEL_CHOICES, default="rz", help="noise model")
    sp.add_argument("--rho", type=float, default=0.1, help="noise level (flip probability)")
    sp.add_argument("--nu", type=float, default=1.0, help="design parameter: inclusion probability is nu/k")
    sp.add_argument("--trials", type=int, default=500, help="random instances")
    sp.add_argument("--seed", type=int, default=0, help="64-bit master seed")

    sp = sub.add_parser("dump-matrix", help="write a random Bernoulli design in text form", formatter_class=_formatter)
    sp.add_argument("--n", type=int, required=True, help="number of tests")
    sp.add_argument("--p", type=int, required=True, help="number of items")
    sp.add_argument("--k", type=int, required=True, help="number of defectives (sets the inclusion probability nu/k)")
    sp.add_argument("--nu", type=float, default=1.0, help="design parameter")
    sp.add_argument("--seed", type=int, default=0, help="64-bit seed")
    sp.add_argument("--out", type=Path, required=True, help="output path")
    return parser


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


def _resolve_k(args, parser) -> int:
    if args.k is not None:
        return args.k
    if args.theta is not None:
        if not 0 < args.theta < 1:
            raise ConfigError("--theta must lie in (0, 1)")
        return max(1, round(args.p**args.theta))
    parser.error("one of --k or --theta is required")


def budget_for(decoder: str, p: int, k: int, channel: ChannelModel, nu: float, alpha=None, beta=None) -> rates.TestBudget:
    """Theoretical test budget matching a decoder and channel."""
    rho = channel.rho
    algo = Algorithm(decoder)
    if algo is Algorithm.NDD_RZ:
        return rates.test_budget_ndd_rz(p, k, rho, nu, beta=beta)
    if algo is Algorithm.NDD_Z:
        return rates.test_budget_ndd_z(p, k, rho, nu, alpha=alpha)
    if algo is Algorithm.NDD_SYM:
        return rates.test_budget_ndd_sym(p, k, rho, nu, alpha=alpha, beta=beta)
    if algo is Algorithm.COMP:
        return rates.test_budget_comp_rz(p, k, rho, nu)
    if algo is Algorithm.DD:
        return rates.test_budget_dd_noiseless(p, k, nu)
    raise ConfigError("no theoretical budget exists for ML decoding; pass --n")


def _experiment(args, parser, n: int | None) -> harness.ExperimentConfig:
    if args.config is not None:
        try:
            text = args.config.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        return harness.ExperimentConfig.from_json(text)
    if args.p is None:
        parser.error("--p is required unless --config is given")
    k = _resolve_k(args, parser)
    channel = ChannelModel.parse(args.channel, args.rho)
    if n is None:
        n = args.n
        if n is None and args.n_multiple is not None:
            budget = budget_for(args.decoder, args.p, k, channel, args.nu, args.alpha, args.beta)
            n = budget.n_tests(args.n_multiple)
        if n is None:
            parser.error("one of --n or --n-multiple is required")
    return harness.ExperimentConfig.build(
        args.p, k, n, channel, args.decoder, args.trials, args.nu, args.seed, args.alpha, args.beta
    )


def cmd_rates(args, parser) -> int:
    if args.theta_steps < 1:
        raise ConfigError("--theta-steps must be positive")
    if not 0 < args.theta_min <= args.theta_max < 1:
        raise ConfigError("need 0 < theta-min <= theta-max < 1")
    rhos = args.rho or ([] if args.model == "noiseless" else None)
    if rhos is None:
        parser.error("--rho is required for noisy models")
    thetas = np.linspace(args.theta_min, args.theta_max, args.theta_steps)
    rows = harness.rate_curve_export(args.model, rhos, thetas, args.nu)
    _emit(harness.write_csv(rows, harness.RATE_COLUMNS), args.out)
    return 0


def cmd_simulate(args, parser) -> int:
    config = _experiment(args, parser, None)
    est = harness.estimate_error_prob(config, args.threads)
    row = harness.sweep_row(config, est)
    width = max(len(c) for c in harness.SWEEP_COLUMNS)
    for col in harness.SWEEP_COLUMNS:
        print(f"{col:<{width}}  {harness._cell(row[col]) or '-'}")
    if args.csv is not None:
        harness.write_csv([row], harness.SWEEP_COLUMNS, args.csv)
    return 0


def cmd_sweep(args, parser) -> int:
    if args.n_steps < 1:
        raise ConfigError("--n-steps must be positive")
    if args.n_from < 1 or args.n_to < args.n_from or (args.n_steps > 1 and args.n_to == args.n_from):
        raise ConfigError("the n grid must be ascending: need 1 <= --n-from < --n-to")
    grid = [int(round(x)) for x in np.linspace(args.n_from, args.n_to, args.n_steps)]
    if len(set(grid)) != len(grid):
        raise ConfigError("the n grid has repeated points; use fewer --n-steps or a wider range")
    base = _experiment(args, parser, grid[0])
    rows = harness.sweep_n(base, grid, args.threads)
    _emit(harness.write_csv(rows, harness.SWEEP_COLUMNS), args.out)
    return 0


def cmd_oracle_check(args, parser) -> int:
    if args.p > ORACLE_MAX_P or args.k > ORACLE_MAX_K:
        raise ConfigError(
            f"oracle-check enumerates every subset; it is limited to p <= {ORACLE_MAX_P} and k <= {ORACLE_MAX_K}"
        )
    channel = ChannelModel.parse(args.channel, args.rho)
    report = harness.oracle_compare(args.p, args.k, args.n, channel, args.trials, args.seed, args.nu)
    print(f"oracle-check p={args.p} k={args.k} n={args.n} channel={channel.kind.value} rho={channel.rho} trials={args.trials}")
    print("decoder,successes,trials,success_rate,ci99_low,ci99_high")
    for name, rec in report["decoders"].items():
        print(f"{name},{rec['successes']},{rec['trials']},{rec['rate']!r},{rec['ci_low']!r},{rec['ci_high']!r}")
    verdict = "PASS" if report["ml_dominates"] else "FAIL"
    print(f"ml_dominates_within_ci99: {verdict}")
    return 0


def cmd_dump_matrix(args, parser) -> int:
    matrix = generate_bernoulli_matrix(args.n, args.p, args.k, args.nu, args.seed)
    matrix.dump(args.out)
    return 0


COMMANDS = {
    "rates": cmd_rates,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "oracle-check": cmd_oracle_check,
    "dump-matrix": cmd_dump_matrix,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.verb](args, parser)
    except (ConfigError, DomainError) as exc:
        print(f"gtlab {args.verb}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
