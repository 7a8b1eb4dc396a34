"""Seeded Monte-Carlo experiments, n-sweeps and rate-curve tables.

Trial ``i`` of an experiment draws its defective set, design and noise from
streams keyed by ``(master_seed, i)``, so results do not depend on the order
or the thread in which trials run.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import jsonschema
import numpy as np
from scipy.stats import binomtest

from . import rates
from .core import (
    ChannelKind,
    ChannelModel,
    Stream,
    apply_channel,
    derive_seed,
    generate_bernoulli_matrix,
    noiseless_outcomes,
    sample_defective_set,
)
from .decoders import Algorithm, DecoderConfig, decode
from .errors import ConfigError, ImpossibleOutcomeError

CONFIDENCE = 0.95
THREADS_ENV = "GTLAB_THREADS"

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["p", "k", "n", "channel", "decoder", "trials"],
    "additionalProperties": False,
    "properties": {
        "p": {"type": "integer", "minimum": 1},
        "k": {"type": "integer", "minimum": 1},
        "n": {"type": "integer", "minimum": 1},
        "nu": {"type": "number", "exclusiveMinimum": 0},
        "trials": {"type": "integer", "minimum": 1},
        "master_seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "channel": {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": [c.value for c in ChannelKind]},
                "rho": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
            },
        },
        "decoder": {
            "type": "object",
            "required": ["algorithm"],
            "additionalProperties": False,
            "properties": {
                "algorithm": {"enum": [a.value for a in Algorithm]},
                "alpha": {"type": ["number", "null"]},
                "beta": {"type": ["number", "null"]},
            },
        },
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    p: int
    k: int
    n: int
    channel: ChannelModel
    decoder: DecoderConfig
    trials: int
    nu: float = 1.0
    master_seed: int = 0

    def __post_init__(self):
        if not 1 <= self.k <= self.p:
            raise ConfigError(f"need 1 <= k <= p, got p={self.p}, k={self.k}")
        if self.n < 1:
            raise ConfigError("n must be at least 1")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if not self.nu > 0 or self.nu > self.k:
            raise ConfigError("nu must lie in (0, k]")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("master_seed must be a 64-bit unsigned integer")
        if self.decoder.k != self.k or self.decoder.nu != self.nu:
            raise ConfigError("decoder k and nu must match the experiment")
        if self.decoder.rho != self.channel.rho:
            raise ConfigError("decoder rho must match the channel noise level")

    @classmethod
    def build(
        cls,
        p: int,
        k: int,
        n: int,
        channel: ChannelModel,
        algorithm,
        trials: int,
        nu: float = 1.0,
        master_seed: int = 0,
        alpha: float | None = None,
        beta: float | None = None,
    ) -> "ExperimentConfig":
        dec = DecoderConfig(Algorithm(algorithm), k, nu, channel.rho, alpha, beta)
        return cls(p, k, n, channel, dec, trials, nu, master_seed)

    @property
    def theta(self) -> float:
        return math.log(self.k) / math.log(self.p) if self.p > 1 else float("nan")

    def with_n(self, n: int) -> "ExperimentConfig":
        return replace(self, n=int(n))

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "k": self.k,
            "n": self.n,
            "nu": self.nu,
            "trials": self.trials,
            "master_seed": self.master_seed,
            "channel": {"kind": self.channel.kind.value, "rho": self.channel.rho},
            "decoder": {
                "algorithm": self.decoder.algorithm.value,
                "alpha": self.decoder.alpha,
                "beta": self.decoder.beta,
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        try:
            jsonschema.validate(data, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise ConfigError(f"invalid experiment config: {exc.message}") from exc
        ch = data["channel"]
        channel = ChannelModel(ChannelKind(ch["kind"]), float(ch.get("rho", 0.0)))
        dec = data["decoder"]
        return cls.build(
            data["p"],
            data["k"],
            data["n"],
            channel,
            dec["algorithm"],
            data["trials"],
            nu=float(data.get("nu", 1.0)),
            master_seed=int(data.get("master_seed", 0)),
            alpha=dec.get("alpha"),
            beta=dec.get("beta"),
        )

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(data)


@dataclass(frozen=True)
class TrialOutcome:
    success: bool
    diagnostics: dict


DIAGNOSTIC_KEYS = ("missed", "false_alarms", "pd_size", "intruders", "stage1_misses")


def run_trial(config: ExperimentConfig, trial_index: int) -> TrialOutcome:
    """One draw of (defectives, design, noise) followed by decoding.

    Success means the estimate equals the defective set exactly.
    """
    seed = config.master_seed
    defectives = sample_defective_set(config.p, config.k, derive_seed(seed, trial_index, Stream.DEFECTIVES))
    matrix = generate_bernoulli_matrix(
        config.n, config.p, config.k, config.nu, derive_seed(seed, trial_index, Stream.MATRIX)
    )
    u = noiseless_outcomes(matrix, defectives)
    y = apply_channel(u, config.channel, derive_seed(seed, trial_index, Stream.NOISE)).y
    result = decode(matrix, y, config.decoder, config.channel)

    est = result.estimate
    pd = result.pd_set if result.pd_set is not None else est
    diag = {
        "missed": int(np.setdiff1d(defectives, est).size),
        "false_alarms": int(np.setdiff1d(est, defectives).size),
        "pd_size": int(len(pd)),
        "intruders": int(np.setdiff1d(pd, defectives).size),
        "stage1_misses": int(np.setdiff1d(defectives, pd).size),
    }
    success = est.size == defectives.size and bool(np.all(np.sort(est) == defectives))
    return TrialOutcome(success, diag)


@dataclass(frozen=True)
class ErrorEstimate:
    failures: int
    trials: int
    p_hat: float
    ci_low: float
    ci_high: float
    mean_diagnostics: dict = field(default_factory=dict)


def wilson_interval(failures: int, trials: int, confidence: float = CONFIDENCE) -> tuple[float, float]:
    ci = binomtest(int(failures), int(trials)).proportion_ci(confidence_level=confidence, method="wilson")
    p_hat = failures / trials
    return max(0.0, min(float(ci.low), p_hat)), min(1.0, max(float(ci.high), p_hat))


def worker_count(requested: int | None = None) -> int:
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}") from exc
    return os.cpu_count() or 1


def run_trials(config: ExperimentConfig, workers: int | None = None) -> list[TrialOutcome]:
    """All trial outcomes in index order, optionally computed on a thread pool."""
    workers = min(worker_count(workers), config.trials)
    indices = range(config.trials)
    if workers == 1:
        return [run_trial(config, i) for i in indices]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda i: run_trial(config, i), indices))


def summarize(outcomes: list[TrialOutcome]) -> ErrorEstimate:
    trials = len(outcomes)
    failures = sum(not o.success for o in outcomes)
    lo, hi = wilson_interval(failures, trials)
    means = {key: sum(o.diagnostics[key] for o in outcomes) / trials for key in DIAGNOSTIC_KEYS}
    return ErrorEstimate(failures, trials, failures / trials, lo, hi, means)


def estimate_error_prob(config: ExperimentConfig, workers: int | None = None) -> ErrorEstimate:
    return summarize(run_trials(config, workers))


# --- ML oracle comparison -------------------------------------------------

ORACLE_DEFAULT_N = 20
ORACLE_CONFIDENCE = 0.99

_HEURISTICS = {
    ChannelKind.NOISELESS: (Algorithm.COMP, Algorithm.DD),
    ChannelKind.REVERSE_Z: (Algorithm.COMP, Algorithm.DD, Algorithm.NDD_RZ),
    ChannelKind.Z: (Algorithm.COMP, Algorithm.DD, Algorithm.NDD_Z),
    ChannelKind.SYMMETRIC: (Algorithm.COMP, Algorithm.DD, Algorithm.NDD_SYM),
}


def oracle_compare(
    p: int, k: int, n: int, channel: ChannelModel, trials: int, master_seed: int = 0, nu: float = 1.0
) -> dict:
    """Success counts of ML and the heuristic decoders on shared random instances.

    ML dominates when no heuristic's success rate exceeds the upper end of
    ML's two-sided 99% Wilson interval.
    """
    algos = (Algorithm.ML, *_HEURISTICS[channel.kind])
    configs = {a: ExperimentConfig.build(p, k, n, channel, a, trials, nu, master_seed) for a in algos}
    wins = {a: 0 for a in algos}
    for t in range(trials):
        defectives = sample_defective_set(p, k, derive_seed(master_seed, t, Stream.DEFECTIVES))
        matrix = generate_bernoulli_matrix(n, p, k, nu, derive_seed(master_seed, t, Stream.MATRIX))
        u = noiseless_outcomes(matrix, defectives)
        y = apply_channel(u, channel, derive_seed(master_seed, t, Stream.NOISE)).y
        for a in algos:
            try:
                est = decode(matrix, y, configs[a].decoder, channel).estimate
            except ImpossibleOutcomeError:
                continue
            wins[a] += int(np.array_equal(np.sort(est), defectives))
    report = {}
    for a in algos:
        lo, hi = wilson_interval(wins[a], trials, ORACLE_CONFIDENCE)
        report[a.value] = {"successes": wins[a], "trials": trials, "rate": wins[a] / trials, "ci_low": lo, "ci_high": hi}
    ml_high = report[Algorithm.ML.value]["ci_high"]
    dominates = all(report[a.value]["rate"] <= ml_high for a in algos[1:])
    return {"decoders": report, "ml_dominates": dominates}


# --- sweeps ----------------------------------------------------------------


def rate_of(p: int, k: int, n: int) -> float:
    """Bits per test ``k log2(p/k) / n``."""
    return k * math.log2(p / k) / n


def validate_grid(n_grid) -> list[int]:
    grid = [int(n) for n in n_grid]
    if not grid:
        raise ConfigError("the n grid is empty")
    if grid[0] < 1:
        raise ConfigError("every n in the grid must be at least 1")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError("the n grid must be strictly ascending")
    return grid


SWEEP_COLUMNS = (
    "n",
    "rate",
    "theta",
    "failures",
    "trials",
    "p_hat",
    "ci_low",
    "ci_high",
    *(f"mean_{key}" for key in DIAGNOSTIC_KEYS),
    "p",
    "k",
    "nu",
    "channel",
    "rho",
    "decoder",
    "alpha",
    "beta",
    "master_seed",
)


def sweep_row(config: ExperimentConfig, est: ErrorEstimate) -> dict:
    row = {
        "n": config.n,
        "rate": rate_of(config.p, config.k, config.n),
        "theta": config.theta,
        "failures": est.failures,
        "trials": est.trials,
        "p_hat": est.p_hat,
        "ci_low": est.ci_low,
        "ci_high": est.ci_high,
    }
    row.update({f"mean_{key}": est.mean_diagnostics[key] for key in DIAGNOSTIC_KEYS})
    row.update(
        p=config.p,
        k=config.k,
        nu=config.nu,
        channel=config.channel.kind.value,
        rho=config.channel.rho,
        decoder=config.decoder.algorithm.value,
        alpha=config.decoder.alpha,
        beta=config.decoder.beta,
        master_seed=config.master_seed,
    )
    return row


def sweep_n(base: ExperimentConfig, n_grid, workers: int | None = None) -> list[dict]:
    """One error estimate per test count, in ascending ``n``."""
    return [sweep_row(base.with_n(n), estimate_error_prob(base.with_n(n), workers)) for n in validate_grid(n_grid)]


# --- rate curves -----------------------------------------------------------

RATE_COLUMNS = ("theta", "rho", "nu", "ach_rate", "conv_rate", "ach_branch", "conv_branch")
RATE_MODELS = ("noiseless", "rz", "z", "sym")


def check_converse_rho(model: str, rho: float) -> None:
    limit_ok = rho / (1.0 - rho) < 0.5 if model == "sym" else rho < 0.5
    if model != "noiseless" and not (0.0 < rho and limit_ok):
        bound = "rho/(1-rho) < 1/2" if model == "sym" else "rho < 1/2"
        raise ConfigError(
            f"rho={rho}: the {model} converse is only valid for {bound} (the converse theorem's hypothesis)"
        )


def rate_curve_export(model: str, rhos, thetas, nu: float = 1.0) -> list[dict]:
    """Achievable and converse rates on a (rho, theta) grid, rho-major."""
    model = model.lower()
    if model not in RATE_MODELS:
        raise ConfigError(f"unknown rate model {model!r}")
    thetas = np.asarray(thetas, dtype=float)
    rows = []
    rho_list = [0.0] if model == "noiseless" else [float(r) for r in rhos]
    for rho in rho_list:
        check_converse_rho(model, rho)
        if model == "sym":
            ach, opt = rates.sym_achievable_curve(thetas, rho)
        for i, theta in enumerate(thetas):
            theta = float(theta)
            if model == "noiseless":
                a, ab = rates.noiseless_dd_rate(theta), "dd"
                c, cb = rates.noiseless_converse(theta), "bernoulli"
                row_nu = 1.0
            elif model == "rz":
                ap, cp = rates.rz_achievable_rate(theta, rho), rates.rz_converse_rate(theta, rho)
                a, ab, c, cb, row_nu = ap.rate_bits_per_test, ap.branch, cp.rate_bits_per_test, cp.branch, 1.0
            elif model == "z":
                ap, cp = rates.z_achievable_rate(theta, rho, nu), rates.z_converse_rate(theta, rho)
                a, ab, c, cb, row_nu = ap.rate_bits_per_test, ap.branch, cp.rate_bits_per_test, cp.branch, nu
            else:
                cp = rates.sym_converse_rate(theta, rho)
                a, ab, c, cb, row_nu = float(ach[i]), "optimized", cp.rate_bits_per_test, cp.branch, float(opt["nu"][i])
            rows.append(
                {"theta": theta, "rho": rho, "nu": row_nu, "ach_rate": a, "conv_rate": c, "ach_branch": ab, "conv_branch": cb}
            )
    return rows


# --- CSV -------------------------------------------------------------------


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(rows: list[dict], columns, target=None) -> str:
    """Render rows as CSV (``repr`` floats, ``\\n`` line ends); also write to ``target`` if given."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(col)) for col in columns])
    text = buf.getvalue()
    if target is not None:
        Path(target).write_text(text, encoding="utf-8")
    return text


def estimate_as_dict(est: ErrorEstimate) -> dict:
    return asdict(est)
