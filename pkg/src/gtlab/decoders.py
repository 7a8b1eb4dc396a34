"""Decoders mapping a test matrix and observed outcomes to a defective-set estimate.

``comp_decode`` and ``dd_decode`` are the classic noiseless rules.  The three
noisy DD variants replace "appears in a negative test" and "appears alone in
a positive test" by count thresholds scaled with ``n nu / k``.  ``ml_decode``
enumerates every ``k``-subset and is meant for tiny instances.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .core import ChannelModel, TestMatrix, pack_items, unpack_mask
from .errors import ConfigError, DomainError, EnumerationLimitError, ImpossibleOutcomeError

ML_SUBSET_LIMIT = 10**6


class Algorithm(enum.Enum):
    COMP = "comp"
    DD = "dd"
    NDD_RZ = "ndd-rz"
    NDD_Z = "ndd-z"
    NDD_SYM = "ndd-sym"
    ML = "ml"


def zeta_z(rho: float, nu: float) -> float:
    return math.exp(-nu) + rho * (1.0 - math.exp(-nu))


def w_sym(rho: float, nu: float) -> float:
    return (1.0 - rho) * math.exp(-nu) + rho * (1.0 - math.exp(-nu))


@dataclass(frozen=True)
class DecoderConfig:
    """Algorithm choice plus the thresholds it needs.

    ``alpha`` scales the stage-one negative-test threshold ``alpha n nu / k``
    and ``beta`` the stage-two threshold ``beta n nu e^-nu / k``.  Left as
    ``None`` they default to the midpoint of their validity interval:
    ``(rho, 1)`` for ``beta`` under reverse-Z noise, ``(rho, zeta)`` for
    ``alpha`` under Z noise, and ``(rho, w)`` / ``(rho, 1 - rho)`` under
    symmetric noise.
    """

    algorithm: Algorithm
    k: int
    nu: float = 1.0
    rho: float = 0.0
    alpha: float | None = None
    beta: float | None = None

    def __post_init__(self):
        if not isinstance(self.algorithm, Algorithm):
            object.__setattr__(self, "algorithm", Algorithm(self.algorithm))
        if self.k < 1:
            raise ConfigError("k must be at least 1")
        if not self.nu > 0:
            raise ConfigError("nu must be positive")
        if not 0.0 <= self.rho < 1.0:
            raise ConfigError("rho must lie in [0, 1)")
        algo, rho = self.algorithm, self.rho
        alpha, beta = self.alpha, self.beta
        if algo is Algorithm.NDD_RZ:
            beta = 0.5 * (1.0 + rho) if beta is None else beta
            if not rho < beta < 1.0:
                raise ConfigError(f"NDD_RZ needs rho < beta < 1, got beta={beta}")
        elif algo is Algorithm.NDD_Z:
            zeta = zeta_z(rho, self.nu)
            alpha = 0.5 * (rho + zeta) if alpha is None else alpha
            if not rho < alpha < zeta:
                raise ConfigError(f"NDD_Z needs rho < alpha < zeta={zeta:.6g}, got alpha={alpha}")
        elif algo is Algorithm.NDD_SYM:
            alpha = 0.5 * (rho + w_sym(rho, self.nu)) if alpha is None else alpha
            beta = 0.5 if beta is None else beta
            if not (rho < alpha < 1.0 - rho and rho < beta < 1.0 - rho):
                raise ConfigError("NDD_SYM needs alpha and beta in (rho, 1 - rho)")
        object.__setattr__(self, "alpha", None if alpha is None else float(alpha))
        object.__setattr__(self, "beta", None if beta is None else float(beta))

    def stage1_threshold(self, n: int) -> float:
        return self.alpha * n * self.nu / self.k

    def stage2_threshold(self, n: int) -> float:
        return self.beta * n * self.nu * math.exp(-self.nu) / self.k

    def with_unit_thresholds(self, n: int) -> "DecoderConfig":
        """Same algorithm with thresholds of half a test, i.e. the noiseless rules."""
        scale = 2.0 * n * self.nu / self.k
        kw = dict(algorithm=self.algorithm, k=self.k, nu=self.nu, rho=self.rho)
        if self.algorithm in (Algorithm.NDD_Z, Algorithm.NDD_SYM):
            kw["alpha"] = min(self.alpha, 1.0 / scale)
        if self.algorithm in (Algorithm.NDD_RZ, Algorithm.NDD_SYM):
            kw["beta"] = min(self.beta, math.exp(self.nu) / scale)
        return DecoderConfig(**kw)


@dataclass(frozen=True)
class DecodeResult:
    estimate: np.ndarray
    pd_set: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)


def _check_dims(matrix: TestMatrix, y) -> np.ndarray:
    y = np.asarray(y, dtype=bool).ravel()
    if y.shape[0] != matrix.n:
        raise DomainError(f"outcome vector has {y.shape[0]} entries for {matrix.n} tests")
    return y


def _negative_counts(matrix: TestMatrix, y: np.ndarray) -> np.ndarray:
    return matrix.column_counts(~y)


def _alone_counts(matrix: TestMatrix, y: np.ndarray, pd: np.ndarray) -> np.ndarray:
    """For each item, the number of positive tests whose only PD member it is."""
    pd_mask = pack_items(pd, matrix.p)
    hits = matrix.words[y] & pd_mask
    single = np.bitwise_count(hits).sum(axis=1) == 1
    counts = np.zeros(matrix.p, dtype=np.int64)
    if np.any(single):
        items = np.argmax(unpack_mask(hits[single], matrix.p), axis=1)
        counts += np.bincount(items, minlength=matrix.p)
    return counts


def _two_stage(matrix, y, nd_mask, s2_min, extra):
    pd = np.flatnonzero(~nd_mask)
    alone = _alone_counts(matrix, y, pd)
    keep = alone[pd] >= s2_min
    estimate = pd[keep]
    diag = {
        "nd_size": int(nd_mask.sum()),
        "pd_size": int(pd.size),
        "alone_max": int(alone.max()) if alone.size else 0,
        **extra,
    }
    return DecodeResult(estimate, pd, diag)


def comp_decode(matrix: TestMatrix, y) -> DecodeResult:
    """Every item that appears in no negative test."""
    y = _check_dims(matrix, y)
    neg = _negative_counts(matrix, y)
    estimate = np.flatnonzero(neg == 0)
    return DecodeResult(estimate, estimate, {"nd_size": int(matrix.p - estimate.size), "pd_size": int(estimate.size)})


def dd_decode(matrix: TestMatrix, y) -> DecodeResult:
    """Classic DD: COMP's survivors that appear alone in some positive test."""
    y = _check_dims(matrix, y)
    return _two_stage(matrix, y, _negative_counts(matrix, y) > 0, 1, {})


def ndd_rz_decode(matrix: TestMatrix, y, config: DecoderConfig) -> DecodeResult:
    """Noisy DD for reverse-Z noise: prune items seen in any negative test,
    keep survivors alone in at least ``beta n nu e^-nu / k`` positive tests."""
    y = _check_dims(matrix, y)
    if config.algorithm is not Algorithm.NDD_RZ:
        raise ConfigError("ndd_rz_decode needs an NDD_RZ config")
    t2 = config.stage2_threshold(matrix.n)
    return _two_stage(matrix, y, _negative_counts(matrix, y) > 0, t2, {"stage2_threshold": t2})


def ndd_z_decode(matrix: TestMatrix, y, config: DecoderConfig) -> DecodeResult:
    """Noisy DD for Z noise: prune items in at least ``alpha n nu / k`` negative
    tests, keep survivors alone in any positive test."""
    y = _check_dims(matrix, y)
    if config.algorithm is not Algorithm.NDD_Z:
        raise ConfigError("ndd_z_decode needs an NDD_Z config")
    t1 = config.stage1_threshold(matrix.n)
    return _two_stage(matrix, y, _negative_counts(matrix, y) >= t1, 1, {"stage1_threshold": t1})


def ndd_sym_decode(matrix: TestMatrix, y, config: DecoderConfig) -> DecodeResult:
    """Noisy DD for symmetric noise: the Z-style first stage followed by the
    reverse-Z-style second stage."""
    y = _check_dims(matrix, y)
    if config.algorithm is not Algorithm.NDD_SYM:
        raise ConfigError("ndd_sym_decode needs an NDD_SYM config")
    t1 = config.stage1_threshold(matrix.n)
    t2 = config.stage2_threshold(matrix.n)
    nd = _negative_counts(matrix, y) >= t1
    return _two_stage(matrix, y, nd, t2, {"stage1_threshold": t1, "stage2_threshold": t2})


def _log_table(channel: ChannelModel) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(channel.transition())


def ml_decode(
    matrix: TestMatrix, y, k: int, channel: ChannelModel, *, limit: int = ML_SUBSET_LIMIT, chunk: int = 4096
) -> DecodeResult:
    """Maximum-likelihood estimate by exhaustive search over all ``k``-subsets.

    Ties go to the lexicographically smallest subset.  Raises
    :class:`EnumerationLimitError` if there are more than ``limit`` subsets and
    :class:`ImpossibleOutcomeError` if no subset can produce ``y``.
    """
    y = _check_dims(matrix, y)
    p = matrix.p
    if not 1 <= k <= p:
        raise DomainError("need 1 <= k <= p")
    total = math.comb(p, k)
    if total > limit:
        raise EnumerationLimitError(f"C({p},{k}) = {total} subsets exceeds the limit {limit}")

    logp = _log_table(channel)
    dense = matrix.to_dense()
    n_pos = int(y.sum())
    n_neg = y.size - n_pos

    best_val, best_idx = -math.inf, None
    combos = itertools.combinations(range(p), k)
    offset = 0
    while True:
        block = np.array(list(itertools.islice(combos, chunk)), dtype=np.int64)
        if block.size == 0:
            break
        u = dense[:, block].any(axis=2)  # (n, m)
        # Score from the four transition counts so that equally likely
        # subsets get bit-identical scores and the tie-break is exact.
        c11 = u[y].sum(axis=0)
        c10 = u[~y].sum(axis=0)
        counts = (n_neg - c10, n_pos - c11, c10, c11)
        scores = np.zeros(len(block))
        for c, lp in zip(counts, logp.ravel()):
            if lp == -math.inf:
                scores[c > 0] = -math.inf
            else:
                scores += c * lp
        j = int(np.argmax(scores))
        if scores[j] > best_val:
            best_val, best_idx = float(scores[j]), block[j]
        offset += len(block)
    if best_idx is None or best_val == -math.inf:
        raise ImpossibleOutcomeError("every candidate set has zero likelihood")
    return DecodeResult(np.asarray(best_idx), None, {"log_likelihood": best_val, "subsets": offset})


def decode(matrix: TestMatrix, y, config: DecoderConfig, channel: ChannelModel | None = None) -> DecodeResult:
    algo = config.algorithm
    if algo is Algorithm.COMP:
        return comp_decode(matrix, y)
    if algo is Algorithm.DD:
        return dd_decode(matrix, y)
    if algo is Algorithm.NDD_RZ:
        return ndd_rz_decode(matrix, y, config)
    if algo is Algorithm.NDD_Z:
        return ndd_z_decode(matrix, y, config)
    if algo is Algorithm.NDD_SYM:
        return ndd_sym_decode(matrix, y, config)
    if channel is None:
        raise ConfigError("ML decoding needs the channel model")
    return ml_decode(matrix, y, config.k, channel)
