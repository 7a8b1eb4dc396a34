"""Random group-testing instances: defective sets, Bernoulli designs and noise.

Randomness comes from counter-based Philox generators.  A master seed and a
trial index are combined through ``numpy.random.SeedSequence`` spawn keys,
with a separate stream per purpose, so trials can be generated in any order
or in parallel and still agree bit for bit.

Test matrices are stored row-packed: test ``i`` is a row of little-endian
``uint64`` words in which bit ``j`` is set when item ``j`` is in the test.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DomainError

WORD_BITS = 64


class Stream(enum.IntEnum):
    DEFECTIVES = 0
    MATRIX = 1
    NOISE = 2


def derive_seed(master_seed: int, trial: int, stream: Stream) -> np.random.SeedSequence:
    """Seed sequence for one (trial, purpose) pair of an experiment."""
    if master_seed < 0 or trial < 0:
        raise ConfigError("seeds and trial indices must be non-negative")
    return np.random.SeedSequence(int(master_seed), spawn_key=(int(trial), int(stream)))


def make_rng(seed) -> np.random.Generator:
    """Philox generator from an int, a SeedSequence or an existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(int(seed))
    return np.random.Generator(np.random.Philox(seed))


# --- channels --------------------------------------------------------------


class ChannelKind(enum.Enum):
    NOISELESS = "noiseless"
    Z = "z"
    REVERSE_Z = "rz"
    SYMMETRIC = "sym"


@dataclass(frozen=True)
class ChannelModel:
    kind: ChannelKind
    rho: float = 0.0

    def __post_init__(self):
        if not isinstance(self.kind, ChannelKind):
            object.__setattr__(self, "kind", ChannelKind(self.kind))
        if self.kind is ChannelKind.NOISELESS and self.rho != 0.0:
            raise ConfigError("the noiseless channel requires rho = 0")
        if not 0.0 <= self.rho < 1.0:
            raise ConfigError(f"rho must lie in [0, 1), got {self.rho}")

    @classmethod
    def parse(cls, name: str, rho: float = 0.0) -> "ChannelModel":
        aliases = {"none": "noiseless", "reverse-z": "rz", "reverse_z": "rz", "bsc": "sym", "symmetric": "sym"}
        name = aliases.get(name.lower(), name.lower())
        kind = ChannelKind(name)
        return cls(kind, 0.0 if kind is ChannelKind.NOISELESS else float(rho))

    def transition(self) -> np.ndarray:
        """``P[y | u]`` as a 2x2 array indexed ``[u, y]``."""
        r = self.rho
        table = {
            ChannelKind.NOISELESS: [[1.0, 0.0], [0.0, 1.0]],
            ChannelKind.Z: [[1.0, 0.0], [r, 1.0 - r]],
            ChannelKind.REVERSE_Z: [[1.0 - r, r], [0.0, 1.0]],
            ChannelKind.SYMMETRIC: [[1.0 - r, r], [r, 1.0 - r]],
        }
        return np.array(table[self.kind])


NOISELESS = ChannelModel(ChannelKind.NOISELESS)


# --- test matrix -----------------------------------------------------------


def n_words(p: int) -> int:
    return (p + WORD_BITS - 1) // WORD_BITS


def pack_items(items, p: int) -> np.ndarray:
    """Bit mask over ``p`` items with the given indices set."""
    items = np.asarray(items, dtype=np.int64).ravel()
    if items.size and (items.min() < 0 or items.max() >= p):
        raise DomainError("item index out of range")
    mask = np.zeros(n_words(p), dtype=np.uint64)
    np.bitwise_or.at(mask, items // WORD_BITS, np.left_shift(np.uint64(1), (items % WORD_BITS).astype(np.uint64)))
    return mask


def unpack_mask(mask: np.ndarray, p: int) -> np.ndarray:
    """Boolean vector of length ``p`` from a packed mask (or rows of masks)."""
    bits = np.unpackbits(np.ascontiguousarray(mask, dtype="<u8").view(np.uint8), axis=-1, bitorder="little")
    return bits[..., :p].astype(bool)


@dataclass(frozen=True, eq=False)
class TestMatrix:
    """An ``n x p`` binary design, rows = tests, stored bit-packed."""

    __test__ = False

    words: np.ndarray
    p: int
    k: int | None = None
    nu: float | None = None
    seed: int | None = None
    _dense: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        words = np.ascontiguousarray(self.words, dtype=np.uint64)
        if words.ndim != 2 or words.shape[1] != n_words(self.p):
            raise DomainError("packed words have the wrong shape for p items")
        if words.shape[0] < 1 or self.p < 1:
            raise DomainError("a test matrix needs n >= 1 and p >= 1")
        words.setflags(write=False)
        object.__setattr__(self, "words", words)

    @property
    def n(self) -> int:
        return self.words.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.n, self.p

    @classmethod
    def from_dense(cls, dense, **meta) -> "TestMatrix":
        dense = np.asarray(dense).astype(bool)
        if dense.ndim != 2:
            raise DomainError("dense matrix must be 2-D")
        n, p = dense.shape
        padded = np.zeros((n, n_words(p) * WORD_BITS), dtype=bool)
        padded[:, :p] = dense
        words = np.packbits(padded, axis=1, bitorder="little").view("<u8")
        return cls(words.astype(np.uint64), p, **meta)

    @classmethod
    def from_rows(cls, rows, p: int, **meta) -> "TestMatrix":
        """Build from a list of per-test item index lists."""
        words = np.stack([pack_items(r, p) for r in rows]) if len(rows) else np.zeros((0, n_words(p)), np.uint64)
        return cls(words, p, **meta)

    def to_dense(self) -> np.ndarray:
        if not self._dense:
            self._dense.append(unpack_mask(self.words, self.p))
        return self._dense[0]

    def row_items(self, i: int) -> np.ndarray:
        return np.flatnonzero(unpack_mask(self.words[i], self.p))

    def intersects(self, mask: np.ndarray) -> np.ndarray:
        """Per-test flag: does the test contain any item of ``mask``."""
        return np.any(self.words & mask, axis=1)

    def count_in(self, mask: np.ndarray) -> np.ndarray:
        """Per-test number of items of ``mask`` in the test."""
        return np.bitwise_count(self.words & mask).sum(axis=1, dtype=np.int64)

    def column_counts(self, tests: np.ndarray | None = None) -> np.ndarray:
        """Number of (selected) tests each item appears in."""
        dense = self.to_dense()
        if tests is not None:
            dense = dense[np.asarray(tests, dtype=bool)]
        return dense.sum(axis=0, dtype=np.int64)

    def density(self) -> float:
        return float(np.bitwise_count(self.words).sum()) / (self.n * self.p)

    def dump(self, path) -> None:
        """Write the text format: header ``n p k nu seed``, then one test per line."""
        k = -1 if self.k is None else self.k
        nu = "nan" if self.nu is None else repr(float(self.nu))
        seed = -1 if self.seed is None else self.seed
        lines = [f"{self.n} {self.p} {k} {nu} {seed}"]
        lines += [" ".join(map(str, self.row_items(i))) for i in range(self.n)]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "TestMatrix":
        text = Path(path).read_text(encoding="utf-8").split("\n")
        n, p, k, nu, seed = text[0].split()
        rows = [[int(t) for t in line.split()] for line in text[1 : 1 + int(n)]]
        nu_f = float(nu)
        return cls.from_rows(
            rows,
            int(p),
            k=None if int(k) < 0 else int(k),
            nu=None if np.isnan(nu_f) else nu_f,
            seed=None if int(seed) < 0 else int(seed),
        )

    def __eq__(self, other) -> bool:
        return isinstance(other, TestMatrix) and self.p == other.p and np.array_equal(self.words, other.words)

    __hash__ = None


# --- generators ------------------------------------------------------------


def sample_defective_set(p: int, k: int, seed) -> np.ndarray:
    """Uniformly random ``k``-subset of ``range(p)``, sorted."""
    if not 1 <= k <= p:
        raise DomainError(f"need 1 <= k <= p, got p={p}, k={k}")
    rng = make_rng(seed)
    return np.sort(rng.choice(p, size=k, replace=False)).astype(np.int64)


def generate_bernoulli_matrix(n: int, p: int, k: int, nu: float, seed) -> TestMatrix:
    """Each item joins each test independently with probability ``nu/k``.

    Ones are placed by drawing geometric gaps over the flattened ``n*p``
    entries, so the cost scales with the number of ones rather than ``n*p``.
    """
    if n < 1 or p < 1 or k < 1:
        raise DomainError("need n, p, k >= 1")
    q = nu / k
    if not 0.0 <= q <= 1.0:
        raise DomainError(f"nu/k must lie in [0, 1], got {q}")
    meta = dict(k=k, nu=float(nu), seed=seed if isinstance(seed, (int, np.integer)) else None)
    total = n * p
    words = np.zeros((n, n_words(p)), dtype=np.uint64)
    if q > 0.0:
        rng = make_rng(seed)
        if q == 1.0:
            flat = np.arange(total, dtype=np.int64)
        else:
            chunks, pos = [], -1
            batch = max(int(total * q * 1.1) + 64, 1024)
            while True:
                gaps = rng.geometric(q, size=batch)
                idx = pos + np.cumsum(gaps)
                chunks.append(idx[idx < total])
                if idx[-1] >= total:
                    break
                pos = int(idx[-1])
            flat = np.concatenate(chunks)
        rows, cols = np.divmod(flat, p)
        bits = np.left_shift(np.uint64(1), (cols % WORD_BITS).astype(np.uint64))
        np.bitwise_or.at(words, (rows, cols // WORD_BITS), bits)
    return TestMatrix(words, p, **meta)


def noiseless_outcomes(matrix: TestMatrix, defectives) -> np.ndarray:
    """OR of the defective columns: test ``i`` is positive iff it holds a defective."""
    return matrix.intersects(pack_items(defectives, matrix.p))


@dataclass(frozen=True)
class OutcomeVector:
    u: np.ndarray
    y: np.ndarray
    flips: np.ndarray


def apply_channel(u, channel: ChannelModel, seed) -> OutcomeVector:
    """Pass noiseless outcomes through the channel, independently per test."""
    u = np.asarray(u, dtype=bool)
    if channel.kind is ChannelKind.NOISELESS or channel.rho == 0.0:
        flips = np.zeros_like(u)
    else:
        draw = make_rng(seed).random(u.shape) < channel.rho
        if channel.kind is ChannelKind.Z:
            flips = draw & u
        elif channel.kind is ChannelKind.REVERSE_Z:
            flips = draw & ~u
        else:
            flips = draw
    return OutcomeVector(u, u ^ flips, flips)
