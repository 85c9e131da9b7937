"""Random integer matrix laws and a reproducible sampler.

Random streams: each matrix draw gets its own Philox counter-based stream,
keyed through ``numpy.random.SeedSequence(master_seed, spawn_key=stream +
(trial_index,))``. Entries consume raw 64-bit words from that stream in
row-major order, so entry ``k`` of trial ``t`` depends only on
``(master_seed, stream, t, k)``. Only raw words are used (never numpy's
distribution methods), which keeps draws identical across numpy versions.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .exact_linalg import IntMatrix
from .factorization import first_primes, is_prime

# |P| = 2^(nm) * n first primes; nm <= 12 keeps this at or below 12 * 4096.
MAX_ADVERSARIAL_PRIMES = 12 * 2**12


class ResourceLimitError(RuntimeError):
    """A requested shape is too large to construct at desk scale."""


@dataclass(frozen=True)
class SeededSource:
    master_seed: int
    stream: tuple = ()

    def child(self, *key: int) -> "SeededSource":
        return SeededSource(self.master_seed, self.stream + tuple(int(k) for k in key))

    def words(self, trial_index: int) -> "WordStream":
        seq = np.random.SeedSequence(
            self.master_seed, spawn_key=self.stream + (int(trial_index),)
        )
        return WordStream(np.random.Philox(seq))


class WordStream:
    """Sequential reader of unsigned 64-bit words with exact integer helpers."""

    _CHUNK = 256

    def __init__(self, bit_generator):
        self._bg = bit_generator
        self._buf = []
        self._pos = 0

    def word(self) -> int:
        if self._pos == len(self._buf):
            self._buf = self._bg.random_raw(self._CHUNK).tolist()
            self._pos = 0
        w = self._buf[self._pos]
        self._pos += 1
        return w

    def bits(self, count: int) -> int:
        out = 0
        shift = 0
        while shift < count:
            out |= self.word() << shift
            shift += 64
        return out & ((1 << count) - 1)

    def below(self, bound: int) -> int:
        """Uniform integer in [0, bound) by rejection sampling."""
        if bound <= 1:
            return 0
        nbits = (bound - 1).bit_length()
        while True:
            x = self.bits(nbits)
            if x < bound:
                return x

    def unit_interval(self) -> Fraction:
        return Fraction(self.word() >> 11, 1 << 53)


def _validate_prime(p) -> None:
    if not isinstance(p, int) or not is_prime(p):
        raise ValueError(f"p must be prime, got {p!r}")


@dataclass(frozen=True)
class Bernoulli:
    """Entries are 1 with probability q, else 0."""

    q: float = 0.5
    name = "bernoulli"

    def __post_init__(self):
        if not 0 < self.q < 1:
            raise ValueError(f"Bernoulli needs 0 < q < 1, got {self.q}")

    def draw(self, ws: WordStream, count: int) -> list:
        threshold = round(self.q * (1 << 53))
        return [1 if (ws.word() >> 11) < threshold else 0 for _ in range(count)]


@dataclass(frozen=True)
class UniformRange:
    """Entries uniform on {-k, ..., k}."""

    k: int = 1
    name = "uniform"

    def __post_init__(self):
        if not isinstance(self.k, int) or self.k < 1:
            raise ValueError(f"UniformRange needs integer k >= 1, got {self.k!r}")

    def draw(self, ws: WordStream, count: int) -> list:
        width = 2 * self.k + 1
        return [ws.below(width) - self.k for _ in range(count)]


@dataclass(frozen=True)
class SignedUnit:
    """Entries +1 or -1 with probability 1/2 each."""

    name = "signed"

    def draw(self, ws: WordStream, count: int) -> list:
        return [1 if ws.word() & 1 else -1 for _ in range(count)]


@dataclass(frozen=True)
class TruncatedHaar:
    """Haar-random p-adic integers represented by their residue mod p^L."""

    p: int = 2
    L: int = 3
    name = "haar"

    def __post_init__(self):
        _validate_prime(self.p)
        if not isinstance(self.L, int) or self.L < 1:
            raise ValueError(f"TruncatedHaar needs integer L >= 1, got {self.L!r}")

    @property
    def modulus(self) -> int:
        return self.p**self.L

    def draw(self, ws: WordStream, count: int) -> list:
        mod = self.modulus
        return [ws.below(mod) for _ in range(count)]


@dataclass(frozen=True)
class Adversarial:
    """Each entry is the product of a random half of the first 2^(nm) n primes.

    ``n`` and ``m`` are taken from the sampled shape; set them only to draw
    scalars outside of a matrix (e.g. for balance checks).
    """

    n: Optional[int] = None
    m: Optional[int] = None
    name = "adversarial"

    def draw(self, ws: WordStream, count: int) -> list:
        if self.n is None or self.m is None:
            raise ValueError("Adversarial scalar draws need n and m")
        primes = adversarial_primes(self.n, self.m)
        return [_subset_product(primes, ws.bits(len(primes))) for _ in range(count)]


MatrixDistribution = (Bernoulli, UniformRange, SignedUnit, TruncatedHaar, Adversarial)
_BY_NAME = {cls.name: cls for cls in MatrixDistribution}


def adversarial_prime_count(n: int, m: int) -> int:
    return 2 ** (n * m) * n


def adversarial_primes(n: int, m: int) -> tuple:
    if n < 1 or m < 1:
        raise ValueError(f"adversarial shape must be positive, got {n}x{m}")
    if n * m > 64 or adversarial_prime_count(n, m) > MAX_ADVERSARIAL_PRIMES:
        raise ResourceLimitError(
            f"adversarial {n}x{m} needs {2**(n*m)}*{n} primes "
            f"(limit {MAX_ADVERSARIAL_PRIMES})"
        )
    return first_primes(adversarial_prime_count(n, m))


def _subset_product(primes: tuple, mask: int) -> int:
    return math.prod(p for i, p in enumerate(primes) if mask >> i & 1)


def adversarial_subsets(n: int, m: int, source: SeededSource, trial_index: int) -> list:
    """Row-major list of the prime subsets behind :func:`sample_adversarial`."""
    primes = adversarial_primes(n, m)
    ws = source.words(trial_index)
    out = []
    for _ in range(n * m):
        mask = ws.bits(len(primes))
        out.append(tuple(p for i, p in enumerate(primes) if mask >> i & 1))
    return out


def sample_adversarial(n: int, m: int, source: SeededSource, trial_index: int) -> IntMatrix:
    primes = adversarial_primes(n, m)
    ws = source.words(trial_index)
    return IntMatrix(
        n, m, tuple(_subset_product(primes, ws.bits(len(primes))) for _ in range(n * m))
    )


def sample(dist, rows: int, cols: int, source: SeededSource, trial_index: int) -> IntMatrix:
    """Draw one ``rows x cols`` matrix with i.i.d. entries from ``dist``."""
    if rows < 0 or cols < 0:
        raise ValueError(f"invalid shape {rows}x{cols}")
    if isinstance(dist, Adversarial):
        return sample_adversarial(rows, cols, source, trial_index)
    ws = source.words(trial_index)
    return IntMatrix(rows, cols, tuple(dist.draw(ws, rows * cols)))


def validate_balance(dist, p: int, samples: int = 10**4, seed: int = 0) -> float:
    """Largest empirical frequency of a single residue class mod ``p``.

    ``1 - validate_balance(...)`` is the empirical balance parameter at p.
    """
    _validate_prime(p)
    if samples < 1000:
        raise ValueError("validate_balance needs at least 1000 samples")
    ws = SeededSource(seed, (0xBA1,)).words(p)
    counts = {}
    for x in dist.draw(ws, samples):
        r = x % p
        counts[r] = counts.get(r, 0) + 1
    return max(counts.values()) / samples


def distribution_to_config(dist) -> dict:
    """Flat key/value description, e.g. ``{"distribution": "bernoulli", "q": 0.5}``."""
    out = {"distribution": dist.name}
    out.update({k: v for k, v in asdict(dist).items() if v is not None})
    return out


def distribution_from_config(cfg: dict):
    cfg = dict(cfg)
    name = cfg.pop("distribution", None)
    if name not in _BY_NAME:
        raise ValueError(f"unknown distribution {name!r}; expected one of {sorted(_BY_NAME)}")
    return _BY_NAME[name](**cfg)
