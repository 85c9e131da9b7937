"""Deciding surjectivity of A: Z^m -> Z^n, with checkable certificates.

Two independent routes are provided:

* :func:`is_surjective_snf` reads the answer off the Smith normal form.
* :func:`is_surjective_fast` picks a nonsingular n x n column block B,
  factors det(B) and checks that A has full rank modulo each prime divisor.
  Every prime outside that set already sees B as invertible, so this is a
  complete local-global test.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional, Union

from .exact_linalg import (
    IntMatrix,
    determinant,
    rank_mod_p,
    smith_normal_form,
    smith_normal_form_modular,
    full_rank_modulus,
)
from .factorization import (
    DEFAULT_RHO_BUDGET,
    DEFAULT_TRIAL_BOUND,
    FactorizationIncomplete,
    factorize,
    is_prime,
    trial_division,
)

DEFAULT_RETRIES = 8


@dataclass(frozen=True)
class PrimeWitness:
    """A has rank ``rank`` < n modulo the prime ``p``."""

    p: int
    rank: int

    def verify(self, A: IntMatrix) -> bool:
        return is_prime(self.p) and rank_mod_p(A, self.p) == self.rank < A.rows


@dataclass(frozen=True)
class InvariantFactorWitness:
    """Nontrivial cokernel: torsion factors > 1 and/or a free part.

    ``prime`` is a small prime dividing the torsion, when one was found.
    """

    torsion: tuple
    free_rank: int
    prime: Optional[int] = None

    def verify(self, A: IntMatrix) -> bool:
        if not self.torsion and self.free_rank == 0:
            return False
        snf = smith_normal_form(A)
        if snf.torsion != self.torsion or snf.free_rank != self.free_rank:
            return False
        if self.prime is not None:
            return is_prime(self.prime) and rank_mod_p(A, self.prime) < A.rows
        return True


@dataclass(frozen=True)
class FastPathCertificate:
    """Columns of B, det(B), and the primes of det(B) at which A keeps full rank."""

    columns: tuple
    det: int
    primes: tuple

    def verify(self, A: IntMatrix) -> bool:
        n = A.rows
        if len(self.columns) != n or determinant(A.select_columns(self.columns)) != self.det:
            return False
        if self.det == 0:
            return False
        rest = abs(self.det)
        for p in self.primes:
            if not is_prime(p) or rest % p:
                return False
            while rest % p == 0:
                rest //= p
        if rest != 1:
            return False
        return all(rank_mod_p(A, p) == n for p in self.primes)


Witness = Union[PrimeWitness, InvariantFactorWitness, FastPathCertificate, None]


@dataclass(frozen=True)
class SurjectivityVerdict:
    surjective: bool
    method: str  # "snf" or "fast_path"
    witness: Witness = None

    def verify(self, A: IntMatrix) -> bool:
        """Independently re-check the witness against ``A``."""
        if self.surjective:
            if isinstance(self.witness, FastPathCertificate):
                return self.witness.verify(A)
            return is_surjective_snf(A).surjective
        return self.witness is not None and self.witness.verify(A)

    @property
    def prime(self) -> Optional[int]:
        """A prime at which A fails to be surjective, if the witness names one."""
        return getattr(self.witness, "p", None) or getattr(self.witness, "prime", None)


def _smallest_prime_divisor(values, trial_bound: int = 10**4) -> Optional[int]:
    best = None
    for d in values:
        found, rest = trial_division(d, trial_bound)
        candidates = list(found)
        if not candidates and rest > 1:
            try:
                candidates = list(factorize(rest, trial_bound, 10**4).primes)
            except FactorizationIncomplete:
                continue
        if candidates:
            p = min(candidates)
            best = p if best is None else min(best, p)
        if best == 2:
            break
    return best


def is_surjective_snf(A: IntMatrix) -> SurjectivityVerdict:
    """Surjective iff rank = n and every invariant factor is 1."""
    snf = smith_normal_form(A)
    if snf.free_rank == 0 and not snf.torsion:
        return SurjectivityVerdict(True, "snf", None)
    prime = _smallest_prime_divisor(snf.torsion[:1]) if snf.torsion else None
    return SurjectivityVerdict(
        False, "snf", InvariantFactorWitness(snf.torsion, snf.free_rank, prime)
    )


def _candidate_blocks(m: int, n: int, seed: int, retries: int):
    yield tuple(range(n))
    rng = random.Random(seed)
    for _ in range(retries):
        yield tuple(sorted(rng.sample(range(m), n)))


def is_surjective_fast(
    A: IntMatrix,
    trial_bound: int = DEFAULT_TRIAL_BOUND,
    rho_budget: int = DEFAULT_RHO_BUDGET,
    seed: int = 0,
    retries: int = DEFAULT_RETRIES,
) -> SurjectivityVerdict:
    """Fast surjectivity test through det(B) of one nonsingular column block.

    Falls back to :func:`is_surjective_snf` (``method == "snf"``) when no
    nonsingular block turns up within ``retries`` random column subsets, or
    when det(B) cannot be factored within ``rho_budget``.
    """
    n, m = A.rows, A.cols
    if n == 0:
        return SurjectivityVerdict(True, "fast_path", FastPathCertificate((), 1, ()))
    if m < n:
        return is_surjective_snf(A)

    columns, det = None, 0
    for cols in _candidate_blocks(m, n, seed, retries):
        det = determinant(A.select_columns(cols))
        if det:
            columns = cols
            break
    if columns is None:
        return is_surjective_snf(A)
    if abs(det) == 1:
        return SurjectivityVerdict(True, "fast_path", FastPathCertificate(columns, det, ()))

    small, rest = trial_division(abs(det), trial_bound)
    for p in sorted(small):
        r = rank_mod_p(A, p)
        if r < n:
            return SurjectivityVerdict(False, "fast_path", PrimeWitness(p, r))
    large = ()
    if rest > 1:
        try:
            large = factorize(rest, trial_bound, rho_budget).primes
        except FactorizationIncomplete:
            return is_surjective_snf(A)
        for p in large:
            r = rank_mod_p(A, p)
            if r < n:
                return SurjectivityVerdict(False, "fast_path", PrimeWitness(p, r))
    primes = tuple(sorted(set(small) | set(large)))
    return SurjectivityVerdict(True, "fast_path", FastPathCertificate(columns, det, primes))


def sylow_partition(invariant_factors, p: int) -> tuple:
    """Exponents of ``p`` in the invariant factors, as a weakly decreasing partition."""
    parts = []
    for d in invariant_factors:
        e = 0
        while d % p == 0:
            d //= p
            e += 1
        if e:
            parts.append(e)
    return tuple(sorted(parts, reverse=True))


@dataclass(frozen=True)
class CokernelDescription:
    """Z^n / A Z^m as torsion invariant factors plus a free rank."""

    torsion: tuple
    free_rank: int

    @property
    def is_trivial(self) -> bool:
        return not self.torsion and self.free_rank == 0

    @property
    def order(self) -> Optional[int]:
        """|cokernel|, or None when it is infinite."""
        if self.free_rank:
            return None
        out = 1
        for d in self.torsion:
            out *= d
        return out

    def sylow(self, p: int) -> tuple:
        return sylow_partition(self.torsion, p)

    def primes(self) -> tuple:
        """Primes dividing the torsion (requires factoring the largest factor)."""
        if not self.torsion:
            return ()
        return factorize(self.torsion[-1]).primes


# Above this many bits per entry the modular Smith form is used when possible.
_MODULAR_SNF_BITS = 256


def cokernel(A: IntMatrix) -> CokernelDescription:
    if A.entries and max(abs(x) for x in A.entries).bit_length() > _MODULAR_SNF_BITS:
        D = full_rank_modulus(A)
        snf = smith_normal_form_modular(A, D) if D else smith_normal_form(A)
    else:
        snf = smith_normal_form(A)
    return CokernelDescription(snf.torsion, snf.free_rank)
