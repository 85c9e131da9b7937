"""Closed-form surjectivity and cokernel probabilities.

Exact values are returned as :class:`fractions.Fraction`. Infinite products
and zeta values are evaluated with mpmath at ``WORK_DPS`` digits and come
back as :class:`HighPrecisionValue`, carrying a bound on the truncation and
evaluation error.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

import mpmath
from mpmath import mp, mpf

from .factorization import is_prime

WORK_DPS = 60
PRODUCT_TERMS = 200
_ROUNDING = mpf(10) ** (-(WORK_DPS - 8))


@dataclass(frozen=True)
class HighPrecisionValue:
    value: mpf
    error_bound: mpf
    exact: bool = False

    def __post_init__(self):
        if not (self.error_bound >= 0 and mpmath.isfinite(self.error_bound)):
            raise ValueError(f"bad error bound {self.error_bound}")

    def __float__(self) -> float:
        return float(self.value)

    @property
    def lower(self) -> mpf:
        return self.value - self.error_bound

    @property
    def upper(self) -> mpf:
        return self.value + self.error_bound

    def contains(self, x) -> bool:
        return self.lower <= x <= self.upper

    def format(self, digits: int = 20) -> str:
        if self.exact:
            text = "0" if self.value == 0 else mpmath.nstr(self.value, digits)
            return f"{text} (exact)"
        return (
            f"{mpmath.nstr(self.value, digits)} "
            f"+/- {mpmath.nstr(self.error_bound, 3)}"
        )


@dataclass(frozen=True)
class FiniteAbelianPGroup:
    """The group ⊕ Z/p^λi for a partition λ (empty for the trivial group)."""

    p: int
    partition: tuple = ()

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"{self.p} is not prime")
        part = tuple(int(x) for x in self.partition)
        if any(x < 1 for x in part) or list(part) != sorted(part, reverse=True):
            raise ValueError(f"partition must be weakly decreasing positive, got {part}")
        object.__setattr__(self, "partition", part)

    @property
    def order(self) -> int:
        return self.p ** sum(self.partition)

    def __str__(self) -> str:
        if not self.partition:
            return "1"
        return " x ".join(f"Z/{self.p ** e}" for e in self.partition)


def padic_surjectivity_probability(n: int, m: int, p: int) -> Fraction:
    """P(n x m Haar matrix over Z_p is surjective) = prod_{k=m-n+1}^{m} (1 - p^-k)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if m < n:
        raise ValueError(f"need m >= n, got n={n}, m={m}")
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    out = Fraction(1)
    for k in range(m - n + 1, m + 1):
        out *= 1 - Fraction(1, p**k)
    return out


@lru_cache(maxsize=None)
def zeta_int(k: int, terms: int = 30, corrections: int = 30) -> HighPrecisionValue:
    """zeta(k) for an integer k >= 2 by Euler-Maclaurin summation.

    The remainder for real arguments is bounded by the first omitted
    correction term.
    """
    if k < 2:
        raise ValueError("zeta_int needs k >= 2")
    N = terms
    with mp.workdps(WORK_DPS + 10):
        s = mpmath.fsum(mpf(j) ** -k for j in range(1, N))
        s += mpf(N) ** (1 - k) / (k - 1) + mpf(N) ** -k / 2
        rising = mpf(k)  # k (k+1) ... (k + 2i - 2)
        last = mpf(0)
        for i in range(1, corrections + 2):
            term = (
                mpmath.bernoulli(2 * i) / mpmath.factorial(2 * i)
                * rising * mpf(N) ** (-k - 2 * i + 1)
            )
            if i == corrections + 1:
                last = abs(term)
                break
            s += term
            rising *= (k + 2 * i - 1) * (k + 2 * i)
        return HighPrecisionValue(+s, last + _ROUNDING)


def _inverse_zeta_product(ks: Iterable[int]) -> tuple:
    value = mpf(1)
    rel = mpf(0)
    with mp.workdps(WORK_DPS):
        for k in ks:
            z = zeta_int(k)
            value /= z.value
            rel += z.error_bound / (z.value - z.error_bound)
    return value, rel


def zeta_product_limit(u: int) -> HighPrecisionValue:
    """prod_{k=u+1}^inf 1/zeta(k); exactly 0 for u = 0."""
    if u < 0:
        raise ValueError("u must be nonnegative")
    if u == 0:
        return HighPrecisionValue(mpf(0), mpf(0), exact=True)
    K = u + PRODUCT_TERMS
    value, rel = _inverse_zeta_product(range(u + 1, K + 1))
    with mp.workdps(WORK_DPS):
        # zeta(k) - 1 < 2^(1-k), so the omitted factors lie in [1 - 2^(1-K), 1].
        tail = mpf(2) ** (1 - K)
        return HighPrecisionValue(value, value * (2 * rel + tail) + _ROUNDING)


def finite_n_zhat_probability(n: int, u: int) -> HighPrecisionValue:
    """P(n x (n+u) Haar matrix over Z-hat is surjective) = prod_{k=u+1}^{n+u} 1/zeta(k)."""
    if n < 1 or u < 0:
        raise ValueError("need n >= 1 and u >= 0")
    if u == 0:
        return HighPrecisionValue(mpf(0), mpf(0), exact=True)
    value, rel = _inverse_zeta_product(range(u + 1, n + u + 1))
    return HighPrecisionValue(value, value * 2 * rel + _ROUNDING)


def aut_order(G: FiniteAbelianPGroup) -> int:
    """|Aut(G)| for an abelian p-group, from its partition (closed-form product over parts)."""
    p = G.p
    e = sorted(G.partition)
    r = len(e)
    d = [max(l for l in range(1, r + 1) if e[l - 1] == e[k]) for k in range(r)]
    c = [min(l for l in range(1, r + 1) if e[l - 1] == e[k]) for k in range(r)]
    out = 1
    for k in range(1, r + 1):
        out *= p ** d[k - 1] - p ** (k - 1)
    for j in range(r):
        out *= p ** (e[j] * (r - d[j]))
    for i in range(r):
        out *= p ** ((e[i] - 1) * (r - c[i] + 1))
    return out


def local_product(p: int, u: int, terms: int = PRODUCT_TERMS) -> HighPrecisionValue:
    """prod_{k=1}^inf (1 - p^(-k-u)), truncated after ``terms`` factors."""
    with mp.workdps(WORK_DPS):
        value = mpf(1)
        for k in range(1, terms + 1):
            value *= 1 - mpf(p) ** (-k - u)
        # omitted factors lie in [1 - p^(-terms-u)/(p-1), 1]
        tail = mpf(p) ** (-terms - u) / (p - 1)
        return HighPrecisionValue(value, value * tail + _ROUNDING)


def wood_mass(groups: Sequence[FiniteAbelianPGroup], u: int, primes: Iterable[int]) -> HighPrecisionValue:
    """Limiting probability that the P-part of the cokernel is the given group.

    ``groups`` lists the Sylow parts (distinct primes, trivial ones may be
    omitted); every prime carrying a nontrivial part must be in ``primes``.
    """
    primes = sorted(set(primes))
    if u < 0:
        raise ValueError("u must be nonnegative")
    seen = set()
    order, aut = 1, 1
    for G in groups:
        if G.p in seen:
            raise ValueError(f"prime {G.p} listed twice")
        seen.add(G.p)
        if G.partition and G.p not in primes:
            raise ValueError(f"prime {G.p} of G is missing from P={primes}")
        order *= G.order
        aut *= aut_order(G)
    value = mpf(1)
    rel = mpf(0)
    with mp.workdps(WORK_DPS):
        for p in primes:
            lp = local_product(p, u)
            value *= lp.value
            rel += lp.error_bound / (lp.value - lp.error_bound)
        value /= mpf(order) ** u * aut
        return HighPrecisionValue(value, value * 2 * rel + _ROUNDING)


def partitions(size: int) -> Iterator[tuple]:
    """Weakly decreasing partitions of ``size``."""
    def rec(remaining, largest):
        if remaining == 0:
            yield ()
            return
        for first in range(min(remaining, largest), 0, -1):
            for rest in rec(remaining - first, first):
                yield (first,) + rest
    yield from rec(size, size)


def partitions_up_to(max_size: int) -> list:
    return [lam for s in range(max_size + 1) for lam in partitions(s)]
