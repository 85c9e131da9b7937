"""Primality testing, prime enumeration and integer factorization.

Factorization is trial division followed by Brent's variant of Pollard rho,
with an explicit iteration budget. Running out of budget raises
:class:`FactorizationIncomplete` instead of returning a partial answer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from math import gcd, isqrt

DEFAULT_TRIAL_BOUND = 10**6
DEFAULT_RHO_BUDGET = 10**7

_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
# The bases above give a deterministic test for n < 3.3e24.
_DETERMINISTIC_LIMIT = 3317044064679887385961981
# Extra fixed bases for larger n: error probability below 4**-len.
_EXTRA_BASES = (
    43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113,
    127, 131, 137, 139, 149, 151, 157, 163,
)


class FactorizationIncomplete(ArithmeticError):
    """The effort budget ran out before the value was completely factored."""

    def __init__(self, value, found, cofactor):
        self.value = value
        self.found = found
        self.cofactor = cofactor
        super().__init__(
            f"factorization of {value} incomplete: unfactored cofactor {cofactor}"
        )


def _is_strong_probable_prime(n: int, a: int, d: int, s: int) -> bool:
    x = pow(a, d, n)
    if x == 1 or x == n - 1:
        return True
    for _ in range(s - 1):
        x = x * x % n
        if x == n - 1:
            return True
    return False


def is_prime(n: int) -> bool:
    """Miller-Rabin; deterministic below 3.3e24, probabilistic (fixed bases) above."""
    if n < 2:
        return False
    for p in _SMALL_PRIMES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    bases = _SMALL_PRIMES if n < _DETERMINISTIC_LIMIT else _SMALL_PRIMES + _EXTRA_BASES
    return all(_is_strong_probable_prime(n, a, d, s) for a in bases)


@lru_cache(maxsize=8)
def primes_up_to(bound: int) -> tuple:
    """All primes <= bound (sieve of Eratosthenes)."""
    if bound < 2:
        return ()
    sieve = bytearray([1]) * (bound + 1)
    sieve[0] = sieve[1] = 0
    for p in range(2, isqrt(bound) + 1):
        if sieve[p]:
            sieve[p * p::p] = bytes(len(range(p * p, bound + 1, p)))
    return tuple(i for i, flag in enumerate(sieve) if flag)


def first_primes(count: int) -> tuple:
    """The first ``count`` primes."""
    if count <= 0:
        return ()
    if count < 6:
        return (2, 3, 5, 7, 11)[:count]
    # the k-th prime is below k (ln k + ln ln k) for k >= 6
    bound = int(count * (math.log(count) + math.log(math.log(count)))) + 1
    return primes_up_to(bound)[:count]


@dataclass(frozen=True)
class PrimeFactorization:
    value: int
    factors: tuple  # ((prime, exponent), ...) sorted by prime

    @property
    def primes(self) -> tuple:
        return tuple(p for p, _ in self.factors)

    def product(self) -> int:
        return math.prod(p**e for p, e in self.factors)


def trial_division(v: int, bound: int = DEFAULT_TRIAL_BOUND) -> tuple:
    """Strip prime factors <= bound. Returns ``({prime: exp}, cofactor)``."""
    found = {}
    for p in primes_up_to(bound):
        if p * p > v:
            break
        if v % p == 0:
            e = 0
            while v % p == 0:
                v //= p
                e += 1
            found[p] = e
    if 1 < v <= bound * bound:
        # no prime factor <= min(bound, sqrt v) remains, so v is prime
        found[v] = found.get(v, 0) + 1
        v = 1
    return found, v


def pollard_brent(n: int, budget: int, c: int = 1) -> tuple:
    """One Brent-rho run on composite ``n``. Returns ``(factor or None, steps used)``."""
    if n % 2 == 0:
        return 2, 0
    y, r, q, m = 2, 1, 1, 128
    g = 1
    steps = 0
    x = ys = y
    while g == 1:
        x = y
        for _ in range(r):
            y = (y * y + c) % n
        steps += r
        k = 0
        while k < r and g == 1:
            ys = y
            for _ in range(min(m, r - k)):
                y = (y * y + c) % n
                q = q * abs(x - y) % n
            steps += min(m, r - k)
            g = gcd(q, n)
            k += m
        r *= 2
        if steps > budget and g == 1:
            return None, steps
    if g == n:
        g = 1
        while g == 1:
            ys = (ys * ys + c) % n
            g = gcd(abs(x - ys), n)
            steps += 1
        if g == n:
            return None, steps
    return g, steps


def integer_root(n: int, k: int) -> int:
    """floor(n ** (1/k)) for n >= 0, exactly."""
    if n < 2:
        return n
    x = 1 << -(-n.bit_length() // k)  # >= the root
    while True:
        y = ((k - 1) * x + n // x ** (k - 1)) // k
        if y >= x:
            return x
        x = y


def _perfect_power(n: int):
    for k in primes_up_to(n.bit_length()):
        r = integer_root(n, k)
        if r**k == n:
            return r, k
    return None


def _split_completely(n: int, budget: int, out: dict, leftover: list) -> None:
    if n == 1:
        return
    if is_prime(n):
        out[n] = out.get(n, 0) + 1
        return
    power = _perfect_power(n)
    if power is not None:
        r, k = power
        for _ in range(k):
            _split_completely(r, budget, out, leftover)
        return
    remaining = budget
    c = 1
    while remaining > 0:
        d, used = pollard_brent(n, remaining, c)
        remaining -= used
        if d is not None:
            _split_completely(d, budget, out, leftover)
            _split_completely(n // d, budget, out, leftover)
            return
        c += 1
    leftover.append(n)


def factorize(
    v: int,
    trial_bound: int = DEFAULT_TRIAL_BOUND,
    rho_budget: int = DEFAULT_RHO_BUDGET,
) -> PrimeFactorization:
    """Complete prime factorization of ``v >= 1``.

    ``rho_budget`` caps the Pollard-rho iterations spent on each composite
    cofactor left after trial division.
    """
    v = int(v)
    if v < 1:
        raise ValueError(f"factorize needs v >= 1, got {v}")
    found, rest = trial_division(v, trial_bound)
    leftover = []
    _split_completely(rest, rho_budget, found, leftover)
    if leftover:
        raise FactorizationIncomplete(v, tuple(sorted(found.items())), math.prod(leftover))
    return PrimeFactorization(v, tuple(sorted(found.items())))
