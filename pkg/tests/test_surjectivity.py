import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from intsurj.distributions import (
    Adversarial,
    Bernoulli,
    SeededSource,
    SignedUnit,
    TruncatedHaar,
    UniformRange,
    sample,
)
from intsurj.exact_linalg import IntMatrix, rank_mod_p, smith_normal_form
from intsurj.factorization import factorize
from intsurj.surjectivity import (
    FastPathCertificate,
    InvariantFactorWitness,
    PrimeWitness,
    cokernel,
    is_surjective_fast,
    is_surjective_snf,
)

from oracles import minor_gcd_invariant_factors

M = IntMatrix.from_rows


def test_snf_examples():
    assert is_surjective_snf(IntMatrix.identity(2)).surjective
    v = is_surjective_snf(M([[2]]))
    assert not v.surjective and v.prime == 2
    v = is_surjective_snf(M([[1, 2, 3], [4, 5, 6]]))
    assert not v.surjective
    assert v.witness.torsion == (3,)
    assert minor_gcd_invariant_factors([[1, 2, 3], [4, 5, 6]]) == [1, 3]
    assert v.verify(M([[1, 2, 3], [4, 5, 6]]))


def test_snf_more_rows_than_columns():
    A = M([[1], [0]])
    v = is_surjective_snf(A)
    assert not v.surjective and v.witness.free_rank == 1
    assert v.verify(A)
    assert not is_surjective_fast(A).surjective


def test_fast_unit_determinant():
    A = M([[1, 0, 7], [0, 1, 7]])
    v = is_surjective_fast(A)
    assert v.surjective and v.method == "fast_path"
    assert v.witness == FastPathCertificate((0, 1), 1, ())
    assert v.verify(A)


def test_fast_checks_primes_of_det():
    A = M([[2, 0, 1, 0], [0, 2, 0, 1]])
    v = is_surjective_fast(A)
    assert v.surjective and v.method == "fast_path"
    assert v.witness.det == 4 and v.witness.primes == (2,)
    assert rank_mod_p(A, 2) == 2
    assert smith_normal_form(A).invariant_factors == (1, 1)
    assert v.verify(A)


def test_det_four_with_one_extra_column_is_not_surjective():
    # the last column cannot repair both rows mod 2: minors 4, 2, -2
    rows = [[2, 0, 1], [0, 2, 1]]
    assert minor_gcd_invariant_factors(rows) == [1, 2]
    v = is_surjective_fast(M(rows))
    assert not v.surjective and v.witness == PrimeWitness(2, 1)
    assert not is_surjective_snf(M(rows)).surjective


def test_fast_finds_failing_prime():
    A = M([[2, 0, 4], [0, 2, 6]])
    v = is_surjective_fast(A)
    assert not v.surjective
    assert v.witness == PrimeWitness(2, 0)
    assert smith_normal_form(A).invariant_factors == (2, 2)
    assert v.verify(A)


def test_fast_retries_other_columns():
    # first two columns are singular, columns (1, 2) are not
    A = M([[1, 1, 0], [1, 1, 1]])
    v = is_surjective_fast(A, seed=1)
    assert v.surjective
    assert v.method in ("fast_path", "snf")
    assert v.verify(A)


def test_fast_falls_back_when_rank_deficient():
    A = M([[1, 2, 3], [2, 4, 6]])
    v = is_surjective_fast(A)
    assert not v.surjective and v.method == "snf"
    assert v.witness.free_rank == 1
    assert v.verify(A)


def test_fast_falls_back_on_budget():
    p, q = 10**18 + 9, 10**18 + 3
    A = M([[p * q, 0, 1], [0, 1, 0]])
    v = is_surjective_fast(A, trial_bound=1000, rho_budget=100)
    assert v.method == "snf" and v.surjective


def test_fast_zero_rows():
    assert is_surjective_fast(IntMatrix(0, 3, ())).surjective


def test_forged_witness_rejected():
    A = IntMatrix.identity(2)
    assert not PrimeWitness(2, 1).verify(A)
    assert not InvariantFactorWitness((2,), 0).verify(A)
    assert not FastPathCertificate((0, 1), 2, (2,)).verify(A)


DISTS = [
    Bernoulli(0.5), Bernoulli(0.2), UniformRange(1), UniformRange(4), UniformRange(20),
    SignedUnit(), TruncatedHaar(2, 4), TruncatedHaar(3, 2), TruncatedHaar(19, 1),
]


def _suite(count, seed):
    rng = random.Random(seed)
    src = SeededSource(seed)
    for t in range(count):
        n = rng.randint(1, 6)
        m = rng.randint(max(1, n - 1), 12)
        yield sample(DISTS[t % len(DISTS)], n, m, src, t)


def test_agreement_and_certificates():
    for A in _suite(3000, 17):
        fast, snf = is_surjective_fast(A, seed=5), is_surjective_snf(A)
        assert fast.surjective == snf.surjective
        assert fast.verify(A) and snf.verify(A)


def test_local_global_criterion():
    for A in _suite(1500, 23):
        snf = smith_normal_form(A)
        surj = is_surjective_snf(A).surjective
        primes = set()
        for d in snf.invariant_factors:
            primes |= set(factorize(d).primes)
        full = all(rank_mod_p(A, p) == A.rows for p in primes)
        if snf.free_rank == 0:
            assert surj == full
            if not surj:
                assert any(rank_mod_p(A, p) < A.rows for p in factorize(snf.invariant_factors[-1]).primes)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_signed_unit_never_surjective(n):
    src = SeededSource(99)
    for t in range(50):
        m = n + t % 8
        A = sample(SignedUnit(), n, m, src, t)
        assert rank_mod_p(A, 2) == 1
        assert not is_surjective_fast(A).surjective


def test_signed_unit_single_row_is_surjective():
    # a 1 x m row of +-1 contains a unit, so it maps onto Z
    assert is_surjective_snf(M([[-1, 1, 1]])).surjective


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 4).flatmap(lambda n: st.tuples(
    st.just(n),
    st.integers(n, 7),
    st.data(),
)))
def test_appending_columns_keeps_surjectivity(args):
    n, m, data = args
    entries = data.draw(st.lists(st.integers(-6, 6), min_size=n * m, max_size=n * m))
    extra = data.draw(st.lists(st.integers(-6, 6), min_size=n, max_size=n))
    A = IntMatrix(n, m, tuple(entries))
    B = A.hstack(IntMatrix(n, 1, tuple(extra)))
    if is_surjective_snf(A).surjective:
        assert is_surjective_snf(B).surjective
        assert is_surjective_fast(B).surjective


def test_fast_on_adversarial_matches_snf():
    src = SeededSource(4)
    for t in range(40):
        A = sample(Adversarial(), 2, 2, src, t)
        assert is_surjective_fast(A).surjective == is_surjective_snf(A).surjective


def test_cokernel_examples():
    c = cokernel(IntMatrix.diagonal([1, 4]))
    assert c.torsion == (4,) and c.free_rank == 0 and c.sylow(2) == (2,)
    c = cokernel(IntMatrix.zeros(2, 3))
    assert c.torsion == () and c.free_rank == 2
    c = cokernel(M([[2, 0], [0, 6]]))
    assert c.torsion == (2, 6) and c.sylow(2) == (1, 1) and c.sylow(3) == (1,)
    assert c.order == 12 and c.primes() == (2, 3)


def test_cokernel_of_large_entries_uses_modular_path():
    big = 2**300
    A = M([[big, 0, 3 * big], [0, 6 * big + 6, 6]])
    c = cokernel(A)
    snf = smith_normal_form(A)
    assert c.torsion == snf.torsion and c.free_rank == snf.free_rank


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 4).flatmap(lambda n: st.tuples(
    st.just(n), st.integers(1, 6), st.data())))
def test_cokernel_invariants(args):
    n, m, data = args
    entries = data.draw(st.lists(st.integers(-9, 9), min_size=n * m, max_size=n * m))
    A = IntMatrix(n, m, tuple(entries))
    c = cokernel(A)
    assert all(b % a == 0 for a, b in zip(c.torsion, c.torsion[1:]))
    assert all(d > 1 for d in c.torsion)
    assert c.free_rank == n - smith_normal_form(A).rank
    assert c.is_trivial == is_surjective_snf(A).surjective
    for p in (2, 3):
        lam = c.sylow(p)
        assert list(lam) == sorted(lam, reverse=True) and all(x > 0 for x in lam)
