import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from toeplitz_pnt.arith import (
    MEMORY_BUDGET_ENV,
    PrimeTable,
    checked,
    coprime_mask,
    euler_phi,
    factorize,
    is_perfect_square,
    omega,
    prime_pi,
    prime_pi_ap,
    prime_pi_ap_all,
    radical,
    semiprime_noncoprime_count,
    semiprime_pi,
    semiprime_pi_ap,
    semiprime_pi_ap_all,
    semiprime_values,
    sieve,
    table_for,
)
from toeplitz_pnt.errors import BudgetError, OutOfRangeError

# pi(10^k), k = 1..7
PI_POWERS = [4, 25, 168, 1229, 9592, 78498, 664579]
# distinct semiprimes <= 10^k, k = 1..6
SEMIPRIME_POWERS = [4, 34, 299, 2625, 23378, 210035]


def trial_is_prime(n):
    return n >= 2 and all(n % d for d in range(2, math.isqrt(n) + 1))


def brute_factor(n):
    out, d = [], 2
    while d * d <= n:
        while n % d == 0:
            out.append(d)
            n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


@pytest.fixture(scope="module")
def small():
    return sieve(20000, segment_size=1024)


def test_pi_known_values(table):
    assert [prime_pi(table, 10**k) for k in range(1, 8)] == PI_POWERS


def test_pi_small_examples(small):
    assert prime_pi(small, 100) == 25
    assert prime_pi(small, 1) == 0
    assert prime_pi(small, 2) == 1


def test_sieve_matches_trial_division(small):
    expected = [n for n in range(20001) if trial_is_prime(n)]
    assert small.primes.tolist() == expected
    assert small.count_set_bits() == len(expected)
    assert all(small.is_prime(p) for p in expected[:200])
    assert 91 not in small


@pytest.mark.parametrize("segment", [8, 64, 1000, 1 << 20])
def test_segment_size_does_not_matter(segment):
    ref = sieve(5000, segment_size=1 << 20)
    other = sieve(5000, segment_size=segment - segment % 8 or 8)
    assert np.array_equal(ref.primes, other.primes)
    assert np.array_equal(ref.bits, other.bits)


def test_threaded_sieve_identical():
    a, b = sieve(300000, segment_size=4096), sieve(300000, segment_size=4096, threads=3)
    assert np.array_equal(a.primes, b.primes) and np.array_equal(a.bits, b.bits)


def test_sieve_rejects_bad_input():
    with pytest.raises(ValueError):
        sieve(1)
    with pytest.raises(ValueError):
        sieve(100, segment_size=12)


def test_memory_budget(monkeypatch):
    monkeypatch.setenv(MEMORY_BUDGET_ENV, "1000")
    with pytest.raises(BudgetError) as info:
        sieve(10**6)
    assert info.value.record()["budget"] == MEMORY_BUDGET_ENV


def test_out_of_range(small):
    with pytest.raises(OutOfRangeError):
        small.pi(small.limit + 1)
    with pytest.raises(OutOfRangeError):
        small.is_prime(-1)


def test_table_for_reuses_and_extends(small):
    assert table_for(100, small) is small
    assert table_for(30000, small).limit >= 30000


def test_checked_overflow():
    assert checked(2**62) == 2**62
    with pytest.raises(OverflowError):
        checked(2**63)


def test_prime_pi_ap_examples(small):
    # primes <= 100 that are 1 mod 4
    assert prime_pi_ap(small, 100, 4, 1) == 11
    assert prime_pi_ap(small, 100, 4, 3) == 13
    counts = prime_pi_ap_all(small, 1000, 30)
    assert counts.sum() == prime_pi(small, 1000)
    assert counts[[2, 3, 5]].tolist() == [1, 1, 1]


@given(N=st.integers(2, 20000), n=st.integers(1, 60))
@settings(max_examples=60, deadline=None)
def test_prime_classes_partition(small, N, n):
    counts = prime_pi_ap_all(small, N, n)
    assert counts.sum() == prime_pi(small, N)
    noncop = [a for a in range(n) if math.gcd(a, n) > 1]
    # only primes dividing n fall into non-coprime classes
    assert sum(counts[a] for a in noncop) == sum(1 for p in factorize(n).primes if p <= N)


@given(st.integers(1, 10**6))
@settings(max_examples=200, deadline=None)
def test_factorize_matches_brute(n):
    f = factorize(n)
    assert f.value == n
    flat = [p for p, e in f.prime_powers for _ in range(e)]
    assert flat == brute_factor(n)
    assert omega(n) == len(set(flat))
    assert radical(n) == math.prod(set(flat))


@given(st.integers(1, 3000))
@settings(max_examples=100, deadline=None)
def test_euler_phi_matches_gcd_count(n):
    assert euler_phi(n) == sum(1 for a in range(n) if math.gcd(a, n) == 1)
    assert coprime_mask(n).sum() == euler_phi(n)


def test_euler_phi_examples():
    assert euler_phi(30) == 8
    assert euler_phi(1) == 1
    assert euler_phi(2310) == 480


def test_semiprime_known_values(table):
    got = [semiprime_pi(table, 10**k, mode="distinct") for k in range(1, 7)]
    assert got == SEMIPRIME_POWERS


def test_semiprime_examples(small):
    assert semiprime_pi(small, 10) == 5  # pairs (2,2),(2,3),(2,5),(3,2),(3,3)
    assert semiprime_pi(small, 10, mode="distinct") == 4
    assert semiprime_pi_ap(small, 20, 3, 1, mode="distinct") == 2  # 4, 10
    assert semiprime_noncoprime_count(small, 20, 4) == 4  # 4, 6, 10, 14
    with pytest.raises(ValueError):
        semiprime_pi(small, 10, mode="other")


def brute_pairs(N):
    ps = [p for p in range(2, N + 1) if trial_is_prime(p)]
    return [(p, q) for p in ps if p * p <= N for q in ps if p * q <= N]


@given(N=st.integers(1, 3000), m=st.integers(1, 40))
@settings(max_examples=60, deadline=None)
def test_semiprime_pairs_against_brute(small, N, m):
    pairs = brute_pairs(N)
    assert semiprime_pi(small, N) == len(pairs)
    distinct = sorted({p * q for p, q in pairs})
    assert semiprime_pi(small, N, "distinct") == len(distinct)
    assert semiprime_values(small, N).tolist() == distinct
    counts = semiprime_pi_ap_all(small, N, m)
    assert counts.sum() == len(pairs)
    a = N % m
    assert counts[a] == sum(1 for p, q in pairs if p * q % m == a) == semiprime_pi_ap(small, N, m, a)


@given(N=st.integers(4, 3000), n=st.integers(2, 200))
@settings(max_examples=60, deadline=None)
def test_noncoprime_against_brute(small, N, n):
    pairs = brute_pairs(N)
    assert semiprime_noncoprime_count(small, N, n, "ordered") == sum(1 for p, q in pairs if math.gcd(p * q, n) > 1)
    distinct = {p * q for p, q in pairs}
    assert semiprime_noncoprime_count(small, N, n) == sum(1 for s in distinct if math.gcd(s, n) > 1)


def test_is_perfect_square():
    assert is_perfect_square(900) and is_perfect_square(0)
    assert not is_perfect_square(899) and not is_perfect_square(-4)


def test_primetable_is_immutable(small):
    assert isinstance(small, PrimeTable)
    with pytest.raises(Exception):
        small.limit = 3
