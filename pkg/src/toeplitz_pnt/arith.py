"""Primes, semiprimes and the elementary arithmetic functions used by the builders.

Prime data lives in a :class:`PrimeTable` produced by a segmented sieve.  The
table keeps a bit-packed primality map (for membership queries) and the sorted
array of primes (for iteration and counting by binary search).
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

import numpy as np

from .errors import BudgetError, OutOfRangeError

DEFAULT_SEGMENT_SIZE = 1 << 20
MEMORY_BUDGET_ENV = "TOEPLITZ_PNT_MEMORY_BUDGET"
DEFAULT_MEMORY_BUDGET = 1 << 30  # bytes

INT64_MAX = (1 << 63) - 1

SEMIPRIME_MODES = ("ordered", "distinct")


def memory_budget() -> int:
    """Memory budget in bytes; overridable through ``TOEPLITZ_PNT_MEMORY_BUDGET``."""
    raw = os.environ.get(MEMORY_BUDGET_ENV)
    if raw:
        return int(float(raw))
    return DEFAULT_MEMORY_BUDGET


def checked(value: int) -> int:
    """Reject counts that would not fit a signed 64-bit integer."""
    if value > INT64_MAX or value < -INT64_MAX - 1:
        raise OverflowError(f"count {value} exceeds 64-bit range")
    return value


def _sieve_estimate(limit: int, segment_size: int) -> int:
    n_primes = int(1.3 * limit / math.log(max(limit, 3))) + 16
    itemsize = 4 if limit < 2**32 else 8
    return limit // 8 + n_primes * itemsize + 2 * segment_size


def _small_primes(limit: int) -> np.ndarray:
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if flags[p]:
            flags[p * p :: p] = False
    return np.flatnonzero(flags).astype(np.int64)


@dataclass(frozen=True, eq=False)
class PrimeTable:
    """Immutable result of :func:`sieve` covering ``[0, limit]``."""

    limit: int
    segment_size: int
    bits: np.ndarray
    primes: np.ndarray

    def is_prime(self, n: int) -> bool:
        if n < 0 or n > self.limit:
            raise OutOfRangeError(f"{n} outside sieved range [0, {self.limit}]")
        return bool((self.bits[n >> 3] >> (7 - (n & 7))) & 1)

    __contains__ = is_prime

    def _check(self, N: int) -> None:
        if N > self.limit:
            raise OutOfRangeError(f"N={N} exceeds table limit {self.limit}")

    def pi(self, N: int) -> int:
        self._check(N)
        if N < 2:
            return 0
        return int(np.searchsorted(self.primes, N, side="right"))

    def primes_upto(self, N: int) -> np.ndarray:
        """Primes ``p <= N`` as a view into the table."""
        return self.primes[: self.pi(N)]

    def count_set_bits(self) -> int:
        return int(np.unpackbits(self.bits)[: self.limit + 1].sum())


def sieve(limit: int, segment_size: int = DEFAULT_SEGMENT_SIZE, threads: int = 1) -> PrimeTable:
    """Segmented sieve of Eratosthenes up to and including ``limit``."""
    if limit < 2:
        raise ValueError("limit must be >= 2")
    if segment_size <= 0 or segment_size % 8:
        raise ValueError("segment_size must be a positive multiple of 8")
    need = _sieve_estimate(limit, segment_size)
    budget = memory_budget()
    if need > budget:
        raise BudgetError(f"sieve up to {limit} does not fit", MEMORY_BUDGET_ENV, need, budget)

    base = _small_primes(math.isqrt(limit))
    bounds = [(lo, min(lo + segment_size, limit + 1)) for lo in range(0, limit + 1, segment_size)]

    def run(seg: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = seg
        flags = np.ones(hi - lo, dtype=bool)
        if lo == 0:
            flags[: min(2, hi)] = False
        for p in base:
            p = int(p)
            if p * p >= hi:
                break
            start = max(p * p, -(-lo // p) * p)
            flags[start - lo :: p] = False
        return np.packbits(flags), np.flatnonzero(flags) + lo

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, bounds))  # map preserves segment order
    else:
        parts = [run(b) for b in bounds]

    dtype = np.uint32 if limit < 2**32 else np.int64
    primes = np.concatenate([p for _, p in parts]).astype(dtype)
    bits = np.concatenate([b for b, _ in parts])
    return PrimeTable(limit=limit, segment_size=segment_size, bits=bits, primes=primes)


_threads = 1


def set_threads(threads: int) -> None:
    """Worker cap used when :func:`shared_table` sieves."""
    global _threads
    if threads < 1:
        raise ValueError("threads must be >= 1")
    _threads = threads


@lru_cache(maxsize=4)
def shared_table(limit: int) -> PrimeTable:
    """Process-wide cached table; tables are immutable so sharing is safe."""
    return sieve(limit, threads=_threads)


def table_for(N: int, table: PrimeTable | None = None) -> PrimeTable:
    if table is not None and table.limit >= N:
        return table
    # round up so nearby requests hit the cache
    limit = max(1024, 1 << max(10, (N - 1).bit_length()))
    if limit < N:
        limit = N
    return shared_table(limit)


def prime_pi(table: PrimeTable, N: int) -> int:
    return table.pi(N)


def prime_pi_ap(table: PrimeTable, N: int, n: int, a: int) -> int:
    """Number of primes ``p <= N`` with ``p = a (mod n)``."""
    if n < 1:
        raise ValueError("modulus must be >= 1")
    ps = table.primes_upto(N)
    return int(np.count_nonzero(ps % n == a % n))


def prime_pi_ap_all(table: PrimeTable, N: int, n: int) -> np.ndarray:
    """``counts[a] = pi(N; n, a)`` for every residue ``0 <= a < n``."""
    ps = table.primes_upto(N)
    return np.bincount((ps % n).astype(np.int64), minlength=n)


# --------------------------------------------------------------- factorization


@dataclass(frozen=True)
class Factorization:
    prime_powers: tuple[tuple[int, int], ...]

    @property
    def value(self) -> int:
        out = 1
        for p, e in self.prime_powers:
            out *= p**e
        return out

    @property
    def omega(self) -> int:
        return len(self.prime_powers)

    @property
    def radical(self) -> int:
        return math.prod(p for p, _ in self.prime_powers)

    @property
    def primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.prime_powers)

    def factors(self) -> list[int]:
        """The prime-power factors ``p**e``."""
        return [p**e for p, e in self.prime_powers]


@lru_cache(maxsize=1 << 16)
def factorize(n: int) -> Factorization:
    """Trial-division factorization, primes in increasing order."""
    if n < 1:
        raise ValueError("n must be >= 1")
    out = []
    m = n
    for p in (2, 3):
        e = 0
        while m % p == 0:
            m //= p
            e += 1
        if e:
            out.append((p, e))
    p = 5
    step = 2
    while p * p <= m:
        e = 0
        while m % p == 0:
            m //= p
            e += 1
        if e:
            out.append((p, e))
        p += step
        step = 6 - step
    if m > 1:
        out.append((m, 1))
    return Factorization(tuple(out))


def euler_phi(n: int) -> int:
    out = n
    for p, _ in factorize(n).prime_powers:
        out = out // p * (p - 1)
    return out


def omega(n: int) -> int:
    return factorize(n).omega


def radical(n: int) -> int:
    return factorize(n).radical


def coprime_mask(n: int, length: int | None = None) -> np.ndarray:
    """Boolean mask of ``0 <= j < length`` with ``gcd(j, n) = 1`` (length defaults to n)."""
    length = n if length is None else length
    mask = np.ones(length, dtype=bool)
    for p in factorize(n).primes:
        mask[::p] = False
    if n == 1:
        mask[:] = True
    return mask


# ------------------------------------------------------------------ semiprimes


def _check_mode(mode: str) -> None:
    if mode not in SEMIPRIME_MODES:
        raise ValueError(f"mode must be one of {SEMIPRIME_MODES}, got {mode!r}")


def semiprime_pairs(table: PrimeTable, N: int, mode: str = "ordered") -> Iterator[tuple[int, np.ndarray]]:
    """Yield ``(p1, p2s)`` for ``p1 <= sqrt(N)``.

    In ``ordered`` mode ``p2`` runs over every prime ``<= N // p1`` (the pair
    normalization ``sum_{p1 <= sqrt N} pi(N // p1)``); in ``distinct`` mode only
    ``p2 >= p1``, so each semiprime appears once.
    """
    _check_mode(mode)
    table._check(N)
    root = math.isqrt(N)
    primes = table.primes
    for i, p1 in enumerate(table.primes_upto(root) if root >= 2 else ()):
        p1 = int(p1)
        hi = table.pi(N // p1)
        lo = i if mode == "distinct" else 0
        yield p1, primes[lo:hi]


def semiprime_pi(table: PrimeTable, N: int, mode: str = "ordered") -> int:
    _check_mode(mode)
    table._check(N)
    total = 0
    root = math.isqrt(N)
    for i, p1 in enumerate(table.primes_upto(root) if root >= 2 else ()):
        cnt = table.pi(N // int(p1))
        total += cnt - i if mode == "distinct" else cnt
    return checked(total)


def semiprime_pi_ap(table: PrimeTable, N: int, m: int, a: int, mode: str = "ordered") -> int:
    """Semiprime count ``p1*p2 <= N`` with ``p1*p2 = a (mod m)``, normalized as :func:`semiprime_pi`."""
    if m < 1:
        raise ValueError("modulus must be >= 1")
    a %= m
    total = 0
    for p1, p2s in semiprime_pairs(table, N, mode):
        total += int(np.count_nonzero((p2s.astype(np.int64) % m) * (p1 % m) % m == a))
    return checked(total)


def semiprime_pi_ap_all(table: PrimeTable, N: int, m: int, mode: str = "ordered") -> np.ndarray:
    """``counts[a]`` over all residues mod ``m``."""
    counts = np.zeros(m, dtype=np.int64)
    for p1, p2s in semiprime_pairs(table, N, mode):
        counts += np.bincount((p2s.astype(np.int64) % m) * (p1 % m) % m, minlength=m)
    return counts


def semiprime_noncoprime_count(table: PrimeTable, N: int, n: int, mode: str = "distinct") -> int:
    """Semiprimes ``<= N`` sharing a prime factor with ``n``."""
    _check_mode(mode)
    table._check(N)
    qs = factorize(n).primes if n > 1 else ()
    total = 0
    for p1, p2s in semiprime_pairs(table, N, mode):
        if n % p1 == 0:
            total += len(p2s)
        elif len(p2s):
            lo, hi = int(p2s[0]), int(p2s[-1])
            total += sum(1 for q in qs if lo <= q <= hi)
    return checked(total)


def semiprime_values(table: PrimeTable, N: int) -> np.ndarray:
    """Sorted array of distinct semiprimes ``<= N``."""
    parts = [p2s.astype(np.int64) * p1 for p1, p2s in semiprime_pairs(table, N, "distinct")]
    if not parts:
        return np.zeros(0, dtype=np.int64)
    return np.sort(np.concatenate(parts))


def is_perfect_square(n: int) -> bool:
    return n >= 0 and math.isqrt(n) ** 2 == n
