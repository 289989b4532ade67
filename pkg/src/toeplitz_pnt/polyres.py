"""Residues attained by a monic polynomial modulo n.

For a polynomial ``P`` and modulus ``n`` a :class:`ResidueProfile` stores the
hit counts ``rho[a] = #{1 <= m <= n : P(m) = a (mod n)}``; the attainable set is
the support of ``rho``.  Composite moduli are assembled from prime-power
profiles by the Chinese remainder theorem, where hit counts multiply.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .arith import factorize, omega, radical
from .errors import ContractError

CHUNK = 1 << 22


@dataclass(frozen=True)
class PolynomialSpec:
    """Monic polynomial with non-negative integer coefficients, lowest degree first."""

    coefficients: tuple[int, ...]

    def __post_init__(self):
        coeffs = tuple(int(c) for c in self.coefficients)
        while len(coeffs) > 1 and coeffs[-1] == 0:
            coeffs = coeffs[:-1]
        object.__setattr__(self, "coefficients", coeffs)
        if any(c < 0 for c in coeffs):
            raise ValueError("coefficients must be non-negative")
        if len(coeffs) < 3 or coeffs[-1] != 1:
            raise ValueError("need a monic polynomial of degree > 1")

    @classmethod
    def square(cls) -> "PolynomialSpec":
        return cls((0, 0, 1))

    @classmethod
    def parse(cls, text: str) -> "PolynomialSpec":
        """Parse strings such as ``"m^2"``, ``"m^2+m"`` or ``"m^3+2m+1"``."""
        coeffs: dict[int, int] = {}
        for term in text.replace(" ", "").replace("*", "").split("+"):
            match = re.fullmatch(r"(\d*)(?:([a-z])(?:\^(\d+))?)?", term)
            if not term or match is None:
                raise ValueError(f"cannot parse polynomial term {term!r}")
            c, var, e = match.groups()
            if var is None:
                deg, coef = 0, int(c)
            else:
                deg, coef = int(e or 1), int(c or 1)
            coeffs[deg] = coeffs.get(deg, 0) + coef
        top = max(coeffs)
        return cls(tuple(coeffs.get(i, 0) for i in range(top + 1)))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, m: int) -> int:
        out = 0
        for c in reversed(self.coefficients):
            out = out * m + c
        return out

    def mod_values(self, m: np.ndarray, n: int) -> np.ndarray:
        """``P(m) mod n`` for an int64 array, reducing at every Horner step."""
        m = np.asarray(m, dtype=np.int64) % n
        out = np.zeros_like(m)
        for c in reversed(self.coefficients):
            out = (out * m + c) % n
        return out

    def inverse(self, N: int) -> int:
        """Largest ``m >= 0`` with ``P(m) <= N`` (exact integer search); -1 if ``N < P(0)``."""
        if N < self(0):
            return -1
        lo, hi = 0, 1
        while self(hi) <= N:
            lo, hi = hi, hi * 2
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self(mid) <= N:
                lo = mid
            else:
                hi = mid
        return lo

    def __str__(self) -> str:
        terms = []
        for deg in range(self.degree, -1, -1):
            c = self.coefficients[deg]
            if not c:
                continue
            if deg == 0:
                terms.append(str(c))
            else:
                terms.append(("" if c == 1 else str(c)) + "m" + ("" if deg == 1 else f"^{deg}"))
        return "+".join(terms)


@dataclass(frozen=True, eq=False)
class ResidueProfile:
    modulus: int
    rho: np.ndarray = field(repr=False)

    @property
    def attainable(self) -> np.ndarray:
        return np.flatnonzero(self.rho)

    @property
    def psi(self) -> int:
        return int(np.count_nonzero(self.rho))

    @property
    def rho_max(self) -> int:
        return int(self.rho.max())

    def contains(self, a: int) -> bool:
        return bool(self.rho[a % self.modulus])

    def rho_at(self, a: int) -> int:
        return int(self.rho[a % self.modulus])

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ResidueProfile)
            and self.modulus == other.modulus
            and np.array_equal(self.rho, other.rho)
        )


def brute_profile(P: PolynomialSpec, n: int) -> ResidueProfile:
    """Profile by evaluating ``P(m) mod n`` for every ``m`` in ``[1, n]``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rho = np.zeros(n, dtype=np.int64)
    for lo in range(1, n + 1, CHUNK):
        m = np.arange(lo, min(lo + CHUNK, n + 1), dtype=np.int64)
        rho += np.bincount(P.mod_values(m, n), minlength=n)
    return ResidueProfile(n, rho)


@lru_cache(maxsize=4096)
def prime_power_profile(P: PolynomialSpec, q: int) -> ResidueProfile:
    return brute_profile(P, q)


def _pairwise_coprime(moduli: list[int]) -> bool:
    return all(math.gcd(a, b) == 1 for i, a in enumerate(moduli) for b in moduli[i + 1 :])


def crt_compose(profiles: list[ResidueProfile]) -> ResidueProfile:
    """Combine profiles over pairwise coprime moduli; hit counts multiply."""
    moduli = [p.modulus for p in profiles]
    if not _pairwise_coprime(moduli):
        raise ContractError(f"moduli {moduli} are not pairwise coprime")
    if len(profiles) == 1:
        return profiles[0]
    n = math.prod(moduli)
    rho = np.ones(n, dtype=np.int64)
    for lo in range(0, n, CHUNK):
        a = np.arange(lo, min(lo + CHUNK, n), dtype=np.int64)
        block = rho[lo : lo + len(a)]
        for prof in profiles:
            block *= prof.rho[a % prof.modulus]
    return ResidueProfile(n, rho)


def residue_profile(P: PolynomialSpec, n: int, method: str = "crt") -> ResidueProfile:
    if n < 1:
        raise ValueError("n must be >= 1")
    if method == "brute" or n == 1:
        return brute_profile(P, n)
    return crt_compose([prime_power_profile(P, q) for q in factorize(n).factors()])


@lru_cache(maxsize=1 << 16)
def rho_max(P: PolynomialSpec, n: int) -> int:
    """``max_a rho(n, a)``; multiplicative over prime powers."""
    if n == 1:
        return 1
    if P.coefficients == (0, 0, 1):
        return math.prod(square_rho_max_closed(p, e) for p, e in factorize(n).prime_powers)
    return math.prod(prime_power_profile(P, q).rho_max for q in factorize(n).factors())


def psi(P: PolynomialSpec, n: int) -> int:
    return math.prod(prime_power_profile(P, q).psi for q in factorize(n).factors()) if n > 1 else 1


def rho_value(P: PolynomialSpec, n: int, a: int) -> int:
    """``rho(n, a)`` via the product over prime-power components of ``a``."""
    if n == 1:
        return 1
    return math.prod(prime_power_profile(P, q).rho_at(a % q) for q in factorize(n).factors())


def rho_count(P: PolynomialSpec, N: int, n: int, a: int) -> int:
    """``#{1 <= m <= N : P(m) = a (mod n)}``; 0 for unattainable ``a``."""
    if N < 0:
        raise ValueError("N must be >= 0")
    full, rem = divmod(N, n)
    a %= n
    count = full * rho_value(P, n, a)
    if rem:
        m = np.arange(1, rem + 1, dtype=np.int64)
        count += int(np.count_nonzero(P.mod_values(m, n) == a))
    return count


def albis_bound_check(P: PolynomialSpec, n: int) -> bool:
    """``rho(n) <= d**omega(n) * n / rad(n)``."""
    return rho_max(P, n) * radical(n) <= P.degree ** omega(n) * n


def interval_count(P: PolynomialSpec, n: int, a: int, N: int) -> int:
    """``#{m >= 1 : P(m) <= N, P(m) = a (mod n)}``."""
    top = P.inverse(N)
    return rho_count(P, top, n, a) if top >= 1 else 0


def interval_count_bounds(P: PolynomialSpec, n: int, a: int, N: int) -> tuple[Fraction, Fraction]:
    """Lower and upper bounds ``rho(n,a) * (P^{-1}(N)/n -+ 1)`` on :func:`interval_count`."""
    rho = rho_value(P, n, a)
    if rho == 0:
        raise ContractError(f"{a} is not attained by {P} modulo {n}")
    if N < P(n):
        raise ContractError(f"need N >= P(n) = {P(n)}, got {N}")
    ratio = Fraction(P.inverse(N), n)
    return rho * (ratio - 1), rho * (ratio + 1)


# --------------------------------------------------------------- P(m) = m^2


def _valuation(a: int, p: int) -> tuple[int, int]:
    v = 0
    while a % p == 0:
        a //= p
        v += 1
    return v, a


def _is_qr(u: int, p: int) -> bool:
    return pow(u % p, (p - 1) // 2, p) == 1


def square_rho_closed(p: int, e: int, a: int) -> int:
    """Closed form for ``#{1 <= m <= p^e : m^2 = a (mod p^e)}``."""
    if e < 1:
        raise ValueError("exponent must be >= 1")
    q = p**e
    a %= q
    if a == 0:
        return p ** (e // 2)
    v, unit = _valuation(a, p)
    if v % 2:
        raise ContractError(f"{a} is not a square modulo {p}^{e}")
    r = v // 2
    if p > 2:
        if not _is_qr(unit, p):
            raise ContractError(f"{a} is not a square modulo {p}^{e}")
        return 2 * p**r
    if e == 1:
        return 1
    if e == 2:
        if a != 1:
            raise ContractError(f"{a} is not a square modulo 4")
        return 2
    if 2 * r <= e - 3 and unit % 8 == 1:
        return 4 * 2**r
    if 2 * r == e - 2 and unit % 4 == 1:
        return 2 * 2**r
    if 2 * r == e - 1:
        return 2**r
    raise ContractError(f"{a} is not a square modulo 2^{e}")


def square_rho_max_closed(p: int, e: int) -> int:
    """``max_a rho(p^e, a)`` for ``m^2``; the maximum sits at ``a = 0`` or ``a = p^(2r)``."""
    return max(square_rho_closed(p, e, a) for a in [0] + [p ** (2 * r) for r in range((e + 1) // 2)])


def square_psi_closed(p: int, e: int) -> int:
    """Number of squares modulo ``p^e``."""
    if e < 1:
        raise ValueError("exponent must be >= 1")
    n, odd = divmod(e, 2)
    if p > 2:
        if odd:
            num, den = p ** (2 * n + 2) + 2 * p + 1, 2 * (p + 1)
        else:
            num, den = p ** (2 * n + 1) + p + 2, 2 * (p + 1)
    else:
        num, den = (2 ** (2 * n) + 5, 3) if odd else (2 ** (2 * n - 1) + 4, 3)
    if num % den:
        raise ArithmeticError("closed form did not produce an integer")
    return num // den


def _tilde_prime_power_mask(p: int, e: int) -> np.ndarray:
    q = p**e
    a = np.arange(q, dtype=np.int64)
    if p > 2:
        mask = np.zeros(p, dtype=bool)
        mask[(np.arange(1, p, dtype=np.int64) ** 2) % p] = True
        return mask[a % p]
    if e <= 2:
        return a <= 1  # R_2 = R_4 = {0, 1}
    return a % 8 == 1


def tilde_psi_prime_power(p: int, e: int) -> int:
    if p > 2:
        return p ** (e - 1) * (p - 1) // 2
    if e <= 2:
        return 2
    return 2 ** (e - 3)


def tilde_psi(n: int) -> int:
    return math.prod(tilde_psi_prime_power(p, e) for p, e in factorize(n).prime_powers)


def tilde_mask(n: int) -> np.ndarray:
    """Boolean mask over ``[0, n)`` of the refined residue set for ``m^2``."""
    parts = [(p**e, _tilde_prime_power_mask(p, e)) for p, e in factorize(n).prime_powers]
    out = np.ones(n, dtype=bool)
    for lo in range(0, n, CHUNK):
        a = np.arange(lo, min(lo + CHUNK, n), dtype=np.int64)
        block = out[lo : lo + len(a)]
        for q, m in parts:
            block &= m[a % q]
    return out


def tilde_residues(n: int) -> tuple[np.ndarray, int]:
    if n < 2:
        raise ValueError("n must be >= 2")
    res = np.flatnonzero(tilde_mask(n))
    return res, len(res)


def tilde_bounds_check(n: int) -> bool:
    """Hit-count and density bounds for the refined residue set of ``m^2``."""
    res, count = tilde_residues(n)
    fac = factorize(n)
    w = 2**fac.omega
    P = PolynomialSpec.square()
    prof = residue_profile(P, n)
    rho = prof.rho[res]
    if rho.min() * 2 < w or rho.max() > 2 * w:
        return False
    euler = math.prod(Fraction(p - 1, p) for p in fac.primes)
    density = Fraction(w * count, n)
    return euler / 2 <= density <= 4 * euler


def squares_mask(n: int) -> np.ndarray:
    """Boolean mask over ``[0, n)`` of residues ``m^2 mod n`` (direct enumeration)."""
    mask = np.zeros(n, dtype=bool)
    for lo in range(0, n, CHUNK):
        m = np.arange(lo, min(lo + CHUNK, n), dtype=np.int64)
        mask[(m * m) % n] = True
    return mask
