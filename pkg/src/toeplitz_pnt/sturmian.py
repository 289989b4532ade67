"""Sturmian codings of a circle rotation and their averages along primes.

A rotation by ``alpha`` is stored in fixed point: ``alpha``, ``beta`` and the
start point are integers over ``2**bits``, so orbit points are exact integers
modulo ``2**bits``.  The irrational rotation is replaced by a rational surrogate
(a continued-fraction convergent); the drift between the two after ``N`` steps
is at most ``N * |alpha - surrogate|`` and is reported.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .arith import PrimeTable, table_for
from .averaging import AverageReport, ObservableSpec
from .errors import ContractError, OutOfRangeError

DEFAULT_BITS = 128
MIN_BITS = 96
PHASE_ERROR_BITS = 60  # accumulated phase error must stay below 2**-60


def golden_convergent(min_denominator: int = 2**80) -> tuple[int, int]:
    """First convergent ``p/q`` of ``(sqrt 5 - 1)/2`` with ``q > min_denominator``."""
    p, q = 1, 1  # F_n / F_{n+1}, starting at 1/1
    while q <= min_denominator:
        p, q = q, p + q
    return p, q


def _to_fixed(x: Fraction, bits: int) -> int:
    return round(x * (1 << bits)) % (1 << bits)


@dataclass(frozen=True)
class RotationSpec:
    """Rotation ``x -> x + alpha`` on the circle, coded by ``A0 = [0, beta)``.

    ``alpha``, ``beta`` and ``x0`` are fixed-point integers over ``2**bits``.
    ``surrogate`` is the rational ``p/q`` that ``alpha`` rounds, and
    ``surrogate_error`` bounds ``|true alpha - alpha / 2**bits|``.
    """

    alpha: int
    beta: int
    x0: int = 0
    bits: int = DEFAULT_BITS
    surrogate: tuple[int, int] | None = None
    surrogate_error: Fraction = Fraction(0)

    def __post_init__(self):
        M = 1 << self.bits
        if self.bits < MIN_BITS:
            raise ContractError(f"precision must be at least {MIN_BITS} fractional bits")
        if not 0 < self.beta < M:
            raise ContractError("beta must lie in (0, 1)")
        if not 0 <= self.alpha < M or not 0 <= self.x0 < M:
            raise ContractError("alpha and x0 must lie in [0, 1)")

    @property
    def modulus(self) -> int:
        return 1 << self.bits

    @classmethod
    def from_fractions(cls, alpha: Fraction, beta: Fraction, x0: Fraction = Fraction(0),
                       bits: int = DEFAULT_BITS) -> "RotationSpec":
        alpha, beta, x0 = Fraction(alpha), Fraction(beta), Fraction(x0)
        a = _to_fixed(alpha, bits)
        err = abs(alpha - Fraction(a, 1 << bits))
        return cls(a, _to_fixed(beta, bits), _to_fixed(x0, bits), bits,
                   (alpha.numerator, alpha.denominator), err)

    @classmethod
    def golden(cls, beta: Fraction | None = None, x0: Fraction = Fraction(0), bits: int = DEFAULT_BITS,
               min_denominator: int = 2**80) -> "RotationSpec":
        """Golden-ratio convergent rotation; ``beta`` defaults to ``alpha``."""
        p, q = golden_convergent(min_denominator)
        a = _to_fixed(Fraction(p, q), bits)
        # |golden - p/q| < 1/q^2, plus the fixed-point rounding
        err = Fraction(1, q * q) + abs(Fraction(p, q) - Fraction(a, 1 << bits))
        b = a if beta is None else _to_fixed(Fraction(beta), bits)
        return cls(a, b, _to_fixed(Fraction(x0), bits), bits, (p, q), err)

    def alpha_fraction(self) -> Fraction:
        return Fraction(self.alpha, self.modulus)

    def beta_fraction(self) -> Fraction:
        return Fraction(self.beta, self.modulus)

    def max_steps(self) -> int:
        """Largest ``|k|`` whose accumulated rounding stays below ``2**-60``."""
        return 1 << (self.bits - PHASE_ERROR_BITS)

    def drift_bound(self, N: int) -> float:
        """Bound on the phase gap to the true irrational after ``N`` steps."""
        return float(N * self.surrogate_error)

    def to_dict(self) -> dict:
        return {"alpha": str(self.alpha), "beta": str(self.beta), "x0": str(self.x0), "bits": self.bits,
                "surrogate": list(self.surrogate) if self.surrogate else None,
                "surrogate_error": float(self.surrogate_error)}


def _check_steps(spec: RotationSpec, k_abs: int) -> None:
    if k_abs > spec.max_steps():
        raise OutOfRangeError(f"|k|={k_abs} exceeds precision budget {spec.max_steps()}")


def phase(spec: RotationSpec, k: int) -> int:
    """Fixed-point orbit point ``frac(x0 + k alpha)``."""
    _check_steps(spec, abs(k))
    return (spec.x0 + k * spec.alpha) % spec.modulus


def code(spec: RotationSpec, k: int) -> int:
    """0 if ``frac(x0 + k alpha)`` lies in ``[0, beta)``, else 1."""
    return 0 if phase(spec, k) < spec.beta else 1


def phases(spec: RotationSpec, ks) -> np.ndarray:
    """Exact phases for an integer array (object dtype, Python ints)."""
    ks = np.asarray(ks)
    if len(ks):
        _check_steps(spec, int(np.abs(ks).max()))
    obj = ks.astype(np.int64).astype(object)
    return (obj * spec.alpha + spec.x0) % spec.modulus


def codes(spec: RotationSpec, ks) -> np.ndarray:
    return np.where(phases(spec, ks) < spec.beta, 0, 1).astype(np.int8)


def word(spec: RotationSpec, start: int, length: int) -> str:
    return "".join(map(str, codes(spec, np.arange(start, start + length))))


def _unit_floats(ph: np.ndarray, bits: int) -> np.ndarray:
    shift = bits - 53
    return np.array([int(x) >> shift for x in ph], dtype=np.float64) / float(1 << 53)


# --------------------------------------------------------------------- atoms


def atom_lengths(spec: RotationSpec, radius: int) -> dict[int, int]:
    """Fixed-point lengths of the atoms of the partition refined over ``-radius..radius``.

    Keys are window codes ``sum w_i 2**i`` (``w_i`` the symbol at offset
    ``i - radius``), matching :class:`ObservableSpec`.  The lengths sum to
    ``2**bits`` exactly.
    """
    M = spec.modulus
    offsets = range(-radius, radius + 1)
    cuts = sorted({(-i * spec.alpha) % M for i in offsets} | {(spec.beta - i * spec.alpha) % M for i in offsets})
    out: dict[int, int] = {}
    for j, left in enumerate(cuts):
        right = cuts[j + 1] if j + 1 < len(cuts) else cuts[0] + M
        c = 0
        for pos, i in enumerate(offsets):
            if (left + i * spec.alpha) % M >= spec.beta:
                c |= 1 << pos
        out[c] = out.get(c, 0) + (right - left)
    return out


def lebesgue_integral(spec: RotationSpec, F: ObservableSpec) -> float:
    if F.alphabet_size != 2:
        raise ContractError("Sturmian codes are binary")
    lengths = atom_lengths(spec, F.radius)
    return math.fsum(F.table[c] * Fraction(L, spec.modulus) for c, L in lengths.items())


# ------------------------------------------------------------------ averages


def _window_codes(spec: RotationSpec, F: ObservableSpec, positions: np.ndarray) -> np.ndarray:
    out = np.zeros(len(positions), dtype=np.int64)
    for i in range(2 * F.radius + 1):
        out += codes(spec, positions + (i - F.radius)).astype(np.int64) << i
    return out


def prime_orbit_average(spec: RotationSpec, F: ObservableSpec, N: int, table: PrimeTable | None = None) -> AverageReport:
    """Average of ``F`` along the coded orbit at primes ``p <= N``, with its Lebesgue prediction."""
    if N < 2:
        raise OutOfRangeError("N must be >= 2")
    table = table_for(N, table)
    primes = table.primes_upto(N).astype(np.int64)
    counts = np.bincount(_window_codes(spec, F, primes), minlength=len(F.table))
    value = math.fsum(float(F.table[c]) * int(n) for c, n in enumerate(counts) if n) / len(primes)
    return AverageReport("sturmian-primes", N, 0, value, len(primes), predicted=lebesgue_integral(spec, F),
                         error_bound=None, sup_norm=F.sup_norm,
                         extra={"drift_bound": spec.drift_bound(N), "bits": spec.bits})


def vinogradov_sum(alpha, N: int, table: PrimeTable | None = None, bits: int = DEFAULT_BITS) -> float:
    """``|(1/pi(N)) sum_{p <= N} exp(2 pi i alpha p)|``.

    ``alpha`` is a :class:`RotationSpec`, a fraction or a float.  A rational
    ``alpha`` with small denominator gives a large value by construction.
    """
    if N < 2:
        raise OutOfRangeError("N must be >= 2")
    if isinstance(alpha, RotationSpec):
        a, bits = alpha.alpha, alpha.bits
    else:
        a = _to_fixed(Fraction(alpha), bits)
    spec = RotationSpec(a, 1, 0, bits)
    table = table_for(N, table)
    primes = table.primes_upto(N).astype(np.int64)
    theta = 2 * np.pi * _unit_floats(phases(spec, primes), bits)
    return float(abs(complex(math.fsum(np.cos(theta)), math.fsum(np.sin(theta))))) / len(primes)


# ------------------------------------------------------------------- squeeze


def _trapezoid(x: np.ndarray, lo: float, hi: float, ramp: float) -> np.ndarray:
    """1 on ``[lo, hi]``, linear to 0 over ``ramp`` on each side (circle coordinates)."""
    mid, half = (lo + hi) / 2, (hi - lo) / 2
    d = np.abs((x - mid + 0.5) % 1.0 - 0.5)  # circular distance to the centre
    return np.clip(1.0 - (d - half) / ramp, 0.0, 1.0)


@dataclass
class SqueezeReport:
    N: int
    epsilon: float
    lower: float
    value: float
    upper: float
    lower_integral: float
    upper_integral: float
    extra: dict = field(default_factory=dict)

    @property
    def sandwiched(self) -> bool:
        return self.lower <= self.value <= self.upper

    @property
    def passed(self) -> bool:
        # averages of the approximants differ by about their integral gap
        return self.sandwiched and self.upper - self.lower <= 2 * self.epsilon


def squeeze_check(spec: RotationSpec, N: int, epsilon: float = 0.01, table: PrimeTable | None = None) -> SqueezeReport:
    """Averages of continuous ``f- <= 1_{A0} <= f+`` with ``int f+ - int f- = epsilon``."""
    beta = float(spec.beta_fraction())
    ramp = epsilon / 2
    if not 0 < epsilon < min(beta, 1 - beta):
        raise ContractError("epsilon must be smaller than both atoms")
    table = table_for(N, table)
    primes = table.primes_upto(N).astype(np.int64)
    ph = phases(spec, primes)
    x = _unit_floats(ph, spec.bits)
    value = float(np.count_nonzero(ph < spec.beta)) / len(primes)
    f_minus = _trapezoid(x, ramp, beta - ramp, ramp)
    f_plus = _trapezoid(x, 0.0, beta, ramp)
    return SqueezeReport(N, epsilon, math.fsum(f_minus) / len(primes), value, math.fsum(f_plus) / len(primes),
                         beta - ramp, beta + ramp)
