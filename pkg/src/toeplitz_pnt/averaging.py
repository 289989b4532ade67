"""Orbit averages of cylinder observables along primes, semiprimes and polynomial times.

Every average is accumulated as exact integer hit counts per observable value
(``np.bincount`` over window codes) and only divided at the end, with the final
weighted sum taken by ``math.fsum``.  Results therefore do not depend on
iteration order and are bit-reproducible.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable

import numpy as np

from .arith import (
    PrimeTable,
    euler_phi,
    factorize,
    prime_pi_ap_all,
    semiprime_pairs,
    semiprime_pi,
    table_for,
)
from .errors import OutOfRangeError
from .polyres import PolynomialSpec, residue_profile, rho_max
from .toeplitz import HOLE, ToeplitzSkeleton, window

CHUNK = 1 << 21
CSV_COLUMNS = ("kind", "N", "r", "value", "normalization", "predicted", "error_bound")


@dataclass(frozen=True, eq=False)
class ObservableSpec:
    """``F(y) = table[code(y(-m), ..., y(m))]`` with code ``sum y(-m+i) * k**i``."""

    radius: int
    table: np.ndarray
    alphabet_size: int = 2

    def __post_init__(self):
        want = self.alphabet_size ** (2 * self.radius + 1)
        if len(self.table) != want:
            raise ValueError(f"table must have {want} entries, got {len(self.table)}")

    @property
    def sup_norm(self) -> float:
        return float(np.abs(self.table).max())

    @classmethod
    def sign(cls, alphabet_size: int = 2) -> "ObservableSpec":
        """``(-1)**y(0)``."""
        return cls(0, np.array([(-1.0) ** s for s in range(alphabet_size)]), alphabet_size)

    @classmethod
    def constant(cls, c: float, alphabet_size: int = 2, radius: int = 0) -> "ObservableSpec":
        return cls(radius, np.full(alphabet_size ** (2 * radius + 1), float(c)), alphabet_size)

    @classmethod
    def indicator(cls, symbol: int, alphabet_size: int = 2) -> "ObservableSpec":
        table = np.zeros(alphabet_size)
        table[symbol] = 1.0
        return cls(0, table, alphabet_size)

    @classmethod
    def from_function(cls, f: Callable[[tuple], float], alphabet_size: int = 2, radius: int = 0) -> "ObservableSpec":
        width = 2 * radius + 1
        table = np.empty(alphabet_size**width)
        for code in range(len(table)):
            digits, c = [], code
            for _ in range(width):
                c, d = divmod(c, alphabet_size)
                digits.append(d)
            table[code] = f(tuple(digits))
        return cls(radius, table, alphabet_size)

    def flattened(self) -> "ObservableSpec":
        """The same table read as a zero-coordinate observable on the windowed sequence."""
        return ObservableSpec(0, self.table, len(self.table))

    def to_dict(self) -> dict:
        return {"radius": self.radius, "alphabet_size": self.alphabet_size, "table": self.table.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ObservableSpec":
        return cls(int(d["radius"]), np.asarray(d["table"], dtype=float), int(d.get("alphabet_size", 2)))


@dataclass
class AverageReport:
    kind: str
    N: int
    r: int
    value: float
    normalization: int
    predicted: float | None = None
    error_bound: float | None = None
    sup_norm: float = 1.0
    extra: dict = field(default_factory=dict)

    def row(self) -> dict:
        return {k: getattr(self, k) for k in CSV_COLUMNS}

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Prediction:
    value: float
    error_bound: float
    stage: int
    holes: int
    note: str = "guarantee, not sharp"


def observable_codes(skeleton: ToeplitzSkeleton, F: ObservableSpec, positions: np.ndarray) -> np.ndarray:
    positions = np.asarray(positions, dtype=np.int64)
    if F.radius == 0:
        return skeleton.eval_codes(positions).astype(np.int64)
    k = F.alphabet_size
    codes = np.zeros(len(positions), dtype=np.int64)
    for i in range(2 * F.radius + 1):
        codes += skeleton.eval_codes(positions - F.radius + i).astype(np.int64) * k**i
    return codes


class _Accumulator:
    def __init__(self, F: ObservableSpec):
        self.F = F
        self.counts = np.zeros(len(F.table), dtype=np.int64)

    def add(self, skeleton: ToeplitzSkeleton, positions: np.ndarray) -> None:
        if len(positions):
            self.counts += np.bincount(observable_codes(skeleton, self.F, positions), minlength=len(self.counts))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def mean(self, normalization: int) -> float:
        nz = np.flatnonzero(self.counts)
        s = math.fsum(float(c) * float(self.F.table[i]) for i, c in zip(nz, self.counts[nz]))
        return s / normalization if normalization else 0.0


def prime_average(skeleton: ToeplitzSkeleton, F: ObservableSpec, N: int, r: int = 0,
                  table: PrimeTable | None = None) -> AverageReport:
    """``(1/pi(N)) * sum_{p <= N} F(S^{p+r} x)``."""
    if N < 2:
        raise OutOfRangeError("N must be >= 2")
    table = table_for(N, table)
    acc = _Accumulator(F)
    primes = table.primes_upto(N)
    for lo in range(0, len(primes), CHUNK):
        acc.add(skeleton, primes[lo : lo + CHUNK].astype(np.int64) + r)
    return AverageReport("primes", N, r, acc.mean(acc.total), acc.total, sup_norm=F.sup_norm)


def semiprime_average(skeleton: ToeplitzSkeleton, F: ObservableSpec, N: int, r: int = 0,
                      table: PrimeTable | None = None, mode: str = "ordered") -> AverageReport:
    """Average over the same pair enumeration used by :func:`semiprime_pi`."""
    if N < 4:
        raise OutOfRangeError("N must be >= 4")
    table = table_for(N, table)
    acc = _Accumulator(F)
    for p1, p2s in semiprime_pairs(table, N, mode):
        acc.add(skeleton, p2s.astype(np.int64) * p1 + r)
    norm = acc.total
    assert norm == semiprime_pi(table, N, mode)
    return AverageReport("semiprimes", N, r, acc.mean(norm), norm, sup_norm=F.sup_norm, extra={"mode": mode})


def poly_average(skeleton: ToeplitzSkeleton, P: PolynomialSpec, F: ObservableSpec, N: int, r: int = 0,
                 start: int = 1) -> AverageReport:
    """Average of ``F(S^{P(m)+r} x)`` over ``start <= m <= N``."""
    if N < start:
        raise OutOfRangeError("empty range of polynomial times")
    n = skeleton.periods[-1]
    acc = _Accumulator(F)
    for lo in range(start, N + 1, CHUNK):
        m = np.arange(lo, min(lo + CHUNK, N + 1), dtype=np.int64)
        acc.add(skeleton, (P.mod_values(m, n) + r) % n)
    return AverageReport(f"polynomial:{P}", N, r, acc.mean(acc.total), acc.total, sup_norm=F.sup_norm)


def _stage_view(skeleton: ToeplitzSkeleton, F: ObservableSpec, k: int):
    if not 1 <= k <= skeleton.n_stages:
        raise OutOfRangeError(f"stage {k} not built (have {skeleton.n_stages})")
    if F.radius:
        skeleton, F = window(skeleton, F.radius), F.flattened()
    return skeleton.period(k), skeleton.word(k), F


def predicted_prime_limit(skeleton: ToeplitzSkeleton, k: int, F: ObservableSpec, r: int = 0,
                          N: int | None = None, table: PrimeTable | None = None) -> Prediction:
    """Stage-``k`` prediction ``(1/phi(n_k)) sum F(S^a x)`` over decided ``a`` with ``gcd(a-r, n_k) = 1``.

    The radius ``8 * holes / phi(n_k)`` (scaled by the sup norm) follows the
    hole-density requirement of the convergence argument.  When ``N`` is given,
    the measured Dirichlet deviation at ``N`` and the primes dividing ``n_k``
    are added.
    """
    n, word, flat = _stage_view(skeleton, F, k)
    phi = euler_phi(n)
    a = np.arange(n, dtype=np.int64)
    sel = (np.gcd(a - r, n) == 1) & (word != HOLE)
    codes = word[sel].astype(np.int64)
    value = math.fsum(flat.table[codes].tolist()) / phi
    holes = int(np.count_nonzero(word == HOLE))
    eps = 8 * holes / phi
    if N is not None:
        table = table_for(N, table)
        counts = prime_pi_ap_all(table, N, n)
        pi_n = table.pi(N)
        coprime = np.gcd(a, n) == 1
        dev = float(np.abs(counts[coprime] * phi / pi_n - 1).max())
        eps += dev + 2 * len(factorize(n).primes) / pi_n
    return Prediction(value, eps * F.sup_norm, k, holes)


def predicted_poly_limit(skeleton: ToeplitzSkeleton, P: PolynomialSpec, k: int, F: ObservableSpec, r: int = 0,
                         N: int | None = None) -> Prediction:
    """``(1/n_k) sum rho(n_k, a-r) F(S^a x)`` over decided ``a`` with ``a - r`` attainable."""
    n, word, flat = _stage_view(skeleton, F, k)
    rho = residue_profile(P, n).rho
    a = np.arange(n, dtype=np.int64)
    weights = rho[(a - r) % n]
    sel = (weights > 0) & (word != HOLE)
    codes = word[sel].astype(np.int64)
    value = math.fsum((weights[sel] * flat.table[codes]).tolist()) / n
    holes = int(np.count_nonzero(word == HOLE))
    eps = 8 * holes * rho_max(P, n) / n
    if N is not None:
        eps += n / N
    return Prediction(value, eps * F.sup_norm, k, holes)


def oscillation_witness(skeleton: ToeplitzSkeleton, kind: str, stages: Iterable[int] | None = None,
                        F: ObservableSpec | None = None, r: int = 0, P: PolynomialSpec | None = None,
                        table: PrimeTable | None = None) -> list[tuple[int, float, float | None]]:
    """Averages at the stage scales ``n_t`` and the gaps between consecutive ones.

    ``primes``: over ``p < n_t``; ``semiprimes``: over ``p1*p2 < n_t``;
    ``polynomial``: over ``0 <= m`` with ``P(m) < n_t``.
    """
    F = F or ObservableSpec.sign(len(skeleton.alphabet))
    stages = list(stages) if stages is not None else list(range(1, skeleton.n_stages + 1))
    top = max(skeleton.period(t) for t in stages)
    if kind in ("primes", "semiprimes"):
        table = table_for(top, table)
    out: list[tuple[int, float, float | None]] = []
    prev = None
    for t in stages:
        n = skeleton.period(t)
        if kind == "primes" and n - 1 < 2 or kind == "semiprimes" and n - 1 < 4:
            out.append((t, math.nan, None))  # no index points below this scale
            continue
        if kind == "primes":
            value = prime_average(skeleton, F, n - 1, r, table).value
        elif kind == "semiprimes":
            value = semiprime_average(skeleton, F, n - 1, r, table).value
        elif kind == "polynomial":
            P = P or PolynomialSpec.square()
            value = poly_average(skeleton, P, F, P.inverse(n - 1), r, start=0).value
        else:
            raise ValueError(f"unknown index-set kind {kind!r}")
        out.append((t, value, None if prev is None or math.isnan(prev) else abs(value - prev)))
        prev = value
    return out


# ------------------------------------------------------------------- export


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def reports_to_csv(reports: Iterable[AverageReport], metadata: dict | None = None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rep in reports:
        writer.writerow([_fmt(rep.row()[c]) for c in CSV_COLUMNS])
    for key, value in sorted((metadata or {}).items()):
        buf.write(f"# {key}: {json.dumps(value, sort_keys=True)}\n")
    return buf.getvalue()


def reports_to_json(reports: Iterable[AverageReport]) -> str:
    return json.dumps([r.to_dict() for r in reports], sort_keys=True, indent=1)
