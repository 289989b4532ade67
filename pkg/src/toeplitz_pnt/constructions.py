"""Stage-by-stage builders of Toeplitz skeletons and their condition certificates.

Three counterexample builders share one scheme: stage ``t`` is a word of period
``n_t`` whose holes sit on a prescribed residue set; stage ``t+1`` repeats the
word ``k_{t+1}`` times, fills every hole in the first copy (pushing the stage-``t``
average towards an alternating target) and fills the holes of the later copies
that leave the prescribed residue set.

* ``A``: holes on residues coprime to ``n_t``; target is the prime average.
* ``SPNT``: as ``A`` with perfect-square periods; target is the semiprime average.
* ``squares``: holes on squares modulo ``n_t``; target is the average along ``m^2``.

Every built stage is re-validated from the skeleton alone by
:func:`validate_stage`; a builder never keeps a stage whose certificate fails.
"""
from __future__ import annotations

import json
import logging
import math
import operator
from dataclasses import dataclass, field, fields
from fractions import Fraction
from typing import Any

import numpy as np

from .arith import (
    PrimeTable,
    _small_primes,
    euler_phi,
    factorize,
    is_perfect_square,
    prime_pi_ap_all,
    semiprime_noncoprime_count,
    semiprime_pairs,
    semiprime_pi,
    semiprime_values,
    table_for,
)
from .errors import BuildError, CertificateError, ContractError
from .polyres import squares_mask, tilde_mask, tilde_psi
from .toeplitz import HOLE, ToeplitzSkeleton

log = logging.getLogger(__name__)

THEOREMS = ("A", "SPNT", "squares", "bounded")
FILL_POLICIES = ("alternating-target", "seeded-random")
_DEFAULT_INITIAL = {"A": 30, "SPNT": 900}


@dataclass(frozen=True)
class BuildConfig:
    """Builder parameters.

    ``growth_constant``, ``totient_ratio``, ``holed_fraction`` and
    ``noncoprime_fraction`` replace the constants 100, 1/2, 1/2 and 1/8 of the
    original scheme; :meth:`strict` restores those values.
    """

    growth_constant: int = 2
    stage_budget: int = 3
    modulus_budget: int = 10**8
    fill_policy: str = "alternating-target"
    oscillation_target: Fraction = Fraction(1, 2)
    seed: int = 0
    totient_ratio: Fraction = Fraction(17, 20)
    holed_fraction: Fraction = Fraction(1, 2)
    noncoprime_fraction: Fraction = Fraction(1, 8)
    initial_modulus: int | None = None
    prime_support: tuple[int, ...] = (5, 2, 3)
    square_growth: int = 16
    l2_samples: int = 20

    def __post_init__(self):
        for name in ("oscillation_target", "totient_ratio", "holed_fraction", "noncoprime_fraction"):
            object.__setattr__(self, name, Fraction(getattr(self, name)))
        object.__setattr__(self, "prime_support", tuple(int(p) for p in self.prime_support))
        if self.growth_constant < 2:
            raise ContractError("growth_constant must be >= 2")
        if self.stage_budget < 1 or self.modulus_budget < 2:
            raise ContractError("budgets must be positive")
        if self.fill_policy not in FILL_POLICIES:
            raise ContractError(f"fill_policy must be one of {FILL_POLICIES}")
        if not 0 < self.oscillation_target <= 1:
            raise ContractError("oscillation_target must lie in (0, 1]")
        if not 0 < self.totient_ratio < 1:
            raise ContractError("totient_ratio must lie in (0, 1)")

    @classmethod
    def strict(cls, **kw) -> "BuildConfig":
        base = dict(growth_constant=100, totient_ratio=Fraction(1, 2))
        base.update(kw)
        return cls(**base)

    @classmethod
    def spnt_desk(cls, **kw) -> "BuildConfig":
        """Relaxed semiprime thresholds that admit a three-stage build below 10^8."""
        base = dict(totient_ratio=Fraction(10, 11), holed_fraction=Fraction(3, 10),
                    noncoprime_fraction=Fraction(1, 2))
        base.update(kw)
        return cls(**base)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = str(v) if isinstance(v, Fraction) else (list(v) if isinstance(v, tuple) else v)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "BuildConfig":
        known = {f.name for f in fields(cls)}
        kw = {}
        for k, v in d.items():
            if k not in known:
                raise ContractError(f"unknown build parameter {k!r}")
            if k in ("oscillation_target", "totient_ratio", "holed_fraction", "noncoprime_fraction"):
                v = Fraction(str(v))
            elif k == "prime_support":
                v = tuple(v)
            kw[k] = v
        return cls(**kw)


# ---------------------------------------------------------------- certificates


def _jsonable(v: Any) -> Any:
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else v.numerator
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    return v


_OPS = {"<=": operator.le, ">=": operator.ge, "==": operator.eq}


@dataclass(frozen=True)
class ConditionCheck:
    condition: str
    lhs: Any
    relation: str
    rhs: Any
    passed: bool
    note: str = ""


def _check(condition: str, lhs, relation: str, rhs, note: str = "") -> ConditionCheck:
    return ConditionCheck(condition, lhs, relation, rhs, bool(_OPS[relation](lhs, rhs)), note)


@dataclass
class StageCertificate:
    stage: int
    theorem: str
    checks: list[ConditionCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> list[str]:
        return [c.condition for c in self.checks if not c.passed]

    def conditions(self) -> list[str]:
        return [c.condition for c in self.checks]

    def check(self, name: str) -> ConditionCheck:
        for c in self.checks:
            if c.condition == name:
                return c
        raise KeyError(name)

    def records(self) -> list[dict]:
        return [
            {"stage": self.stage, "theorem": self.theorem, "condition": c.condition, "lhs": _jsonable(c.lhs),
             "relation": c.relation, "rhs": _jsonable(c.rhs), "passed": c.passed, "note": c.note}
            for c in self.checks
        ]


def certificates_to_jsonl(certs: list[StageCertificate]) -> str:
    lines = [json.dumps(rec, sort_keys=True) for cert in certs for rec in cert.records()]
    return "".join(line + "\n" for line in lines)


# -------------------------------------------------------------- common checks


def _coprime_flags(n: int, positions: np.ndarray) -> np.ndarray:
    return np.gcd(np.asarray(positions, dtype=np.int64), n) == 1


def _consistency(skeleton: ToeplitzSkeleton, t: int) -> ConditionCheck:
    if t == 1:
        return _check("consistency", 0, "==", 0, "base stage")
    prev, cur = skeleton.word(t - 1), skeleton.word(t)
    tiled = np.tile(prev, len(cur) // len(prev))
    decided = tiled != HOLE
    bad = int(np.count_nonzero(cur[decided] != tiled[decided]))
    return _check("consistency", bad, "==", 0, "decided positions changed between stages")


def _lemma_checks(n_prev: int, n: int, config: BuildConfig, t: int) -> list[ConditionCheck]:
    """Reduction of coprime residues and the count of coprime lifts of a coprime residue."""
    k = n // n_prev
    residues = np.flatnonzero(_coprime_flags(n, np.arange(n)))
    l1_bad = int(np.count_nonzero(np.gcd(residues % n_prev, n_prev) != 1))
    rng = np.random.default_rng([config.seed, t, 2])
    coprime_prev = np.flatnonzero(_coprime_flags(n_prev, np.arange(n_prev)))
    take = min(config.l2_samples, len(coprime_prev))
    sample = np.sort(rng.choice(coprime_prev, size=take, replace=False)) if take else []
    phik = euler_phi(k)
    j = np.arange(k, dtype=np.int64)
    l2_bad = sum(int(np.count_nonzero(np.gcd(int(a) + j * n_prev, n) == 1)) != phik for a in sample)
    return [
        _check("l1", l1_bad, "==", 0, "coprime residues mod n_t reducing to non-coprime residues mod n_{t-1}"),
        _check("l2", l2_bad, "==", 0, f"sampled residues ({take}) whose coprime lift count differs from phi(k)"),
    ]


def _config_from(skeleton: ToeplitzSkeleton, config: BuildConfig | None) -> BuildConfig:
    if config is not None:
        return config
    if "config" in skeleton.metadata:
        return BuildConfig.from_dict(skeleton.metadata["config"])
    return BuildConfig()


def validate_stage(skeleton: ToeplitzSkeleton, t: int, which: str, config: BuildConfig | None = None,
                   table: PrimeTable | None = None) -> StageCertificate:
    """Recompute every required inequality for stage ``t`` directly from the skeleton."""
    if which not in THEOREMS:
        raise ValueError(f"unknown theorem id {which!r}")
    if not 1 <= t <= skeleton.n_stages:
        raise ContractError(f"stage {t} does not exist")
    config = _config_from(skeleton, config)
    cert = StageCertificate(t, which, [_consistency(skeleton, t)])
    if which in ("A", "SPNT"):
        cert.checks += _coprime_family_checks(skeleton, t, which, config, table)
    elif which == "squares":
        cert.checks += _squares_checks(skeleton, t, config)
    else:
        limit = skeleton.metadata.get("holes_per_stage")
        if limit is not None:
            cert.checks.append(_check("holes_bound", skeleton.hole_count(t), "<=", int(limit)))
    return cert


def _coprime_family_checks(skeleton: ToeplitzSkeleton, t: int, which: str, config: BuildConfig,
                           table: PrimeTable | None) -> list[ConditionCheck]:
    n = skeleton.period(t)
    word = skeleton.word(t)
    c = config.growth_constant
    theta = config.totient_ratio
    phi = euler_phi(n)
    holes = np.flatnonzero(word == HOLE)
    table = table_for(n, table)
    out = []
    if t >= 2:
        n_prev = skeleton.period(t - 1)
        k = n // n_prev
        out.append(_check("t1", math.gcd(k, n_prev), "==", 1, f"k={k}"))
    out.append(_check("t2", Fraction(phi, n), "<=", theta**t, f"totient ratio {theta} per stage"))
    out.append(_check("t3", int(np.count_nonzero(~_coprime_flags(n, holes))), "==", 0,
                      "holes at residues not coprime to n_t"))
    out.append(_check("t4", len(holes), ">=", (1 - sum(Fraction(1, c**l) for l in range(1, t + 1))) * phi))
    h = config.holed_fraction
    if which == "A":
        primes = table.primes_upto(n - 1).astype(np.int64)
        holed = int(np.count_nonzero(word[primes] == HOLE))
        out.append(_check("t5", holed, ">=", h * len(primes), "holed primes below n_t vs pi(n_t)"))
    else:
        out.append(_check("square", int(is_perfect_square(n)), "==", 1, "n_t is a perfect square"))
        holed = sum(int(np.count_nonzero(word[p2s.astype(np.int64) * p1] == HOLE))
                    for p1, p2s in semiprime_pairs(table, n - 1))
        out.append(_check("t5a", holed, ">=", h * semiprime_pi(table, n - 1),
                          "holed semiprime pairs below n_t vs pi_2(n_t)"))
    if t >= 2:
        n_prev = skeleton.period(t - 1)
        k = n // n_prev
        phik = euler_phi(k)
        out.append(_check("t6", Fraction(phik, k), "<=", theta))
        out.append(_check("t6.5", phik, ">=", c**t))
        phi_prev = euler_phi(n_prev)
        coprime_prev = _coprime_flags(n_prev, np.arange(n_prev))
        if which == "A":
            pi_n, pi_prev = table.pi(n), table.pi(n_prev)
            out.append(_check("t6++a", 8 * math.log(n), "<=", pi_n, "natural logarithm"))
            out.append(_check("t6++b", 8 * pi_prev, "<=", pi_n))
            counts = prime_pi_ap_all(table, n, n_prev)
            out.append(_check("t7", int(counts[coprime_prev].max()), "<=", Fraction(2 * pi_n, phi_prev),
                              "max primes in a coprime class mod n_{t-1}"))
        else:
            out.append(_check("k_square", int(is_perfect_square(k)), "==", 1))
            pi2 = semiprime_pi(table, n)
            vals = semiprime_values(table, n - 1)
            counts = np.bincount(vals % n_prev, minlength=n_prev)
            out.append(_check("t7a", int(counts[coprime_prev].max()), "<=", Fraction(2 * pi2, phi_prev),
                              "max semiprimes in a coprime class mod n_{t-1}"))
            mass = semiprime_noncoprime_count(table, n, n_prev, mode="ordered")
            out.append(_check("noncoprime", mass, "<=", config.noncoprime_fraction * pi2,
                              "semiprime pairs sharing a factor with n_{t-1}"))
        out += _lemma_checks(n_prev, n, config, t)
    return out


def squares_beta(support) -> Fraction:
    return Fraction(1, 16) * math.prod(Fraction(p - 1, p) for p in support)


def _gamma(skeleton: ToeplitzSkeleton, t: int) -> Fraction:
    return sum((Fraction(1, tilde_psi(skeleton.period(l) // skeleton.period(l - 1))) for l in range(2, t + 1)),
               Fraction(0))


def _squares_checks(skeleton: ToeplitzSkeleton, t: int, config: BuildConfig) -> list[ConditionCheck]:
    n = skeleton.period(t)
    word = skeleton.word(t)
    support = config.prime_support
    beta = squares_beta(support)
    out = []
    extra = sorted(set(factorize(n).primes) - set(support))
    out.append(_check("support", len(extra), "==", 0, f"primes of n_t outside {list(support)}: {extra}"))
    if t >= 2:
        n_prev = skeleton.period(t - 1)
        k = n // n_prev
        out.append(_check("coprime_k", math.gcd(k, n_prev), "==", 1, f"k={k}"))
        out.append(_check("growth", n, ">=", config.square_growth * n_prev**2))
    gamma = _gamma(skeleton, t)
    out.append(_check("gamma", gamma, "<=", Fraction(1, 2), "sum of 1/tilde_psi(k_l), l >= 2"))
    holes = word == HOLE
    attain = squares_mask(n)
    out.append(_check("sq3", int(np.count_nonzero(holes & ~attain)), "==", 0, "holes outside the squares mod n_t"))
    tmask = tilde_mask(n)
    out.append(_check("sq4", int(np.count_nonzero(holes & tmask)), ">=", (1 - gamma) * tilde_psi(n)))
    m = np.arange(math.isqrt(n - 1) + 1, dtype=np.int64)
    holed_sq = int(np.count_nonzero(holes[m * m]))
    # compare holed_sq >= beta * sqrt(n_t) exactly by squaring
    out.append(ConditionCheck("sq5", holed_sq, ">=", f"{float(beta) * math.sqrt(n):.6f}",
                              holed_sq**2 >= beta**2 * n, f"beta={beta}; compared as count^2 >= beta^2 n_t"))
    return out


# ------------------------------------------------------------------ builders


def _target(t: int) -> int:
    """Symbol written at stage-``t`` index points: 0 (F=+1) on odd t, 1 (F=-1) on even t."""
    return 0 if t % 2 else 1


def _fill_values(config: BuildConfig, t: int, size: int) -> np.ndarray:
    if config.fill_policy == "seeded-random":
        return np.random.default_rng([config.seed, t, 1]).integers(0, 2, size).astype(np.int8)
    return np.full(size, _target(t), dtype=np.int8)


def _fill(word: np.ndarray, mask: np.ndarray, config: BuildConfig, t: int) -> None:
    vals = _fill_values(config, t, len(word))
    word[mask] = vals[mask]


def _skeleton(periods, words, config: BuildConfig, theorem: str, T: int, extra: dict | None = None) -> ToeplitzSkeleton:
    meta = {"builder": theorem, "config": config.to_dict(), "completion_rule": "stage target symbol"}
    meta.update(extra or {})
    return ToeplitzSkeleton(("0", "1"), tuple(periods), tuple(words), completion=_target(T), metadata=meta)


class _Search:
    """Tracks why candidate multipliers were rejected."""

    ORDER = ("t1", "k_square", "t6", "t6.5", "coprime_k", "growth", "gamma", "t6++a", "t6++b",
             "noncoprime", "t7", "t7a", "certificate")

    def __init__(self):
        self.best: tuple[int, str] | None = None
        self.failures: dict[str, int] = {}

    def reject(self, condition: str) -> None:
        self.reject_many(condition, 1)

    def reject_many(self, condition: str, count: int) -> None:
        if count <= 0:
            return
        self.failures[condition] = self.failures.get(condition, 0) + count
        depth = self.ORDER.index(condition.split(":")[0]) if condition.split(":")[0] in self.ORDER else -1
        if self.best is None or depth >= self.best[0]:
            self.best = (depth, condition)

    def error(self, stage: int, n: int, budget: int) -> BuildError:
        cond = self.best[1] if self.best else "modulus_budget"
        summary = ", ".join(f"{k}: {v}" for k, v in sorted(self.failures.items()))
        return BuildError(
            f"no valid k for stage {stage} with n_(t+1) <= modulus_budget={budget} (n_t={n}); "
            f"last blocking condition {cond}; rejections {{{summary}}}",
            stage, cond)


def _coprime_step(word: np.ndarray, n: int, k: int, t: int, which: str, config: BuildConfig,
                  table: PrimeTable) -> np.ndarray:
    new = np.tile(word, k)
    first = new[:n]
    holes_first = first == HOLE
    if which == "A":
        points = table.primes_upto(n - 1).astype(np.int64)
    else:
        points = semiprime_values(table, n - 1)
    target_mask = np.zeros(n, dtype=bool)
    target_mask[points] = True
    target_mask &= holes_first
    first[target_mask] = _target(t)
    _fill(first, holes_first & ~target_mask, config, t)
    rest = new[n:]
    idx = np.arange(n, n * k, dtype=np.int64)
    bad = (rest == HOLE) & (np.gcd(idx, n * k) != 1)
    _fill_rest = _fill_values(config, t, len(new))[n:]
    rest[bad] = _fill_rest[bad]
    return new


def _totients(K: int) -> np.ndarray:
    phi = np.arange(K + 1, dtype=np.int64)
    for p in _small_primes(K):
        phi[p::p] -= phi[p::p] // p
    return phi


def _screen_multipliers(n: int, stage: int, which: str, config: BuildConfig, search: "_Search"):
    """Yield ``k`` in increasing order passing the cheap conditions t1, t6, t6.5 (and squareness)."""
    K = config.modulus_budget // n
    if which == "SPNT":
        ks = np.arange(2, math.isqrt(K) + 1, dtype=np.int64) ** 2
    else:
        ks = np.arange(2, K + 1, dtype=np.int64)
    if not len(ks):
        return
    cop = np.gcd(ks, n) == 1
    search.reject_many("t1", int(np.count_nonzero(~cop)))
    ks = ks[cop]
    if which == "SPNT":
        phis = np.array([euler_phi(int(k)) for k in ks], dtype=np.int64)
    else:
        phis = _totients(K)[ks]
    theta = config.totient_ratio
    ok6 = phis * theta.denominator <= ks * theta.numerator
    search.reject_many("t6", int(np.count_nonzero(~ok6)))
    ok65 = ok6 & (phis >= config.growth_constant**stage)
    search.reject_many("t6.5", int(np.count_nonzero(ok6 & ~ok65)))
    yield from (int(k) for k in ks[ok65])


def _build_coprime_family(config: BuildConfig, which: str) -> tuple[ToeplitzSkeleton, list[StageCertificate]]:
    n = config.initial_modulus or _DEFAULT_INITIAL[which]
    if which == "SPNT" and not is_perfect_square(n):
        raise ContractError("SPNT builder needs a perfect-square initial modulus")
    word = np.full(n, HOLE, dtype=np.int8)
    noncop = ~_coprime_flags(n, np.arange(n))
    _fill(word, noncop, config, 1)
    periods, words = [n], [word]
    base = validate_stage(_skeleton(periods, words, config, which, 1), 1, which, config)
    if not base.passed:
        raise CertificateError(f"initial stage fails {base.failed()}", 1, base.failed()[0])
    certs: list[StageCertificate] = []
    for t in range(1, config.stage_budget):
        n = periods[-1]
        search = _Search()
        found = None
        for k in _screen_multipliers(n, t + 1, which, config, search):
            N = n * k
            table = table_for(N)
            if which == "A":
                pi_n = table.pi(N)
                if 8 * math.log(N) > pi_n:
                    search.reject("t6++a")
                    continue
                if 8 * table.pi(n) > pi_n:
                    search.reject("t6++b")
                    continue
            log.info("stage %d: trying k=%d (n=%d)", t + 1, k, N)
            cand = _coprime_step(words[-1], n, k, t, which, config, table)
            skel = _skeleton(periods + [N], words + [cand], config, which, t + 1)
            cert = validate_stage(skel, t + 1, which, config, table)
            if cert.passed:
                found = (N, cand, cert)
                break
            search.reject("certificate:" + ",".join(cert.failed()))
        if found is None:
            raise search.error(t + 1, n, config.modulus_budget)
        periods.append(found[0])
        words.append(found[1])
        certs.append(found[2])
    return _skeleton(periods, words, config, which, len(periods)), certs


def build_theorem_a(config: BuildConfig | None = None) -> tuple[ToeplitzSkeleton, list[StageCertificate]]:
    """Regular skeleton whose prime averages at the scales ``n_t`` alternate."""
    return _build_coprime_family(config or BuildConfig(), "A")


def build_spnt_counterexample(config: BuildConfig | None = None) -> tuple[ToeplitzSkeleton, list[StageCertificate]]:
    """Perfect-square periods; semiprime averages at the scales ``n_t`` alternate."""
    return _build_coprime_family(config or BuildConfig.spnt_desk(), "SPNT")


def build_squares_counterexample(config: BuildConfig | None = None) -> tuple[ToeplitzSkeleton, list[StageCertificate]]:
    """Holes on squares modulo ``n_t``; averages along ``m^2`` at scales ``sqrt(n_t)`` alternate."""
    config = config or BuildConfig()
    support = config.prime_support
    if not support:
        raise ContractError("prime_support must not be empty")
    if squares_beta(support) <= Fraction(1, 2**40):
        raise ContractError("prime support makes beta vanish below resolution")
    n = config.initial_modulus or support[0]
    word = np.full(n, HOLE, dtype=np.int8)
    _fill(word, ~squares_mask(n), config, 1)
    periods, words = [n], [word]
    base = validate_stage(_skeleton(periods, words, config, "squares", 1), 1, "squares", config)
    if not base.passed:
        raise CertificateError(f"initial stage fails {base.failed()}", 1, base.failed()[0])
    certs: list[StageCertificate] = []
    for t in range(1, config.stage_budget):
        n = periods[-1]
        unused = [p for p in support if n % p]
        if not unused:
            raise BuildError(f"prime support {list(support)} exhausted at stage {t + 1}", t + 1, "support")
        q = unused[0]
        search = _Search()
        found = None
        k = 1
        while True:
            k *= q
            N = n * k
            if N > config.modulus_budget:
                break
            if N < config.square_growth * n * n:
                search.reject("growth")
                continue
            skel_periods = periods + [N]
            gamma = _gamma(_skeleton(skel_periods, words + [np.zeros(N, dtype=np.int8)], config, "squares", t + 1),
                           t + 1)
            if gamma > Fraction(1, 2):
                search.reject("gamma")
                continue
            cand = _squares_step(words[-1], n, k, t, config)
            skel = _skeleton(skel_periods, words + [cand], config, "squares", t + 1)
            cert = validate_stage(skel, t + 1, "squares", config)
            if cert.passed:
                found = (N, cand, cert)
                break
            search.reject("certificate:" + ",".join(cert.failed()))
        if found is None:
            raise search.error(t + 1, n, config.modulus_budget)
        periods.append(found[0])
        words.append(found[1])
        certs.append(found[2])
    beta = squares_beta(support)
    return _skeleton(periods, words, config, "squares", len(periods), {"beta": str(beta)}), certs


def _squares_step(word: np.ndarray, n: int, k: int, t: int, config: BuildConfig) -> np.ndarray:
    new = np.tile(word, k)
    first = new[:n]
    holes_first = first == HOLE
    m = np.arange(math.isqrt(n - 1) + 1, dtype=np.int64)
    target_mask = np.zeros(n, dtype=bool)
    target_mask[m * m] = True
    target_mask &= holes_first
    first[target_mask] = _target(t)
    _fill(first, holes_first & ~target_mask, config, t)
    attain = squares_mask(n * k)
    rest = new[n:]
    bad = (rest == HOLE) & ~attain[n:]
    vals = _fill_values(config, t, len(new))[n:]
    rest[bad] = vals[bad]
    return new


def build_bounded_holes(alphabet_size: int, periods, holes_per_stage: int, seed: int = 0) -> ToeplitzSkeleton:
    """Regular skeleton with at most ``holes_per_stage`` holes per period.

    Each stage decides every position except at most ``holes_per_stage`` of the
    lifts of the previous holes, chosen coprime to the new period when possible.
    """
    periods = [int(p) for p in periods]
    if holes_per_stage < 1:
        raise ContractError("holes_per_stage must be >= 1")
    for a, b in zip(periods, periods[1:]):
        if b % a:
            raise ContractError(f"periods not nested: {a} does not divide {b}")
    rng = np.random.default_rng(seed)
    fallback: list[int] = []

    def pick(candidates: np.ndarray, n: int, t: int) -> np.ndarray:
        good = candidates[_coprime_flags(n, candidates)]
        pool = good if len(good) else candidates
        if not len(good) and len(candidates):
            fallback.append(t)
        take = min(holes_per_stage, len(pool))
        return np.sort(rng.choice(pool, size=take, replace=False)) if take else pool[:0]

    n = periods[0]
    word = rng.integers(0, alphabet_size, n).astype(np.int8)
    word[pick(np.arange(n, dtype=np.int64), n, 1)] = HOLE
    words = [word]
    for t, n in enumerate(periods[1:], start=2):
        tiled = np.tile(words[-1], n // len(words[-1]))
        lifts = np.flatnonzero(tiled == HOLE)
        keep = pick(lifts, n, t)
        fills = rng.integers(0, alphabet_size, n).astype(np.int8)
        new = tiled.copy()
        new[lifts] = fills[lifts]
        new[keep] = HOLE
        words.append(new)
    meta = {"builder": "bounded", "holes_per_stage": holes_per_stage, "seed": seed, "fallback_stages": fallback}
    return ToeplitzSkeleton(tuple(str(i) for i in range(alphabet_size)), tuple(periods), tuple(words),
                            completion=0, metadata=meta)


BUILDERS = {
    "A": build_theorem_a,
    "SPNT": build_spnt_counterexample,
    "squares": build_squares_counterexample,
}

__all__ = [
    "BuildConfig", "ConditionCheck", "StageCertificate", "certificates_to_jsonl", "validate_stage",
    "build_theorem_a", "build_spnt_counterexample", "build_squares_counterexample", "build_bounded_holes",
    "squares_beta", "BUILDERS", "THEOREMS",
]

