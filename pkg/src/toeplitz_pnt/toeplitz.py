"""Staged Toeplitz skeletons: periodic words with holes over nested periods.

Stage ``t`` is a word ``w_t`` of length ``n_t`` over symbol indices, with
``HOLE`` (-1) marking positions not yet decided.  A position decided at stage
``t`` keeps its value at every later stage, so the sequence is read off the last
stage; positions still holed there are resolved by the completion rule.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from .arith import euler_phi
from .errors import ContractError

HOLE = -1
HOLE_GLYPH = "?"


class WindowAlphabet:
    """Alphabet of ``(2m+1)``-blocks over a base alphabet, indexed by base-|A| codes."""

    def __init__(self, base: Sequence, radius: int):
        self.base = tuple(base)
        self.radius = radius
        self.width = 2 * radius + 1

    def __len__(self) -> int:
        return len(self.base) ** self.width

    def __getitem__(self, code: int) -> tuple:
        k = len(self.base)
        out = []
        for _ in range(self.width):
            code, d = divmod(int(code), k)
            out.append(self.base[d])
        return tuple(out)

    def __eq__(self, other) -> bool:
        return isinstance(other, WindowAlphabet) and (self.base, self.radius) == (other.base, other.radius)


@dataclass(frozen=True, eq=False)
class ToeplitzSkeleton:
    alphabet: Sequence
    periods: tuple[int, ...]
    words: tuple[np.ndarray, ...] = field(repr=False)
    completion: int = 0
    completion_word: np.ndarray | None = field(default=None, repr=False)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.periods) != len(self.words) or not self.periods:
            raise ContractError("need one word per period and at least one stage")
        for n, w in zip(self.periods, self.words):
            if len(w) != n:
                raise ContractError(f"word of length {len(w)} for period {n}")
        for a, b in zip(self.periods, self.periods[1:]):
            if b % a:
                raise ContractError(f"periods not nested: {a} does not divide {b}")

    # ------------------------------------------------------------- accessors

    @classmethod
    def from_strings(cls, alphabet: str, words: Sequence[str], completion: int = 0, **kw) -> "ToeplitzSkeleton":
        lookup = {s: i for i, s in enumerate(alphabet)}
        lookup[HOLE_GLYPH] = HOLE
        arrays = tuple(np.array([lookup[c] for c in w], dtype=np.int8) for w in words)
        return cls(tuple(alphabet), tuple(len(w) for w in words), arrays, completion, **kw)

    @property
    def n_stages(self) -> int:
        return len(self.periods)

    def period(self, t: int) -> int:
        """Period of stage ``t`` (stages are numbered from 1)."""
        return self.periods[t - 1]

    def word(self, t: int) -> np.ndarray:
        return self.words[t - 1]

    def holes(self, t: int) -> np.ndarray:
        return np.flatnonzero(self.word(t) == HOLE)

    def hole_count(self, t: int) -> int:
        return int(np.count_nonzero(self.word(t) == HOLE))

    def hole_mask(self, t: int, positions: np.ndarray) -> np.ndarray:
        return self.word(t)[np.asarray(positions, dtype=np.int64) % self.period(t)] == HOLE

    @cached_property
    def total_word(self) -> np.ndarray:
        """Last-stage word with residual holes resolved by the completion rule."""
        w = self.words[-1]
        holes = w == HOLE
        if not holes.any():
            return w
        out = w.copy()
        if self.completion_word is not None:
            out[holes] = self.completion_word[holes]
        else:
            out[holes] = self.completion
        return out

    def eval_codes(self, positions) -> np.ndarray:
        """Symbol indices of the completed sequence at integer positions."""
        return self.total_word[np.asarray(positions, dtype=np.int64) % self.periods[-1]]

    def eval(self, j: int):
        """Symbol at position ``j``: first stage where it is decided, else completion."""
        for n, w in zip(self.periods, self.words):
            v = int(w[j % n])
            if v != HOLE:
                return self.alphabet[v]
        return self.alphabet[int(self.total_word[j % self.periods[-1]])]

    def residual_hole_density(self) -> Fraction:
        return Fraction(self.hole_count(self.n_stages), self.periods[-1])

    def check_consistency(self) -> list[int]:
        """Stages ``t`` (1-based) whose decided positions are not kept at ``t+1``."""
        bad = []
        for t in range(1, self.n_stages):
            tiled = np.tile(self.word(t), self.period(t + 1) // self.period(t))
            decided = tiled != HOLE
            if not np.array_equal(self.word(t + 1)[decided], tiled[decided]):
                bad.append(t)
        return bad

    def with_stages(self, words: Sequence[np.ndarray], periods: Sequence[int], **changes) -> "ToeplitzSkeleton":
        kw = dict(alphabet=self.alphabet, completion=self.completion, metadata=dict(self.metadata))
        kw.update(changes)
        return ToeplitzSkeleton(periods=tuple(periods), words=tuple(words), **kw)

    def truncated(self, stages: int) -> "ToeplitzSkeleton":
        return self.with_stages(self.words[:stages], self.periods[:stages])

    # -------------------------------------------------------- serialization

    def to_text(self) -> str:
        if not isinstance(self.alphabet, tuple) or any(
            not isinstance(s, str) or len(s) != 1 or s == HOLE_GLYPH or ord(s) > 127 for s in self.alphabet
        ):
            raise ContractError("text format needs single-character ASCII symbols")
        glyphs = np.frombuffer(("".join(self.alphabet) + HOLE_GLYPH).encode(), dtype=np.uint8)
        lines = ["".join(self.alphabet), f"# completion={self.completion}"]
        if self.metadata:
            lines.append("# meta=" + json.dumps(self.metadata, sort_keys=True, separators=(",", ":")))
        for n, w in zip(self.periods, self.words):
            idx = np.where(w == HOLE, len(self.alphabet), w).astype(np.int64)
            lines.append(f"{n}:" + glyphs[idx].tobytes().decode("ascii"))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ToeplitzSkeleton":
        lines = text.splitlines()
        alphabet = tuple(lines[0])
        lookup = np.full(256, -2, dtype=np.int16)
        for i, s in enumerate(alphabet):
            lookup[ord(s)] = i
        lookup[ord(HOLE_GLYPH)] = HOLE
        completion, metadata = 0, {}
        periods, words = [], []
        for line in lines[1:]:
            if not line:
                continue
            if line.startswith("# completion="):
                completion = int(line.split("=", 1)[1])
            elif line.startswith("# meta="):
                metadata = json.loads(line.split("=", 1)[1])
            elif line.startswith("#"):
                continue
            else:
                n, word = line.split(":", 1)
                codes = lookup[np.frombuffer(word.encode("ascii"), dtype=np.uint8)]
                if (codes == -2).any():
                    raise ContractError(f"unknown symbol in stage of period {n}")
                periods.append(int(n))
                words.append(codes.astype(np.int8))
        return cls(alphabet, tuple(periods), tuple(words), completion, metadata=metadata)

    def save(self, path) -> None:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(self.to_text())

    @classmethod
    def load(cls, path) -> "ToeplitzSkeleton":
        with open(path, encoding="ascii") as fh:
            return cls.from_text(fh.read())


# ---------------------------------------------------------------- hole report


@dataclass(frozen=True)
class HoleRow:
    stage: int
    period: int
    holes: int
    per_period: Fraction
    per_phi: Fraction
    per_rho: Fraction


@dataclass(frozen=True)
class HoleReport:
    rows: tuple[HoleRow, ...]
    threshold: Fraction
    completion: int
    # finite-prefix consistency with each decay hypothesis
    regular: bool
    phi_decay: bool
    rho_decay: bool

    def as_dicts(self) -> list[dict]:
        return [
            dict(stage=r.stage, period=r.period, holes=r.holes, per_period=str(r.per_period),
                 per_phi=str(r.per_phi), per_rho=str(r.per_rho))
            for r in self.rows
        ]


def _decays(values: list[Fraction], threshold: Fraction) -> bool:
    return all(b <= a for a, b in zip(values, values[1:])) and values[-1] < threshold


def hole_report(skeleton: ToeplitzSkeleton, P=None, threshold: Fraction = Fraction(1, 10)) -> HoleReport:
    """Per-stage hole counts and their ratios to ``n_t``, ``phi(n_t)`` and ``n_t / rho^P(n_t)``."""
    from .polyres import PolynomialSpec, rho_max

    P = P or PolynomialSpec.square()
    rows = []
    for t in range(1, skeleton.n_stages + 1):
        n = skeleton.period(t)
        h = skeleton.hole_count(t)
        rows.append(HoleRow(t, n, h, Fraction(h, n), Fraction(h, euler_phi(n)), Fraction(h * rho_max(P, n), n)))
    return HoleReport(
        rows=tuple(rows),
        threshold=threshold,
        completion=skeleton.completion,
        regular=_decays([r.per_period for r in rows], threshold),
        phi_decay=_decays([r.per_phi for r in rows], threshold),
        rho_decay=_decays([r.per_rho for r in rows], threshold),
    )


# ------------------------------------------------------------ tower diameter


def _gap_interior(g: int) -> Fraction:
    """Sum of ``2**-min(j, g-j)`` over ``0 < j < g``."""
    k, odd = divmod(g, 2)
    if odd:
        return 2 * (1 - Fraction(1, 2**k))
    return 2 * (1 - Fraction(1, 2 ** (k - 1))) + Fraction(1, 2**k)


def tower_diameter(skeleton: ToeplitzSkeleton, t: int) -> Fraction:
    """Sum over levels ``0 <= j < n_t`` of ``2**-d(j)``, ``d(j)`` the cyclic distance to the nearest hole."""
    n = skeleton.period(t)
    holes = skeleton.holes(t)
    if len(holes) == 0:
        return Fraction(0)
    gaps = np.diff(np.append(holes, holes[0] + n))
    values, counts = np.unique(gaps, return_counts=True)
    total = Fraction(len(holes))
    for g, c in zip(values.tolist(), counts.tolist()):
        total += c * _gap_interior(g)
    return total


def tower_diameter_direct(skeleton: ToeplitzSkeleton, t: int) -> Fraction:
    """Level-by-level evaluation of the tower diameter (slow reference)."""
    n = skeleton.period(t)
    holes = skeleton.holes(t).tolist()
    if not holes:
        return Fraction(0)
    total = Fraction(0)
    for j in range(n):
        d = min(min(abs(j - h), n - abs(j - h)) for h in holes)
        total += Fraction(1, 2**d)
    return total


# ------------------------------------------------------------------ windowing


def _window_codes(word: np.ndarray, m: int, k: int) -> np.ndarray:
    n = len(word)
    idx = np.arange(n, dtype=np.int64)
    codes = np.zeros(n, dtype=np.int64)
    holed = np.zeros(n, dtype=bool)
    for i in range(2 * m + 1):
        vals = word[(idx - m + i) % n].astype(np.int64)
        holed |= vals == HOLE
        codes += np.where(vals == HOLE, 0, vals) * k**i
    codes[holed] = HOLE
    return codes


def window(skeleton: ToeplitzSkeleton, m: int) -> ToeplitzSkeleton:
    """Skeleton of ``j -> (x(j-m), ..., x(j+m))`` over the same periods."""
    if m < 0:
        raise ValueError("radius must be >= 0")
    if m == 0:
        return skeleton
    k = len(skeleton.alphabet)
    words = tuple(_window_codes(w, m, k) for w in skeleton.words)
    completion_word = _window_codes(skeleton.total_word, m, k)
    return ToeplitzSkeleton(
        alphabet=WindowAlphabet(skeleton.alphabet, m),
        periods=skeleton.periods,
        words=words,
        completion=0,
        completion_word=completion_word,
        metadata=dict(skeleton.metadata, window_radius=m),
    )


def random_skeleton(rng: np.random.Generator, alphabet_size: int = 2, stages: int = 3, max_period: int = 400,
                    hole_prob: float = 0.3) -> ToeplitzSkeleton:
    """A consistent random skeleton; used by property tests and demos."""
    n = int(rng.integers(1, 12))
    periods = [n]
    word = rng.integers(0, alphabet_size, n).astype(np.int8)
    word[rng.random(n) < hole_prob] = HOLE
    words = [word]
    for _ in range(stages - 1):
        k = int(rng.integers(2, 5))
        if periods[-1] * k > max_period:
            break
        tiled = np.tile(words[-1], k)
        holes = tiled == HOLE
        fill = rng.integers(0, alphabet_size, len(tiled)).astype(np.int8)
        keep = rng.random(len(tiled)) < hole_prob
        new = tiled.copy()
        new[holes & ~keep] = fill[holes & ~keep]
        periods.append(periods[-1] * k)
        words.append(new)
    return ToeplitzSkeleton(tuple(str(i) for i in range(alphabet_size)), tuple(periods), tuple(words))


def gcd_mask(n: int, positions: np.ndarray) -> np.ndarray:
    """``gcd(position, n) == 1`` for each position."""
    return np.gcd(np.asarray(positions, dtype=np.int64), n) == 1


__all__ = [
    "HOLE", "HOLE_GLYPH", "ToeplitzSkeleton", "WindowAlphabet", "HoleReport", "HoleRow",
    "hole_report", "tower_diameter", "tower_diameter_direct", "window", "random_skeleton", "gcd_mask",
]
