"""Infinite binary words: periodic and mechanical (Sturmian) generators.

A word spec is either ``PeriodicWord(pattern)`` or ``MechanicalWord(alpha,
rho)``.  Mechanical words use the lower mechanical rule
``w_i = floor((i+1)*alpha + rho) - floor(i*alpha + rho)``; for irrational
slopes this realizes a Sturmian word.  All letter evaluation is done at high
precision with a guard band around integers so a misrounded floor raises
instead of silently flipping a letter.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath as mp

PRECISION_ENV = "PILAB_PRECISION_BITS"
_MIN_WORD_BITS = 128


class PrecisionError(ArithmeticError):
    """A floor evaluation landed inside the guard band around an integer."""


def precision_bits(minimum: int = 64) -> int:
    bits = int(os.environ.get(PRECISION_ENV, "192"))
    return max(bits, minimum)


@dataclass(frozen=True)
class PeriodicWord:
    pattern: tuple[int, ...]

    def __post_init__(self):
        pattern = tuple(int(b) for b in self.pattern)
        if not pattern:
            raise ValueError("periodic pattern must be nonempty")
        if any(b not in (0, 1) for b in pattern):
            raise ValueError("pattern letters must be 0 or 1")
        if not any(pattern):
            raise ValueError("periodic pattern must contain a 1 (word must be nonzero)")
        object.__setattr__(self, "pattern", pattern)

    @property
    def period(self) -> int:
        return len(self.pattern)

    def letter(self, i: int) -> int:
        # 1-based index into the infinite word
        return self.pattern[(i - 1) % len(self.pattern)]

    def slope(self) -> Fraction:
        return Fraction(sum(self.pattern), len(self.pattern))

    def describe(self) -> str:
        return "periodic:" + "".join(str(b) for b in self.pattern)


@dataclass(frozen=True)
class MechanicalWord:
    alpha: object
    rho: object = 0

    def __post_init__(self):
        alpha, rho = self.alpha, self.rho
        if isinstance(alpha, float):
            alpha = repr(alpha)
        if isinstance(rho, float):
            rho = repr(rho)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "rho", rho)
        a = self._mpf(alpha)
        r = self._mpf(rho)
        if not (0 < a <= 1):
            raise ValueError("mechanical slope must lie in (0, 1]")
        if not (0 <= r < 1):
            raise ValueError("mechanical intercept must lie in [0, 1)")

    @staticmethod
    def _mpf(value):
        with mp.workprec(precision_bits(_MIN_WORD_BITS)):
            if isinstance(value, Fraction):
                return mp.mpf(value.numerator) / value.denominator
            return mp.mpf(value)

    def letter(self, i: int) -> int:
        return self._floor(i + 1) - self._floor(i)

    def _floor(self, i: int) -> int:
        bits = precision_bits(_MIN_WORD_BITS)
        with mp.workprec(bits):
            x = i * self._mpf(self.alpha) + self._mpf(self.rho)
            nearest = mp.nint(x)
            if abs(x - nearest) < mp.mpf(2) ** (-(bits // 2)):
                # x == integer is fine only when it is exact (rational inputs
                # should use the periodic realization instead)
                raise PrecisionError(
                    f"floor({i}*alpha+rho) within guard band of an integer; "
                    f"raise {PRECISION_ENV} or use a periodic spec"
                )
            return int(mp.floor(x))

    def slope(self):
        return self._mpf(self.alpha)

    def describe(self) -> str:
        return f"mechanical:alpha={self.alpha},rho={self.rho}"


WordSpec = object  # PeriodicWord | MechanicalWord


def mechanical(alpha, rho=0) -> WordSpec:
    """Build a mechanical word spec; exact rational slopes become periodic.

    A rational slope p/q yields an (eventually) periodic word, so it is
    realized as the explicit one-period pattern, keeping the slope exactly
    p/q.  Intercepts are only supported on the periodic path when rational.
    """
    if isinstance(alpha, Fraction):
        rho_f = Fraction(rho) if not isinstance(rho, Fraction) else rho
        q = alpha.denominator
        pattern = tuple(
            int((i + 1) * alpha + rho_f) - int(i * alpha + rho_f) for i in range(1, q + 1)
        )
        return PeriodicWord(pattern)
    return MechanicalWord(alpha, rho)


@dataclass(frozen=True)
class FactorSet:
    length: int
    factors: frozenset
    certified: bool

    def __len__(self):
        return len(self.factors)


def generate_prefix(spec: WordSpec, n: int) -> list[int]:
    """First n letters w_1..w_n of the word."""
    if n < 1:
        raise ValueError("prefix length must be >= 1")
    return list(_prefix_cached(spec, n))


@lru_cache(maxsize=None)
def _prefix_cached(spec, n: int) -> tuple[int, ...]:
    if isinstance(spec, PeriodicWord):
        p = spec.pattern
        reps = -(-n // len(p))
        return (p * reps)[:n]
    return tuple(spec.letter(i) for i in range(1, n + 1))


def complexity(spec: WordSpec, L: int):
    """Count distinct length-L factors; returns (count, FactorSet).

    Periodic words are scanned over one full period (exact, always
    certified).  Mechanical words are scanned over doubling prefixes until
    the factor count is stable across two rounds and equals the Sturmian
    target L+1; exhausting the budget yields certified=False.
    """
    if L < 1:
        raise ValueError("factor length must be >= 1")
    if isinstance(spec, PeriodicWord):
        T = spec.period
        prefix = generate_prefix(spec, T + L - 1) if T + L - 1 >= L else generate_prefix(spec, L)
        factors = _scan_factors(prefix, L)
        return len(factors), FactorSet(L, frozenset(factors), True)

    target = L + 1
    budget = 4 * (L + 2)
    previous = -1
    for _ in range(24):
        prefix = generate_prefix(spec, budget)
        factors = _scan_factors(prefix, L)
        if len(factors) == previous == target:
            return target, FactorSet(L, frozenset(factors), True)
        previous = len(factors)
        budget *= 2
    return previous, FactorSet(L, frozenset(factors), False)


def _scan_factors(prefix, L: int) -> set:
    return {tuple(prefix[i : i + L]) for i in range(len(prefix) - L + 1)}


def slope_partial(spec: WordSpec, n: int) -> Fraction:
    """Exact rational partial slope (w_1 + ... + w_n) / n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return Fraction(sum(_prefix_cached(spec, n)), n)


def parse_word_spec(text: str) -> WordSpec:
    """Parse ``periodic:01101`` or ``mechanical:alpha=0.38,rho=0``."""
    kind, _, rest = text.partition(":")
    if kind == "periodic":
        return PeriodicWord(tuple(int(c) for c in rest))
    if kind == "mechanical":
        fields = {}
        for item in rest.split(","):
            key, _, value = item.partition("=")
            fields[key.strip()] = value.strip()
        if "alpha" not in fields:
            raise ValueError("mechanical spec needs alpha=")
        alpha = _parse_number(fields["alpha"])
        rho = _parse_number(fields.get("rho", "0"))
        return mechanical(alpha, rho)
    raise ValueError(f"unknown word spec kind: {kind!r}")


def _parse_number(text: str):
    if "/" in text:
        return Fraction(text)
    if text in ("0", "1") or ("." not in text and "e" not in text.lower()):
        return Fraction(int(text))
    return text  # decimal string, kept verbatim for mpf
