"""Benford's first-digit law and goodness-of-fit statistics.

The reference distribution is P(d) = log10(1 + 1/d) for d = 1..9. Node and
subgraph anomaly scores in this package are Pearson chi-square statistics of
first-digit counts against that distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from typing import Iterable

import numpy as np

DIGITS = np.arange(1, 10)

# Rounded minimum digit probability as printed in the literature; the
# statistics below always use the exact pmf value (~0.04576).
PUBLISHED_DELTA = 0.048


@dataclass(frozen=True)
class BenfordModel:
    """First-digit probabilities p[d-1] = log10(1 + 1/d)."""

    p: np.ndarray = field(default_factory=lambda: np.log10(1.0 + 1.0 / DIGITS))

    @property
    def delta(self) -> float:
        """Smallest digit probability (that of digit 9)."""
        return float(self.p.min())

    def expected(self, total: int | float) -> np.ndarray:
        return self.p * total

    def sample_digits(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw iid first digits (uint8, 1..9)."""
        return (rng.choice(9, size=size, p=self.p) + 1).astype(np.uint8)


BENFORD = BenfordModel()


@dataclass(frozen=True)
class DigitHistogram:
    counts: np.ndarray  # int64, index 0 is digit 1

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @classmethod
    def from_digits(cls, digits: np.ndarray) -> "DigitHistogram":
        digits = np.asarray(digits, dtype=np.int64)
        return cls(np.bincount(digits - 1, minlength=9)[:9].astype(np.int64))

    def frequencies(self) -> np.ndarray:
        total = self.total
        if total == 0:
            return np.zeros(9)
        return self.counts / total

    def to_dict(self) -> dict:
        return {"counts": [int(c) for c in self.counts], "total": self.total}


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    sample_count: int
    per_digit_terms: np.ndarray
    counts: np.ndarray

    @property
    def no_samples(self) -> bool:
        return self.sample_count == 0

    def to_dict(self) -> dict:
        return {
            "counts": [int(c) for c in self.counts],
            "total": self.sample_count,
            "statistic": float(self.statistic),
            "per_digit_terms": [float(t) for t in self.per_digit_terms],
        }


def first_digit(amount) -> int:
    """Leading significant decimal digit of a positive finite number.

    Works on the decimal text of ``amount`` so values such as ``0.052`` or
    ``1e3`` never go through a logarithm.

    >>> first_digit("9667"), first_digit(0.052), first_digit("1.5E-7")
    (9, 5, 1)
    """
    if isinstance(amount, float):
        if not math.isfinite(amount) or amount <= 0:
            raise ValueError(f"amount must be positive and finite, got {amount!r}")
        text = repr(amount)
    else:
        text = str(amount).strip()
        try:
            value = Decimal(text)
        except InvalidOperation:
            raise ValueError(f"not a decimal number: {amount!r}") from None
        if not value.is_finite() or value <= 0:
            raise ValueError(f"amount must be positive and finite, got {amount!r}")
    mantissa = text.lstrip("+").split("e")[0].split("E")[0]
    for ch in mantissa:
        if "1" <= ch <= "9":
            return ord(ch) - 48
    raise ValueError(f"no significant digit in {amount!r}")


def histogram(amounts: Iterable) -> DigitHistogram:
    digits = [first_digit(a) for a in amounts]
    if not digits:
        return DigitHistogram(np.zeros(9, dtype=np.int64))
    return DigitHistogram.from_digits(np.array(digits))


def chi_square_counts(counts: np.ndarray, model: BenfordModel = BENFORD) -> ChiSquareResult:
    counts = np.asarray(counts, dtype=np.int64)
    total = int(counts.sum())
    if total == 0:
        return ChiSquareResult(0.0, 0, np.zeros(9), counts)
    expected = model.p * total
    terms = (counts - expected) ** 2 / expected
    return ChiSquareResult(float(terms.sum()), total, terms, counts)


def chi_square(hist: DigitHistogram, model: BenfordModel = BENFORD) -> ChiSquareResult:
    """Pearson statistic sum_d (X_d - p_d N)^2 / (p_d N).

    An empty histogram yields statistic 0 with ``no_samples`` set.
    """
    return chi_square_counts(hist.counts, model)


def psi(chi: ChiSquareResult, node_count: int) -> float:
    """Average chi-square per node of a node set."""
    if node_count < 1:
        raise ValueError("node_count must be >= 1")
    return chi.statistic / node_count


def theorem1_min_density(epsilon: float, delta: float | None = None) -> float:
    """Constant C such that average degree >= C log n forces concentration.

    C = 36 / (delta * epsilon^2); ``delta`` defaults to the exact p_9.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    if delta is None:
        delta = BENFORD.delta
    return 36.0 / (delta * epsilon**2)


def chernoff_bound(mean: float, epsilon: float) -> float:
    """Upper bound 2 exp(-eps^2 mean / 3) on P(|X - mean| >= eps mean)."""
    if mean <= 0:
        raise ValueError("mean must be positive")
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    return 2.0 * math.exp(-(epsilon**2) * mean / 3.0)
