"""Rank and sample correlation coefficients of a bivariate sample.

The Kendall coefficient is computed from concomitants: sort the sample by
x (stable), let y_(1..n) be the y-values in that order, and count
C = #{(j, i) : j < i, y_(j) <= y_(i)}.  Then

    kendall   = 4 C / (n (n-1)) - 1
    spearman  = 1 - 6 * sum((R_k - k)^2) / (n^3 - n),  R_k = rank of y_(k)
    blended_r = (3 * kendall - spearman) / 2
    pearson   = centered product-moment ratio

``kendall_naive`` counts pairs directly in O(n^2); ``kendall_fast`` counts
inversions of the concomitant sequence by merge counting in O(n log n).
Both keep the pair count as an exact integer until the final division, so
they agree bit-for-bit.

Ties: continuous data ties with probability zero, so the default policy
is ``strict`` and raises TiesError on any exact tie among the x's or the
y's.  The opt-in ``literal`` policy applies the "<=" counting rule as
written and reports the tie counts instead of failing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DegenerateSampleError, TiesError

_TIES_POLICIES = ("strict", "literal")

# below this size the merge counter just counts pairs directly
_MERGE_BASE = 64


class TieReport(NamedTuple):
    x_pairs: int
    y_pairs: int


@dataclass(frozen=True)
class Provenance:
    kind: str  # "simulated" | "ingested"
    family: str | None = None
    seed: int | None = None
    path: str | None = None

    @staticmethod
    def simulated(family: str, seed: int) -> "Provenance":
        return Provenance(kind="simulated", family=family, seed=seed)

    @staticmethod
    def ingested(path: str) -> "Provenance":
        return Provenance(kind="ingested", path=path)


@dataclass(frozen=True)
class Sample:
    """An ordered bivariate sample of n >= 2 finite points."""

    x: np.ndarray
    y: np.ndarray
    provenance: Provenance | None = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64)
        if x.ndim != 1 or x.shape != y.shape:
            raise DegenerateSampleError("x and y must be 1-D arrays of equal length")
        if x.size < 2:
            raise DegenerateSampleError(f"need at least 2 observations, got {x.size}")
        if not (np.isfinite(x).all() and np.isfinite(y).all()):
            raise DegenerateSampleError("sample contains non-finite values")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.size

    @staticmethod
    def from_pairs(pairs, provenance: Provenance | None = None) -> "Sample":
        arr = np.asarray(pairs, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise DegenerateSampleError("expected a sequence of (x, y) pairs")
        return Sample(arr[:, 0], arr[:, 1], provenance)


def tie_report(sample: Sample) -> TieReport:
    """Counts of tied pairs (k < l with equal values) per coordinate."""

    def pairs(v: np.ndarray) -> int:
        _, counts = np.unique(v, return_counts=True)
        return int((counts * (counts - 1) // 2).sum())

    return TieReport(pairs(sample.x), pairs(sample.y))


def _check_ties(sample: Sample, ties: str) -> TieReport:
    if ties not in _TIES_POLICIES:
        raise ValueError(f"ties policy must be one of {_TIES_POLICIES}, got {ties!r}")
    report = tie_report(sample)
    if ties == "strict" and (report.x_pairs or report.y_pairs):
        raise TiesError(
            f"exact ties present ({report.x_pairs} x-pairs, {report.y_pairs} y-pairs); "
            "rerun with the literal ties policy to count them as written",
            tie_report=report,
        )
    return report


def concomitants(sample: Sample) -> np.ndarray:
    """y-values reordered by the x order statistics (stable sort on x)."""
    order = np.argsort(sample.x, kind="stable")
    return sample.y[order]


def _count_le_pairs_naive(yc: np.ndarray) -> int:
    """#{j < i : yc[j] <= yc[i]} by direct pair enumeration, row-chunked."""
    n = yc.size
    total = 0
    chunk = max(1, min(256, 10_000_000 // max(n, 1)))
    for i0 in range(0, n, chunk):
        i1 = min(i0 + chunk, n)
        le = yc[None, :] <= yc[i0:i1, None]  # le[r, j] = yc[j] <= yc[i0+r]
        mask = np.arange(n)[None, :] < np.arange(i0, i1)[:, None]
        total += int(np.count_nonzero(le & mask))
    return total


def _merge_count_inversions(a: np.ndarray) -> tuple[int, np.ndarray]:
    """Inversions #{p < q : a[p] > a[q]} plus the sorted array, by merge counting."""
    n = a.size
    if n <= _MERGE_BASE:
        gt = a[:, None] > a[None, :]
        inv = int(np.count_nonzero(np.triu(gt, k=1)))
        return inv, np.sort(a, kind="stable")
    mid = n // 2
    inv_l, left = _merge_count_inversions(a[:mid])
    inv_r, right = _merge_count_inversions(a[mid:])
    # cross inversions: for each element of the right half, how many on the
    # left exceed it (ties are not inversions, hence side="right")
    le_counts = np.searchsorted(left, right, side="right")
    cross = left.size * right.size - int(le_counts.sum())
    return inv_l + inv_r + cross, np.sort(np.concatenate([left, right]), kind="stable")


def _tau_from_count(c: int, n: int) -> float:
    return 4.0 * c / (n * (n - 1)) - 1.0


def kendall_naive(sample: Sample, ties: str = "strict") -> float:
    """Kendall coefficient by the O(n^2) double loop over concomitant pairs."""
    _check_ties(sample, ties)
    yc = concomitants(sample)
    return _tau_from_count(_count_le_pairs_naive(yc), sample.n)


def kendall_fast(sample: Sample, ties: str = "strict") -> float:
    """Kendall coefficient in O(n log n) via merge-counted inversions.

    C = n(n-1)/2 - inversions, identical to the naive pair count as an
    exact integer, so the result matches kendall_naive bit-for-bit.
    """
    _check_ties(sample, ties)
    yc = concomitants(sample)
    n = sample.n
    inversions, _ = _merge_count_inversions(yc)
    return _tau_from_count(n * (n - 1) // 2 - inversions, n)


def spearman(sample: Sample, ties: str = "strict") -> float:
    """Rank Spearman coefficient from concomitant ranks."""
    _check_ties(sample, ties)
    yc = concomitants(sample)
    n = sample.n
    # R_k = #{j : yc[j] <= yc[k]}; with no ties this is the 1-based rank
    ranks = np.searchsorted(np.sort(yc), yc, side="right")
    d = ranks - np.arange(1, n + 1)
    return 1.0 - 6.0 * float((d * d).sum()) / (n**3 - n)


def blended_r(sample: Sample, ties: str = "strict") -> float:
    """(3 * kendall - spearman) / 2."""
    return (3.0 * kendall_fast(sample, ties) - spearman(sample, ties)) / 2.0


def pearson(sample: Sample) -> float:
    """Sample Pearson correlation; requires nonzero variance in both coordinates."""
    x = sample.x - sample.x.mean()
    y = sample.y - sample.y.mean()
    sxx = float(x @ x)
    syy = float(y @ y)
    if sxx == 0.0 or syy == 0.0:
        raise DegenerateSampleError("pearson undefined: zero variance in x or y")
    r = float(x @ y) / np.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


COEFFICIENT_NAMES = ("kendall", "spearman", "blended_r", "pearson")


@dataclass(frozen=True)
class CoefficientSet:
    n: int
    tie_report: TieReport
    kendall: float | None = None
    spearman: float | None = None
    blended_r: float | None = None
    pearson: float | None = None

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "kendall": self.kendall,
            "spearman": self.spearman,
            "blended_r": self.blended_r,
            "pearson": self.pearson,
            "tie_report": {"x_pairs": self.tie_report.x_pairs, "y_pairs": self.tie_report.y_pairs},
        }


def compute_set(
    sample: Sample,
    coefficients=COEFFICIENT_NAMES,
    ties: str = "strict",
) -> CoefficientSet:
    """Compute the requested subset of coefficients in one pass.

    ``blended_r`` is derived from the kendall and spearman values actually
    computed here, so the set is internally consistent by construction.
    """
    wanted = tuple(coefficients)
    unknown = set(wanted) - set(COEFFICIENT_NAMES)
    if unknown:
        raise ValueError(f"unknown coefficients {sorted(unknown)}")
    report = _check_ties(sample, ties)
    values: dict[str, float | None] = {name: None for name in COEFFICIENT_NAMES}
    tau = kendall_fast(sample, ties) if {"kendall", "blended_r"} & set(wanted) else None
    rho = spearman(sample, ties) if {"spearman", "blended_r"} & set(wanted) else None
    if "kendall" in wanted:
        values["kendall"] = tau
    if "spearman" in wanted:
        values["spearman"] = rho
    if "blended_r" in wanted:
        values["blended_r"] = (3.0 * tau - rho) / 2.0
    if "pearson" in wanted:
        values["pearson"] = pearson(sample)
    return CoefficientSet(n=sample.n, tie_report=report, **values)
