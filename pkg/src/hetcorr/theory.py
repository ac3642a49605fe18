"""Theoretical Kendall coefficient for non-identical parameter sequences.

For independent pairs (X_1, Y_1), ..., (X_n, Y_n) with (X_k, Y_k) drawn
from one family at parameter t_k, the theoretical coefficient is

    tau_n = 4 * sum_{i != j} p_ij / (n (n-1)) - 1,

with p_ij = P(X_j <= X_i, Y_j <= Y_i) from
:func:`hetcorr.families.pair_expectation_closed`.  Per-family evaluation:

* normal: tau_n = (4 / (pi n (n-1))) * sum_{i > j} arcsin((t_i + t_j)/2),
  computed as a chunked pair sum in fixed row-major order.  Row sums are
  reduced either with exact compensated accumulation (math.fsum) or with
  plain sequential addition; the chunk layout is identical in both modes
  and independent of the thread count, so results are run-to-run stable.
* fgm: tau_n = 2 * sum(t_i) / (9 n), O(n).
* pareto: O(n^2) double sum in general; the sequence t_i = i reduces to
  the single sum (4/(n(n-1))) * sum_j j(j+1)(n-j) / ((2j+1)(n+j+1)).

``tau_n_mc`` estimates the same quantity from uniformly subsampled
ordered pairs and per-pair simulation; it is the oracle for sequences
with no tractable closed form and the fallback when an exact pair sum
would blow the configured pair budget.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import families, seqspec
from .errors import BudgetError, DegenerateSampleError, HetcorrError
from .families import FamilySpec
from .seqspec import SeqSpec

_SUMMATIONS = ("compensated", "naive")

# tau_n may exceed [-1, 1] by at most this much before it is an internal error
_RANGE_SLACK = 1e-12

THREADS_ENV_VAR = "HETCORR_THREADS"


def _thread_count(threads: int | None) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get(THREADS_ENV_VAR)
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


@dataclass(frozen=True)
class TheoryResult:
    tau_n: float
    n: int
    mode: str
    analytic_limit: float | None = None
    se: float | None = None

    def as_dict(self) -> dict:
        return {
            "tau_n": self.tau_n,
            "n": self.n,
            "mode": self.mode,
            "analytic_limit": self.analytic_limit,
            "se": self.se,
        }


@dataclass(frozen=True)
class PairExpectations:
    """Closed-form p_ij table for a fixed parameter sequence (1-based indices)."""

    family: FamilySpec
    ts: np.ndarray

    @property
    def n(self) -> int:
        return self.ts.size

    def value(self, i: int, j: int) -> float:
        if i == j:
            raise ValueError("p_ij is defined for i != j")
        return families.pair_expectation_closed(self.family, self.ts[i - 1], self.ts[j - 1])

    def matrix(self) -> np.ndarray:
        n = self.n
        m = np.full((n, n), np.nan)
        for i in range(n):
            for j in range(n):
                if i != j:
                    m[i, j] = families.pair_expectation_closed(self.family, self.ts[i], self.ts[j])
        return m


def _resolve_ts(family: FamilySpec, seq: SeqSpec | str, n: int) -> tuple[SeqSpec, np.ndarray]:
    if isinstance(seq, str):
        seq = seqspec.parse_seq(seq)
    if n < 2:
        raise DegenerateSampleError(f"tau_n needs n >= 2, got {n}")
    ts = seqspec.eval_seq_prefix(seq, n)
    family.validate_params(ts)
    return seq, ts


def _chunked_row_sums(values_for_rows, n: int, threads: int) -> np.ndarray:
    """Row sums of a lower-triangular pair array, fixed chunk layout.

    ``values_for_rows(r0, r1)`` must return the dense block for rows
    [r0, r1) over columns [0, r1); entries at column >= row are ignored.
    """
    chunk = max(8, 8_000_000 // max(n, 1))
    starts = list(range(0, n, chunk))
    rows = np.zeros(n)

    def work(r0: int):
        r1 = min(r0 + chunk, n)
        block = values_for_rows(r0, r1)
        out = np.empty(r1 - r0)
        for k in range(r0, r1):
            out[k - r0] = block[k - r0, :k].sum()
        return r0, r1, out

    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            for r0, r1, out in ex.map(work, starts):
                rows[r0:r1] = out
    else:
        for s in starts:
            r0, r1, out = work(s)
            rows[r0:r1] = out
    return rows


def _reduce_rows(rows: np.ndarray, summation: str) -> float:
    if summation not in _SUMMATIONS:
        raise ValueError(f"summation must be one of {_SUMMATIONS}")
    if summation == "compensated":
        return math.fsum(rows.tolist())
    # plain sequential left-to-right accumulation
    return float(np.cumsum(rows)[-1]) if rows.size else 0.0


def arcsin_pair_sum(ts: np.ndarray, summation: str = "compensated", threads: int | None = None) -> float:
    """sum_{i > j} arcsin((t_i + t_j) / 2) over the strict lower triangle."""
    if summation not in _SUMMATIONS:
        raise ValueError(f"summation must be one of {_SUMMATIONS}")
    ts = np.asarray(ts, dtype=np.float64)
    n = ts.size

    def block(r0: int, r1: int) -> np.ndarray:
        args = (ts[r0:r1, None] + ts[None, :r1]) / 2.0
        np.clip(args, -1.0, 1.0, out=args)
        return np.arcsin(args)

    rows = _chunked_row_sums(block, n, _thread_count(threads))
    return _reduce_rows(rows, summation)


def _tau_normal(ts: np.ndarray, summation: str, threads: int | None) -> float:
    n = ts.size
    s = arcsin_pair_sum(ts, summation=summation, threads=threads)
    return 4.0 * s / (math.pi * n * (n - 1))


def _tau_fgm(ts: np.ndarray) -> float:
    return 2.0 * math.fsum(ts.tolist()) / (9.0 * ts.size)


def _tau_pareto_double_sum(ts: np.ndarray, summation: str, threads: int | None) -> float:
    n = ts.size
    w = ts * ts + ts  # t_j^2 + t_j

    def block(r0: int, r1: int) -> np.ndarray:
        # entry (j, i) for j in [r0, r1), i in [0, r1): p_ij + p_ji for the
        # unordered pair, folded onto the lower triangle
        s = ts[r0:r1, None] + ts[None, :r1]
        return (w[r0:r1, None] + w[None, :r1]) / (s * (s + 1.0))

    rows = _chunked_row_sums(block, n, _thread_count(threads))
    total = _reduce_rows(rows, summation)  # sum over ordered pairs, both orders
    return 4.0 * total / (n * (n - 1)) - 1.0


def pareto_index_tau(n: int, summation: str = "compensated") -> float:
    """tau_n for the pareto family with t_i = i, by the O(n) single sum."""
    if n < 2:
        raise DegenerateSampleError(f"tau_n needs n >= 2, got {n}")
    j = np.arange(1, n + 1, dtype=np.float64)
    terms = j * (j + 1.0) * (n - j) / ((2.0 * j + 1.0) * (n + j + 1.0))
    return 4.0 * _reduce_rows(terms, summation) / (n * (n - 1))


def _tau_from_params(
    family: FamilySpec, ts: np.ndarray, summation: str, threads: int | None
) -> tuple[float, str]:
    if family.kind == "normal":
        return _tau_normal(ts, summation, threads), "normal-arcsin-pair-sum"
    if family.kind == "fgm":
        return _tau_fgm(ts), "fgm-linear"
    return _tau_pareto_double_sum(ts, summation, threads), "pareto-double-sum"


def tau_n_from_params(
    family: FamilySpec,
    ts: np.ndarray,
    *,
    summation: str = "compensated",
    threads: int | None = None,
) -> TheoryResult:
    """Exact tau_n for an explicit parameter array (no sequence expression)."""
    ts = family.validate_params(np.asarray(ts, dtype=np.float64))
    if ts.size < 2:
        raise DegenerateSampleError(f"tau_n needs n >= 2, got {ts.size}")
    tau, mode = _tau_from_params(family, ts, summation, threads)
    return TheoryResult(_check_range(tau), ts.size, mode)


def analytic_limit(family: FamilySpec, seq: SeqSpec | str) -> float | None:
    """The stated limit tau for the sequences whose limit is known, else None.

    Constant sequences reduce to the iid coefficient for every n:
    (2/pi) arcsin(t) for normal, 2t/9 for fgm, 1/(2t+1) for pareto.
    """
    if isinstance(seq, str):
        seq = seqspec.parse_seq(seq)
    c = seqspec.constant_value(seq)
    if c is not None:
        family.validate_param(c)
        if family.kind == "normal":
            return 2.0 / math.pi * math.asin(c)
        if family.kind == "fgm":
            return 2.0 * c / 9.0
        return 1.0 / (2.0 * c + 1.0)
    table = {
        ("normal", seqspec.parse_seq("sin(i)").ast): 0.0,
        ("fgm", seqspec.parse_seq("1/i").ast): 0.0,
        ("fgm", seqspec.parse_seq("3/5 - 1/i").ast): 2.0 / 15.0,
        ("pareto", seqspec.parse_seq("i").ast): 0.2275,
    }
    return table.get((family.kind, seq.ast))


def _check_range(tau: float) -> float:
    if not (-1.0 - _RANGE_SLACK <= tau <= 1.0 + _RANGE_SLACK):
        raise HetcorrError(f"computed tau_n={tau!r} outside [-1, 1]")
    return tau


def exact_pair_cost(family: FamilySpec, seq: SeqSpec | str, n: int) -> int:
    """Number of pair-expectation evaluations an exact tau_n would need."""
    if isinstance(seq, str):
        seq = seqspec.parse_seq(seq)
    if family.kind == "fgm":
        return 0
    if family.kind == "pareto" and seqspec.is_identity(seq):
        return 0
    pairs = n * (n - 1) // 2
    return pairs if family.kind == "normal" else 2 * pairs


def tau_n(
    family: FamilySpec,
    seq: SeqSpec | str,
    n: int,
    *,
    summation: str = "compensated",
    threads: int | None = None,
    pair_budget: int | None = None,
    mc_fallback: bool = False,
    rng: np.random.Generator | None = None,
    mc_pairs: int = 2000,
    mc_reps_per_pair: int = 500,
) -> TheoryResult:
    """Exact tau_n for the family and parameter sequence.

    When ``pair_budget`` is set and an exact evaluation would need more
    pair terms than that, either falls back to ``tau_n_mc`` (if
    ``mc_fallback`` and ``rng`` are given, mode flagged "mc-fallback") or
    raises BudgetError.
    """
    seq, ts = _resolve_ts(family, seq, n)
    limit = analytic_limit(family, seq)
    cost = exact_pair_cost(family, seq, n)
    if pair_budget is not None and cost > pair_budget:
        if not mc_fallback:
            raise BudgetError(
                f"exact tau_n needs {cost} pair terms, budget is {pair_budget}; "
                "enable the Monte Carlo fallback or raise the budget"
            )
        if rng is None:
            raise HetcorrError("Monte Carlo fallback needs an rng")
        est = tau_n_mc(family, seq, n, n_pairs=mc_pairs, reps_per_pair=mc_reps_per_pair, rng=rng)
        return TheoryResult(est.tau_n, n, "mc-fallback", analytic_limit=limit, se=est.se)
    if family.kind == "pareto" and seqspec.is_identity(seq):
        tau = pareto_index_tau(n, summation)
        mode = "pareto-index-single-sum"
    else:
        tau, mode = _tau_from_params(family, ts, summation, threads)
    return TheoryResult(_check_range(tau), n, mode, analytic_limit=limit)


def tau_n_mc(
    family: FamilySpec,
    seq: SeqSpec | str,
    n: int,
    *,
    n_pairs: int = 2000,
    reps_per_pair: int = 500,
    rng: np.random.Generator,
) -> TheoryResult:
    """Unbiased Monte Carlo estimate of tau_n from subsampled ordered pairs.

    Draws ``n_pairs`` ordered index pairs (i, j), i != j, uniformly with
    replacement; estimates each p_ij from ``reps_per_pair`` independent
    draws of ((X_i, Y_i), (X_j, Y_j)); reports 4 * mean(p-hat) - 1 with
    the standard error 4 * sd(p-hat) / sqrt(n_pairs).
    """
    seq, ts = _resolve_ts(family, seq, n)
    if n_pairs < 2:
        raise HetcorrError("need n_pairs >= 2 for a standard error")
    i_idx = rng.integers(0, n, size=n_pairs)
    j_idx = rng.integers(0, n - 1, size=n_pairs)
    j_idx = np.where(j_idx >= i_idx, j_idx + 1, j_idx)  # uniform over j != i

    t_i = np.repeat(ts[i_idx], reps_per_pair)
    t_j = np.repeat(ts[j_idx], reps_per_pair)
    draws_i = families.sample_many(family, t_i, rng)
    draws_j = families.sample_many(family, t_j, rng)
    hit = (draws_j[:, 0] <= draws_i[:, 0]) & (draws_j[:, 1] <= draws_i[:, 1])
    p_hat = hit.reshape(n_pairs, reps_per_pair).mean(axis=1)
    tau = 4.0 * float(p_hat.mean()) - 1.0
    se = 4.0 * float(p_hat.std(ddof=1)) / math.sqrt(n_pairs)
    return TheoryResult(tau, n, "mc", analytic_limit=analytic_limit(family, seq), se=se)


def increment_diagnostics(
    family: FamilySpec,
    seq: SeqSpec | str,
    n_values: list[int],
    **tau_kwargs,
) -> list[float]:
    """|tau_{m+1} - tau_m| for each m in ``n_values`` (sorted, each >= 2)."""
    if list(n_values) != sorted(n_values) or (n_values and min(n_values) < 2):
        raise HetcorrError("n_values must be sorted and >= 2")
    out = []
    for m in n_values:
        a = tau_n(family, seq, m, **tau_kwargs).tau_n
        b = tau_n(family, seq, m + 1, **tau_kwargs).tau_n
        out.append(abs(b - a))
    return out


def variance_bound(n: int) -> float:
    """Upper bound 16 (n(n-1)/2 + n(n-1)(n-2)) / (n-1)^4 for Var of the rank coefficient.

    The three triple-overlap terms are each bounded by n(n-1)(n-2)/3 and the
    diagonal term by n(n-1)/2; the remaining cross term cancels against the
    squared mean.  The bound decays like 16/n.
    """
    if n < 2:
        raise HetcorrError(f"variance_bound needs n >= 2, got {n}")
    return 16.0 * (n * (n - 1) / 2.0 + n * (n - 1) * (n - 2)) / float(n - 1) ** 4
