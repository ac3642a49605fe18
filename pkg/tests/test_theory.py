import math

import numpy as np
import pytest

from hetcorr import families
from hetcorr.errors import BudgetError, HetcorrError
from hetcorr.families import FGM, NORMAL, PARETO
from hetcorr.harness import derive_stream
from hetcorr.seqspec import eval_seq_prefix, parse_seq
from hetcorr.theory import (
    PairExpectations,
    analytic_limit,
    arcsin_pair_sum,
    increment_diagnostics,
    pareto_index_tau,
    tau_n,
    tau_n_from_params,
    tau_n_mc,
    variance_bound,
)


def harmonic(n):
    return math.fsum(1.0 / k for k in range(1, n + 1))


def brute_tau(family, ts):
    """Oracle: aggregate closed-form pair expectations over every ordered pair."""
    n = len(ts)
    total = math.fsum(
        families.pair_expectation_closed(family, ts[i], ts[j])
        for i in range(n)
        for j in range(n)
        if i != j
    )
    return 4.0 * total / (n * (n - 1)) - 1.0


# --- variance bound -----------------------------------------------------------


def test_variance_bound_small_n():
    assert variance_bound(2) == 16.0
    assert variance_bound(11) == pytest.approx(1.672, abs=1e-12)


def test_variance_bound_decays_like_16_over_n():
    for n in (10**3, 10**5, 10**7):
        assert variance_bound(n) * n / 16.0 == pytest.approx(1.0, rel=0.01)
    assert variance_bound(10**6) < 1e-4


def test_variance_bound_needs_two():
    with pytest.raises(HetcorrError):
        variance_bound(1)


# --- closed forms per family ----------------------------------------------------


def test_normal_constant_reduces_to_iid_value():
    for t in (-0.7, 0.0, 0.5, 0.93):
        got = tau_n(NORMAL, repr(t), 40)
        assert got.tau_n == pytest.approx(2.0 / math.pi * math.asin(t), abs=1e-14)
        assert got.mode == "normal-arcsin-pair-sum"
        assert got.analytic_limit == pytest.approx(2.0 / math.pi * math.asin(t), abs=1e-15)


def test_normal_single_pair_value():
    # t = (0.2, 0.8): arcsin argument 0.5, tau_2 = (2/pi) arcsin(0.5) = 1/3
    got = tau_n(NORMAL, "1/5 + 3*(i-1)/5", 2)
    assert got.tau_n == pytest.approx(1.0 / 3.0, abs=1e-14)


def test_fgm_harmonic_sequence():
    got = tau_n(FGM, "1/i", 1000)
    assert got.mode == "fgm-linear"
    assert got.tau_n == pytest.approx(2.0 * harmonic(1000) / (9.0 * 1000.0), rel=1e-14)
    assert got.tau_n == pytest.approx(0.0016634379690926941, rel=1e-12)


def test_fgm_shifted_harmonic_sequence():
    got = tau_n(FGM, "3/5 - 1/i", 50)
    expected = (2.0 / 450.0) * (30.0 - harmonic(50))
    assert got.tau_n == pytest.approx(expected, rel=1e-14)
    assert got.tau_n == pytest.approx(0.11334, abs=5e-6)


def test_tau_matches_brute_force_pair_aggregation():
    cases = [
        (NORMAL, "sin(i)"),
        (NORMAL, "exp(-abs(sin(i)))"),
        (FGM, "1/i"),
        (FGM, "3/5 - 1/i"),
        (PARETO, "i"),
        (PARETO, "1/2 + 1/i"),
    ]
    for family, src in cases:
        seq = parse_seq(src)
        ts = eval_seq_prefix(seq, 30)
        assert tau_n(family, seq, 30).tau_n == pytest.approx(
            brute_tau(family, list(ts)), abs=1e-13
        )


def test_pareto_identity_single_sum_matches_double_sum():
    for n in (2, 3, 10, 200, 2000):
        single = pareto_index_tau(n)
        general = tau_n_from_params(PARETO, np.arange(1.0, n + 1.0)).tau_n
        assert single == pytest.approx(general, rel=1e-10)
    assert tau_n(PARETO, "i", 500).mode == "pareto-index-single-sum"
    assert tau_n(PARETO, "i + 0", 500).mode == "pareto-double-sum"
    assert tau_n(PARETO, "i", 500).tau_n == pytest.approx(
        tau_n(PARETO, "i + 0", 500).tau_n, rel=1e-10
    )


def test_pareto_constant_reduces_to_iid_value():
    for t in (0.3, 1.0, 4.0):
        got = tau_n(PARETO, repr(t), 60)
        assert got.tau_n == pytest.approx(1.0 / (2.0 * t + 1.0), abs=1e-13)


def test_fgm_constant_reduces_to_iid_value():
    assert tau_n(FGM, "0.7", 60).tau_n == pytest.approx(2.0 * 0.7 / 9.0, abs=1e-15)


def test_tau_permutation_invariance():
    rng = derive_stream(5, 0)
    ts = rng.random(40) * 1.8 - 0.9
    shuffled = ts.copy()
    rng.shuffle(shuffled)
    for family in (NORMAL, FGM):
        a = tau_n_from_params(family, ts).tau_n
        b = tau_n_from_params(family, shuffled).tau_n
        assert a == pytest.approx(b, abs=1e-13)
    a = tau_n_from_params(PARETO, ts + 1.0).tau_n
    b = tau_n_from_params(PARETO, shuffled + 1.0).tau_n
    assert a == pytest.approx(b, abs=1e-13)


def test_tau_in_range():
    cases = [(NORMAL, "sin(i)"), (FGM, "3/5 - 1/i"), (PARETO, "i")]
    for family, src in cases:
        for n in (2, 17, 400):
            assert -1.0 <= tau_n(family, src, n).tau_n <= 1.0


# --- summation machinery ---------------------------------------------------------


def test_arcsin_pair_sum_against_term_fsum():
    ts = np.sin(np.arange(1.0, 501.0))
    terms = []
    for i in range(1, 500):
        terms.extend(np.arcsin((ts[i] + ts[:i]) / 2.0).tolist())
    exact = math.fsum(terms)
    assert arcsin_pair_sum(ts) == pytest.approx(exact, abs=1e-15 * abs(exact) + 1e-12)


def test_compensated_vs_naive_summation_close():
    ts = np.sin(np.arange(1.0, 3001.0))
    a = tau_n_from_params(NORMAL, ts, summation="compensated").tau_n
    b = tau_n_from_params(NORMAL, ts, summation="naive").tau_n
    assert abs(a - b) <= 1e-12


def test_thread_count_does_not_change_the_sum():
    ts = np.exp(-np.abs(np.sin(np.arange(1.0, 4001.0))))
    vals = {arcsin_pair_sum(ts, threads=k) for k in (1, 2, 4)}
    assert len(vals) == 1


def test_unknown_summation_rejected():
    with pytest.raises(ValueError):
        arcsin_pair_sum(np.array([0.1, 0.2]), summation="pairwise")


# --- Monte Carlo estimator --------------------------------------------------------


def test_tau_n_mc_normal_constant():
    got = tau_n_mc(NORMAL, "0.5", 100, n_pairs=1500, reps_per_pair=400, rng=derive_stream(13, 0))
    assert got.mode == "mc"
    assert abs(got.tau_n - 1.0 / 3.0) <= 4.0 * got.se


def test_tau_n_mc_fgm_harmonic():
    expected = 2.0 * harmonic(1000) / 9000.0
    got = tau_n_mc(FGM, "1/i", 1000, n_pairs=2000, reps_per_pair=400, rng=derive_stream(13, 1))
    assert abs(got.tau_n - expected) <= 4.0 * got.se


def test_tau_n_mc_pareto_constant():
    got = tau_n_mc(PARETO, "1", 100, n_pairs=1500, reps_per_pair=400, rng=derive_stream(13, 2))
    assert abs(got.tau_n - 1.0 / 3.0) <= 4.0 * got.se


def test_budget_fallback_and_error():
    with pytest.raises(BudgetError):
        tau_n(NORMAL, "sin(i)", 4000, pair_budget=1000)
    got = tau_n(
        NORMAL,
        "sin(i)",
        4000,
        pair_budget=1000,
        mc_fallback=True,
        rng=derive_stream(13, 3),
        mc_pairs=1500,
        mc_reps_per_pair=300,
    )
    assert got.mode == "mc-fallback"
    exact = tau_n(NORMAL, "sin(i)", 4000).tau_n
    assert abs(got.tau_n - exact) <= 4.0 * got.se
    # closed forms cost nothing and never fall back
    assert tau_n(FGM, "1/i", 4000, pair_budget=0).mode == "fgm-linear"
    assert tau_n(PARETO, "i", 4000, pair_budget=0).mode == "pareto-index-single-sum"


# --- increments -------------------------------------------------------------------


def test_increment_constant_sequence_is_zero():
    inc = increment_diagnostics(NORMAL, "0.4", [10, 50])
    assert max(inc) <= 1e-15  # tau_m is constant in m; only final rounding differs
    assert increment_diagnostics(FGM, "0.4", [10, 50]) == [0.0, 0.0]


def test_increment_fgm_harmonic_closed_form():
    inc = increment_diagnostics(FGM, "1/i", [10])
    expected = (2.0 / 9.0) * abs(harmonic(11) / 11.0 - harmonic(10) / 10.0)
    assert inc[0] == pytest.approx(expected, rel=1e-12)


def test_increment_decay_along_the_studied_sequences():
    for family, src in [
        (NORMAL, "sin(i)"),
        (NORMAL, "exp(-abs(sin(i)))"),
        (FGM, "1/i"),
        (FGM, "3/5 - 1/i"),
        (PARETO, "i"),
    ]:
        inc = increment_diagnostics(family, src, [100, 1000, 10000])
        assert inc[0] > inc[1] > inc[2], (family.kind, src, inc)


def test_increment_requires_sorted_values():
    with pytest.raises(HetcorrError):
        increment_diagnostics(FGM, "1/i", [50, 10])


# --- analytic limits and pair table -------------------------------------------------


def test_analytic_limit_table():
    assert analytic_limit(NORMAL, "sin(i)") == 0.0
    assert analytic_limit(FGM, "1/i") == 0.0
    assert analytic_limit(FGM, "3/5 - 1/i") == pytest.approx(2.0 / 15.0, abs=1e-15)
    assert analytic_limit(FGM, "3/5-1/i") == pytest.approx(2.0 / 15.0, abs=1e-15)
    assert analytic_limit(PARETO, "i") == 0.2275
    assert analytic_limit(NORMAL, "exp(-abs(sin(i)))") is None
    assert analytic_limit(PARETO, "1/2 + 1/i") is None


def test_pair_expectation_table_entries():
    ts = np.array([0.5, 1.0, 2.0])
    table = PairExpectations(PARETO, ts)
    assert table.n == 3
    assert table.value(3, 2) == pytest.approx(1.0 / 6.0, abs=1e-15)
    with pytest.raises(ValueError):
        table.value(1, 1)
    m = table.matrix()
    off = m[~np.isnan(m)]
    assert ((off > 0) & (off < 1)).all()
    assert np.isnan(np.diag(m)).all()
