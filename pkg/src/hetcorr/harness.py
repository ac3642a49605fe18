"""Seeded, replicated Monte Carlo experiments and the oracle battery.

Reproducibility contract: replication r of an experiment draws from a
counter-based Philox generator keyed with ``seed XOR splitmix64(r)``.
Streams depend only on (seed, r), never on scheduling, so reports are
bit-identical run to run and under any thread count.  The theory-side
Monte Carlo fallback uses the reserved stream index 2**48.

Aggregation over replications is order-independent: estimates live in an
array indexed by r and every summary reduces that array in index order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as scipy_stats

from . import families, rankcoef, seqspec, theory
from .errors import BudgetError, DegenerateSampleError, HetcorrError
from .families import FamilySpec
from .rankcoef import COEFFICIENT_NAMES, Provenance, Sample
from .seqspec import SeqSpec

_Z99 = 2.5758293035489004  # two-sided 99% normal quantile

_THEORY_STREAM = 2**48  # replication indices stay far below this

BIAS_Z_LIMIT = 4.0


def splitmix64(x: int) -> int:
    """The splitmix64 finalizer; a bijective 64-bit mix."""
    x = (x + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return x ^ (x >> 31)


def derive_stream(seed: int, index: int) -> np.random.Generator:
    """Independent generator for one work unit: Philox keyed by seed ^ splitmix64(index)."""
    key = (int(seed) & 0xFFFFFFFFFFFFFFFF) ^ splitmix64(int(index))
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class ExperimentConfig:
    """A fully specified experiment; immutable and validated on construction."""

    family: FamilySpec
    seq: SeqSpec
    n: int
    replications: int = 1
    seed: int = 0
    coefficients: tuple[str, ...] = ("kendall",)
    ties: str = "strict"
    max_points: int = 10**9
    budget_override: bool = False
    pair_budget: int = 200_000_000

    def __post_init__(self):
        if isinstance(self.seq, str):
            object.__setattr__(self, "seq", seqspec.parse_seq(self.seq))
        if self.n < 2:
            raise DegenerateSampleError(f"need n >= 2, got {self.n}")
        if self.replications < 1:
            raise HetcorrError(f"need replications >= 1, got {self.replications}")
        unknown = set(self.coefficients) - set(COEFFICIENT_NAMES)
        if unknown:
            raise HetcorrError(f"unknown coefficients {sorted(unknown)}")
        object.__setattr__(self, "coefficients", tuple(self.coefficients))
        # validates every t_i up front; reports the first offending index
        self.family.validate_params(seqspec.eval_seq_prefix(self.seq, self.n))

    @property
    def total_points(self) -> int:
        return self.replications * self.n

    def check_budget(self):
        if self.total_points > self.max_points and not self.budget_override:
            raise BudgetError(
                f"R*n = {self.total_points} exceeds the {self.max_points} point budget; "
                "pass the override to run anyway"
            )

    def as_dict(self) -> dict:
        return {
            "family": self.family.kind,
            "seq": self.seq.source,
            "n": self.n,
            "replications": self.replications,
            "seed": self.seed,
            "coefficients": list(self.coefficients),
            "ties": self.ties,
            "max_points": self.max_points,
            "budget_override": self.budget_override,
            "pair_budget": self.pair_budget,
        }


@dataclass(frozen=True)
class ReplicationReport:
    n: int
    replications: int
    seed: int
    tau_n_theory: float
    tau_mode: str
    tau_se: float | None
    analytic_limit: float | None
    estimates: dict[str, list[float]]
    mean: dict[str, float]
    sd: dict[str, float | None]
    variance_bound_value: float
    se_kendall: float | None = None
    ci99_kendall: tuple[float, float] | None = None
    bias_z: float | None = None
    verdicts: dict[str, bool | None] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "replications": self.replications,
            "seed": self.seed,
            "tau_n_theory": self.tau_n_theory,
            "tau_mode": self.tau_mode,
            "tau_se": self.tau_se,
            "analytic_limit": self.analytic_limit,
            "mean": self.mean,
            "sd": self.sd,
            "se_kendall": self.se_kendall,
            "ci99_kendall": list(self.ci99_kendall) if self.ci99_kendall else None,
            "bias_z": self.bias_z,
            "variance_bound_value": self.variance_bound_value,
            "verdicts": self.verdicts,
            "estimates": self.estimates,
        }


def replication_sample(config: ExperimentConfig, r: int) -> Sample:
    """Regenerate the sample of replication r from its derived stream."""
    ts = seqspec.eval_seq_prefix(config.seq, config.n)
    rng = derive_stream(config.seed, r)
    pts = families.sample_many(config.family, ts, rng)
    prov = Provenance.simulated(config.family.kind, config.seed)
    return Sample(pts[:, 0], pts[:, 1], prov)


def _theory_side(config: ExperimentConfig) -> theory.TheoryResult:
    return theory.tau_n(
        config.family,
        config.seq,
        config.n,
        pair_budget=config.pair_budget,
        mc_fallback=True,
        rng=derive_stream(config.seed, _THEORY_STREAM),
    )


def _run(config: ExperimentConfig) -> ReplicationReport:
    config.check_budget()
    ts = seqspec.eval_seq_prefix(config.seq, config.n)
    prov = Provenance.simulated(config.family.kind, config.seed)
    R = config.replications
    estimates: dict[str, np.ndarray] = {name: np.empty(R) for name in config.coefficients}
    for r in range(R):
        rng = derive_stream(config.seed, r)
        pts = families.sample_many(config.family, ts, rng)
        cs = rankcoef.compute_set(
            Sample(pts[:, 0], pts[:, 1], prov), config.coefficients, config.ties
        )
        for name in config.coefficients:
            estimates[name][r] = getattr(cs, name)

    th = _theory_side(config)
    mean = {name: float(v.mean()) for name, v in estimates.items()}
    sd = {
        name: (float(v.std(ddof=1)) if R >= 2 else None) for name, v in estimates.items()
    }
    bound = theory.variance_bound(config.n)

    se_k = ci99 = bias_z = None
    verdicts: dict[str, bool | None] = {"bias_ok": None, "variance_bound_ok": None}
    if "kendall" in estimates:
        if R >= 2 and sd["kendall"] is not None:
            se_k = sd["kendall"] / math.sqrt(R)
            ci99 = (mean["kendall"] - _Z99 * se_k, mean["kendall"] + _Z99 * se_k)
            if se_k > 0:
                bias_z = (mean["kendall"] - th.tau_n) / se_k
                verdicts["bias_ok"] = abs(bias_z) <= BIAS_Z_LIMIT
            verdicts["variance_bound_ok"] = sd["kendall"] ** 2 <= bound
    return ReplicationReport(
        n=config.n,
        replications=R,
        seed=config.seed,
        tau_n_theory=th.tau_n,
        tau_mode=th.mode,
        tau_se=th.se,
        analytic_limit=th.analytic_limit,
        estimates={name: v.tolist() for name, v in estimates.items()},
        mean=mean,
        sd=sd,
        se_kendall=se_k,
        ci99_kendall=ci99,
        bias_z=bias_z,
        variance_bound_value=bound,
        verdicts=verdicts,
    )


def run_single(config: ExperimentConfig) -> ReplicationReport:
    """One simulated draw of each requested coefficient plus the theory value."""
    if config.replications != 1:
        raise HetcorrError("run_single expects replications = 1")
    return _run(config)


def run_replicated(config: ExperimentConfig) -> ReplicationReport:
    """R independent replications with derived streams, plus bias and bound verdicts."""
    if config.replications < 2:
        raise HetcorrError("run_replicated expects replications >= 2")
    return _run(config)


def run_experiment(config: ExperimentConfig) -> ReplicationReport:
    """Dispatch on the replication count; the CLI entry point."""
    return run_single(config) if config.replications == 1 else run_replicated(config)


def rejection_fractions(
    family: FamilySpec,
    seq: SeqSpec | str,
    reference: float,
    window: float,
    n_values: list[int],
    replications: int,
    seed: int,
) -> list[float]:
    """Fraction of replications with |kendall - reference| > window, per n.

    Convergence in probability shows up as this fraction falling toward 0
    as n grows.
    """
    fractions = []
    for k, n in enumerate(n_values):
        # the theory side never runs here; the config is for validation only
        config = ExperimentConfig(
            family=family,
            seq=seq,
            n=n,
            replications=replications,
            seed=seed + k,
            coefficients=("kendall",),
        )
        config.check_budget()
        ts = seqspec.eval_seq_prefix(config.seq, n)
        hits = 0
        for r in range(replications):
            rng = derive_stream(config.seed, r)
            pts = families.sample_many(family, ts, rng)
            tau = rankcoef.kendall_fast(Sample(pts[:, 0], pts[:, 1]))
            if abs(tau - reference) > window:
                hits += 1
        fractions.append(hits / replications)
    return fractions


# --- oracle battery -------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    details: str

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "details": self.details}


_GRID = {
    "normal": [-0.9, -0.5, -0.15, 0.0, 0.35, 0.7, 0.95],
    "fgm": [-1.0, -0.6, -0.2, 0.0, 0.3, 0.7, 1.0],
    "pareto": [0.25, 0.7, 1.0, 2.0, 3.5, 6.0, 10.0],
}

_CONSTANT_T = {"normal": 0.55, "fgm": 0.7, "pareto": 1.5}

# fixed per-check stream indices; string hashes are process-randomized and
# must not leak into derived streams
_STREAM_INDEX = {
    ("grid", "normal"): 11,
    ("grid", "fgm"): 12,
    ("grid", "pareto"): 13,
    ("ks", "normal"): 21,
    ("ks", "fgm"): 22,
    ("ks", "pareto"): 23,
    ("const", "normal"): 31,
    ("const", "fgm"): 32,
    ("const", "pareto"): 33,
}

_STUDIED_SEQUENCES = [
    ("normal", "sin(i)"),
    ("normal", "exp(-abs(sin(i)))"),
    ("fgm", "1/i"),
    ("fgm", "3/5 - 1/i"),
    ("pareto", "i"),
]


def _corrupted_fgm_pair(family: FamilySpec, t_i: float, t_j: float) -> float:
    # negative-control fixture: deliberately wrong constant
    return families.pair_expectation_closed(family, t_i, t_j) + 0.02


def check_pair_grid(
    family: FamilySpec, seed: int, reps: int = 10**6, corrupt: str | None = None
) -> CheckResult:
    """Closed-form pair expectations vs the simulation oracle on a parameter grid."""
    closed = families.pair_expectation_closed
    if corrupt == "fgm-pair" and family.kind == "fgm":
        closed = _corrupted_fgm_pair
    values = _GRID[family.kind]
    if family.kind == "pareto":
        # the pareto pair expectation is asymmetric; exercise both orders
        pairs = [(a, b) for a in values for b in values]
    else:
        pairs = [(a, b) for a in values for b in values if a <= b]  # 28 pairs
    rng = derive_stream(seed, _STREAM_INDEX[("grid", family.kind)])
    worst = 0.0
    ok = True
    for a, b in pairs:
        est = families.pair_prob_mc(family, a, b, reps, rng)
        z = abs(closed(family, a, b) - est.estimate) / est.se if est.se > 0 else 0.0
        worst = max(worst, z)
        ok = ok and z <= 4.0
    return CheckResult(
        f"pair-grid-{family.kind}", ok, f"{len(pairs)} pairs, worst |closed-mc|/se = {worst:.2f}"
    )


def check_kendall_fast_vs_naive(seed: int, cases: int = 1000, max_n: int = 1000) -> CheckResult:
    """kendall_fast must equal kendall_naive bit-for-bit on tie-free samples."""
    rng = derive_stream(seed, 101)
    for _ in range(cases):
        n = int(rng.integers(2, max_n + 1))
        x = rng.standard_normal(n)
        y = rng.standard_normal(n)
        if np.unique(x).size < n or np.unique(y).size < n:
            continue  # float collision; vanishing probability
        s = Sample(x, y)
        if rankcoef.kendall_fast(s) != rankcoef.kendall_naive(s):
            return CheckResult(
                "kendall-fast-vs-naive", False, f"mismatch at n={n}"
            )
    return CheckResult("kendall-fast-vs-naive", True, f"{cases} samples, exact agreement")


def check_sampler_ks(family: FamilySpec, seed: int, draws: int = 10**5) -> CheckResult:
    """Both sampled marginals against the analytic marginal CDF, alpha = 0.001."""
    t = _CONSTANT_T[family.kind]
    rng = derive_stream(seed, _STREAM_INDEX[("ks", family.kind)])
    pts = families.sample_many(family, np.full(draws, t), rng)
    worst_p = 1.0
    for column in (0, 1):
        res = scipy_stats.kstest(pts[:, column], lambda v: families.marginal_cdf(family, t, v))
        worst_p = min(worst_p, float(res.pvalue))
    return CheckResult(
        f"sampler-ks-{family.kind}", worst_p > 0.001, f"worst marginal KS p-value = {worst_p:.4f}"
    )


def check_constant_reduction(family: FamilySpec, seed: int, mc_pairs: int = 2000) -> CheckResult:
    """Constant sequences must reduce tau_n to the iid value, exactly and by MC."""
    t = _CONSTANT_T[family.kind]
    seq = seqspec.parse_seq(repr(t))
    iid = theory.analytic_limit(family, seq)
    exact = theory.tau_n(family, seq, 200).tau_n
    rng = derive_stream(seed, _STREAM_INDEX[("const", family.kind)])
    mc = theory.tau_n_mc(family, seq, 200, n_pairs=mc_pairs, reps_per_pair=500, rng=rng)
    closed_ok = abs(exact - iid) <= 1e-12
    z = abs(mc.tau_n - iid) / mc.se if mc.se else 0.0
    return CheckResult(
        f"constant-reduction-{family.kind}",
        closed_ok and z <= 4.0,
        f"|closed-iid| = {abs(exact - iid):.2e}, |mc-iid|/se = {z:.2f}",
    )


def check_increment_decay(family_kind: str, seq_source: str) -> CheckResult:
    """|tau_{m+1} - tau_m| shrinking over m = 100, 1000, 10000."""
    family = families.by_name(family_kind)
    inc = theory.increment_diagnostics(family, seq_source, [100, 1000, 10000])
    ok = inc[0] > inc[1] > inc[2]
    return CheckResult(
        f"increment-decay-{family_kind}-{seq_source.replace(' ', '')}",
        ok,
        "increments " + ", ".join(f"{v:.3e}" for v in inc),
    )


def verify_suite(
    seed: int = 0,
    *,
    pair_grid_reps: int = 10**6,
    ks_draws: int = 10**5,
    kendall_cases: int = 1000,
    corrupt: str | None = None,
) -> list[CheckResult]:
    """The full oracle battery; failures come back as verdicts, not exceptions."""
    results = []
    for kind in ("normal", "fgm", "pareto"):
        results.append(check_pair_grid(families.by_name(kind), seed, pair_grid_reps, corrupt))
    results.append(check_kendall_fast_vs_naive(seed, cases=kendall_cases))
    for kind in ("normal", "fgm", "pareto"):
        results.append(check_sampler_ks(families.by_name(kind), seed, ks_draws))
    for kind in ("normal", "fgm", "pareto"):
        results.append(check_constant_reduction(families.by_name(kind), seed))
    for kind, src in _STUDIED_SEQUENCES:
        results.append(check_increment_decay(kind, src))
    return results
