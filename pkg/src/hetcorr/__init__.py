"""Rank correlation for independent, non-identically distributed bivariate data.

The library computes the rank coefficients (Kendall, Spearman, their
blend, Pearson) of a bivariate sample, evaluates the theoretical Kendall
coefficient tau_n in closed form for three dependence families (bivariate
normal, FGM copula, bivariate Pareto), and runs seeded Monte Carlo
experiments checking that the rank coefficient is unbiased for tau_n,
that tau_n settles to a limit, and that the rank coefficient converges to
that limit in probability.
"""

from .errors import (
    BudgetError,
    CsvFormatError,
    DegenerateSampleError,
    HetcorrError,
    ParamDomainError,
    SeqEvalError,
    SeqSyntaxError,
    TiesError,
    UnsupportedFamilyOperation,
)
from .families import (
    FGM,
    NORMAL,
    PARETO,
    BivariatePoint,
    FamilySpec,
    by_name,
    cdf,
    fgm_conditional_cdf,
    fgm_invert_conditional,
    marginal_cdf,
    pair_expectation_closed,
    pair_prob_mc,
    sample,
    sample_many,
)
from .harness import (
    CheckResult,
    ExperimentConfig,
    ReplicationReport,
    derive_stream,
    rejection_fractions,
    replication_sample,
    run_experiment,
    run_replicated,
    run_single,
    verify_suite,
)
from .rankcoef import (
    CoefficientSet,
    Provenance,
    Sample,
    TieReport,
    blended_r,
    compute_set,
    kendall_fast,
    kendall_naive,
    pearson,
    spearman,
    tie_report,
)
from .seqspec import SeqSpec, eval_seq, eval_seq_array, eval_seq_prefix, parse_seq
from .theory import (
    PairExpectations,
    TheoryResult,
    analytic_limit,
    increment_diagnostics,
    pareto_index_tau,
    tau_n,
    tau_n_from_params,
    tau_n_mc,
    variance_bound,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "BivariatePoint",
    "BudgetError",
    "CheckResult",
    "CoefficientSet",
    "CsvFormatError",
    "DegenerateSampleError",
    "ExperimentConfig",
    "FGM",
    "FamilySpec",
    "HetcorrError",
    "NORMAL",
    "PARETO",
    "PairExpectations",
    "ParamDomainError",
    "Provenance",
    "ReplicationReport",
    "Sample",
    "SeqEvalError",
    "SeqSpec",
    "SeqSyntaxError",
    "TheoryResult",
    "TieReport",
    "TiesError",
    "UnsupportedFamilyOperation",
    "analytic_limit",
    "blended_r",
    "by_name",
    "cdf",
    "compute_set",
    "derive_stream",
    "eval_seq",
    "eval_seq_array",
    "eval_seq_prefix",
    "fgm_conditional_cdf",
    "fgm_invert_conditional",
    "increment_diagnostics",
    "rejection_fractions",
    "kendall_fast",
    "kendall_naive",
    "marginal_cdf",
    "pair_expectation_closed",
    "pair_prob_mc",
    "pareto_index_tau",
    "parse_seq",
    "pearson",
    "replication_sample",
    "run_experiment",
    "run_replicated",
    "run_single",
    "sample",
    "sample_many",
    "spearman",
    "tau_n",
    "tau_n_from_params",
    "tau_n_mc",
    "tie_report",
    "variance_bound",
    "verify_suite",
]
