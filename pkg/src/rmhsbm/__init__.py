"""Repeated-motif hierarchical stochastic blockmodels: specs, sampling and structure tests."""

from .estimation import (
    BicReport,
    BlockSummary,
    LlrReport,
    aggregate_summaries,
    bic_delta,
    kl_bernoulli,
    llr_global,
    llr_local,
    llr_report,
    mle_alt,
    mle_null,
    summarize,
)
from .estimators import GroupLLRTransformer, MotifStructureTest
from .harness import StudyConfig, StudyResult, emit_figures, run_study
from .hierarchy import (
    FlatModel,
    HierarchySpec,
    ParameterGroups,
    RootedTree,
    SpecError,
    build_parameter_groups,
    bundled_spec,
    check_compatibility,
    flatten_model,
    lca,
    lca_down,
    load_spec,
)
from .numeric import ConvergenceError, TailProbability, chi2_sf, f_sf
from .sampling import (
    GraphSample,
    PerturbedModel,
    Seed,
    corrupt_parameters,
    draw_model_parameters,
    perturb_parameters,
    sample_conditional_sbm,
    sample_summary,
    signal_to_noise,
)
from .testing import (
    PopulationEstimates,
    TestOutcome,
    TestReport,
    aggregated_test,
    anova_local,
    bh_correct,
    friedman_local,
    individual_rejection_rates,
    run_tests,
    wilks_global,
    wilks_local,
)

__version__ = "0.1.0"
