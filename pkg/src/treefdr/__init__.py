"""FDR-controlling multiple testing for hypotheses arranged in a tree hierarchy.

The package covers generalized stepwise procedures with per-hypothesis
critical functions, four hierarchical FDR procedures for different
dependence assumptions, the Meinshausen and Yekutieli baselines, and a
seeded Monte Carlo harness for estimating FDR and average power.
"""

from .critical import (
    ALL_KINDS,
    HIERARCHICAL_KINDS,
    ProcedureKind,
    arbdep_constants,
    arbdep_functions,
    blockarb_constants,
    blockarb_functions,
    blockpos_functions,
    critical_functions_for,
    fixed_sequence_functions,
    meinshausen_functions,
    parse_procedure,
    posdep_functions,
    weighted_functions,
)
from .errors import TreeFdrError, ValidationError
from .hierarchy import Hierarchy, build_hierarchy
from .procedures import (
    DEFAULT_YEKUTIELI_CORRECTION,
    RejectionResult,
    run_hierarchical,
    run_meinshausen,
    run_procedure,
    run_yekutieli,
)
from .simulate import (
    PRESETS,
    ProcedureStats,
    SimConfig,
    SimResult,
    TreeSpec,
    assign_truth,
    build_balanced_tree,
    estimate_fdr_power,
    preset_config,
    sample_pvalues,
)
from .stepwise import (
    CriticalFunctionSet,
    RejectionOutcome,
    generalized_stepdown,
    generalized_stepup,
    generalized_stepupdown,
    rejection_count_bruteforce,
    rejection_count_fast,
)

__version__ = "0.1.0"

__all__ = [
    "ALL_KINDS",
    "DEFAULT_YEKUTIELI_CORRECTION",
    "HIERARCHICAL_KINDS",
    "CriticalFunctionSet",
    "Hierarchy",
    "PRESETS",
    "ProcedureKind",
    "ProcedureStats",
    "RejectionOutcome",
    "RejectionResult",
    "SimConfig",
    "SimResult",
    "TreeFdrError",
    "TreeSpec",
    "ValidationError",
    "arbdep_constants",
    "arbdep_functions",
    "assign_truth",
    "blockarb_constants",
    "blockarb_functions",
    "blockpos_functions",
    "build_balanced_tree",
    "build_hierarchy",
    "critical_functions_for",
    "estimate_fdr_power",
    "fixed_sequence_functions",
    "generalized_stepdown",
    "generalized_stepup",
    "generalized_stepupdown",
    "meinshausen_functions",
    "parse_procedure",
    "posdep_functions",
    "preset_config",
    "rejection_count_bruteforce",
    "rejection_count_fast",
    "run_hierarchical",
    "run_meinshausen",
    "run_procedure",
    "run_yekutieli",
    "sample_pvalues",
    "weighted_functions",
]
