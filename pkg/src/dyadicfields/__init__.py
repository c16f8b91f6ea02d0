"""Simulation and verification toolkit for two-dimensional dependent random
fields: exact dyadic telescoping decompositions, truncated maximal-inequality
evaluation, and Monte Carlo probes of the associated laws of large numbers."""

from .models import (
    DependenceSpec,
    FieldModel,
    FieldSample,
    MarginalSpec,
    Modulation,
    SpecError,
    TabulatedTail,
    cell_distribution,
    distinct_cell_distributions,
    dominator_model,
    sample_field,
    tail_prob,
    truncated_moment,
)
from .dyadic import (
    DecompositionReport,
    PrefixSumTable,
    TruncationLadder,
    clamp_truncate,
    dyadic_floor,
    ladder_increment,
    max_normalized_sum,
    prefix_sums,
    telescoping_decompose,
)
from .inequalities import (
    H2qInstance,
    InequalityLedger,
    MeanEstimate,
    MonotoneTransform,
    TailBoundReport,
    WeightScheme,
    enumerate_lhs_exact,
    envelope_constant,
    h2q_min_constant,
    rosenthal_lhs_mc,
    rosenthal_rhs,
    tailbound_check,
    weight,
    weight_total,
)
from .harness import (
    ConvergenceTrace,
    MomentSeriesReport,
    SeriesEstimate,
    TracePoint,
    baum_katz_series,
    feller_wlln,
    lemma_a1_ratio,
    moment_series_check,
    mz_slln_trace,
    pyke_root_lp,
    regular_norming_series,
    wilson_interval,
)
from .varying import (
    DominationReport,
    SlowlyVaryingFamily,
    UITrace,
    debruijn_conjugate,
    debruijn_residual,
    domination_check,
    log_nu,
    log_nu_sq,
    uniform_integrability_trace,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
