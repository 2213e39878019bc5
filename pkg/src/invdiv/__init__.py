"""Robust M-estimation on the inverse divergence.

Model families generated by a nonnegative function of the inverse
divergence (IGT, GIGT and its two-component mixture, GIG, multivariate
IGT), their samplers, the weighted-mean estimating-equation solver, and
numerical verdicts for the convergence conditions under which the
estimating equation is unbiased without a correction term.
"""

__version__ = "0.1.0"

from .divergence import (
    DomainError,
    inverse_div,
    itakura_saito_div,
    multivariate_inverse_div,
    squared_div,
)
from .funcs import (
    CatalogError,
    FFunction,
    GeneratingFunction,
    default_f_catalog,
    default_g_catalog,
    make_f,
    make_g,
    parse_f,
    parse_g,
)
from .numerics import (
    BoundednessVerdict,
    BudgetExhausted,
    QuadratureResult,
    Verdict,
    bessel_k,
    gamma_fn,
    integrate_halfline,
    integrate_plane_quadrant,
    probe_boundedness,
)
from .distributions import (
    GammaModel,
    GaussianModel,
    GigModel,
    GigtMixtureModel,
    GigtModel,
    IgtModel,
    MigtModel,
    ModelError,
    baseline_pdf,
    gig_pdf,
    gigt_mixture_pdf,
    gigt_pdf,
    igt_mean,
    igt_pdf,
    migt_pdf,
    model_mean,
    parse_model,
)
from .sampling import (
    RngStream,
    RootPair,
    sample_contaminated,
    sample_gig,
    sample_igt,
    sample_migt,
    sample_mixture,
    sample_model,
    sample_radial,
    solve_root_pair,
)
from .conditions import (
    ConditionQuery,
    check_condition,
    check_igt_condition,
    check_migt_condition,
    check_mixture_condition,
    check_normalization,
    condition_matrix,
)
from .estimator import (
    EstimateResult,
    EstimationProblem,
    estimating_residual,
    loss_value,
    normalized_residual,
    solve,
)
from .bias import (
    BiasReport,
    absolute_bias_identity,
    bias_monte_carlo,
    bias_quadrature,
    verify_coordinate_reduction,
    verify_radial_identity,
)
from .experiments import (
    ConfigError,
    ExperimentConfig,
    emit_outputs,
    parse_config,
    run_experiment,
)
