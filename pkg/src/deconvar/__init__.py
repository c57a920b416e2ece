"""Deconvolution least-squares estimation for autoregressions observed with noise."""
from .deconvolution import (
    InversionPlan,
    KernelSpec,
    deconv_closed,
    deconv_integral,
    deconv_numeric,
    kernel_deconv,
    laplace_shortcut,
)
from .errors import (
    DeconvarError,
    DegenerateDesignError,
    DivergenceError,
    NumericError,
    UnsupportedCombinationError,
)
from .estimators import (
    ContrastStats,
    EstimateRecord,
    ThetaBox,
    contrast,
    contrast_stats,
    estimate_argmin,
    estimate_arma,
    estimate_cauchy_closed,
    estimate_general,
    estimate_linear_closed,
    estimate_naive,
    estimate_oracle,
)
from .montecarlo import MCConfig, MCReport, emit_boxplot_data, emit_table, run_mc
from .noise import ErrorModel, InnovationModel, error_cf, error_density, sample_error, sample_innovation, split_rng
from .process import (
    RegressionModel,
    Scenario,
    TrajectoryPair,
    make_preset,
    preset_case_a,
    preset_case_b,
    preset_cauchy,
    simulate,
)
from .weights import WeightSpec, condition_c11_report, sc_fourier, weight_eval, weighted_product_fourier

__version__ = "0.1.0"
