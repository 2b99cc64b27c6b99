"""Simulation, quadratic variations and variance oracles for multiparameter
Hermite random fields."""
from .params import (
    ModelParams,
    chaos_coefficients,
    derive_exponents,
    limit_constant_c1,
    normalizing_constant_b,
)
from .gaussian import GridSpec, fgn_autocovariance, sample_fgn, sample_sheet_increments
from .hermite import (
    IncrementArray,
    SampleField,
    box_increments,
    hermite_poly,
    simulate_direct_kernel,
    simulate_hermite_rank,
)
from .quadvar import estimate_hurst, normalized_statistic, quadratic_variation
from .chaos_oracle import (
    VarianceReport,
    higher_chaos_bound,
    limit_constant_f3,
    second_chaos_variance,
    variance_report,
    vn_variance_prediction,
)
from .volterra import dK, kernel_inner_product

__version__ = "0.1.0"
