"""Coupling-based simulation and verification for SDEs with integrable drift.

Builds couplings by change of measure for additive-noise SDEs whose drift
may be merely integrable (even discontinuous), computes Girsanov weights,
and numerically verifies Harnack, shift-Harnack, log-Harnack, Krylov and
variance-gradient inequalities with their explicit constants.
"""

from .coupling import (
    CoupledSample,
    CouplingKind,
    harnack_coupling,
    shift_coupling,
    weight,
)
from .errors import (
    DimensionMismatchError,
    DivergedPathError,
    EstimatorError,
    NonConvergenceError,
    UnsupportedDimensionError,
)
from .estimate import (
    DensityHistogram,
    KrylovParams,
    McEstimate,
    SpaceTimeFunction,
    TestFunction,
    density_histogram,
    default_probe_family,
    entropy_weight,
    entropy_weight_pair,
    estimate_kappa,
    khasminskii_gamma,
    kr2_bound,
    krylov_functional,
    krylov_functionals,
    mc_semigroup,
    weight_moment,
    weighted_semigroup,
)
from .model import (
    DiffusionSpec,
    DriftSpec,
    GridDrift,
    HypothesisReport,
    IndicatorBoxDrift,
    LipschitzDrift,
    MollifiedIndicatorDrift,
    QuadratureParams,
    ZeroDrift,
    check_hypotheses,
    eval_drift,
    lqp_norm,
    translation_modulus,
)
from .paths import (
    SamplePath,
    TimeGrid,
    brownian_increments,
    brownian_increments_batch,
    simulate_path,
)
from .verify import (
    InequalityReport,
    Verdict,
    beta_constant,
    check_girsanov_consistency,
    check_harnack,
    check_krylov,
    check_shift_harnack,
    check_shift_log_harnack,
    check_variance_gradient,
    check_weight_moment_bound,
    harnack_admissible,
    harnack_factor,
)

__version__ = "0.1.0"
