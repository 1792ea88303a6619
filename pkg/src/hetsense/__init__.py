"""Field reconstruction and sensor selection for heterogeneous sensor networks.

High-quality sensors observe a Gaussian-process field with additive noise;
low-quality sensors only pass the field through when it exceeds a threshold.
The package computes the exact first and second moments of such readings,
the best linear unbiased estimate of the field anywhere in the plane, and the
cheapest set of sensors that keeps the estimate's MSE under a bound.
"""

from .errors import (
    DegenerateWeights,
    DimensionMismatch,
    DuplicateId,
    DuplicateLocationWarning,
    FactorizationError,
    Infeasible,
    ParseError,
    QuadratureNotConverged,
    SchemaError,
    TooLarge,
    ValidationError,
)
from .gp import CovMatrix, KernelSpec, Location, MeanSpec, Prior, eval_kernel, eval_mean, gram, sample_field
from .moments import (
    Gauss1,
    Gauss2,
    Quadrature,
    bvn_upper,
    cens_cross_m11,
    cond_linear_cross,
    mc_oracle,
    std_cdf,
    std_pdf,
    std_q,
    trunc_m0,
    trunc_m1,
    trunc_m2,
)
from .network import HIGH, LOW, MomentBundle, Sensor, SensorArray, make_sensors, moment_bundle, simulate_observations
from .sblue import GridSpec, Prediction, gp_posterior, mmse_oracle, sblue_grid, sblue_predict
from .selection import (
    CemConfig,
    CemState,
    SelectionProblem,
    brute_force_select,
    cem_select,
    feasibility_check,
    utility,
)

__version__ = "0.1.0"
