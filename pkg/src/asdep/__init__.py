"""Active subspaces, derivative-based sensitivity measures and Shapley
effects for scalar models with possibly non-independent inputs."""

__version__ = "0.1.0"

from .dependency import (
    DependencyModel,
    GaussianDependency,
    dependency_for,
    dependent_gradient,
    dependent_jacobian,
    dependent_partials,
    tensor_metric,
)
from .distributions import (
    Gaussian,
    GaussianLaw,
    IndependentLaw,
    Marginal,
    RngStream,
    SphericalSampler,
    Uniform,
    sample_unit_sphere,
)
from .errors import (
    AsdepError,
    DegenerateModelError,
    DegenerateStencilError,
    InvalidInputError,
    NotAvailableError,
    NumericError,
    SizeLimitError,
    UnsupportedDistributionError,
)
from .gradients import (
    EstimatorConfig,
    GradientMatrixEstimate,
    Stencil,
    central_stencil,
    estimate_gradient,
    gradient_matrix_direct,
    gradient_matrix_from_samples,
    gradient_matrix_plugin,
    sample_gradients,
    select_hyperparameters,
    solve_stencil,
)
from .linalg import Spectrum, pseudo_inverse, sym_eig, sym_trace
from .sensitivity import (
    BoundReport,
    SensitivityScores,
    TotalCovEstimate,
    dgsm_bounds,
    pick_freeze_deltas,
    sensitivity_scores,
    sobol_indices_pick_freeze,
    total_covariance,
    total_covariance_dependent,
    total_covariance_derivative,
)
from .shapley import (
    ShapleyResult,
    bivariate_variance_value,
    normalize,
    shapley_exact,
    shapley_from_gradients,
    shapley_from_gradients_third_order,
)
from .subspace import (
    ActiveSubspace,
    DgsmValues,
    active_scores,
    approximation_error,
    dgsm_values,
    split_subspace,
    subspace_approximation,
    subspace_error,
)
from .testfns import TestFunction, analytic_reference, get_function, list_functions
