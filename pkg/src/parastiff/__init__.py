"""Regularized parametric implicit time integrators for stiff evolution equations."""

from ._threads import limit_blas_threads

limit_blas_threads()

from .epscontrol import EpsPolicy, select_initial_eps, update_eps
from .errors import (
    AliasingError,
    ConfigurationError,
    ContractError,
    DivergenceError,
    NumericError,
    ShapeError,
    UnsupportedMethodError,
)
from .initfit import (
    TargetFunction,
    adam_prefit,
    custom_target,
    fictitious_flow_fit,
    gaussian_target,
    hat_target,
    init_params,
    misfit,
    target_by_name,
)
from .netparam import (
    FourierParametrization,
    JacobianBatch,
    JetBatch,
    MlpArchitecture,
    PeriodicMlp,
    default_architecture,
    fourier_eval,
    fourier_jacobian,
    load_checkpoint,
    mlp_eval,
    mlp_jacobian,
    save_checkpoint,
    unpack_params,
)
from .quadrature import QuadratureRule, build_composite_gauss, inner_product, norm
from .refsol import heat_reference, l2_error, transport_reference
from .regsolve import RegLsqSolution, RegularizedSolver, RegWeights, solve_regularized
from .semilinear import Problem, apply_A_jacobian, apply_f, make_problem
from .steppers import (
    ButcherTableau,
    GNTrace,
    SpectralTableau,
    StepResult,
    StepperConfig,
    build_spectral,
    galerkin_step,
    gauss2_tableau,
    grid_update_gauss,
    implicit_euler_tableau,
    midpoint_tableau,
    radau2_tableau,
    step_implicit_euler,
    step_irk,
    step_midpoint,
)

__version__ = "0.1.0"
