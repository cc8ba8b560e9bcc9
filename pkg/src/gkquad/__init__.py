"""Greedy kernel quadrature with certified worst-case errors."""
from .errors import (
    ConfigError,
    DataFormatError,
    GkquadError,
    InvalidInputError,
    NumericalBreakdownError,
    SelectionError,
)
from .functionals import (
    Box,
    Constant,
    DiscreteFunctional,
    IndicatorBox,
    RadialSingular,
    SphereGaussian,
    UnitSphere2,
    apply,
    continuity_constant,
    hnorm_squared,
    monte_carlo_functional,
    point_evaluation,
    representer_values,
)
from .greedy import (
    PerturbationSplit,
    QuadratureRule,
    SelectionRule,
    Status,
    Termination,
    TraceEntry,
    apply_rule,
    compress,
    discrete_continuity,
    greedy_bound_constant,
    optimal_weights,
    perturbation_decomposition,
    run_greedy,
    weight_optimal_rule,
    worst_case_error,
)
from .kernels import KernelFamily, KernelSpec, PointSet, diag, evaluate, gram_matrix
from .newton import GreedyState, init_state

__version__ = "0.1.0"
