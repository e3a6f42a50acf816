"""Mini-batch SGD cost modeling: how many updates a run needs at batch
size M, how long one update takes on given hardware, and which (M, P)
combination minimizes wall-clock time to a target loss.

The package has three layers:

* measurement — :mod:`sgdplan.problems` and :mod:`sgdplan.simulate` run
  deterministic mini-batch SGD sweeps and record the first update at
  which the loss residual crosses a threshold;
* estimation — :mod:`sgdplan.fitting` fits those counts to the inverse
  law ``n_updates(M) = n_inf + alpha / M`` and :mod:`sgdplan.hardware`
  fits measured step times to a throughput-knee compute model with an
  optional communication term;
* prediction — :mod:`sgdplan.planner` combines both fits into optimal
  batch sizes, scaling curves, and budgeted design choices, while
  :mod:`sgdplan.bounds` provides the convergence guarantees that explain
  the inverse law's shape.

Everything is importable from the top level; the ``sgdplan`` console
script (:mod:`sgdplan.cli`) drives the same code from the shell.
"""

from .bounds import (
    BoundParams,
    DominanceReport,
    TaylorBound,
    bound_params_from_primitives,
    check_dominance,
    gd_limit,
    n_update_lower_bound_exact,
    n_update_lower_bound_taylor,
    residual_bound,
)
from .errors import (
    DivergenceError,
    InputError,
    ModelValidityError,
    PartialResultError,
    SgdPlanError,
    SweepError,
)
from .fitting import (
    EpsilonLaw,
    LawParams,
    aggregate_runs,
    fit_epsilon_dependence,
    fit_inverse_law,
    two_point_estimate,
)
from .hardware import (
    CommKind,
    CvConfig,
    HardwareParams,
    comm_time,
    cv_gamma_time,
    fit_hardware,
    gamma_time,
    t_update,
)
from .planner import (
    BottouParams,
    DesignOption,
    DesignResult,
    MarginalRatio,
    Plan,
    Regime,
    ScalingConfig,
    ScalingRow,
    bottou_iteration_bound,
    design_balance,
    m_opt,
    p_star,
    scaling_curves,
    sqrt_branch_time,
    t_conv,
    t_conv_optimal,
    weak_branch_time,
)
from .problems import Problem, logistic, noisy_quadratic, quadratic
from .simulate import (
    MeasuredPoint,
    RunRecord,
    SgdConfig,
    bound_params_for,
    make_rng,
    measure_n_update,
    scan_first_crossings,
    sgd_run,
    sweep,
    sweep_epsilon_grid,
)

__version__ = "0.1.0"

__all__ = [
    "BoundParams",
    "BottouParams",
    "CommKind",
    "CvConfig",
    "DesignOption",
    "DesignResult",
    "DivergenceError",
    "DominanceReport",
    "EpsilonLaw",
    "HardwareParams",
    "InputError",
    "LawParams",
    "MarginalRatio",
    "MeasuredPoint",
    "ModelValidityError",
    "Plan",
    "PartialResultError",
    "Problem",
    "Regime",
    "RunRecord",
    "ScalingConfig",
    "ScalingRow",
    "SgdConfig",
    "SgdPlanError",
    "SweepError",
    "TaylorBound",
    "aggregate_runs",
    "bottou_iteration_bound",
    "bound_params_for",
    "bound_params_from_primitives",
    "check_dominance",
    "comm_time",
    "cv_gamma_time",
    "design_balance",
    "fit_epsilon_dependence",
    "fit_hardware",
    "fit_inverse_law",
    "gamma_time",
    "gd_limit",
    "logistic",
    "m_opt",
    "make_rng",
    "measure_n_update",
    "n_update_lower_bound_exact",
    "n_update_lower_bound_taylor",
    "noisy_quadratic",
    "p_star",
    "quadratic",
    "residual_bound",
    "scaling_curves",
    "scan_first_crossings",
    "sgd_run",
    "sqrt_branch_time",
    "sweep",
    "sweep_epsilon_grid",
    "t_conv",
    "t_conv_optimal",
    "t_update",
    "two_point_estimate",
    "__version__",
]
