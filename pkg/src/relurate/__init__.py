"""relurate: constructive sparse ReLU classifiers, excess-risk theory
calculators, synthetic classification tasks and a rate-measurement harness.
"""
from ._kernels import BACKEND as kernel_backend
from .constructions import (
    ClassifierSpec,
    HorizonSpec,
    PieceSpec,
    SafeRegion,
    build_horizon,
    build_piecewise_classifier,
    build_plugin_threshold,
    build_product,
    build_smooth_approx,
    build_square,
)
from .network import (
    ArchBudget,
    NetStats,
    ReluNetwork,
    affine_network,
    check_budget,
    clamp_output,
    concat,
    evaluate,
    evaluate_batch,
    identity_network,
    masking_network,
    pad_depth,
    stack,
    stats,
)
from .polynomials import Polynomial
from .rates import (
    RateSpec,
    Schedule,
    VarianceBoundParams,
    architecture_schedule,
    entropy_bound,
    hinge_variance_params,
    logistic_variance_params,
    minimax_exponent,
    rate_exponent,
    variance_bound_rhs,
)
from .tasks import (
    ExponentEstimate,
    RiskReport,
    SyntheticTask,
    estimate_exponent,
    excess_risk,
    make_extreme_eta_task,
    make_margin_task,
    make_smooth_boundary_task,
    make_smooth_eta_task,
)
from .training import (
    TrainConfig,
    empirical_phi_risk,
    erm_train,
    loss_gradients,
    loss_subgrad,
    loss_value,
    model_select,
)

__version__ = "0.1.0"
