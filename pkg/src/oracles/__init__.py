from .backprop import backprop_through_sampler
from .exact import exact_flow, exact_linear_adjoint, flow_multiplier, flow_multiplier_quadrature
from .finite_diff import finite_diff_grad
from .order import ConvergenceStudy, OrderFit, estimate_order

__all__ = [
    "backprop_through_sampler",
    "exact_flow",
    "exact_linear_adjoint",
    "flow_multiplier",
    "flow_multiplier_quadrature",
    "finite_diff_grad",
    "ConvergenceStudy",
    "OrderFit",
    "estimate_order",
]
