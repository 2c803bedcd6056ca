"""
phi4flow core modules.
"""
from .lattice_core import hat_momentum, hat_momentum_sq, Rotation4, MultiIndex, BrillouinZone
from .propagator import propagator_value, propagator_derivative, flow_kernel, kernel_difference
from .quadrature import integrate_bz, build_lambda_grid, integrate_lambda
from .flow_solver import FlowSolver, ClosedFormEvaluator, get_evaluator, get_solver
from .verification import get_suite
