"""
phi4flow - Perturbative flow equations for lattice phi^4 theory in four dimensions
"""
__version__ = "0.1.1"

from phi4flow.modules import (
    hat_momentum,
    Rotation4,
    MultiIndex,
    propagator_value,
    flow_kernel,
    integrate_bz,
    FlowSolver,
    ClosedFormEvaluator,
    get_evaluator,
    get_solver,
    get_suite,
)

from phi4flow.pipeline import FlowPipeline
from phi4flow.config import RunConfig, load_config
from phi4flow.models import LatticeParams, CASIndex
