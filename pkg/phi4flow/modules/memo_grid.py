"""
Two-loop two-point function (extended scope).

The linear term of rhs(2,2) integrates the one-loop four-point function at the
forward configuration (k, p, -p, -k). Its only expensive ingredient is the
bubble B(q; a) = zone integral of C(k) C(k+q), which depends on q through
|hat(q_mu)| per axis. MemoGrid tabulates B on a tensor grid of those reduced
coordinates at each lambda node and interpolates multilinearly; the nested
grid of every second point gives the interpolation error estimate.
"""
import logging
import math
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from phi4flow.config import LambdaGridConfig, TwoLoopConfig
from phi4flow.errors import QuadratureError
from phi4flow.interfaces import QuadratureResult, TwoLoopResult
from phi4flow.models import CountertermEntry, LatticeParams
from phi4flow.modules.lattice_core import DIM, MultiIndex, hat_momentum, hat_momentum_sq
from phi4flow.modules.propagator import bubble_table, flow_kernel
from phi4flow.modules.quadrature import KAPPA, LambdaGrid, build_lambda_grid, integrate_bz

logger = logging.getLogger(__name__)


class MemoGrid:
    """
    Bubble tables B(u; lambda) on u_mu = |hat(q_mu)|, built lazily per lambda node
    and read-only afterwards.
    """
    def __init__(self, a0: float, m: float, f: float, points: int = 9, momentum_bound: float = 0.0,
                 panels: int = 16, order: int = 8):
        if points % 2 == 0 or points < 3:
            raise ValueError(f"MemoGrid needs an odd number of points >= 3, got {points}")
        self.a0 = a0
        self.m = m
        self.f = f
        self.points = points
        self.momentum_bound = momentum_bound
        self.panels = panels
        self.order = order
        self._tables: Dict[float, Tuple[np.ndarray, np.ndarray]] = {}
        self._interpolators: Dict[Tuple[float, bool], RegularGridInterpolator] = {}

    def axis(self, lam: float) -> np.ndarray:
        """Quadratic grid on [0, u_max]; u_max covers the damped loop momenta plus the external shift."""
        u_max = min(2.0 / self.a0, KAPPA * lam + self.momentum_bound)
        return u_max * np.linspace(0.0, 1.0, self.points) ** 2

    def table(self, lam: float) -> Tuple[np.ndarray, np.ndarray]:
        if lam not in self._tables:
            params = LatticeParams(a0=self.a0, a=1.0 / lam, m=self.m, f=self.f)
            u = self.axis(lam)
            self._tables[lam] = (u, bubble_table(params, u, self.panels, self.order))
        return self._tables[lam]

    def build(self, grid: LambdaGrid) -> None:
        logger.info(f"[MemoGrid] Tabulating bubbles at {len(grid)} lambda nodes ({self.points}^4 points each)")
        for lam in grid.nodes:
            self.table(float(lam))

    def _interpolator(self, lam: float, coarse: bool) -> RegularGridInterpolator:
        key = (lam, coarse)
        if key not in self._interpolators:
            u, values = self.table(lam)
            if coarse:
                u = u[::2]
                values = values[::2, ::2, ::2, ::2]
            self._interpolators[key] = RegularGridInterpolator((u,) * DIM, values, method="linear")
        return self._interpolators[key]

    def bubble(self, q, lam: float, coarse: bool = False) -> np.ndarray:
        """Interpolated B(q; 1/lam) for momenta shaped (..., 4); reduced coordinates are clamped to the grid."""
        q = np.asarray(q, dtype=float)
        u = np.abs(hat_momentum(q, self.a0))
        u_max = self.axis(lam)[-1]
        flat = np.clip(u.reshape(-1, DIM), 0.0, u_max)
        return self._interpolator(lam, coarse)(flat).reshape(q.shape[:-1])


class TwoLoopFlow:
    """
    rhs(2,2) linear term, two-loop counterterm shooting and L_{2,2} evaluation on top of
    an unrotated FlowSolver.
    """
    def __init__(self, solver, config: Optional[TwoLoopConfig] = None):
        self.solver = solver
        self.config = config or TwoLoopConfig()
        top = min(2, self.config.lambda_panels - 1)
        self.grid = build_lambda_grid(
            solver.a0, solver.m,
            LambdaGridConfig(panels=self.config.lambda_panels, order=self.config.lambda_order, top_panels=top),
        )
        self._memos: Dict[float, MemoGrid] = {}
        self._shots: Dict[bool, CountertermEntry] = {}

    def memo(self, p) -> MemoGrid:
        """MemoGrid whose reduced-momentum range covers the external momentum p."""
        bound = float(np.max(np.abs(hat_momentum(np.asarray(p, dtype=float), self.solver.a0))))
        bound = round(bound, 12)
        if bound not in self._memos:
            s = self.solver
            self._memos[bound] = MemoGrid(s.a0, s.m, s.f, self.config.grid_points, bound,
                                          s.settings.proper_time_panels, s.settings.proper_time_order)
        return self._memos[bound]

    def linear_term(self, p, lam: float, w: Optional[MultiIndex], l12: float, coarse: bool = False) -> float:
        """
        Half the zone integral of dC/d(1/a)(k) L_{1,4}(k, p, -p, -k; lambda), with
        L_{1,4} from its bubble representation and B read from the MemoGrid.
        """
        s = self.solver
        if s.is_negligible(lam):
            return 0.0
        p = np.asarray(p, dtype=float)
        f = s.f
        params = s.params_at(lam)
        memo = self.memo(p)
        tadpole = s.tadpole_rate(lam)
        at_zero = not np.any(p)
        if w is None:
            c1 = s.counterterms(1).c
            b0 = float(memo.bubble(np.zeros(DIM), lam, coarse))
            k0 = float(s.bubble_rates(np.zeros(DIM), lam).value)
            constant = 0.5 * tadpole * (24.0 * c1 - 0.5 * f * f * b0) - f * l12 * k0
            external = -f * l12 * tadpole * float(s.propagator(p, lam))
            integrand = lambda k: flow_kernel(params, k) * memo.bubble(k + p, lam, coarse)
            sign = 1.0
        else:
            orders = w.leg(0)
            constant = 0.0
            external = -f * l12 * tadpole * float(s.propagator(p, lam, orders))
            # derivative moved onto the kernel by shifting k -> k - p
            integrand = lambda k: flow_kernel(params, k, orders) * memo.bubble(k + p, lam, coarse)
            sign = (-1.0) ** sum(orders)
        symmetric = at_zero and (w is None or all(o % 2 == 0 for o in w.leg(0)))
        scale = s.rate_scale * s.bubble_zero * s.m ** -(0 if w is None else w.total)
        loop = integrate_bz(integrand, s.a0, s.settings.brillouin, damping=1.0 / lam,
                            symmetry="hypercubic" if symmetric and w is None else "none", scale=scale)
        return constant + external - 0.5 * f * f * sign * float(loop.value)

    def rhs_values(self, p, grid: LambdaGrid, w: Optional[MultiIndex] = None, coarse: bool = False) -> np.ndarray:
        s = self.solver
        p = np.asarray(p, dtype=float)
        momenta = np.stack([p, -p])
        l12 = s.l12_trajectory(grid)
        self.memo(p).build(grid)
        return np.array([
            self.linear_term(p, x, w, y, coarse) + s._quadratic_term(2, 2, momenta, x, w, y)
            for x, y in zip(grid.nodes, l12)
        ])

    def shoot(self, coarse: bool = False) -> CountertermEntry:
        """d_2 and b_2 from the renormalization conditions; c_2 needs L_{1,6} and stays None."""
        if coarse in self._shots:
            return self._shots[coarse]
        logger.info(f"[TwoLoop] Shooting two-loop counterterms (a0={self.solver.a0:g}, coarse={coarse})")
        zero = np.zeros(DIM)
        from phi4flow.modules.flow_solver import CURVATURE
        two_d = self.grid.integrate(self.rhs_values(zero, self.grid, None, coarse))
        b = self.grid.integrate(0.5 * self.rhs_values(zero, self.grid, CURVATURE, coarse))
        entry = CountertermEntry(l=2, d=0.5 * two_d.value, b=b.value, c=None,
                                 error=float(max(two_d.error, b.error)))
        self._shots[coarse] = entry
        return entry

    def value(self, p, a: float = math.inf, coarse: bool = False) -> QuadratureResult:
        """L_{2,2}(p, -p; a) = 2 d_2 + b_2 hat(p)^2 - integral from 1/a to 1/a0 of rhs(2,2)."""
        s = self.solver
        p = np.asarray(p, dtype=float)
        entry = self.shoot(coarse)
        bare = 2.0 * entry.d + entry.b * float(hat_momentum_sq(p, s.a0))
        lam = 0.0 if math.isinf(a) else 1.0 / a
        if lam >= s.lam0:
            return QuadratureResult(value=bare, error=0.0)
        grid = self.grid if lam == 0.0 else self.grid.restrict(lam, s.lam0)
        result = grid.integrate(self.rhs_values(p, grid, None, coarse))
        return QuadratureResult(value=bare - result.value, error=result.error + entry.error, nodes=result.nodes)

    def curvature(self, a: float = math.inf, coarse: bool = False) -> QuadratureResult:
        """d/d(p^2) L_{2,2}(p, -p; a) at p = 0; zero at a = inf by the renormalization condition."""
        from phi4flow.modules.flow_solver import CURVATURE
        s = self.solver
        entry = self.shoot(coarse)
        lam = 0.0 if math.isinf(a) else 1.0 / a
        if lam >= s.lam0:
            return QuadratureResult(value=entry.b, error=0.0)
        grid = self.grid if lam == 0.0 else self.grid.restrict(lam, s.lam0)
        result = grid.integrate(0.5 * self.rhs_values(np.zeros(DIM), grid, CURVATURE, coarse))
        return QuadratureResult(value=entry.b - result.value, error=result.error + entry.error, nodes=result.nodes)


def two_loop_two_point(p, params: LatticeParams, settings=None, config: Optional[TwoLoopConfig] = None) -> TwoLoopResult:
    """
    L_{2,2}(p, -p; a) with its momentum defect |L(p) - L(0)| and the MemoGrid interpolation
    error from the nested halved grid.

    Raises:
        QuadratureError: if the interpolation error exceeds config.tolerance relative to the value scale
    """
    from phi4flow.modules.flow_solver import get_solver
    config = config or TwoLoopConfig()
    solver = get_solver(params.a0, params.m, params.f, settings)
    solver.configure_two_loop(config)
    flow = solver.two_loop()
    p = np.asarray(p, dtype=float)
    fine = flow.value(p, params.a)
    coarse = flow.value(p, params.a, coarse=True)
    origin = flow.value(np.zeros(DIM), params.a)
    interpolation_error = abs(fine.value - coarse.value)
    scale = max(abs(fine.value), abs(origin.value), abs(2.0 * flow.shoot().d))
    if interpolation_error > config.tolerance * scale:
        raise QuadratureError(
            f"MemoGrid interpolation error {interpolation_error:.3e} above tolerance "
            f"{config.tolerance:g} x {scale:.3e}; increase two_loop.grid_points"
        )
    return TwoLoopResult(
        value=fine.value,
        defect=abs(fine.value - origin.value),
        interpolation_error=interpolation_error,
        error=fine.error,
    )
