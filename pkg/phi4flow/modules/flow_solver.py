"""
Perturbative flow hierarchy for the CAS functions L_{l,n}.

The right-hand side at order (l, n) only involves lower orders, so every
coefficient function is a plain lambda-quadrature of its right-hand side,
started from the bare action at lambda = 1/a0:

    L_{l,n}(a) = B_{l,n} - integral_{1/a}^{1/a0} rhs(l, n; lambda) d lambda

Relevant bare constants (d_l, b_l, c_l) are fixed by shooting so that the
renormalization conditions hold at a = inf. A RotationContext evaluates the
rotated lattice theory, where every kernel argument q becomes hat(O q).
"""
import itertools
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np

from phi4flow.config import QuadratureConfig, TwoLoopConfig
from phi4flow.errors import ConfigError, OutOfScopeError
from phi4flow.interfaces import CASEvaluator, QuadratureResult
from phi4flow.models import IMPLEMENTED_INDICES, CountertermEntry, CountertermSet, LatticeParams, checked_params
from phi4flow.modules.lattice_core import (
    DIM,
    MultiIndex,
    Rotation4,
    check_momentum_conservation,
    hat_momentum_sq,
    hat_momentum_sq_derivative,
)
from phi4flow.modules.propagator import (
    bubble_heat_kernel,
    flow_kernel,
    propagator_derivative,
    rotated_partial,
    tadpole_heat_kernel,
)
from phi4flow.modules.quadrature import LambdaGrid, build_lambda_grid, integrate_bz

logger = logging.getLogger(__name__)

# derivative cap of evaluate / evaluate_derivative
MAX_EVALUATE_ORDER = 2

# d_{p^2} g(0) = half the second derivative along axis 1 of leg 1
CURVATURE = MultiIndex.from_rows([[2, 0, 0, 0]])

# flow scales with (m / lambda)^2 above this have |dC/d(1/a)| < 2e-30 a^3 everywhere in the zone
IR_EXPONENT = math.log(1e30)


@dataclass(frozen=True)
class Channel:
    """One rsy channel: leg subset at the first vertex, its complement at the second."""
    subset: Tuple[int, ...]
    complement: Tuple[int, ...]
    multiplicity: int


@dataclass(frozen=True)
class ChannelDecomposition:
    n: int
    n1: int
    channels: Tuple[Channel, ...]

    def __len__(self) -> int:
        return len(self.channels)

    @property
    def ordered_count(self) -> int:
        return sum(c.multiplicity for c in self.channels)


def rsy_channels(n: int, n1: int) -> ChannelDecomposition:
    """
    Inequivalent assignments of n1 external legs to the first vertex of the quadratic term.
    Unordered subset pairs {S, S^c} are counted once with multiplicity 2 when |S| = |S^c|.
    """
    if not 1 <= n1 <= n - 1:
        raise ValueError(f"Split n1={n1} must satisfy 1 <= n1 <= n-1 for n={n}")
    seen = set()
    channels: List[Channel] = []
    symmetric = 2 * n1 == n
    for subset in itertools.combinations(range(n), n1):
        complement = tuple(i for i in range(n) if i not in subset)
        key = frozenset((subset, complement)) if symmetric else subset
        if key in seen:
            continue
        seen.add(key)
        channels.append(Channel(subset, complement, 2 if symmetric else 1))
    return ChannelDecomposition(n=n, n1=n1, channels=tuple(channels))


def routing_coefficients(n: int, subset: Sequence[int]) -> List[float]:
    """Coefficients of independent legs 0..n-2 in sum_{i in subset} p_i with p_{n-1} = -sum."""
    last = (n - 1) in subset
    return [float(i in subset) - float(last) for i in range(n - 1)]


@dataclass
class RotationContext:
    """Rotated-lattice evaluation context; None or the identity means the original lattice."""
    rotation: Optional[Rotation4] = None
    counterterms: Literal["inherited", "refit"] = "inherited"

    @property
    def is_rotated(self) -> bool:
        return self.rotation is not None and not self.rotation.is_identity

    @property
    def effective_rotation(self) -> Optional[Rotation4]:
        return self.rotation if self.is_rotated else None

    def key(self) -> str:
        if not self.is_rotated:
            return "none"
        return self.rotation.matrix.tobytes().hex() + ":" + self.counterterms


def _as_multi_index(w, n: int) -> Optional[MultiIndex]:
    if w is None:
        return None
    if not isinstance(w, MultiIndex):
        w = MultiIndex.from_rows(w)
    if w.legs != n - 1:
        raise ConfigError(f"Multi-index for an {n}-point function needs {n - 1} legs, got {w.legs}")
    return None if w.is_zero else w


def _needs_l12(l: int, n: int) -> bool:
    return (l, n) in ((1, 4), (2, 2))


def _check_momenta(momenta, n: int, a0: float) -> np.ndarray:
    momenta = np.asarray(momenta, dtype=float)
    if momenta.shape != (n, DIM):
        raise ConfigError(f"Expected {n} x 4 momenta, got shape {momenta.shape}")
    check_momentum_conservation(momenta, a0)
    return momenta


class FlowSolver(CASEvaluator):
    """
    Flow-equation evaluator for one (a0, m, f), quadrature setting and rotation context.
    Counterterms are computed on demand and cached.
    """
    def __init__(self, a0: float, m: float, f: float, settings: Optional[QuadratureConfig] = None,
                 ctx: Optional[RotationContext] = None):
        checked_params(a0=a0, m=m, f=f)
        self.a0 = a0
        self.m = m
        self.f = f
        self.settings = settings or QuadratureConfig()
        self.ctx = ctx or RotationContext()
        self.rotation = self.ctx.effective_rotation
        self.lam0 = 1.0 / a0
        self.grid = build_lambda_grid(a0, m, self.settings.flow)
        self._ct = CountertermSet(a0=a0, m=m, f=f)
        self._tadpole_rates: Dict[float, float] = {}
        self._bubble_rates: Dict[Tuple, QuadratureResult] = {}
        self._scales: Dict[str, float] = {}
        self._two_loop = None
        self.two_loop_config = TwoLoopConfig()

    # --- kernels at a flow scale -------------------------------------------

    def params_at(self, lam: float) -> LatticeParams:
        return LatticeParams(a0=self.a0, a=math.inf if lam == 0.0 else 1.0 / lam, m=self.m, f=self.f)

    def _damping(self, lam: float) -> float:
        a = 1.0 / lam
        # a rotated damping cube is contained in the axis cube of half-width pi*KAPPA/a
        return a / math.pi if self.rotation is not None else a

    def kernel(self, q, lam: float, orders=None) -> np.ndarray:
        return flow_kernel(self.params_at(lam), q, orders, self.rotation)

    def propagator(self, q, lam: float, orders=None) -> np.ndarray:
        return propagator_derivative(self.params_at(lam), q, orders, self.rotation)

    def _symmetry(self) -> str:
        return "none" if self.rotation is not None else "hypercubic"

    def is_negligible(self, lam: float) -> bool:
        """True when exp(-(m/lambda)^2) puts every flow-kernel value below the IR cutoff."""
        return lam <= 0.0 or (self.m / lam) ** 2 > IR_EXPONENT

    @property
    def rate_scale(self) -> float:
        """Mean |tadpole rate| over [0, 1/a0], from the heat-kernel tadpole."""
        if "rate" not in self._scales:
            self._scales["rate"] = tadpole_heat_kernel(self.a0, self.m, self.a0, math.inf) * self.a0
        return self._scales["rate"]

    @property
    def bubble_zero(self) -> float:
        """B(0; inf) from the heat-kernel representation."""
        if "bubble" not in self._scales:
            params = LatticeParams(a0=self.a0, a=math.inf, m=self.m, f=self.f)
            self._scales["bubble"] = float(bubble_heat_kernel(params, np.zeros(DIM), self.settings.proper_time_panels,
                                                              self.settings.proper_time_order))
        return self._scales["bubble"]

    def bubble_scale(self, orders=None) -> float:
        """Mean |zero-momentum bubble rate| over [0, 1/a0], in units of m for derivative orders."""
        total = 0 if orders is None else int(sum(orders))
        return 0.5 * self.bubble_zero * self.a0 * self.m ** -total

    def tadpole_rate(self, lam: float) -> float:
        """Zone integral of dC/d(1/a) at lambda."""
        if lam not in self._tadpole_rates:
            if self.is_negligible(lam):
                self._tadpole_rates[lam] = 0.0
                return 0.0
            params = self.params_at(lam)
            res = integrate_bz(
                lambda k: flow_kernel(params, k, None, self.rotation),
                self.a0, self.settings.brillouin, damping=self._damping(lam), symmetry=self._symmetry(),
                scale=self.rate_scale,
            )
            self._tadpole_rates[lam] = res.value
        return self._tadpole_rates[lam]

    def bubble_rates(self, shifts: np.ndarray, lam: float, orders=None) -> QuadratureResult:
        """
        Zone integrals of dC/d(1/a)(k) * d^orders C(k + q) for each shift q, as one vector integral.
        """
        shifts = np.atleast_2d(np.asarray(shifts, dtype=float))
        key = (lam, shifts.tobytes(), None if orders is None else tuple(orders))
        if key in self._bubble_rates:
            return self._bubble_rates[key]
        if self.is_negligible(lam):
            return QuadratureResult(value=np.zeros(shifts.shape[0]), error=np.zeros(shifts.shape[0]))
        params = self.params_at(lam)
        symmetric = self.rotation is None and not np.any(shifts) and (orders is None or sum(orders) == 0)

        def integrand(k):
            kern = flow_kernel(params, k, None, self.rotation)
            cols = [propagator_derivative(params, k + q, orders, self.rotation) for q in shifts]
            return kern[:, None] * np.stack(cols, axis=1)

        result = integrate_bz(integrand, self.a0, self.settings.brillouin, damping=self._damping(lam),
                              symmetry="hypercubic" if symmetric else "none", scale=self.bubble_scale(orders))
        self._bubble_rates[key] = result
        return result

    # --- lower-order trajectories -----------------------------------------------

    def l12_trajectory(self, grid: LambdaGrid) -> np.ndarray:
        """L_{1,2}(lambda) at the nodes of a grid ending at 1/a0."""
        rates = np.array([0.5 * self.f * self.tadpole_rate(x) for x in grid.nodes])
        return 2.0 * self.counterterms(1).d - grid.cumulative_from_top(rates)

    def l12_at(self, lam: float) -> float:
        if lam >= self.lam0:
            return 2.0 * self.counterterms(1).d
        sub = self.grid.restrict(lam, self.lam0)
        rates = np.array([0.5 * self.f * self.tadpole_rate(x) for x in sub.nodes])
        return 2.0 * self.counterterms(1).d - sub.integrate(rates).value

    def _vertex(self, l: int, v: int, l12: float) -> Optional[float]:
        """Momentum-independent lower-order vertex values entering quadratic terms."""
        if v % 2 == 1 or (l, v) == (0, 2):
            return 0.0
        if (l, v) == (0, 4):
            return self.f
        if (l, v) == (1, 2):
            return l12
        return None

    # --- right-hand side ------------------------------------------------------------

    def _quadratic_term(self, l: int, n: int, momenta: np.ndarray, lam: float, w: Optional[MultiIndex],
                        l12: float) -> float:
        total = 0.0
        for l1 in range(l + 1):
            l2 = l - l1
            for v1 in range(2, n + 1):
                v2 = n + 2 - v1
                if v2 < 2:
                    continue
                c1 = self._vertex(l1, v1, l12)
                c2 = self._vertex(l2, v2, l12)
                if c1 == 0.0 or c2 == 0.0:
                    continue
                if c1 is None or c2 is None:
                    raise OutOfScopeError(f"Quadratic term of ({l},{n}) needs momentum-dependent vertices")
                for ch in rsy_channels(n, v1 - 1).channels:
                    P = momenta[list(ch.subset)].sum(axis=0)
                    if w is None:
                        kern = float(self.kernel(P, lam))
                    else:
                        factor, orders = w.route(routing_coefficients(n, ch.subset))
                        kern = factor * float(self.kernel(P, lam, orders)) if factor else 0.0
                    total += ch.multiplicity * c1 * c2 * kern
        return -0.5 * total

    def _linear_term(self, l: int, n: int, momenta: np.ndarray, lam: float, w: Optional[MultiIndex],
                     l12: float) -> float:
        if l == 0:
            return 0.0
        if (l, n) == (1, 2):
            return 0.0 if w is not None else 0.5 * self.f * self.tadpole_rate(lam)
        if (l, n) == (1, 4):
            return self._linear_one_loop_four_point(momenta, lam, w)
        if (l, n) == (2, 2):
            return self.two_loop().linear_term(momenta[0], lam, w, l12)
        raise OutOfScopeError(f"No linear term implemented for ({l},{n})")

    def _linear_one_loop_four_point(self, momenta: np.ndarray, lam: float, w: Optional[MultiIndex]) -> float:
        # L_{0,6}(k, p1..p4, -k) = -f^2 [sum_i C(p_i) + sum_{i<j} C(k + p_i + p_j)]
        external = 0.0
        for i in range(4):
            subset = (i,)
            if w is None:
                external += float(self.propagator(momenta[i], lam))
            else:
                factor, orders = w.route(routing_coefficients(4, subset))
                if factor:
                    external += factor * float(self.propagator(momenta[i], lam, orders))
        external *= self.tadpole_rate(lam)
        # pairs (0,j) and their complements give the same integral
        pairs = [(0, 1), (0, 2), (0, 3)]
        shifts = np.array([momenta[list(p)].sum(axis=0) for p in pairs])
        if w is None:
            loop = 2.0 * float(np.sum(self.bubble_rates(shifts, lam).value))
        else:
            loop = 0.0
            for pair, q in zip(pairs, shifts):
                factor, orders = w.route(routing_coefficients(4, pair))
                if factor:
                    loop += 2.0 * factor * float(np.sum(self.bubble_rates(q[None, :], lam, orders).value))
        return -0.5 * self.f ** 2 * (external + loop)

    def rhs(self, l: int, n: int, momenta, lam: float, w=None, l12: Optional[float] = None) -> float:
        """
        Flow right-hand side d/d(1/a) d^w L_{l,n} at lambda.

        Args:
            l, n: Index of the coefficient function
            momenta: n x 4 external momenta
            lam: Flow parameter in (0, 1/a0]
            w: Optional MultiIndex over legs 1..n-1
            l12: L_{1,2}(lambda) if already known
        """
        self._check_index(l, n)
        momenta = _check_momenta(momenta, n, self.a0)
        w = _as_multi_index(w, n)
        if n % 2 == 1 or lam <= 0.0:
            return 0.0
        if l12 is None:
            l12 = self.l12_at(lam) if _needs_l12(l, n) else 0.0
        return self._linear_term(l, n, momenta, lam, w, l12) + self._quadratic_term(l, n, momenta, lam, w, l12)

    def rhs_on_grid(self, l: int, n: int, momenta, grid: LambdaGrid, w=None) -> np.ndarray:
        """rhs at every node of a grid ending at 1/a0, reusing one L_{1,2} trajectory."""
        momenta = _check_momenta(momenta, n, self.a0)
        w = _as_multi_index(w, n)
        l12 = self.l12_trajectory(grid) if _needs_l12(l, n) else np.zeros(len(grid))
        return np.array([
            self._linear_term(l, n, momenta, x, w, y) + self._quadratic_term(l, n, momenta, x, w, y)
            for x, y in zip(grid.nodes, l12)
        ])

    # --- boundary values ----------------------------------------------------------------

    def bare_value(self, l: int, n: int, momenta: np.ndarray, w: Optional[MultiIndex]) -> float:
        if n == 4:
            if w is not None:
                return 0.0
            return (self.f if l == 0 else 0.0) + 24.0 * self._c(l)
        if n == 2:
            entry = self.counterterms(l)
            orders = (0,) * DIM if w is None else w.leg(0)
            partial = lambda q, o: hat_momentum_sq_derivative(q, self.a0, o)
            kinetic = float(rotated_partial(partial, self.rotation, momenta[0], tuple(orders)))
            return (2.0 * entry.d if w is None else 0.0) + entry.b * kinetic
        return 0.0

    def _c(self, l: int) -> float:
        if l == 0:
            return 0.0
        c = self.counterterms(l).c
        if c is None:
            raise OutOfScopeError(f"c_{l} requires coefficient functions outside the implemented index set")
        return c

    # --- evaluation --------------------------------------------------------------------

    def _check_index(self, l: int, n: int) -> None:
        if n % 2 == 1:
            return
        if (l, n) not in IMPLEMENTED_INDICES:
            raise OutOfScopeError(f"(l, n) = ({l}, {n}) is outside the implemented set {list(IMPLEMENTED_INDICES)}")

    def evaluate(self, l: int, n: int, momenta, params: Optional[LatticeParams] = None, w=None,
                 a: Optional[float] = None) -> QuadratureResult:
        """
        d^w L_{l,n}(momenta; a) = bare value minus the rhs integral from 1/a to 1/a0.
        The flow scale is taken from params.a (or a).
        """
        self._check_index(l, n)
        if params is not None:
            self._check_params(params)
            a = params.a
        a = math.inf if a is None else a
        momenta = _check_momenta(momenta, n, self.a0)
        w = _as_multi_index(w, n)
        if w is not None and w.total > MAX_EVALUATE_ORDER:
            raise OutOfScopeError(f"Momentum derivatives of order {w.total} exceed the cap {MAX_EVALUATE_ORDER}")
        if n % 2 == 1:
            return QuadratureResult(value=0.0, error=0.0)
        bare = self.bare_value(l, n, momenta, w)
        if (l, n) in ((0, 2), (0, 4)):
            return QuadratureResult(value=bare, error=0.0)
        lam = 0.0 if math.isinf(a) else 1.0 / a
        if lam >= self.lam0 * (1.0 - 1e-15):
            return QuadratureResult(value=bare, error=0.0)
        grid = self.grid if lam == 0.0 else self.grid.restrict(lam, self.lam0)
        result = grid.integrate(self.rhs_on_grid(l, n, momenta, grid, w))
        return QuadratureResult(value=bare - result.value, error=result.error, nodes=result.nodes)

    def evaluate_derivative(self, l: int, n: int, momenta, w, params: Optional[LatticeParams] = None,
                            a: Optional[float] = None) -> QuadratureResult:
        w = MultiIndex.from_rows(w) if not isinstance(w, MultiIndex) else w
        if w.total > MAX_EVALUATE_ORDER:
            raise OutOfScopeError(f"Momentum derivatives of order {w.total} exceed the cap {MAX_EVALUATE_ORDER}")
        return self.evaluate(l, n, momenta, params, w=w, a=a)

    def _check_params(self, params: LatticeParams) -> None:
        if (params.a0, params.m, params.f) != (self.a0, self.m, self.f):
            raise ConfigError(f"Solver for (a0, m, f) = {(self.a0, self.m, self.f)} got {params}")

    # --- counterterms ---------------------------------------------------------------------

    def counterterms(self, l: int) -> CountertermEntry:
        """Shoot (d_l, b_l, c_l) from the renormalization conditions at a = inf."""
        if self._ct.has(l):
            return self._ct.get(l)
        if self.ctx.is_rotated and self.ctx.counterterms == "inherited":
            entry = get_solver(self.a0, self.m, self.f, self.settings).counterterms(l)
            self._ct.add(entry)
            return entry
        if l == 1:
            entry = self._shoot_one_loop()
        elif l == 2:
            entry = self.two_loop().shoot()
        else:
            raise OutOfScopeError(f"Counterterms of loop order {l} are outside the implemented scope")
        self._ct.add(entry)
        return entry

    def _shoot_one_loop(self) -> CountertermEntry:
        logger.info(f"[FlowSolver] Shooting one-loop counterterms (a0={self.a0:g}, rotation={self.ctx.key()[:12]})")
        grid = self.grid
        zero2 = np.zeros((2, DIM))
        zero4 = np.zeros((4, DIM))
        two_d = grid.integrate(self.rhs_on_grid(1, 2, zero2, grid))
        b = grid.integrate(0.5 * self.rhs_on_grid(1, 2, zero2, grid, CURVATURE))
        # L_{1,2} only needs d_1, so rhs(1,4) can run on a provisional entry
        provisional = CountertermEntry(l=1, d=0.5 * two_d.value, b=b.value, c=0.0)
        self._ct.add(provisional)
        try:
            four = grid.integrate(self.rhs_on_grid(1, 4, zero4, grid))
        finally:
            self._ct.entries.pop(1, None)
        entry = CountertermEntry(
            l=1, d=provisional.d, b=b.value, c=four.value / 24.0,
            error=float(max(two_d.error, b.error, four.error)),
        )
        logger.info(f"[FlowSolver] d_1={entry.d:.10g} b_1={entry.b:.3g} c_1={entry.c:.10g}")
        return entry

    def configure_two_loop(self, config: TwoLoopConfig) -> None:
        if config != self.two_loop_config:
            self.two_loop_config = config
            self._two_loop = None
            self._ct.entries.pop(2, None)

    def two_loop(self):
        if self.rotation is not None:
            raise OutOfScopeError("The two-loop extension covers the original lattice only")
        if self._two_loop is None:
            from phi4flow.modules.memo_grid import TwoLoopFlow
            self._two_loop = TwoLoopFlow(self, self.two_loop_config)
        return self._two_loop


_SOLVERS: Dict[Tuple, FlowSolver] = {}


def _settings_key(settings: Optional[QuadratureConfig]) -> str:
    settings = settings or QuadratureConfig()
    return json.dumps(settings.model_dump(), sort_keys=True, default=str)


def get_solver(a0: float, m: float, f: float, settings: Optional[QuadratureConfig] = None,
               ctx: Optional[RotationContext] = None) -> FlowSolver:
    """Memoized FlowSolver per (a0, m, f, settings, rotation context)."""
    ctx = ctx or RotationContext()
    key = (a0, m, f, _settings_key(settings), ctx.key())
    if key not in _SOLVERS:
        _SOLVERS[key] = FlowSolver(a0, m, f, settings, ctx)
    return _SOLVERS[key]


def clear_solver_cache() -> None:
    _SOLVERS.clear()


class ClosedFormEvaluator(CASEvaluator):
    """
    Analytic lambda-antiderivatives of the flow: tree channel sums, the tadpole and the
    one-loop four-point bubble representation, with heat-kernel zone integrals.
    """
    def __init__(self, a0: float, m: float, f: float, settings: Optional[QuadratureConfig] = None,
                 ctx: Optional[RotationContext] = None):
        checked_params(a0=a0, m=m, f=f)
        self.a0, self.m, self.f = a0, m, f
        self.settings = settings or QuadratureConfig()
        self.ctx = ctx or RotationContext()
        self.rotation = self.ctx.effective_rotation
        self._bubble_zero: Optional[float] = None

    def _params(self, a: float) -> LatticeParams:
        return LatticeParams(a0=self.a0, a=a, m=self.m, f=self.f)

    def _bubble(self, a: float, q) -> np.ndarray:
        return bubble_heat_kernel(self._params(a), q, self.settings.proper_time_panels, self.settings.proper_time_order)

    def tadpole(self, a: float) -> float:
        """Zone integral of exp(-a^2 M)/M."""
        if math.isinf(a):
            return 0.0
        return tadpole_heat_kernel(self.a0, self.m, a, math.inf)

    def counterterms(self, l: int) -> CountertermEntry:
        if l == 0:
            return CountertermEntry(l=0)
        if l != 1:
            raise OutOfScopeError("Closed forms provide one-loop counterterms only")
        if self._bubble_zero is None:
            self._bubble_zero = float(self._bubble(math.inf, np.zeros(DIM)))
        d = -0.25 * self.f * tadpole_heat_kernel(self.a0, self.m, self.a0, math.inf)
        return CountertermEntry(l=1, d=d, b=0.0, c=self.f ** 2 * self._bubble_zero / 16.0)

    def l12(self, a: float) -> float:
        return -0.5 * self.f * self.tadpole(a)

    def evaluate(self, l: int, n: int, momenta, params: Optional[LatticeParams] = None, w=None,
                 a: Optional[float] = None) -> QuadratureResult:
        a = params.a if params is not None else (math.inf if a is None else a)
        momenta = _check_momenta(momenta, n, self.a0)
        w = _as_multi_index(w, n)
        if n % 2 == 1 or (l, n) == (0, 2):
            return QuadratureResult(value=0.0, error=0.0)
        if (l, n) == (0, 4):
            return QuadratureResult(value=0.0 if w is not None else self.f, error=0.0)
        if (l, n) == (0, 6):
            return QuadratureResult(value=self._tree_six_point(momenta, a, w), error=0.0)
        if self.rotation is not None:
            raise OutOfScopeError("Closed forms of loop functions cover the original lattice only; use method 'flow'")
        if w is not None:
            raise OutOfScopeError("Closed-form loop functions are provided without momentum derivatives")
        if (l, n) == (1, 2):
            return QuadratureResult(value=self.l12(a), error=0.0)
        if (l, n) == (1, 4):
            return QuadratureResult(value=self._one_loop_four_point(momenta, a), error=0.0)
        raise OutOfScopeError(f"No closed form for ({l},{n})")

    def _tree_six_point(self, momenta: np.ndarray, a: float, w: Optional[MultiIndex]) -> float:
        params = self._params(a)
        total = 0.0
        for ch in rsy_channels(6, 3).channels:
            P = momenta[list(ch.subset)].sum(axis=0)
            if w is None:
                total += float(propagator_derivative(params, P, None, self.rotation))
            else:
                factor, orders = w.route(routing_coefficients(6, ch.subset))
                if factor:
                    total += factor * float(propagator_derivative(params, P, orders, self.rotation))
        return -self.f ** 2 * total

    def _one_loop_four_point(self, momenta: np.ndarray, a: float) -> float:
        params = self._params(a)
        c = self.counterterms(1).c
        external = float(np.sum(propagator_derivative(params, momenta, None)))
        shifts = np.array([momenta[[0, j]].sum(axis=0) for j in (1, 2, 3)])
        bubbles = 2.0 * float(np.sum(self._bubble(a, shifts)))
        return 24.0 * c - self.f * self.l12(a) * external - 0.25 * self.f ** 2 * bubbles


def tadpole_zone_quadrature(a0: float, m: float, a: float, settings: Optional[QuadratureConfig] = None) -> QuadratureResult:
    """Zone integral of exp(-a^2 M)/M by direct hypercubic Gauss quadrature."""
    if math.isinf(a):
        return QuadratureResult(value=0.0, error=0.0)
    settings = settings or QuadratureConfig()
    params = LatticeParams(a0=a0, a=a, m=m)

    def integrand(k):
        M = hat_momentum_sq(k, a0) + m * m
        return np.exp(-a * a * M) / M

    return integrate_bz(integrand, a0, settings.brillouin, damping=params.a, symmetry="hypercubic", infrared=m)


def get_evaluator(method: str, a0: float, m: float, f: float, settings: Optional[QuadratureConfig] = None,
                  ctx: Optional[RotationContext] = None) -> CASEvaluator:
    """Factory for CAS evaluators."""
    if method == "flow":
        return get_solver(a0, m, f, settings, ctx)
    if method == "closed_form":
        return ClosedFormEvaluator(a0, m, f, settings, ctx)
    raise ValueError(f"Unknown evaluator type: {method}")


# --- module-level operations -----------------------------------------------------------------

def rhs(l: int, n: int, momenta, lam: float, params: LatticeParams, ctx: Optional[RotationContext] = None,
        settings: Optional[QuadratureConfig] = None, w=None) -> float:
    """Flow right-hand side at lambda for the (a0, m, f) of params."""
    return get_solver(params.a0, params.m, params.f, settings, ctx).rhs(l, n, momenta, lam, w)


def evaluate(l: int, n: int, momenta, params: LatticeParams, ctx: Optional[RotationContext] = None,
             settings: Optional[QuadratureConfig] = None, w=None) -> QuadratureResult:
    """L_{l,n}(momenta) at the flow scale params.a."""
    return get_solver(params.a0, params.m, params.f, settings, ctx).evaluate(l, n, momenta, params, w=w)


def evaluate_derivative(l: int, n: int, momenta, w, params: LatticeParams, ctx: Optional[RotationContext] = None,
                        settings: Optional[QuadratureConfig] = None) -> QuadratureResult:
    return get_solver(params.a0, params.m, params.f, settings, ctx).evaluate_derivative(l, n, momenta, w, params)


def counterterms(l: int, params: LatticeParams, settings: Optional[QuadratureConfig] = None,
                 ctx: Optional[RotationContext] = None) -> CountertermEntry:
    return get_solver(params.a0, params.m, params.f, settings, ctx).counterterms(l)
