"""
Regularized lattice propagator and its flow kernel.

C(p) = (exp(-a0^2 M) - exp(-a^2 M)) / M with M = hat(p)^2 + m^2, and
dC/d(1/a) = -2 a^3 exp(-a^2 M). Momentum derivatives are exact closed forms
built from the per-axis trigonometric structure. Rotated variants evaluate the
hat map at O p and differentiate with respect to the unrotated p.

Also holds the heat-kernel (modified Bessel) representations of the tadpole
and bubble integrals used as independent oracles.
"""
import itertools
import logging
import math
from functools import lru_cache
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, special

from phi4flow.errors import OutOfScopeError
from phi4flow.models import LatticeParams
from phi4flow.modules.lattice_core import (
    DIM,
    MAX_DERIVATIVE_ORDER,
    Rotation4,
    direction_orders,
    hat_component_derivatives,
    hat_momentum_sq,
    rotate,
)

logger = logging.getLogger(__name__)

# exp(-HEAT_CUT) is below double precision relative to O(1) contributions
HEAT_CUT = 60.0


def _normalize_orders(w) -> Tuple[int, ...]:
    if w is None:
        return (0,) * DIM
    orders = tuple(int(o) for o in w)
    if len(orders) != DIM or any(o < 0 for o in orders):
        raise OutOfScopeError(f"Expected four nonnegative direction orders, got {w}")
    if sum(orders) > MAX_DERIVATIVE_ORDER:
        raise OutOfScopeError(f"Derivative order {sum(orders)} exceeds the cap {MAX_DERIVATIVE_ORDER}")
    return orders


def mass_shell(params: LatticeParams, p, rotation: Optional[Rotation4] = None) -> np.ndarray:
    """M = hat(O p)^2 + m^2."""
    return hat_momentum_sq(rotate(rotation, p), params.a0) + params.m ** 2


def propagator_from_shell(M, a0: float, a: float) -> np.ndarray:
    """exp(-a0^2 M) (1 - exp(-(a^2 - a0^2) M)) / M, with a = inf allowed."""
    M = np.asarray(M, dtype=float)
    lead = np.exp(-a0 * a0 * M)
    if math.isinf(a):
        return lead / M
    return lead * (-np.expm1(-(a * a - a0 * a0) * M)) / M


def propagator_value(params: LatticeParams, p, rotation: Optional[Rotation4] = None) -> np.ndarray:
    """Regularized propagator C^{a0,a}(p); nonnegative, zero at a = a0."""
    return propagator_from_shell(mass_shell(params, p, rotation), params.a0, params.a)


def _shell_derivatives(M: np.ndarray, a0: float, a: float) -> Tuple[np.ndarray, np.ndarray]:
    """First and second derivative of the propagator with respect to hat(p)^2."""
    e0 = np.exp(-a0 * a0 * M)
    if math.isinf(a):
        e1 = np.zeros_like(M)
        diff = e0
        slope = -a0 * a0 * e0
        curve = a0 ** 4 * e0
    else:
        e1 = np.exp(-a * a * M)
        diff = e0 * (-np.expm1(-(a * a - a0 * a0) * M))
        slope = -a0 * a0 * e0 + a * a * e1
        curve = a0 ** 4 * e0 - a ** 4 * e1
    g1 = slope / M - diff / M ** 2
    g2 = curve / M - 2.0 * slope / M ** 2 + 2.0 * diff / M ** 3
    return g1, g2


def _propagator_partial(q: np.ndarray, orders: Tuple[int, ...], a0: float, a: float, m: float) -> np.ndarray:
    M = hat_momentum_sq(q, a0) + m * m
    total = sum(orders)
    if total == 0:
        return propagator_from_shell(M, a0, a)
    g1, g2 = _shell_derivatives(M, a0, a)
    dirs = direction_orders(orders)
    if total == 1:
        mu = dirs[0]
        return g1 * hat_component_derivatives(q[..., mu], a0, 1)
    if total == 2:
        mu, nu = dirs
        first = g2 * hat_component_derivatives(q[..., mu], a0, 1) * hat_component_derivatives(q[..., nu], a0, 1)
        if mu == nu:
            first = first + g1 * hat_component_derivatives(q[..., mu], a0, 2)
        return first
    raise OutOfScopeError(f"Propagator derivatives are implemented up to order 2, got {total}")


@lru_cache(maxsize=256)
def _tensor_coefficients(matrix_key: bytes, orders: Tuple[int, ...]) -> Tuple[Tuple[Tuple[int, ...], float], ...]:
    """Coefficients of d^w [K(O p)] in terms of unrotated partials of K at O p."""
    O = np.frombuffer(matrix_key, dtype=float).reshape(DIM, DIM)
    nus = direction_orders(orders)
    coeffs = {}
    for mus in itertools.product(range(DIM), repeat=len(nus)):
        c = 1.0
        for mu, nu in zip(mus, nus):
            c *= O[mu, nu]
        if c == 0.0:
            continue
        key = tuple(mus.count(mu) for mu in range(DIM))
        coeffs[key] = coeffs.get(key, 0.0) + c
    return tuple(sorted(coeffs.items()))


def rotated_partial(
    partial: Callable[[np.ndarray, Tuple[int, ...]], np.ndarray],
    rotation: Optional[Rotation4],
    p,
    orders: Tuple[int, ...],
) -> np.ndarray:
    """
    Differentiate K(O p) with respect to p by contracting unrotated partials with O.

    Args:
        partial: Callable (q, orders) -> d^orders K evaluated at q
        rotation: O, or None for the unrotated function
        p: Momenta shaped (..., 4)
        orders: Per-direction derivative orders with respect to p
    """
    p = np.asarray(p, dtype=float)
    q = rotate(rotation, p)
    if rotation is None or sum(orders) == 0:
        return partial(q, orders)
    key = np.ascontiguousarray(rotation.matrix).tobytes()
    total = np.zeros(p.shape[:-1])
    for sub_orders, c in _tensor_coefficients(key, orders):
        total = total + c * partial(q, sub_orders)
    return total


def propagator_derivative(params: LatticeParams, p, w=None, rotation: Optional[Rotation4] = None) -> np.ndarray:
    """Momentum derivative of C^{a0,a}(hat(O p)) for |w| <= 2."""
    orders = _normalize_orders(w)
    if sum(orders) > 2:
        raise OutOfScopeError(f"Propagator derivatives are implemented up to order 2, got {sum(orders)}")
    partial = lambda q, o: _propagator_partial(q, o, params.a0, params.a, params.m)
    return rotated_partial(partial, rotation, p, orders)


def _kernel_axis_factor(x: np.ndarray, a0: float, A: float, order: int) -> np.ndarray:
    """d^order/dx^order of exp(-A hat(x)^2) for one axis."""
    hx = (2.0 / a0) * np.sin(0.5 * a0 * x)
    u = np.exp(-A * hx * hx)
    if order == 0:
        return u
    h = (2.0 / a0) * np.sin(a0 * x)
    c = np.cos(a0 * x)
    b = a0 * a0
    if order == 1:
        return -A * h * u
    if order == 2:
        return (A * A * h * h - 2.0 * A * c) * u
    if order == 3:
        return (-A ** 3 * h ** 3 + 6.0 * A * A * h * c + b * A * h) * u
    if order == 4:
        return (A ** 4 * h ** 4 - 12.0 * A ** 3 * h * h * c + 12.0 * A * A * c * c
                - 4.0 * b * A * A * h * h + 2.0 * b * A * c) * u
    raise OutOfScopeError(f"Derivative order {order} exceeds the cap {MAX_DERIVATIVE_ORDER}")


def _kernel_partial(q: np.ndarray, orders: Tuple[int, ...], a0: float, a: float, m: float) -> np.ndarray:
    A = a * a
    result = np.full(q.shape[:-1], -2.0 * a ** 3 * math.exp(-A * m * m))
    for mu in range(DIM):
        result = result * _kernel_axis_factor(q[..., mu], a0, A, orders[mu])
    return result


def flow_kernel(params: LatticeParams, p, w=None, rotation: Optional[Rotation4] = None) -> np.ndarray:
    """
    d^w of dC/d(1/a) at hat(O p).

    Args:
        params: Lattice parameters; a = inf short-circuits to 0
        p: Momenta shaped (..., 4)
        w: Four direction orders for one leg, |w| <= 4
        rotation: Optional O for the rotated lattice
    """
    orders = _normalize_orders(w)
    p = np.asarray(p, dtype=float)
    if params.is_fully_integrated:
        return np.zeros(p.shape[:-1])
    partial = lambda q, o: _kernel_partial(q, o, params.a0, params.a, params.m)
    return rotated_partial(partial, rotation, p, orders)


def kernel_difference(params: LatticeParams, p, rotation: Rotation4, w=None) -> np.ndarray:
    """d^w dC/d(1/a)(hat p) - d^w dC/d(1/a)(hat(O p))."""
    orders = _normalize_orders(w)
    p = np.asarray(p, dtype=float)
    if params.is_fully_integrated or rotation.is_identity:
        return np.zeros(p.shape[:-1])
    partial = lambda q, o: _kernel_partial(q, o, params.a0, params.a, params.m)
    return partial(p, orders) - rotated_partial(partial, rotation, p, orders)


# --- heat-kernel representations ---------------------------------------------

def axis_heat_trace(t, a0: float) -> np.ndarray:
    """Integral over one zone axis of exp(-t hat(k)^2) dk/(2 pi) = I_0(2t/a0^2) e^{-2t/a0^2} / a0."""
    t = np.asarray(t, dtype=float)
    return special.ive(0, 2.0 * t / (a0 * a0)) / a0


def _heat_upper(a0: float, m: float, a: float) -> float:
    cut = a0 * a0 + HEAT_CUT / (m * m)
    return cut if math.isinf(a) else min(a * a, cut)


def tadpole_heat_kernel(a0: float, m: float, a_lo: float, a_hi: float = math.inf) -> float:
    """
    Zone integral of (exp(-a_lo^2 M) - exp(-a_hi^2 M)) / M, including the (2 pi)^-4 measure,
    as a one-dimensional proper-time integral.
    """
    lo = a_lo * a_lo
    hi = _heat_upper(a_lo, m, a_hi)
    if hi <= lo:
        return 0.0

    def integrand(s):
        t = math.exp(s)
        return t * math.exp(-t * m * m) * float(axis_heat_trace(t, a0)) ** 4

    value, _ = integrate.quad(integrand, math.log(lo), math.log(hi), epsabs=0.0, epsrel=1e-13, limit=400)
    return value


class ProperTimeRule:
    """Composite Gauss-Legendre rule in log proper time on [a0^2, min(a^2, cut)]."""

    def __init__(self, a0: float, m: float, a: float, panels: int = 16, order: int = 8):
        lo = math.log(a0 * a0)
        hi = math.log(_heat_upper(a0, m, a))
        x, w = np.polynomial.legendre.leggauss(order)
        edges = np.linspace(lo, hi, panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        s = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        ws = (half[:, None] * w[None, :]).ravel()
        self.t = np.exp(s)
        self.weights = ws * self.t
        self.a0 = a0
        self.m = m

    def pair_weights(self) -> np.ndarray:
        """Flattened weights w_t w_s exp(-(t+s) m^2) over all (t, s) pairs."""
        wt = self.weights * np.exp(-self.t * self.m * self.m)
        return np.outer(wt, wt).ravel()

    def axis_factor(self, u_sq) -> np.ndarray:
        """
        Per-axis bubble factor for squared hat components u^2, shaped (pairs, len(u_sq)).
        """
        u_sq = np.atleast_1d(np.asarray(u_sq, dtype=float))
        a0 = self.a0
        t = np.repeat(self.t, self.t.size)[:, None]
        s = np.tile(self.t, self.t.size)[:, None]
        ts = t * s
        R = np.sqrt(np.maximum((t + s) ** 2 - ts * a0 * a0 * u_sq[None, :], 0.0))
        return special.ive(0, 2.0 * R / (a0 * a0)) / a0 * np.exp(-2.0 * ts * u_sq[None, :] / (R + t + s))


def bubble_heat_kernel(params: LatticeParams, q, panels: int = 16, order: int = 8) -> np.ndarray:
    """
    Bubble integral B(q; a) = zone integral of C(k) C(k+q), as a double proper-time integral
    of separable Bessel factors.

    Args:
        params: Lattice parameters (a may be inf)
        q: Momenta shaped (..., 4)
        panels, order: Log proper-time Gauss rule
    """
    q = np.asarray(q, dtype=float)
    rule = ProperTimeRule(params.a0, params.m, params.a, panels, order)
    flat = q.reshape(-1, DIM)
    h = (2.0 / params.a0) * np.sin(0.5 * params.a0 * flat)
    weights = rule.pair_weights()
    out = np.empty(flat.shape[0])
    for i, row in enumerate(h):
        factors = rule.axis_factor(row * row)
        out[i] = np.sum(weights * np.prod(factors, axis=1))
    return out.reshape(q.shape[:-1])


def bubble_table(params: LatticeParams, u_axis: Sequence[float], panels: int = 16, order: int = 8) -> np.ndarray:
    """B on the tensor grid of |hat(q_mu)| values u_axis^4, shaped (N, N, N, N)."""
    rule = ProperTimeRule(params.a0, params.m, params.a, panels, order)
    u = np.asarray(u_axis, dtype=float)
    factors = rule.axis_factor(u * u)
    return np.einsum("p,pa,pb,pc,pd->abcd", rule.pair_weights(), factors, factors, factors, factors, optimize=True)
