"""
Deterministic quadrature over the four-dimensional Brillouin zone and over the
flow parameter lambda = 1/a.

Zone integrals use tensor Gauss-Legendre rules on panels concentrated in the
damping cube; the error estimate is the change under one more bisection of every
panel, and bisection continues until the estimate meets the tolerance or the
depth cap is reached. Integrands invariant under signed coordinate
permutations can be summed over sorted index tuples only.

Lambda integrals use composite Gauss rules whose panels are graded toward 1/a0;
per-panel Legendre integration matrices give running integrals at every node.
"""
import logging
import math
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import legendre

from phi4flow.config import LambdaGridConfig, QuadratureSpec
from phi4flow.errors import ConfigError, QuadratureError
from phi4flow.interfaces import QuadratureResult
from phi4flow.modules.lattice_core import DIM

logger = logging.getLogger(__name__)

# exp(-KAPPA^2) = 1e-18
KAPPA = math.sqrt(math.log(1e18))
MEASURE = (2.0 * math.pi) ** -DIM
CHUNK_NODES = 400_000


def damping_cutoff(a0: float, damping: Optional[float]) -> float:
    """Largest |k_mu| with a^2 hat(k_mu)^2 <= KAPPA^2, capped at pi/a0."""
    half = math.pi / a0
    if damping is None or math.isinf(damping):
        return half
    x = a0 * KAPPA / (2.0 * damping)
    if x >= 1.0:
        return half
    return (2.0 / a0) * math.asin(x)


def _panel_edges(a0: float, depth: int, damping: Optional[float], infrared: Optional[float]) -> Tuple[np.ndarray, float]:
    half = math.pi / a0
    kc = damping_cutoff(a0, damping)
    if infrared is not None and 0.0 < infrared < kc:
        levels = int(math.ceil(math.log2(kc / infrared)))
        edges = [0.0] + [kc * 2.0 ** -j for j in range(levels, -1, -1)]
    else:
        edges = [0.0, kc]
    edges = np.asarray(edges)
    for _ in range(depth):
        mids = 0.5 * (edges[1:] + edges[:-1])
        edges = np.sort(np.concatenate([edges, mids]))
    return edges, half


def _gauss_on_panels(edges: np.ndarray, order: int) -> Tuple[np.ndarray, np.ndarray]:
    x, w = legendre.leggauss(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def half_axis_rule(a0: float, order: int, depth: int, damping: Optional[float] = None,
                   infrared: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on (0, pi/a0); the outer region beyond the damping cube gets one coarse panel."""
    edges, half = _panel_edges(a0, depth, damping, infrared)
    nodes, weights = _gauss_on_panels(edges, order)
    if edges[-1] < half * (1.0 - 1e-15):
        outer_n, outer_w = _gauss_on_panels(np.array([edges[-1], half]), max(2, order // 2))
        nodes = np.concatenate([nodes, outer_n])
        weights = np.concatenate([weights, outer_w])
    return nodes, weights


def axis_rule(a0: float, order: int, depth: int, damping: Optional[float] = None,
              infrared: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Symmetric nodes and weights on (-pi/a0, pi/a0), sorted increasingly."""
    nodes, weights = half_axis_rule(a0, order, depth, damping, infrared)
    order_idx = np.argsort(nodes)
    nodes, weights = nodes[order_idx], weights[order_idx]
    return np.concatenate([-nodes[::-1], nodes]), np.concatenate([weights[::-1], weights])


def _sorted_index_blocks(n: int):
    """Yield sorted 4-tuples i1<=i2<=i3<=i4 over range(n), grouped by i1, in lexicographic order."""
    iu = np.stack(np.triu_indices(n), axis=1)
    triples = np.concatenate([
        np.column_stack([np.full(int(np.sum(iu[:, 0] >= i2)), i2), iu[iu[:, 0] >= i2]])
        for i2 in range(n)
    ])
    starts = np.searchsorted(triples[:, 0], np.arange(n))
    for i1 in range(n):
        rest = triples[starts[i1]:]
        yield np.column_stack([np.full(rest.shape[0], i1), rest])


def _orbit_multiplicity(idx: np.ndarray) -> np.ndarray:
    """Number of distinct permutations of each sorted 4-tuple: 24 / prod(run lengths!)."""
    run = np.ones(idx.shape[0])
    denominator = np.ones(idx.shape[0])
    for j in range(1, DIM):
        same = idx[:, j] == idx[:, j - 1]
        run = np.where(same, run + 1.0, 1.0)
        denominator = denominator * np.where(same, run, 1.0)
    return 24.0 / denominator


def _weighted_sum(values: np.ndarray, weights: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    values = np.asarray(values, dtype=float)
    shaped = weights.reshape((-1,) + (1,) * (values.ndim - 1))
    return np.sum(shaped * values, axis=0), np.sum(np.abs(shaped * values), axis=0)


def _sum_hypercubic(f: Callable, nodes: np.ndarray, weights: np.ndarray):
    total = 0.0
    magnitude = 0.0
    count = 0
    for idx in _sorted_index_blocks(nodes.size):
        k = nodes[idx]
        w = 16.0 * _orbit_multiplicity(idx) * np.prod(weights[idx], axis=1)
        s, a = _weighted_sum(f(k), w)
        total = total + s
        magnitude = magnitude + a
        count += idx.shape[0]
    return total, magnitude, count


def _sum_full(f: Callable, nodes: np.ndarray, weights: np.ndarray):
    n = nodes.size
    inner_axes = DIM - 1 if n ** (DIM - 1) <= CHUNK_NODES else DIM - 2
    outer_axes = DIM - inner_axes
    g = np.meshgrid(*([nodes] * inner_axes), indexing="ij")
    rest = np.stack([x.ravel() for x in g], axis=1)
    gw = np.meshgrid(*([weights] * inner_axes), indexing="ij")
    rest_w = np.prod(np.stack([x.ravel() for x in gw], axis=1), axis=1)
    total = 0.0
    magnitude = 0.0
    for outer in np.ndindex(*([n] * outer_axes)):
        head = np.broadcast_to(nodes[list(outer)], (rest.shape[0], outer_axes))
        k = np.column_stack([head, rest])
        s, a = _weighted_sum(f(k), float(np.prod(weights[list(outer)])) * rest_w)
        total = total + s
        magnitude = magnitude + a
    return total, magnitude, n ** DIM


def _tensor_sum(f: Callable, a0: float, order: int, depth: int, damping: Optional[float],
                infrared: Optional[float], symmetry: str):
    if symmetry == "hypercubic":
        nodes, weights = half_axis_rule(a0, order, depth, damping, infrared)
        total, magnitude, count = _sum_hypercubic(f, nodes, weights)
    else:
        nodes, weights = axis_rule(a0, order, depth, damping, infrared)
        total, magnitude, count = _sum_full(f, nodes, weights)
    return MEASURE * np.asarray(total), MEASURE * np.asarray(magnitude), count


def integrate_bz(
    f: Callable[[np.ndarray], np.ndarray],
    a0: float,
    spec: QuadratureSpec,
    damping: Optional[float] = None,
    symmetry: str = "none",
    infrared: Optional[float] = None,
    scale: Optional[float] = None,
) -> QuadratureResult:
    """
    Integrate f over the first Brillouin zone with measure d^4k/(2 pi)^4.

    The rule at depth d is accepted once it differs from the rule at depth d - 1
    by no more than max(atol, tolerance * max(sum |w f|, scale)).

    Args:
        f: Vectorized integrand mapping (N, 4) momenta to (N,) or (N, K) values
        a0: Lattice spacing
        spec: QuadratureSpec (order, depth, max_depth, tolerances)
        damping: Scale a of an exp(-a^2 hat(k)^2) factor; overrides spec.damping
        symmetry: "none" or "hypercubic" (f invariant under signed permutations)
        infrared: Smallest momentum scale to resolve near k = 0 (grades panels toward 0)
        scale: Typical size of the quantity the result feeds into; floors the relative limit

    Returns:
        QuadratureResult with value, error estimate and node count
    """
    if symmetry not in ("none", "hypercubic"):
        raise ValueError(f"Unknown symmetry type: {symmetry}")
    damping = spec.damping if damping is None else damping
    cap = spec.depth_cap
    start = max(spec.depth, 1)
    if cap < start:
        raise QuadratureError(f"Zone quadrature needs max_depth >= 1 to estimate its error (got {cap})")
    floor = 0.0 if scale is None else abs(float(scale))
    previous, _, _ = _tensor_sum(f, a0, spec.order, start - 1, damping, infrared, symmetry)
    error = None
    for depth in range(start, cap + 1):
        value, magnitude, count = _tensor_sum(f, a0, spec.order, depth, damping, infrared, symmetry)
        error = np.abs(value - previous)
        limit = np.maximum(spec.atol, spec.tolerance * np.maximum(magnitude, floor))
        if np.all(error <= limit):
            return QuadratureResult(value=_scalar(value), error=_scalar(error), nodes=count)
        logger.debug(f"[Quadrature] depth {depth}: error {np.max(error):.3e} above limit {np.min(limit):.3e}, refining")
        previous = value
    raise QuadratureError(
        f"Zone quadrature did not reach tolerance {spec.tolerance:g} at max_depth {cap} "
        f"(error estimate {np.max(error):.3e})"
    )


def _scalar(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


class LambdaGrid:
    """
    Composite Gauss-Legendre rule over panels of the flow parameter.
    """
    def __init__(self, breakpoints: Sequence[float], order: int):
        bp = np.asarray(breakpoints, dtype=float)
        if bp.ndim != 1 or bp.size < 2 or np.any(np.diff(bp) <= 0):
            raise ConfigError("Lambda breakpoints must be strictly increasing with at least one panel")
        if order < 2:
            raise ConfigError("Lambda grid order must be >= 2")
        self.breakpoints = bp
        self.order = order
        x, w = legendre.leggauss(order)
        self._x = x
        self._w = w
        self.nodes, self.weights = _gauss_on_panels(bp, order)
        self._half = 0.5 * np.diff(bp)
        self._inverse_vander = np.linalg.inv(legendre.legvander(x, order - 1))
        self._running = self._running_matrix()

    def _running_matrix(self) -> np.ndarray:
        """S[j, k]: integral from reference node j to +1 of the interpolant of unit data e_k."""
        antiderivative = legendre.legint(self._inverse_vander, lbnd=-1, axis=0)
        at_top = legendre.legval(1.0, antiderivative)
        at_nodes = legendre.legval(self._x, antiderivative)
        return (at_top[:, None] - at_nodes).T

    @property
    def lo(self) -> float:
        return float(self.breakpoints[0])

    @property
    def hi(self) -> float:
        return float(self.breakpoints[-1])

    @property
    def panels(self) -> int:
        return self.breakpoints.size - 1

    def __len__(self) -> int:
        return self.nodes.size

    def _panel_view(self, values) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if values.shape[0] != self.nodes.size:
            raise ValueError(f"Expected {self.nodes.size} node values, got {values.shape[0]}")
        return values.reshape((self.panels, self.order) + values.shape[1:])

    def integrate(self, values) -> QuadratureResult:
        """Integral over [lo, hi] from values at the nodes, with a Legendre-tail error estimate."""
        panel_values = self._panel_view(values)
        coefficients = np.einsum("ij,pj...->pi...", self._inverse_vander, panel_values)
        tail = np.abs(coefficients[:, -1]) + np.abs(coefficients[:, -2])
        shaped_half = self._half.reshape((-1,) + (1,) * (panel_values.ndim - 2))
        error = np.sum(shaped_half * tail, axis=0)
        weights = self.weights.reshape((-1,) + (1,) * (np.ndim(values) - 1))
        value = np.sum(weights * np.asarray(values, dtype=float), axis=0)
        return QuadratureResult(value=_scalar(value), error=_scalar(error), nodes=self.nodes.size)

    def magnitude(self, values) -> float:
        weights = self.weights.reshape((-1,) + (1,) * (np.ndim(values) - 1))
        return _scalar(np.sum(np.abs(weights * np.asarray(values, dtype=float)), axis=0))

    def cumulative_from_top(self, values) -> np.ndarray:
        """Integral from each node up to hi."""
        panel_values = self._panel_view(values)
        extra = panel_values.ndim - 2
        within = self._half.reshape((-1, 1) + (1,) * extra) * np.einsum("jk,pk...->pj...", self._running, panel_values)
        totals = self._half.reshape((-1,) + (1,) * extra) * np.einsum("k,pk...->p...", self._w, panel_values)
        above = np.zeros_like(totals)
        above[:-1] = np.cumsum(totals[::-1], axis=0)[::-1][1:]
        out = within + above[:, None]
        return out.reshape((self.nodes.size,) + panel_values.shape[2:])

    def restrict(self, lo: float, hi: float) -> "LambdaGrid":
        """Sub-grid on [lo, hi] keeping interior breakpoints; end panels are cut at lo and hi."""
        if not (self.lo <= lo < hi <= self.hi * (1.0 + 1e-15)):
            raise ValueError(f"Interval [{lo}, {hi}] outside the grid [{self.lo}, {self.hi}]")
        inner = self.breakpoints[(self.breakpoints > lo) & (self.breakpoints < hi)]
        return LambdaGrid(np.concatenate([[lo], inner, [hi]]), self.order)


def build_lambda_grid(a0: float, m: float, config: Optional[LambdaGridConfig] = None) -> LambdaGrid:
    """
    Default grid on [0, 1/a0]: one panel up to floor_ratio*m, log-uniform panels above it,
    and the last of those split into top_panels panels graded toward 1/a0.
    """
    config = config or LambdaGridConfig()
    lam0 = 1.0 / a0
    floor = min(config.floor_ratio * m, 0.5 * lam0)
    main = np.geomspace(floor, lam0, config.panels - config.top_panels + 1)
    last_lo = main[-2]
    graded = [lam0 - (lam0 - last_lo) * 2.0 ** -j for j in range(1, config.top_panels)]
    breakpoints = np.concatenate([[0.0], main[:-1], graded, [lam0]])
    return LambdaGrid(np.unique(breakpoints), config.order)


def integrate_lambda(
    g: Callable[[float], float],
    interval: Tuple[float, float],
    grid: LambdaGrid,
    tolerance: Optional[float] = None,
) -> QuadratureResult:
    """
    Signed integral of g over interval using the panels of grid.

    Args:
        g: Integrand over lambda, evaluated node by node
        interval: (lam_lo, lam_hi); a reversed interval flips the sign
        grid: LambdaGrid covering the interval
        tolerance: Optional relative tolerance on the tail estimate

    Returns:
        QuadratureResult
    """
    lo, hi = float(interval[0]), float(interval[1])
    if lo == hi:
        return QuadratureResult(value=0.0, error=0.0, nodes=0)
    sign = 1.0
    if lo > hi:
        lo, hi = hi, lo
        sign = -1.0
    sub = grid.restrict(lo, hi)
    values = np.array([g(x) for x in sub.nodes], dtype=float)
    result = sub.integrate(values)
    if tolerance is not None and np.any(np.asarray(result.error) > tolerance * np.asarray(sub.magnitude(values))):
        raise QuadratureError(f"Lambda quadrature error {np.max(result.error):.3e} above tolerance {tolerance:g}")
    return QuadratureResult(value=_scalar(sign * np.asarray(result.value)), error=result.error, nodes=result.nodes)
