"""
Lattice momentum geometry.
Hat map, Brillouin zone, orthogonal rotations and derivative multi-indices.
All functions accept momenta shaped (..., 4).
"""
import itertools
import logging
import math
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from phi4flow.errors import ConfigError, MomentumConservationError, OutOfScopeError

logger = logging.getLogger(__name__)

DIM = 4
MAX_DERIVATIVE_ORDER = 4
ORTHOGONALITY_TOL = 1e-12


def hat_momentum(p, a0: float) -> np.ndarray:
    """Lattice momentum (2/a0) sin(a0 p_mu / 2), component-wise."""
    p = np.asarray(p, dtype=float)
    return (2.0 / a0) * np.sin(0.5 * a0 * p)


def hat_momentum_sq(p, a0: float) -> np.ndarray:
    """Sum of squared lattice momentum components."""
    h = hat_momentum(p, a0)
    return np.sum(h * h, axis=-1)


def hat_component_derivatives(x, a0: float, order: int) -> np.ndarray:
    """
    Derivative of one hat-squared component (4/a0^2) sin^2(a0 x/2) with respect to x.

    Args:
        x: Momentum component(s)
        a0: Lattice spacing
        order: Derivative order, 0..4

    Returns:
        Array shaped like x
    """
    x = np.asarray(x, dtype=float)
    if order == 0:
        h = hat_momentum(x, a0)
        return h * h
    if order == 1:
        return (2.0 / a0) * np.sin(a0 * x)
    if order == 2:
        return 2.0 * np.cos(a0 * x)
    if order == 3:
        return -2.0 * a0 * np.sin(a0 * x)
    if order == 4:
        return -2.0 * a0 * a0 * np.cos(a0 * x)
    raise OutOfScopeError(f"Derivative order {order} exceeds the cap {MAX_DERIVATIVE_ORDER}")


def hat_momentum_sq_derivative(p, a0: float, orders: Sequence[int]) -> np.ndarray:
    """
    Partial derivative of hat(p)^2 for per-direction orders.
    Mixed partials vanish since hat^2 is a sum over axes.
    """
    p = np.asarray(p, dtype=float)
    orders = tuple(int(o) for o in orders)
    active = [mu for mu in range(DIM) if orders[mu] > 0]
    if not active:
        return hat_momentum_sq(p, a0)
    if len(active) > 1:
        return np.zeros(p.shape[:-1])
    mu = active[0]
    return hat_component_derivatives(p[..., mu], a0, orders[mu])


def reduce_to_first_zone(p, a0: float) -> np.ndarray:
    """Map p component-wise into [-pi/a0, pi/a0) modulo 2*pi/a0."""
    p = np.asarray(p, dtype=float)
    period = 2.0 * math.pi / a0
    q = (p + 0.5 * period) / period
    # snap boundary points so that pi/a0 (and its images) land on -pi/a0
    nearest = np.round(q)
    shifts = np.where(np.abs(q - nearest) < 1e-12, nearest, np.floor(q))
    return p - period * shifts


def check_momentum_conservation(momenta, a0: float, rel_tol: float = 1e-9) -> None:
    """Raise MomentumConservationError unless the momenta sum to zero mod 2*pi/a0."""
    momenta = np.asarray(momenta, dtype=float)
    if momenta.ndim != 2 or momenta.shape[1] != DIM:
        raise ConfigError(f"Momenta must be an n x 4 array, got shape {momenta.shape}")
    total = reduce_to_first_zone(momenta.sum(axis=0), a0)
    limit = rel_tol * 2.0 * math.pi / a0
    if np.max(np.abs(total)) > limit:
        raise MomentumConservationError(f"Momenta sum to {total.tolist()} (mod 2pi/a0), tolerance {limit:.3g}")


class Rotation4:
    """
    Orthogonal 4x4 transformation O, validated once at construction.
    """
    def __init__(self, matrix, label: Optional[str] = None):
        matrix = np.array(matrix, dtype=float)
        if matrix.shape != (DIM, DIM):
            raise ConfigError(f"Rotation must be 4x4, got shape {matrix.shape}")
        deviation = np.max(np.abs(matrix.T @ matrix - np.eye(DIM)))
        if deviation > ORTHOGONALITY_TOL:
            raise ConfigError(f"Matrix is not orthogonal (max |O^T O - 1| = {deviation:.3e})")
        matrix.setflags(write=False)
        self.matrix = matrix
        self.label = label or "custom"

    @classmethod
    def identity(cls) -> "Rotation4":
        return cls(np.eye(DIM), label="identity")

    @classmethod
    def givens(cls, i: int, j: int, angle: float) -> "Rotation4":
        """Rotation by angle in the (i, j) coordinate plane (0-based axes)."""
        if i == j or not (0 <= i < DIM and 0 <= j < DIM):
            raise ConfigError(f"Invalid Givens plane ({i}, {j})")
        g = np.eye(DIM)
        c, s = math.cos(angle), math.sin(angle)
        g[i, i] = c
        g[j, j] = c
        g[i, j] = -s
        g[j, i] = s
        return cls(g, label=f"givens({i + 1},{j + 1},{angle:g})")

    @classmethod
    def from_givens(cls, factors: Sequence[Tuple[int, int, float]]) -> "Rotation4":
        """Compose Givens factors given with 1-based axes, applied right to left."""
        rotation = cls.identity()
        for i, j, angle in factors:
            rotation = rotation.compose(cls.givens(int(i) - 1, int(j) - 1, float(angle)))
        rotation.label = "*".join(f"givens({int(i)},{int(j)},{float(t):g})" for i, j, t in factors) or "identity"
        return rotation

    @classmethod
    def signed_permutation(cls, permutation: Sequence[int], signs: Optional[Sequence[int]] = None) -> "Rotation4":
        """Matrix sending e_mu to signs[mu] * e_permutation[mu] (0-based)."""
        if sorted(permutation) != list(range(DIM)):
            raise ConfigError(f"Not a permutation of 0..3: {list(permutation)}")
        signs = signs if signs is not None else (1,) * DIM
        if any(s not in (1, -1) for s in signs):
            raise ConfigError(f"Signs must be +1 or -1: {list(signs)}")
        g = np.zeros((DIM, DIM))
        for mu, (target, sign) in enumerate(zip(permutation, signs)):
            g[target, mu] = sign
        return cls(g, label=f"perm({','.join(str(p) for p in permutation)};{','.join(str(s) for s in signs)})")

    @classmethod
    def generic_test_rotation(cls) -> "Rotation4":
        """0.3 rad in the (1,2)-plane composed with 0.2 rad in the (3,4)-plane."""
        return cls.from_givens([(1, 2, 0.3), (3, 4, 0.2)])

    def compose(self, other: "Rotation4") -> "Rotation4":
        """Matrix product self @ other."""
        return Rotation4(self.matrix @ other.matrix, label=f"{self.label}*{other.label}")

    def inverse(self) -> "Rotation4":
        return Rotation4(self.matrix.T.copy(), label=f"inv({self.label})")

    @property
    def determinant(self) -> float:
        return float(np.linalg.det(self.matrix))

    @property
    def is_identity(self) -> bool:
        return bool(np.all(self.matrix == np.eye(DIM)))

    @property
    def is_hypercubic(self) -> bool:
        """True for signed coordinate permutations."""
        rounded = np.round(self.matrix)
        if np.max(np.abs(self.matrix - rounded)) > ORTHOGONALITY_TOL:
            return False
        return bool(np.all(np.sum(np.abs(rounded), axis=0) == 1))

    def __repr__(self) -> str:
        return f"Rotation4({self.label})"


def rotate(rotation: Optional[Rotation4], p) -> np.ndarray:
    """Apply O to momenta shaped (..., 4); None acts as the identity."""
    p = np.asarray(p, dtype=float)
    if rotation is None:
        return p
    return p @ rotation.matrix.T


def signed_permutations() -> Iterator[Rotation4]:
    """All 384 elements of the hyperoctahedral group."""
    for permutation in itertools.permutations(range(DIM)):
        for signs in itertools.product((1, -1), repeat=DIM):
            yield Rotation4.signed_permutation(permutation, signs)


@dataclass(frozen=True)
class BrillouinZone:
    """First Brillouin zone (-pi/a0, pi/a0)^4."""
    a0: float

    def __post_init__(self):
        if not self.a0 > 0:
            raise ConfigError(f"Lattice spacing must be positive, got {self.a0}")

    @property
    def half_width(self) -> float:
        return math.pi / self.a0

    @property
    def volume(self) -> float:
        return (2.0 * math.pi / self.a0) ** DIM

    def contains(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        return np.all(np.abs(p) <= self.half_width, axis=-1)


@dataclass(frozen=True)
class MultiIndex:
    """
    Derivative orders w_{i,mu} per independent external leg i and direction mu.
    Leg n is eliminated by momentum conservation, so an n-point function carries n-1 legs.
    """
    orders: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        for row in self.orders:
            if len(row) != DIM or any(int(o) < 0 for o in row):
                raise ConfigError(f"Invalid multi-index row {row}")
        if self.total > MAX_DERIVATIVE_ORDER:
            raise OutOfScopeError(f"Derivative order |w|={self.total} exceeds the cap {MAX_DERIVATIVE_ORDER}")

    @classmethod
    def zero(cls, legs: int) -> "MultiIndex":
        return cls(tuple((0,) * DIM for _ in range(legs)))

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]]) -> "MultiIndex":
        return cls(tuple(tuple(int(o) for o in row) for row in rows))

    @classmethod
    def single(cls, legs: int, leg: int, direction: int, order: int = 1) -> "MultiIndex":
        rows = [[0] * DIM for _ in range(legs)]
        rows[leg][direction] = order
        return cls.from_rows(rows)

    @property
    def legs(self) -> int:
        return len(self.orders)

    @property
    def total(self) -> int:
        return int(sum(sum(row) for row in self.orders))

    @property
    def is_zero(self) -> bool:
        return self.total == 0

    def leg(self, i: int) -> Tuple[int, ...]:
        return self.orders[i]

    def leg_totals(self) -> List[int]:
        return [int(sum(row)) for row in self.orders]

    def direction_totals(self) -> Tuple[int, ...]:
        return tuple(int(sum(row[mu] for row in self.orders)) for mu in range(DIM))

    def route(self, coefficients: Sequence[float]) -> Tuple[float, Tuple[int, ...]]:
        """
        Chain-rule factor for a function of P = sum_i c_i p_i.

        Returns:
            (prod_i c_i^{|w_i|}, per-direction totals), so that
            d^w g(P) = factor * (d^W g)(P)
        """
        factor = 1.0
        for c, order in zip(coefficients, self.leg_totals()):
            if order:
                factor *= float(c) ** order
        return factor, self.direction_totals()


def direction_orders(orders: Sequence[int]) -> Tuple[int, ...]:
    """Expand per-direction orders into the list of differentiated directions."""
    out: List[int] = []
    for mu, o in enumerate(orders):
        out.extend([mu] * int(o))
    return tuple(out)
