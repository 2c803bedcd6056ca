"""
Configuration models for phi4flow runs.
Enforces type safety and validation for all physics, regulator, quadrature and task parameters.
"""
import json
import math
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from phi4flow.errors import ConfigError
from phi4flow.models import LatticeParams, checked_params, parse_length

MAX_AXIS_NODES = 4096

SUITE_NAMES = ("lemma1", "lemma2", "rotation", "cauchy", "power-counting", "delta")

# generic six-point configuration summing to zero
DEFAULT_SIX_POINT = [
    [0.3, 0.1, -0.2, 0.05],
    [-0.1, 0.25, 0.15, -0.3],
    [0.2, -0.35, 0.1, 0.2],
    [-0.25, 0.05, 0.3, 0.1],
    [0.1, 0.2, -0.15, -0.25],
    [-0.25, -0.25, -0.2, 0.2],
]

# tetrahedral symmetric point: p_i^2 = 3/4, p_i.p_j = -1/4
DEFAULT_FOUR_POINT = [
    [0.5, 0.5, 0.5, 0.0],
    [0.5, -0.5, -0.5, 0.0],
    [-0.5, 0.5, -0.5, 0.0],
    [-0.5, -0.5, 0.5, 0.0],
]

DEFAULT_TWO_POINT = [
    [0.4, -0.3, 0.2, 0.1],
    [-0.4, 0.3, -0.2, -0.1],
]


class PhysicsConfig(BaseModel):
    """Mass and coupling."""
    m: float = Field(1.0, gt=0.0, description="Mass")
    f: float = Field(1.0, description="Quartic coupling")


class RegulatorConfig(BaseModel):
    """Lattice spacing and flow scale, or sweep lists of them."""
    a0: float = Field(0.0625, gt=0.0, description="Lattice spacing")
    a: float = Field(math.inf, description="Flow scale; 'inf' or null for the fully integrated theory")
    a0_list: Optional[List[float]] = Field(None, description="Lattice spacings for counterterm tables")

    @field_validator("a", mode="before")
    @classmethod
    def parse_flow_scale(cls, v):
        return parse_length(v)

    @field_validator("a0_list")
    @classmethod
    def positive_spacings(cls, v):
        if v is not None and any(x <= 0 for x in v):
            raise ValueError("a0_list entries must be positive")
        return v


class QuadratureSpec(BaseModel):
    """Brillouin-zone tensor Gauss-Legendre rule."""
    order: int = Field(8, ge=2, description="Gauss-Legendre nodes per panel")
    depth: int = Field(1, ge=0, description="Panel bisections of the damped cube at the first pass")
    max_depth: Optional[int] = Field(
        None, ge=0, description="Bisections allowed before reporting non-convergence; null refines up to the node cap"
    )
    tolerance: float = Field(1e-8, description="Relative tolerance target")
    atol: float = Field(0.0, ge=0.0, description="Absolute tolerance floor")
    damping: Optional[float] = Field(None, description="Default damping scale hint a (length)")

    @field_validator("tolerance")
    @classmethod
    def tolerance_floor(cls, v):
        if not v >= 1e-12:
            raise ValueError("tolerance must be >= 1e-12")
        return v

    @property
    def depth_cap(self) -> int:
        """Deepest refinement allowed: max_depth, or the node cap when max_depth is unset."""
        if self.max_depth is not None:
            return self.max_depth
        return int(math.floor(math.log2(MAX_AXIS_NODES / self.order)))

    @model_validator(mode="after")
    def node_cap(self):
        if self.order > MAX_AXIS_NODES:
            raise ValueError(f"order must not exceed {MAX_AXIS_NODES}")
        if self.depth_cap < self.depth:
            raise ValueError("max_depth must be >= depth")
        if self.order * 2 ** self.depth_cap > MAX_AXIS_NODES:
            raise ValueError(f"order * 2**max_depth must not exceed {MAX_AXIS_NODES}")
        return self


class LambdaGridConfig(BaseModel):
    """Composite Gauss rule over the flow parameter lambda = 1/a."""
    panels: int = Field(16, ge=2, description="Number of panels on [0, 1/a0]")
    order: int = Field(8, ge=2, description="Gauss-Legendre nodes per panel")
    top_panels: int = Field(4, ge=1, description="Panels graded toward lambda = 1/a0")
    floor_ratio: float = Field(0.125, gt=0.0, description="First breakpoint as a multiple of m")

    @model_validator(mode="after")
    def enough_nodes(self):
        if self.top_panels >= self.panels:
            raise ValueError("top_panels must be smaller than panels")
        if self.panels * self.order < 8:
            raise ValueError("lambda grid needs at least 8 nodes")
        return self


class QuadratureConfig(BaseModel):
    """Zone and flow quadrature settings."""
    brillouin: QuadratureSpec = Field(default_factory=QuadratureSpec)
    flow: LambdaGridConfig = Field(default_factory=LambdaGridConfig)
    proper_time_panels: int = Field(16, ge=1, description="Log proper-time panels of heat-kernel oracles")
    proper_time_order: int = Field(8, ge=2, description="Nodes per proper-time panel")


class RotationSpec(BaseModel):
    """Orthogonal transformation given as Givens factors or a signed permutation."""
    givens: List[Tuple[int, int, float]] = Field(default_factory=list, description="[i, j, angle] with 1-based axes")
    permutation: Optional[List[int]] = Field(None, description="0-based image axes of a signed permutation")
    signs: Optional[List[int]] = Field(None, description="Signs of the signed permutation")

    @model_validator(mode="after")
    def one_kind(self):
        if self.givens and self.permutation is not None:
            raise ValueError("Give either Givens factors or a permutation, not both")
        return self

    def build(self):
        from phi4flow.modules.lattice_core import Rotation4
        if self.permutation is not None:
            return Rotation4.signed_permutation(self.permutation, self.signs)
        return Rotation4.from_givens(self.givens)


def generic_rotation_spec() -> RotationSpec:
    return RotationSpec(givens=[(1, 2, 0.3), (3, 4, 0.2)])


class RotationCase(BaseModel):
    """One rotation-defect sweep."""
    loop: int = Field(0, ge=0, le=1)
    legs: int = Field(6)
    momenta: List[List[float]] = Field(default_factory=lambda: [row[:] for row in DEFAULT_SIX_POINT])
    rotation: RotationSpec = Field(default_factory=generic_rotation_spec)
    counterterms: Literal["inherited", "refit"] = Field("inherited", description="Counterterms of the rotated theory")


class RotationSuiteConfig(BaseModel):
    a: float = Field(1.0, description="Flow scale of the defect sweep")
    a0_list: List[float] = Field(default_factory=lambda: [2.0 ** -k for k in range(4, 10)])
    floor: float = Field(1e-10, description="Defects below this are at the tolerance floor")
    cases: List[RotationCase] = Field(default_factory=lambda: [
        RotationCase(),
        RotationCase(loop=1, legs=4, momenta=[row[:] for row in DEFAULT_FOUR_POINT]),
        RotationCase(rotation=RotationSpec(permutation=[1, 0, 3, 2], signs=[1, -1, 1, 1])),
    ])


class IndexCase(BaseModel):
    """(l, n) with fixed momenta and optional derivative."""
    loop: int = Field(1, ge=0, le=2)
    legs: int = Field(2)
    momenta: List[List[float]] = Field(default_factory=lambda: [row[:] for row in DEFAULT_TWO_POINT])
    multi_index: Optional[List[List[int]]] = Field(None, description="Per-leg direction orders for legs 1..n-1")
    expected: Optional[float] = Field(None, description="Expected exponent override")
    window: float = Field(0.2, gt=0.0, description="Half width of the accepted exponent window")


class CauchySuiteConfig(BaseModel):
    a: float = Field(math.inf, description="Flow scale of both terms")
    a0_list: List[float] = Field(default_factory=lambda: [2.0 ** -k for k in range(4, 10)])
    method: Literal["flow", "closed_form"] = Field("closed_form")
    floor: float = Field(1e-13, description="Differences below this count as converged")
    cases: List[IndexCase] = Field(default_factory=lambda: [
        IndexCase(loop=1, legs=2),
        IndexCase(loop=0, legs=4, momenta=[row[:] for row in DEFAULT_FOUR_POINT]),
        IndexCase(loop=1, legs=4, momenta=[row[:] for row in DEFAULT_FOUR_POINT]),
    ])

    @field_validator("a", mode="before")
    @classmethod
    def parse_flow_scale(cls, v):
        return parse_length(v)


class Lemma1SuiteConfig(BaseModel):
    alphas: List[float] = Field(default_factory=lambda: [0.0, 2.0, 4.0, 6.0])
    a_grid: List[float] = Field(default_factory=lambda: [2.0 ** -k for k in range(0, 6)])
    a0_grid: List[float] = Field(default_factory=lambda: [2.0 ** -k for k in range(0, 11, 2)])


class Lemma2SuiteConfig(BaseModel):
    w_list: List[List[int]] = Field(default_factory=lambda: [[0, 0, 0, 0], [1, 0, 0, 0], [1, 1, 0, 0], [2, 0, 0, 0]])
    p_list: List[List[float]] = Field(default_factory=lambda: [[0.3, -0.2, 0.5, 0.1], [0.7, 0.4, -0.3, 0.6]])
    rotation: RotationSpec = Field(default_factory=generic_rotation_spec)
    a: float = Field(1.0)
    a0_list: List[float] = Field(default_factory=lambda: [2.0 ** -k for k in range(3, 11)])
    growth_limit: float = Field(10.0, description="Allowed max ratio relative to the coarsest spacing")


class PowerCountingSuiteConfig(BaseModel):
    a0: float = Field(2.0 ** -9)
    a_list: List[float] = Field(default_factory=lambda: [2.0 ** -k for k in range(2, 8)])
    method: Literal["flow", "closed_form"] = Field("flow")
    cases: List[IndexCase] = Field(default_factory=lambda: [
        IndexCase(loop=0, legs=6, momenta=[row[:] for row in DEFAULT_SIX_POINT]),
        IndexCase(loop=0, legs=4, momenta=[row[:] for row in DEFAULT_FOUR_POINT]),
    ])


class DeltaSuiteConfig(BaseModel):
    legs: List[int] = Field(default_factory=lambda: [2, 3])
    sigma: float = Field(1.0, gt=0.0, description="Gaussian width")
    center: List[float] = Field(default_factory=lambda: [0.0, 0.0, 0.0, 0.0])
    a0_list: List[float] = Field(default_factory=lambda: [1.0, 0.5, 0.25, 0.125])
    k_max: int = Field(6, ge=1, description="Image range ||k||_inf <= k_max")
    tail_tolerance: float = Field(1e-6, gt=0.0, description="Allowed tail estimate relative to the defect")


class TwoLoopConfig(BaseModel):
    grid_points: int = Field(9, ge=3, description="Odd number of reduced-momentum grid points per axis")
    lambda_panels: int = Field(8, ge=2)
    lambda_order: int = Field(6, ge=2)
    tolerance: float = Field(1e-3, gt=0.0, description="Allowed relative interpolation error")

    @field_validator("grid_points")
    @classmethod
    def odd_points(cls, v):
        if v % 2 == 0:
            raise ValueError("grid_points must be odd so the halved grid is nested")
        return v


class TaskConfig(BaseModel):
    """Command-specific parameters."""
    loop: int = Field(1, ge=0, le=2, description="Loop order l")
    legs: int = Field(2, ge=1, le=6, description="Leg count n")
    momenta: List[List[List[float]]] = Field(default_factory=lambda: [[row[:] for row in DEFAULT_TWO_POINT]],
                                             description="One n x 4 momentum array per output row")
    multi_index: Optional[List[List[int]]] = Field(None, description="Per-leg direction orders for legs 1..n-1")
    rotation: Optional[RotationSpec] = Field(None, description="Rotated lattice for eval")
    rotated_counterterms: Literal["inherited", "refit"] = Field("inherited")
    method: Literal["flow", "closed_form"] = Field("flow")
    loops: List[int] = Field(default_factory=lambda: [0, 1], description="Loop orders for counterterms")
    suites: List[str] = Field(default_factory=lambda: list(SUITE_NAMES))
    rotation_suite: RotationSuiteConfig = Field(default_factory=RotationSuiteConfig)
    cauchy_suite: CauchySuiteConfig = Field(default_factory=CauchySuiteConfig)
    lemma1_suite: Lemma1SuiteConfig = Field(default_factory=Lemma1SuiteConfig)
    lemma2_suite: Lemma2SuiteConfig = Field(default_factory=Lemma2SuiteConfig)
    power_counting_suite: PowerCountingSuiteConfig = Field(default_factory=PowerCountingSuiteConfig)
    delta_suite: DeltaSuiteConfig = Field(default_factory=DeltaSuiteConfig)
    two_loop: TwoLoopConfig = Field(default_factory=TwoLoopConfig)

    @field_validator("suites")
    @classmethod
    def known_suites(cls, v):
        unknown = [s for s in v if s not in SUITE_NAMES]
        if unknown:
            raise ValueError(f"Unknown suite names: {unknown}")
        return v

    @field_validator("momenta")
    @classmethod
    def momentum_rows(cls, v):
        for rows in v:
            if any(len(row) != 4 for row in rows):
                raise ValueError("Every momentum must have 4 components")
        return v


class OutputConfig(BaseModel):
    directory: str = Field("phi4flow_out", description="Root output directory")
    prefix: str = Field("", description="File name prefix")
    emit_gnuplot: bool = Field(False, description="Write gnuplot scripts next to sweep tables")


def _checked_params(a0: float, a: float, physics: PhysicsConfig) -> LatticeParams:
    return checked_params(a0=a0, a=a, m=physics.m, f=physics.f)


class RunConfig(BaseModel):
    """Master configuration for one phi4-flow invocation."""
    physics: PhysicsConfig = Field(default_factory=PhysicsConfig)
    regulator: RegulatorConfig = Field(default_factory=RegulatorConfig)
    quadrature: QuadratureConfig = Field(default_factory=QuadratureConfig)
    task: TaskConfig = Field(default_factory=TaskConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)
    threads: int = Field(1, ge=1, description="Worker cap for sweep points and output rows")

    @model_validator(mode="after")
    def check_physics(self):
        # re-check LatticeParams invariants at load
        _checked_params(self.regulator.a0, self.regulator.a, self.physics)
        for a0 in self.regulator.a0_list or []:
            _checked_params(a0, math.inf, self.physics)
        rot = self.task.rotation_suite
        if any(x <= y for x, y in zip(rot.a0_list, rot.a0_list[1:])):
            raise ValueError("rotation_suite.a0_list must be strictly decreasing")
        if rot.a0_list and max(rot.a0_list) > rot.a / 4.0:
            raise ValueError("rotation_suite.a0_list must satisfy a0 <= a/4")
        if any(x <= y for x, y in zip(self.task.lemma2_suite.a0_list, self.task.lemma2_suite.a0_list[1:])):
            raise ValueError("lemma2_suite.a0_list must be strictly decreasing")
        if any(x <= y for x, y in zip(self.task.cauchy_suite.a0_list, self.task.cauchy_suite.a0_list[1:])):
            raise ValueError("cauchy_suite.a0_list must be strictly decreasing")
        return self

    def lattice_params(self, a0: Optional[float] = None, a: Optional[float] = None) -> LatticeParams:
        return LatticeParams(
            a0=self.regulator.a0 if a0 is None else a0,
            a=self.regulator.a if a is None else a,
            m=self.physics.m,
            f=self.physics.f,
        )


def load_config(path: str) -> RunConfig:
    """Load and validate a JSON run configuration."""
    try:
        with open(path, "r") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"Could not read config {path}: {e}") from e
    return parse_config(data)


def parse_config(data: dict) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(str(e)) from e
