"""
Core value types for phi4flow.
Defines the parameter and index objects passed between solver, quadrature and verification.
"""
import math
from typing import Dict, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from phi4flow.errors import ConfigError

# (l, n) pairs the flow solver can evaluate; (2, 2) is the two-loop extension.
IMPLEMENTED_INDICES: Tuple[Tuple[int, int], ...] = ((0, 2), (0, 4), (0, 6), (1, 2), (1, 4), (2, 2))


def parse_length(value):
    """Accept None, 'inf' or a number for a flow scale."""
    if value is None:
        return math.inf
    if isinstance(value, str):
        token = value.strip().lower()
        if token in ("inf", "infinity", "+inf"):
            return math.inf
        return float(token)
    return value


class LatticeParams(BaseModel):
    """Regulator and physics tuple (a0, a, m, f) governing every evaluation."""
    model_config = ConfigDict(frozen=True)

    a0: float = Field(..., gt=0.0, description="Lattice spacing (length)")
    a: float = Field(math.inf, description="Flow scale (length); inf is the fully integrated theory")
    m: float = Field(1.0, gt=0.0, description="Mass")
    f: float = Field(1.0, description="Quartic coupling (dimensionless)")

    @field_validator("a", mode="before")
    @classmethod
    def parse_flow_scale(cls, v):
        return parse_length(v)

    @model_validator(mode="after")
    def check_regulator(self):
        if not math.isfinite(self.a0):
            raise ValueError("a0 must be finite")
        if math.isnan(self.a) or self.a < self.a0:
            raise ValueError(f"Flow scale a={self.a} must satisfy a >= a0={self.a0}")
        if self.a0 * self.m >= 1.0:
            raise ValueError(f"Lattice spacing a0={self.a0} must be below 1/m={1.0 / self.m}")
        return self

    @property
    def is_fully_integrated(self) -> bool:
        return math.isinf(self.a)

    @property
    def lam(self) -> float:
        """Flow parameter 1/a (0 for the fully integrated theory)."""
        return 0.0 if self.is_fully_integrated else 1.0 / self.a

    @property
    def lam0(self) -> float:
        """Bare flow parameter 1/a0."""
        return 1.0 / self.a0

    def with_a(self, a: float) -> "LatticeParams":
        return LatticeParams(a0=self.a0, a=a, m=self.m, f=self.f)

    def with_a0(self, a0: float) -> "LatticeParams":
        return LatticeParams(a0=a0, a=self.a, m=self.m, f=self.f)


def checked_params(a0: float, a: float = math.inf, m: float = 1.0, f: float = 1.0) -> LatticeParams:
    """LatticeParams with validation failures raised as ConfigError."""
    try:
        return LatticeParams(a0=a0, a=a, m=m, f=f)
    except ValidationError as e:
        raise ConfigError(f"Invalid lattice parameters: {e.errors()[0]['msg']}") from None


class CASIndex(BaseModel):
    """Loop order and leg count of a CAS coefficient function L_{l,n}."""
    model_config = ConfigDict(frozen=True)

    l: int = Field(..., ge=0, le=2, description="Loop order")
    n: int = Field(..., ge=1, le=6, description="Number of external legs")

    @property
    def is_odd(self) -> bool:
        return self.n % 2 == 1

    @property
    def in_scope(self) -> bool:
        return self.is_odd or (self.l, self.n) in IMPLEMENTED_INDICES

    def is_relevant(self, derivative_order: int = 0) -> bool:
        return self.n + derivative_order <= 4

    def __str__(self) -> str:
        return f"L_{{{self.l},{self.n}}}"


class CountertermEntry(BaseModel):
    """Relevant bare constants of one loop order."""
    model_config = ConfigDict(frozen=True)

    l: int = Field(..., ge=0, description="Loop order")
    d: float = Field(0.0, description="Coefficient of phi^2 (mass^2)")
    b: float = Field(0.0, description="Coefficient of (d phi)^2")
    c: Optional[float] = Field(0.0, description="Coefficient of phi^4; None when its shooting integrand is out of scope")
    error: float = Field(0.0, description="Largest quadrature error estimate among the three shootings")


class CountertermSet(BaseModel):
    """Counterterms per loop order for one (a0, m, f) and quadrature setting."""
    a0: float
    m: float
    f: float
    entries: Dict[int, CountertermEntry] = Field(default_factory=dict)

    def get(self, l: int) -> CountertermEntry:
        if l == 0:
            return CountertermEntry(l=0)
        if l not in self.entries:
            raise KeyError(f"Counterterms for loop order {l} have not been computed")
        return self.entries[l]

    def has(self, l: int) -> bool:
        return l == 0 or l in self.entries

    def add(self, entry: CountertermEntry) -> None:
        self.entries[entry.l] = entry
