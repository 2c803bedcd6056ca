"""
Abstract base classes and result types for phi4flow components.
Defines the contracts evaluators and verification suites follow.
"""
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from phi4flow.models import CountertermEntry, LatticeParams


class SuiteStatus(str, Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass
class QuadratureResult:
    """Value of a deterministic quadrature with its error estimate."""
    value: Any
    error: Any
    nodes: int = 0

    def __float__(self) -> float:
        return float(self.value)


@dataclass
class TwoLoopResult:
    """Two-loop two-point value, its momentum defect and grid interpolation error."""
    value: float
    defect: float
    interpolation_error: float
    error: float = 0.0


@dataclass
class RotationDefect:
    """Rotated-lattice minus original-lattice CAS function at one parameter point."""
    l: int
    n: int
    momenta: np.ndarray
    rotation_label: str
    a0: float
    a: float
    value: float
    error: float = 0.0


@dataclass
class SweepReport:
    """
    Result of one verification sweep.

    The table holds the independent variable and measured quantities; fit fields
    are None for suites that do not fit a slope.
    """
    suite: str
    case: str
    variable: str
    table: pd.DataFrame
    status: SuiteStatus
    slope: Optional[float] = None
    intercept: Optional[float] = None
    residual: Optional[float] = None
    expected: Optional[float] = None
    window: Optional[Tuple[float, float]] = None
    notes: List[str] = field(default_factory=list)
    inconclusive_by_design: bool = False
    # machine-readable markers, e.g. ABOVE_WINDOW for a slope past the upper edge of window
    flags: List[str] = field(default_factory=list)

    @property
    def fit_bearing(self) -> bool:
        return self.slope is not None

    @property
    def effective_status(self) -> SuiteStatus:
        """Status counted toward the suite; an expected null result counts as PASS."""
        if self.inconclusive_by_design and self.status == SuiteStatus.INCONCLUSIVE:
            return SuiteStatus.PASS
        return self.status

    def to_dict(self) -> Dict[str, Any]:
        def clean(x):
            if x is None:
                return None
            x = float(x)
            return x if math.isfinite(x) else repr(x)

        return {
            "suite": self.suite,
            "case": self.case,
            "variable": self.variable,
            "status": self.status.value,
            "slope": clean(self.slope),
            "intercept": clean(self.intercept),
            "residual": clean(self.residual),
            "expected": clean(self.expected),
            "window": None if self.window is None else [clean(w) for w in self.window],
            "points": int(len(self.table)),
            "notes": list(self.notes),
            "inconclusive_by_design": self.inconclusive_by_design,
            "flags": list(self.flags),
        }


def combine_status(statuses: Sequence[SuiteStatus]) -> SuiteStatus:
    """FAIL dominates INCONCLUSIVE, which dominates PASS."""
    if any(s == SuiteStatus.FAIL for s in statuses):
        return SuiteStatus.FAIL
    if any(s == SuiteStatus.INCONCLUSIVE for s in statuses):
        return SuiteStatus.INCONCLUSIVE
    return SuiteStatus.PASS


def reports_status(reports: Sequence[SweepReport]) -> SuiteStatus:
    return combine_status([r.effective_status for r in reports])


class CASEvaluator(ABC):
    """Interface for CAS coefficient-function evaluators (flow quadrature, closed forms)."""

    @abstractmethod
    def evaluate(self, l: int, n: int, momenta, params: LatticeParams, w=None) -> QuadratureResult:
        """
        Evaluate d^w L_{l,n} at the given momenta.

        Args:
            l: Loop order
            n: Number of legs
            momenta: n x 4 array summing to zero mod 2 pi/a0
            params: Lattice parameters; params.a is the flow scale
            w: Optional MultiIndex over legs 1..n-1

        Returns:
            QuadratureResult with value and error estimate
        """
        pass

    @abstractmethod
    def counterterms(self, l: int) -> CountertermEntry:
        """
        Relevant bare constants of loop order l for this evaluator's (a0, m, f).
        """
        pass


class VerificationSuite(ABC):
    """Interface for named verification suites."""
    name: str = ""

    @abstractmethod
    def run(self, config, runner, ln=None) -> List[SweepReport]:
        """
        Run the suite.

        Args:
            config: RunConfig of the invocation
            runner: PointRunner used to map independent sweep points
            ln: Optional (l, n) filter on the suite cases

        Returns:
            List of SweepReport objects, one per case
        """
        pass
