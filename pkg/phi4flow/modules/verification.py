"""
Verification suites: rotation-symmetry restoration, continuum convergence,
propagator lemmas, power counting and the periodic-delta pairing.

Each sweep evaluates independent points through a PointRunner and fits a
log-log slope where the underlying bound is a power law. Windows and sweep
ranges are recorded in the report next to the measured numbers.
"""
import itertools
import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import special

from phi4flow.config import IndexCase, QuadratureConfig, RunConfig
from phi4flow.errors import ConfigError, QuadratureError
from phi4flow.interfaces import RotationDefect, SuiteStatus, SweepReport, VerificationSuite
from phi4flow.models import LatticeParams
from phi4flow.modules.flow_solver import RotationContext, get_evaluator
from phi4flow.modules.lattice_core import DIM, BrillouinZone, MultiIndex, Rotation4
from phi4flow.modules.propagator import kernel_difference
from phi4flow.modules.quadrature import integrate_bz
from phi4flow.utils.fitting import decades, loglog_fit
from phi4flow.utils.parallel import PointRunner

logger = logging.getLogger(__name__)

MIN_POINTS = 5
MIN_DECADES = 1.5

ROTATION_SLOPE_FLOOR = 0.85
ROTATION_SLOPE_CEILING = 1.15
ROTATION_RESIDUAL = 0.05
ABOVE_WINDOW = "ABOVE_WINDOW"
CAUCHY_SLOPE_FLOOR = 0.85
LEMMA2_SLOPE_FLOOR = -0.15


def _runner(runner: Optional[PointRunner]) -> PointRunner:
    return runner or PointRunner(1)


def _sweep_notes(x: Sequence[float]) -> List[str]:
    notes = []
    if len(x) < MIN_POINTS:
        notes.append(f"sweep has {len(x)} points, fewer than {MIN_POINTS}")
    if len(x) > 1 and decades(x) < MIN_DECADES:
        notes.append(f"sweep spans {decades(x):.2f} decades, fewer than {MIN_DECADES}")
    return notes


def _case_label(l: int, n: int, w: Optional[MultiIndex] = None, extra: str = "") -> str:
    label = f"L_{l}_{n}"
    if w is not None and not w.is_zero:
        label += "_w" + "".join(str(o) for row in w.orders for o in row)
    return label + (f"_{extra}" if extra else "")


# --- rotation restoration -------------------------------------------------------------------

def rotation_defect(l: int, n: int, momenta, rotation: Rotation4, params: LatticeParams,
                    settings: Optional[QuadratureConfig] = None, counterterms: str = "inherited",
                    method: str = "flow") -> RotationDefect:
    """
    Rotated-lattice minus original-lattice CAS function at the momentum labels p_i.
    Both runs share (a0, m, f) and, with inherited counterterms, one CountertermSet.
    """
    momenta = np.asarray(momenta, dtype=float)
    original = get_evaluator(method, params.a0, params.m, params.f, settings)
    rotated = get_evaluator(method, params.a0, params.m, params.f, settings,
                            RotationContext(rotation=rotation, counterterms=counterterms))
    r1 = rotated.evaluate(l, n, momenta, params)
    r0 = original.evaluate(l, n, momenta, params)
    return RotationDefect(
        l=l, n=n, momenta=momenta, rotation_label=rotation.label, a0=params.a0, a=params.a,
        value=float(r1.value) - float(r0.value), error=float(r1.error) + float(r0.error),
    )


def rotation_scaling_fit(l: int, n: int, momenta, rotation: Rotation4, a: float, m: float, f: float,
                         a0_list: Sequence[float], settings: Optional[QuadratureConfig] = None,
                         counterterms: str = "inherited", floor: float = 1e-10,
                         runner: Optional[PointRunner] = None) -> SweepReport:
    """
    Fit |D_{l,n}| against a0. Generic rotations pass with slope >= 0.85 and a small residual;
    signed permutations must stay at the tolerance floor and report INCONCLUSIVE.
    """
    a0_list = [float(x) for x in a0_list]
    if any(x <= y for x, y in zip(a0_list, a0_list[1:])):
        raise ConfigError("a0_list must be strictly decreasing")
    if max(a0_list) > a / 4.0:
        raise ConfigError(f"a0_list must satisfy a0 <= a/4 = {a / 4.0:g}")
    momenta = np.asarray(momenta, dtype=float)

    def point(row):
        params = LatticeParams(a0=row["a0"], a=a, m=m, f=f)
        d = rotation_defect(l, n, momenta, rotation, params, settings, counterterms)
        return d.value, d.error

    sweep = pd.DataFrame({"a0": a0_list})
    results = _runner(runner).apply(sweep, point)
    table = sweep.assign(defect=[r[0] for r in results], error=[r[1] for r in results])
    case = _case_label(l, n, extra=f"{rotation.label}_{counterterms}")
    notes = _sweep_notes(a0_list)
    magnitudes = np.abs(table["defect"].to_numpy())
    window = (ROTATION_SLOPE_FLOOR, ROTATION_SLOPE_CEILING)

    if rotation.is_hypercubic:
        status = SuiteStatus.INCONCLUSIVE if np.all(magnitudes <= floor) else SuiteStatus.FAIL
        notes.append(f"hypercubic rotation: defect must stay below {floor:g}, max {np.max(magnitudes):.3e}")
        report = SweepReport("rotation", case, "a0", table, status, notes=notes, window=window,
                             inconclusive_by_design=True)
        logger.info(f"[Verify:rotation] {case}: {status.value} (max |D| = {np.max(magnitudes):.3e})")
        return report
    if np.any(magnitudes <= floor):
        notes.append(f"{int(np.sum(magnitudes <= floor))} defects at the tolerance floor {floor:g}; fit degenerate")
        return SweepReport("rotation", case, "a0", table, SuiteStatus.INCONCLUSIVE, notes=notes, window=window)

    fit = loglog_fit(a0_list, magnitudes)
    passed = fit.slope >= ROTATION_SLOPE_FLOOR and fit.residual < ROTATION_RESIDUAL
    flags = []
    if fit.slope > ROTATION_SLOPE_CEILING:
        flags.append(ABOVE_WINDOW)
        notes.append(f"slope {fit.slope:.3f} above {ROTATION_SLOPE_CEILING}: faster restoration than the linear bound")
    status = SuiteStatus.PASS if passed else SuiteStatus.FAIL
    logger.info(f"[Verify:rotation] {case}: slope={fit.slope:.4f} residual={fit.residual:.4f} -> {status.value}"
                + (" (above window)" if flags else ""))
    return SweepReport("rotation", case, "a0", table, status, slope=fit.slope, intercept=fit.intercept,
                       residual=fit.residual, expected=1.0, window=window, notes=notes, flags=flags)


# --- continuum convergence ----------------------------------------------------------------------

def cauchy_convergence(l: int, n: int, momenta, m: float, f: float, a0_list: Sequence[float],
                       settings: Optional[QuadratureConfig] = None, method: str = "closed_form",
                       a: float = math.inf, floor: float = 1e-13,
                       runner: Optional[PointRunner] = None) -> SweepReport:
    """
    |L^{a0,a} - L^{a0/2,a}| against a0; slope >= 0.85 passes, differences at the floor
    everywhere mean the function does not depend on a0 and pass as converged.
    """
    a0_list = [float(x) for x in a0_list]
    momenta = np.asarray(momenta, dtype=float)
    zone = BrillouinZone(max(a0_list))
    if not np.all(zone.contains(momenta)):
        raise ConfigError("Cauchy momenta must lie inside every swept Brillouin zone")

    def value(a0):
        evaluator = get_evaluator(method, a0, m, f, settings)
        return float(evaluator.evaluate(l, n, momenta, LatticeParams(a0=a0, a=a, m=m, f=f)).value)

    def point(row):
        return value(row["a0"]), value(0.5 * row["a0"])

    sweep = pd.DataFrame({"a0": a0_list})
    results = _runner(runner).apply(sweep, point)
    coarse = np.array([r[0] for r in results])
    fine = np.array([r[1] for r in results])
    table = sweep.assign(value=coarse, value_half=fine, difference=coarse - fine)
    case = _case_label(l, n, extra=method)
    notes = _sweep_notes(a0_list)
    window = (CAUCHY_SLOPE_FLOOR, math.inf)
    magnitudes = np.abs(table["difference"].to_numpy())
    if np.all(magnitudes <= floor):
        notes.append(f"differences below {floor:g} at every a0: converged")
        logger.info(f"[Verify:cauchy] {case}: converged (max difference {np.max(magnitudes):.3e})")
        return SweepReport("cauchy", case, "a0", table, SuiteStatus.PASS, window=window, notes=notes)
    if np.any(magnitudes <= floor):
        notes.append("some differences at the tolerance floor; fit degenerate")
        return SweepReport("cauchy", case, "a0", table, SuiteStatus.INCONCLUSIVE, window=window, notes=notes)
    fit = loglog_fit(a0_list, magnitudes)
    status = SuiteStatus.PASS if fit.slope >= CAUCHY_SLOPE_FLOOR else SuiteStatus.FAIL
    logger.info(f"[Verify:cauchy] {case}: slope={fit.slope:.4f} -> {status.value}")
    return SweepReport("cauchy", case, "a0", table, status, slope=fit.slope, intercept=fit.intercept,
                       residual=fit.residual, expected=1.0, window=window, notes=notes)


# --- propagator lemmas ----------------------------------------------------------------------------

def axis_moment(alpha: float) -> float:
    """Integral over u > 0 of u^alpha exp(-u^2/pi^2) = (pi^(alpha+1)/2) Gamma((alpha+1)/2)."""
    return 0.5 * math.pi ** (alpha + 1.0) * special.gamma(0.5 * (alpha + 1.0))


def lemma1_bound(alpha: float) -> float:
    """
    Upper bound on a^4 * zone integral of exp(-a^2 hat(k)^2) (a|k|)^alpha d^4k/(2 pi)^4,
    from |hat(k_mu)| >= |k_mu|/pi on the zone and (sum u_mu^2)^(alpha/2) <= c_alpha sum |u_mu|^alpha.
    """
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    line0 = 2.0 * axis_moment(0.0)
    if alpha == 0:
        return line0 ** 4 / (2.0 * math.pi) ** DIM
    c_alpha = max(1.0, 4.0 ** (0.5 * alpha - 1.0))
    return DIM * c_alpha * 2.0 * axis_moment(alpha) * line0 ** 3 / (2.0 * math.pi) ** DIM


def lemma1_empirical(alpha: float, a: float, a0: float, settings: Optional[QuadratureConfig] = None) -> float:
    settings = settings or QuadratureConfig()

    def integrand(k):
        h = (2.0 / a0) * np.sin(0.5 * a0 * k)
        norm = np.sqrt(np.sum(k * k, axis=-1))
        return a ** 4 * np.exp(-a * a * np.sum(h * h, axis=-1)) * (a * norm) ** alpha

    return float(integrate_bz(integrand, a0, settings.brillouin, damping=a, symmetry="hypercubic").value)


def verify_lemma1(alpha_list: Sequence[float], a_grid: Sequence[float], a0_grid: Sequence[float],
                  settings: Optional[QuadratureConfig] = None, runner: Optional[PointRunner] = None) -> SweepReport:
    """Empirical Gaussian moments on the (a, a0 <= a) grid against the closed Gamma bound."""
    rows = [(alpha, a, a0) for alpha in alpha_list for a in a_grid for a0 in a0_grid if a0 <= a]
    if not rows:
        raise ConfigError("Lemma 1 grid has no point with a0 <= a")
    sweep = pd.DataFrame(rows, columns=["alpha", "a", "a0"])
    values = _runner(runner).apply(sweep, lambda r: lemma1_empirical(r["alpha"], r["a"], r["a0"], settings))
    bounds = [lemma1_bound(alpha) for alpha in sweep["alpha"]]
    table = sweep.assign(empirical=values, bound=bounds)
    table["ratio"] = table["empirical"] / table["bound"]
    status = SuiteStatus.PASS if bool(np.all(table["ratio"] <= 1.0)) else SuiteStatus.FAIL
    notes = []
    for alpha, group in table.groupby("alpha", sort=True):
        sup = group.groupby("a")["empirical"].max()
        spread = float(sup.max() / sup.min() - 1.0)
        notes.append(f"alpha={alpha:g}: sup {sup.max():.6g} <= bound {lemma1_bound(alpha):.6g}, "
                     f"relative spread over a {spread:.3%}")
    logger.info(f"[Verify:lemma1] max ratio {table['ratio'].max():.4f} -> {status.value}")
    return SweepReport("lemma1", "gaussian_moments", "a0", table, status, notes=notes)


def verify_lemma2(w_list: Sequence[Sequence[int]], p_list: Sequence[Sequence[float]], rotation: Rotation4,
                  a: float, m: float, a0_list: Sequence[float], growth_limit: float = 10.0,
                  runner: Optional[PointRunner] = None) -> SweepReport:
    """
    Ratio max_p |kernel_difference| / [a0 (1/a + m)^(-2-|w|)] over an a0 sweep. Bounded means no
    growth toward small a0: max ratio below growth_limit times the coarsest one and a fitted slope
    of at least -0.15.
    """
    a0_list = [float(x) for x in a0_list]
    p = np.asarray(p_list, dtype=float)
    if not np.all(BrillouinZone(max(a0_list)).contains(p)):
        raise ConfigError("Lemma 2 momenta must lie inside every swept Brillouin zone")
    for w in w_list:
        if sum(w) > 3:
            raise ConfigError(f"Lemma 2 covers |w| <= 3, got {list(w)}")

    rows = [(tuple(int(o) for o in w), a0) for w in w_list for a0 in a0_list]
    sweep = pd.DataFrame({"w": [r[0] for r in rows], "a0": [r[1] for r in rows]})

    def point(row):
        params = LatticeParams(a0=row["a0"], a=a, m=m)
        diff = kernel_difference(params, p, rotation, row["w"])
        scale = row["a0"] * (1.0 / a + m) ** (-2 - sum(row["w"]))
        return float(np.max(np.abs(diff))) / scale

    ratios = _runner(runner).apply(sweep, point)
    table = sweep.assign(ratio=ratios)
    table["w"] = ["".join(str(o) for o in w) for w in table["w"]]
    status = SuiteStatus.PASS
    notes = []
    slopes = []
    for w_key, group in table.groupby("w", sort=False):
        r = group["ratio"].to_numpy()
        if np.all(r == 0.0):
            notes.append(f"w={w_key}: difference identically zero")
            continue
        growth = float(np.max(r) / r[0]) if r[0] > 0 else math.inf
        slope = loglog_fit(group["a0"], r).slope if np.all(r > 0) else math.nan
        slopes.append(slope)
        ok = growth < growth_limit and (math.isnan(slope) or slope >= LEMMA2_SLOPE_FLOOR)
        notes.append(f"w={w_key}: growth {growth:.3g}, slope {slope:.3f}, {'bounded' if ok else 'growing'}")
        if not ok:
            status = SuiteStatus.FAIL
    finite = [s for s in slopes if math.isfinite(s)]
    slope = min(finite) if finite else None
    logger.info(f"[Verify:lemma2] {rotation.label}: {status.value}")
    return SweepReport("lemma2", f"kernel_difference_{rotation.label}", "a0", table, status, slope=slope,
                       window=(LEMMA2_SLOPE_FLOOR, math.inf), notes=notes + _sweep_notes(a0_list))


# --- power counting ------------------------------------------------------------------------------

def power_counting_fit(l: int, n: int, momenta, a0: float, m: float, f: float, a_list: Sequence[float],
                       w=None, expected: Optional[float] = None, window: float = 0.2, method: str = "flow",
                       settings: Optional[QuadratureConfig] = None,
                       runner: Optional[PointRunner] = None) -> SweepReport:
    """Fitted exponent of |d^w L_{l,n}| against 1/a + m, expected 4 - n - |w|."""
    momenta = np.asarray(momenta, dtype=float)
    w = None if w is None else (w if isinstance(w, MultiIndex) else MultiIndex.from_rows(w))
    order = 0 if w is None else w.total
    expected = float(4 - n - order) if expected is None else float(expected)
    a_list = [float(x) for x in a_list]
    notes = []
    if min(a_list) < 4.0 * a0 or max(a_list) > 1.0 / (4.0 * m):
        notes.append(f"a_list leaves the scaling window [{4.0 * a0:g}, {1.0 / (4.0 * m):g}]")

    def point(row):
        evaluator = get_evaluator(method, a0, m, f, settings)
        params = LatticeParams(a0=a0, a=row["a"], m=m, f=f)
        return float(evaluator.evaluate(l, n, momenta, params, w=w).value)

    sweep = pd.DataFrame({"a": a_list})
    values = _runner(runner).apply(sweep, point)
    table = sweep.assign(scale=[1.0 / x + m for x in a_list], value=values)
    case = _case_label(l, n, w)
    bounds = (expected - window, expected + window)
    if decades(table["scale"]) < 1.0:
        notes.append(f"scaling window spans {decades(table['scale']):.2f} decades of 1/a + m")
        return SweepReport("power-counting", case, "a", table, SuiteStatus.INCONCLUSIVE, expected=expected,
                           window=bounds, notes=notes)
    if np.any(np.asarray(values) == 0.0):
        notes.append("vanishing values; fit degenerate")
        return SweepReport("power-counting", case, "a", table, SuiteStatus.INCONCLUSIVE, expected=expected,
                           window=bounds, notes=notes)
    fit = loglog_fit(table["scale"], table["value"])
    status = SuiteStatus.PASS if abs(fit.slope - expected) <= window else SuiteStatus.FAIL
    logger.info(f"[Verify:power-counting] {case}: exponent={fit.slope:.4f} expected={expected:g} -> {status.value}")
    return SweepReport("power-counting", case, "a", table, status, slope=fit.slope, intercept=fit.intercept,
                       residual=fit.residual, expected=expected, window=bounds, notes=notes)


# --- periodic delta --------------------------------------------------------------------------------

def _log_image_terms(K: np.ndarray, n: int, sigma: float, center: np.ndarray) -> np.ndarray:
    """log of the n-fold Gaussian convolution at K for exp(-|p - c|^2 / (2 sigma^2)) test factors."""
    s2 = sigma * sigma
    log_prefactor = 2.0 * n * math.log(2.0 * math.pi * s2) - 2.0 * math.log(2.0 * math.pi * n * s2)
    dist = np.sum((K - n * center) ** 2, axis=-1)
    return log_prefactor - dist / (2.0 * n * s2)


def _image_vectors(k_max: int) -> np.ndarray:
    axis = np.arange(-k_max, k_max + 1)
    k = np.array(list(itertools.product(axis, repeat=DIM)), dtype=float)
    return k[np.any(k != 0, axis=1)]


def _log_tail(a0: float, n: int, sigma: float, center: np.ndarray, k_max: int, shells: int = 40) -> float:
    """Log bound on images with ||k||_inf > k_max: shell count times the largest term of each shell."""
    s2 = sigma * sigma
    log_prefactor = 2.0 * n * math.log(2.0 * math.pi * s2) - 2.0 * math.log(2.0 * math.pi * n * s2)
    shift = float(np.max(np.abs(n * center)))
    logs = []
    for j in range(k_max + 1, k_max + 1 + shells):
        count = (2 * j + 1) ** DIM - (2 * j - 1) ** DIM
        nearest = max(0.0, 2.0 * math.pi * j / a0 - shift)
        logs.append(math.log(count) + log_prefactor - nearest * nearest / (2.0 * n * s2))
    return float(special.logsumexp(logs))


def periodic_delta_log_defect(a0: float, n: int, sigma: float, center, k_max: int = 6) -> Tuple[float, float]:
    """
    log of the pairing defect sum over k != 0 of the test function integrated on
    sum p_i = 2 pi k / a0, and the log tail bound beyond ||k||_inf = k_max.
    """
    center = np.asarray(center, dtype=float)
    K = 2.0 * math.pi * _image_vectors(k_max) / a0
    log_defect = float(special.logsumexp(_log_image_terms(K, n, sigma, center)))
    return log_defect, _log_tail(a0, n, sigma, center, k_max)


def two_point_image_quadrature(a0: float, sigma: float, center, k_max: int = 1, nodes: int = 40) -> float:
    """n = 2 defect by Gauss-Hermite quadrature of each image integral, per axis."""
    center = np.asarray(center, dtype=float)
    x, wx = np.polynomial.hermite.hermgauss(nodes)
    s2 = sigma * sigma
    total = 0.0
    for k in _image_vectors(k_max):
        K = 2.0 * math.pi * k / a0
        value = 1.0
        for mu in range(DIM):
            # p = c + sqrt(2) sigma x carries exp(-(p - c)^2 / 2 sigma^2) into the Hermite weight
            p = center[mu] + math.sqrt(2.0) * sigma * x
            value *= math.sqrt(2.0) * sigma * float(np.sum(wx * np.exp(-(K[mu] - p - center[mu]) ** 2 / (2.0 * s2))))
        total += value
    return total


def periodic_delta_defect(sigma: float, center, n: int, a0_list: Sequence[float], k_max: int = 6,
                          tail_tolerance: float = 1e-6) -> SweepReport:
    """
    Gaussian pairing defect <delta_periodic - delta, f> over an a0 sweep; passes when
    log(defect / a0^8) strictly decreases.
    """
    if n not in (2, 3):
        raise ConfigError(f"Periodic-delta pairing covers n in {{2, 3}}, got {n}")
    a0_list = [float(x) for x in a0_list]
    rows = []
    for a0 in a0_list:
        log_defect, log_tail = periodic_delta_log_defect(a0, n, sigma, center, k_max)
        if log_tail - log_defect > math.log(tail_tolerance):
            raise QuadratureError(
                f"Image-sum tail {math.exp(log_tail - log_defect):.3e} of the defect at a0={a0:g} "
                f"exceeds {tail_tolerance:g}; increase k_max"
            )
        rows.append((a0, log_defect, math.exp(log_defect), log_tail, log_defect - 8.0 * math.log(a0)))
    table = pd.DataFrame(rows, columns=["a0", "log_defect", "defect", "log_tail", "log_defect_over_a0_8"])
    scaled = table["log_defect_over_a0_8"].to_numpy()
    decreasing = bool(np.all(np.diff(scaled) < 0.0))
    status = SuiteStatus.PASS if decreasing else SuiteStatus.FAIL
    notes = [f"sigma={sigma:g}, center={list(np.asarray(center, dtype=float))}, images ||k||_inf <= {k_max}"]
    if n == 2:
        direct = two_point_image_quadrature(a0_list[0], sigma, center, k_max=min(k_max, 2))
        closed = math.exp(periodic_delta_log_defect(a0_list[0], 2, sigma, center, min(k_max, 2))[0])
        notes.append(f"Gauss-Hermite cross-check at a0={a0_list[0]:g}: relative difference "
                     f"{abs(direct - closed) / closed:.3e}")
    logger.info(f"[Verify:delta] n={n}: {status.value}")
    return SweepReport("delta", f"gaussian_n{n}", "a0", table, status, notes=notes + _sweep_notes(a0_list))


# --- suites ----------------------------------------------------------------------------------------

def _select(cases: Sequence[IndexCase], ln: Optional[Tuple[int, int]]):
    return [c for c in cases if ln is None or (c.loop, c.legs) == ln]


class RotationSuite(VerificationSuite):
    name = "rotation"

    def run(self, config: RunConfig, runner, ln=None) -> List[SweepReport]:
        cfg = config.task.rotation_suite
        reports = []
        for case in cfg.cases:
            if ln is not None and (case.loop, case.legs) != ln:
                continue
            reports.append(rotation_scaling_fit(
                case.loop, case.legs, case.momenta, case.rotation.build(), cfg.a, config.physics.m,
                config.physics.f, cfg.a0_list, config.quadrature, case.counterterms, cfg.floor, runner,
            ))
        return reports


class CauchySuite(VerificationSuite):
    name = "cauchy"

    def run(self, config: RunConfig, runner, ln=None) -> List[SweepReport]:
        cfg = config.task.cauchy_suite
        return [
            cauchy_convergence(case.loop, case.legs, case.momenta, config.physics.m, config.physics.f,
                               cfg.a0_list, config.quadrature, cfg.method, cfg.a, cfg.floor, runner)
            for case in _select(cfg.cases, ln)
        ]


class Lemma1Suite(VerificationSuite):
    name = "lemma1"

    def run(self, config: RunConfig, runner, ln=None) -> List[SweepReport]:
        cfg = config.task.lemma1_suite
        return [verify_lemma1(cfg.alphas, cfg.a_grid, cfg.a0_grid, config.quadrature, runner)]


class Lemma2Suite(VerificationSuite):
    name = "lemma2"

    def run(self, config: RunConfig, runner, ln=None) -> List[SweepReport]:
        cfg = config.task.lemma2_suite
        return [verify_lemma2(cfg.w_list, cfg.p_list, cfg.rotation.build(), cfg.a, config.physics.m,
                              cfg.a0_list, cfg.growth_limit, runner)]


class PowerCountingSuite(VerificationSuite):
    name = "power-counting"

    def run(self, config: RunConfig, runner, ln=None) -> List[SweepReport]:
        cfg = config.task.power_counting_suite
        return [
            power_counting_fit(case.loop, case.legs, case.momenta, cfg.a0, config.physics.m, config.physics.f,
                               cfg.a_list, case.multi_index, case.expected, case.window, cfg.method,
                               config.quadrature, runner)
            for case in _select(cfg.cases, ln)
        ]


class DeltaSuite(VerificationSuite):
    name = "delta"

    def run(self, config: RunConfig, runner, ln=None) -> List[SweepReport]:
        cfg = config.task.delta_suite
        return [
            periodic_delta_defect(cfg.sigma, cfg.center, n, cfg.a0_list, cfg.k_max, cfg.tail_tolerance)
            for n in cfg.legs
        ]


_SUITES: Dict[str, type] = {
    cls.name: cls
    for cls in (Lemma1Suite, Lemma2Suite, RotationSuite, CauchySuite, PowerCountingSuite, DeltaSuite)
}


def get_suite(name: str) -> VerificationSuite:
    """Factory for verification suites."""
    if name not in _SUITES:
        raise ValueError(f"Unknown suite type: {name}")
    return _SUITES[name]()
