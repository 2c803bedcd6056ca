"""
Tests for the verification suites and their building blocks.
"""
import math

import mpmath
import numpy as np
import pandas as pd
import pytest

from phi4flow.config import DEFAULT_FOUR_POINT, DEFAULT_SIX_POINT, QuadratureConfig, QuadratureSpec
from phi4flow.errors import ConfigError, QuadratureError
from phi4flow.interfaces import SuiteStatus, SweepReport, combine_status, reports_status
from phi4flow.models import LatticeParams
from phi4flow.reporting import format_summary
from phi4flow.modules.lattice_core import Rotation4
from phi4flow.modules.verification import (
    ABOVE_WINDOW,
    ROTATION_SLOPE_CEILING,
    axis_moment,
    cauchy_convergence,
    get_suite,
    lemma1_bound,
    lemma1_empirical,
    periodic_delta_defect,
    periodic_delta_log_defect,
    power_counting_fit,
    rotation_defect,
    rotation_scaling_fit,
    two_point_image_quadrature,
    verify_lemma1,
    verify_lemma2,
)
from phi4flow.utils import PointRunner, loglog_fit

SETTINGS = QuadratureConfig(brillouin=QuadratureSpec(order=8, depth=1, max_depth=3, tolerance=1e-6))
SIX = np.array(DEFAULT_SIX_POINT)
FOUR = np.array(DEFAULT_FOUR_POINT)
TWO = np.array([[0.4, -0.3, 0.2, 0.1], [-0.4, 0.3, -0.2, -0.1]])


def test_status_combination():
    print("\n[Test 1] Status combination")
    assert combine_status([SuiteStatus.PASS, SuiteStatus.INCONCLUSIVE]) == SuiteStatus.INCONCLUSIVE
    assert combine_status([SuiteStatus.INCONCLUSIVE, SuiteStatus.FAIL]) == SuiteStatus.FAIL
    assert combine_status([]) == SuiteStatus.PASS
    table = pd.DataFrame({"a0": [1.0]})
    by_design = SweepReport("rotation", "perm", "a0", table, SuiteStatus.INCONCLUSIVE, inconclusive_by_design=True)
    plain = SweepReport("rotation", "generic", "a0", table, SuiteStatus.INCONCLUSIVE)
    assert by_design.effective_status == SuiteStatus.PASS
    assert reports_status([by_design]) == SuiteStatus.PASS
    assert reports_status([by_design, plain]) == SuiteStatus.INCONCLUSIVE
    assert by_design.to_dict()["inconclusive_by_design"] is True


def test_rotation_defect_identity_and_hypercubic():
    print("\n[Test 2] Rotation defect vanishes for the identity and signed permutations")
    params = LatticeParams(a0=0.125, a=1.0, m=1.0, f=1.0)
    identity = rotation_defect(0, 6, SIX, Rotation4.identity(), params, SETTINGS, method="closed_form")
    assert identity.value == 0.0
    permutation = Rotation4.signed_permutation([1, 0, 3, 2], [1, -1, 1, 1])
    hyper = rotation_defect(0, 6, SIX, permutation, params, SETTINGS, method="closed_form")
    print(f"  signed permutation defect: {hyper.value:.3e}")
    assert abs(hyper.value) < 1e-14


def test_rotation_defect_scaling():
    print("\n[Test 3] Generic rotation defect shrinks with a0")
    rotation = Rotation4.generic_test_rotation()
    a0_list = [2.0 ** -k for k in range(3, 8)]
    defects = [
        rotation_defect(0, 6, SIX, rotation, LatticeParams(a0=a0, a=1.0, m=1.0, f=1.0), SETTINGS,
                        method="closed_form").value
        for a0 in a0_list
    ]
    fit = loglog_fit(a0_list, defects)
    print(f"  defects {['%.3e' % d for d in defects]}, slope {fit.slope:.3f}")
    assert fit.slope >= 0.85
    assert fit.residual < 0.05


def test_rotation_scaling_fit_tree_level():
    print("\n[Test 4] Rotation scaling fit through the flow solver")
    report = rotation_scaling_fit(0, 6, SIX, Rotation4.generic_test_rotation(), 1.0, 1.0, 1.0,
                                  [2.0 ** -k for k in range(4, 9)], SETTINGS)
    print(f"  {report.case}: {report.status.value}, slope {report.slope}")
    assert report.status == SuiteStatus.PASS
    assert report.slope >= 0.85
    assert len(report.table) == 5
    # tree-level defects fall like a0^2, past the upper edge of the window
    assert report.slope > ROTATION_SLOPE_CEILING
    assert report.flags == [ABOVE_WINDOW]
    assert report.to_dict()["flags"] == ["ABOVE_WINDOW"]
    assert "[ABOVE_WINDOW]" in format_summary([report])

    perm = rotation_scaling_fit(0, 6, SIX, Rotation4.signed_permutation([1, 0, 3, 2], [1, -1, 1, 1]),
                                1.0, 1.0, 1.0, [2.0 ** -k for k in range(4, 9)], SETTINGS)
    assert perm.status == SuiteStatus.INCONCLUSIVE
    assert perm.inconclusive_by_design
    assert perm.effective_status == SuiteStatus.PASS
    assert perm.flags == []

    with pytest.raises(ConfigError):
        rotation_scaling_fit(0, 6, SIX, Rotation4.generic_test_rotation(), 1.0, 1.0, 1.0, [0.5, 0.25], SETTINGS)
    with pytest.raises(ConfigError):
        rotation_scaling_fit(0, 6, SIX, Rotation4.generic_test_rotation(), 1.0, 1.0, 1.0, [0.0625, 0.125], SETTINGS)

def test_rotation_defect_antisymmetry():
    print("\n[Test 5] Tree-level defect is odd under O -> O^-1 with p -> Op")
    params = LatticeParams(a0=0.125, a=1.0, m=1.0, f=1.0)
    for rotation in (Rotation4.generic_test_rotation(), Rotation4.from_givens([(1, 3, 0.7), (2, 4, -0.4)])):
        forward = rotation_defect(0, 6, SIX, rotation, params, SETTINGS, method="closed_form").value
        rotated_labels = SIX @ rotation.matrix.T
        backward = rotation_defect(0, 6, rotated_labels, rotation.inverse(), params, SETTINGS,
                                   method="closed_form").value
        print(f"  {rotation.label}: D(O, p) = {forward:.6e}, D(O^-1, Op) = {backward:.6e}")
        assert forward != 0.0
        assert forward + backward == pytest.approx(0.0, abs=1e-12 * abs(forward))



def test_cauchy_convergence():
    print("\n[Test 6] Cauchy convergence")
    a0_list = [0.25, 0.125, 0.0625, 0.03125, 0.015625]
    tree = cauchy_convergence(0, 4, FOUR, 1.0, 1.0, a0_list, SETTINGS)
    assert tree.status == SuiteStatus.PASS
    assert any("converged" in note for note in tree.notes)

    tadpole = cauchy_convergence(1, 2, TWO, 1.0, 1.0, a0_list, SETTINGS, a=1.0)
    print(f"  L_12 at a=1: slope {tadpole.slope:.3f}")
    assert tadpole.status == SuiteStatus.PASS
    assert tadpole.slope >= 0.85

    with pytest.raises(ConfigError):
        cauchy_convergence(0, 4, FOUR * 40.0, 1.0, 1.0, a0_list, SETTINGS)


def test_lemma1():
    print("\n[Test 7] Gaussian moment bound")
    for alpha in (0.0, 1.0, 2.5, 4.0):
        exact = mpmath.quad(lambda u: u ** alpha * mpmath.exp(-u ** 2 / mpmath.pi ** 2), [0, mpmath.inf])
        assert axis_moment(alpha) == pytest.approx(float(exact), rel=1e-12)
    # per-axis integral of exp(-u^2/pi^2) over the line is pi^(3/2)
    assert lemma1_bound(0.0) == pytest.approx(math.pi ** 6 / (2 * math.pi) ** 4, rel=1e-14)
    with pytest.raises(ValueError):
        lemma1_bound(-1.0)

    for alpha in (0.0, 2.0):
        for a, a0 in [(1.0, 1.0), (1.0, 0.25), (0.5, 0.125)]:
            value = lemma1_empirical(alpha, a, a0, SETTINGS)
            print(f"  alpha={alpha:g} a={a:g} a0={a0:g}: {value:.6e} <= {lemma1_bound(alpha):.6e}")
            assert 0.0 < value <= lemma1_bound(alpha)

    report = verify_lemma1([0.0, 2.0], [1.0, 0.5], [1.0, 0.25], SETTINGS, PointRunner(1))
    assert report.status == SuiteStatus.PASS
    assert (report.table["ratio"] <= 1.0).all()
    assert len(report.notes) == 2
    with pytest.raises(ConfigError):
        verify_lemma1([0.0], [0.1], [0.5], SETTINGS)


def test_lemma2():
    print("\n[Test 8] Rotated kernel difference bound")
    w_list = [[0, 0, 0, 0], [1, 0, 0, 0], [1, 1, 0, 0]]
    p_list = [[0.3, -0.2, 0.5, 0.1], [0.7, 0.4, -0.3, 0.6]]
    a0_list = [2.0 ** -k for k in range(3, 8)]
    report = verify_lemma2(w_list, p_list, Rotation4.generic_test_rotation(), 1.0, 1.0, a0_list)
    print(f"  {report.status.value}: {report.notes[:3]}")
    assert report.status == SuiteStatus.PASS
    assert len(report.table) == len(w_list) * len(a0_list)

    identity = verify_lemma2(w_list, p_list, Rotation4.identity(), 1.0, 1.0, a0_list)
    assert identity.status == SuiteStatus.PASS
    assert all("identically zero" in note for note in identity.notes[:3])
    with pytest.raises(ConfigError):
        verify_lemma2([[2, 2, 0, 0]], p_list, Rotation4.identity(), 1.0, 1.0, a0_list)


def test_power_counting():
    print("\n[Test 9] Power counting exponent of the tree six-point function")
    a_list = [2.0 ** -k for k in range(2, 8)]
    report = power_counting_fit(0, 6, SIX, 2.0 ** -9, 1.0, 1.0, a_list, method="closed_form", settings=SETTINGS)
    print(f"  exponent {report.slope:.3f}, expected {report.expected:g}")
    assert report.expected == -2.0
    assert report.status == SuiteStatus.PASS

    constant = power_counting_fit(0, 4, FOUR, 2.0 ** -9, 1.0, 1.0, a_list, method="closed_form", settings=SETTINGS)
    assert constant.expected == 0.0
    assert constant.status == SuiteStatus.PASS

    narrow = power_counting_fit(0, 6, SIX, 2.0 ** -9, 1.0, 1.0, [0.25, 0.2], method="closed_form", settings=SETTINGS)
    assert narrow.status == SuiteStatus.INCONCLUSIVE


def test_periodic_delta():
    print("\n[Test 10] Periodic delta pairing")
    center = [0.1, 0.0, -0.2, 0.05]
    a0_list = [1.0, 0.5, 0.25, 0.125]
    for n in (2, 3):
        report = periodic_delta_defect(1.0, center, n, a0_list, k_max=6)
        print(f"  n={n}: {report.status.value}, log defects {report.table['log_defect'].round(2).tolist()}")
        assert report.status == SuiteStatus.PASS
        assert np.all(np.diff(report.table["log_defect_over_a0_8"]) < 0)

    log_defect, _ = periodic_delta_log_defect(1.0, 2, 1.0, center, k_max=1)
    direct = two_point_image_quadrature(1.0, 1.0, center, k_max=1)
    assert direct == pytest.approx(math.exp(log_defect), rel=1e-6)

    with pytest.raises(ConfigError):
        periodic_delta_defect(1.0, center, 4, a0_list)
    with pytest.raises(QuadratureError):
        periodic_delta_defect(10.0, center, 2, [4.0], k_max=1)


def test_suite_factory():
    print("\n[Test 11] Suite factory")
    for name in ("lemma1", "lemma2", "rotation", "cauchy", "power-counting", "delta"):
        assert get_suite(name).name == name
    with pytest.raises(ValueError, match="Unknown suite type"):
        get_suite("bogus")


if __name__ == "__main__":
    test_status_combination()
    test_rotation_defect_identity_and_hypercubic()
    test_rotation_defect_scaling()
    test_rotation_scaling_fit_tree_level()
    test_rotation_defect_antisymmetry()
    test_cauchy_convergence()
    test_lemma1()
    test_lemma2()
    test_power_counting()
    test_periodic_delta()
    test_suite_factory()
