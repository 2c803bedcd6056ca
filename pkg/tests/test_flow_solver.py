"""
Tests for the perturbative flow solver, counterterm shooting and closed-form evaluators.
Most quadrature settings are reduced so the module runs quickly; the a0 = 1/8 checks use the defaults.
"""
import itertools
import math

import numpy as np
import pytest

from phi4flow.config import DEFAULT_FOUR_POINT, DEFAULT_SIX_POINT, LambdaGridConfig, QuadratureConfig, QuadratureSpec
from phi4flow.errors import ConfigError, MomentumConservationError, OutOfScopeError
from phi4flow.models import LatticeParams
from phi4flow.modules.flow_solver import (
    ClosedFormEvaluator,
    FlowSolver,
    RotationContext,
    get_evaluator,
    get_solver,
    routing_coefficients,
    rsy_channels,
    tadpole_zone_quadrature,
)
from phi4flow.modules.lattice_core import MultiIndex, Rotation4

SETTINGS = QuadratureConfig(
    brillouin=QuadratureSpec(order=8, depth=1, max_depth=3, tolerance=1e-6),
    flow=LambdaGridConfig(panels=8, order=6, top_panels=2),
    proper_time_panels=12,
    proper_time_order=8,
)
A0, M, F = 0.25, 1.0, 1.0
SIX = np.array(DEFAULT_SIX_POINT)
FOUR = np.array(DEFAULT_FOUR_POINT)
# shifted bubbles run on the full zone without the hypercubic reduction
LOOSE = QuadratureConfig(
    brillouin=QuadratureSpec(order=8, depth=1, max_depth=2, tolerance=1e-3),
    flow=LambdaGridConfig(panels=6, order=6, top_panels=2),
    proper_time_panels=12,
    proper_time_order=8,
)
TWO = np.array([[0.4, -0.3, 0.2, 0.1], [-0.4, 0.3, -0.2, -0.1]])


def test_channel_decomposition():
    print("\n[Test 1] Channel decompositions")
    assert len(rsy_channels(4, 1)) == 4
    assert len(rsy_channels(6, 3)) == 10
    assert rsy_channels(6, 3).ordered_count == 20
    assert len(rsy_channels(2, 1)) == 1
    assert rsy_channels(4, 2).ordered_count == 6
    with pytest.raises(ValueError):
        rsy_channels(4, 4)
    # p_{n-1} is eliminated: P = p0 + p3 = -(p1 + p2)
    assert routing_coefficients(4, (0, 3)) == [0.0, -1.0, -1.0]
    assert routing_coefficients(4, (0, 1)) == [1.0, 1.0, 0.0]


def test_tree_level_functions():
    print("\n[Test 2] Tree-level values")
    solver = FlowSolver(A0, M, F, SETTINGS)
    params = LatticeParams(a0=A0, a=1.0, m=M, f=F)
    assert solver.evaluate(0, 4, FOUR, params).value == F
    assert solver.evaluate(0, 2, TWO, params).value == 0.0
    odd = np.array([[0.1, 0.2, 0.0, 0.0], [0.3, -0.1, 0.0, 0.0], [-0.4, -0.1, 0.0, 0.0]])
    assert solver.evaluate(0, 3, odd, params).value == 0.0
    assert solver.evaluate(1, 5, np.zeros((5, 4)), params).value == 0.0
    assert solver.rhs(0, 3, odd, 1.0) == 0.0

    flow = solver.evaluate(0, 6, SIX, params)
    closed = ClosedFormEvaluator(A0, M, F, SETTINGS).evaluate(0, 6, SIX, params)
    print(f"  L_06 flow {flow.value:.12e}, closed form {closed.value:.12e}")
    assert flow.value == pytest.approx(closed.value, rel=1e-6)
    assert flow.value < 0.0
    # the bare six-point vertex vanishes
    assert solver.evaluate(0, 6, SIX, params.with_a(A0)).value == 0.0


def test_tree_six_point_derivatives():
    print("\n[Test 3] Six-point derivatives against finite differences")
    solver = FlowSolver(A0, M, F, SETTINGS)
    params = LatticeParams(a0=A0, a=1.0, m=M, f=F)
    h = 1e-4

    def shifted(leg, mu, step):
        momenta = SIX.copy()
        momenta[leg, mu] += step
        momenta[5, mu] -= step
        return float(solver.evaluate(0, 6, momenta, params).value)

    for leg, mu in [(0, 0), (2, 3)]:
        w = MultiIndex.single(5, leg, mu)
        exact = solver.evaluate_derivative(0, 6, SIX, w, params).value
        fd = (shifted(leg, mu, h) - shifted(leg, mu, -h)) / (2 * h)
        print(f"  d/dp{leg + 1}_{mu}: {exact:.10e} vs {fd:.10e}")
        assert exact == pytest.approx(fd, rel=1e-6)

    w2 = MultiIndex.single(5, 1, 2, order=2)
    second = solver.evaluate_derivative(0, 6, SIX, w2, params).value
    fd2 = (shifted(1, 2, h) - 2 * shifted(1, 2, 0.0) + shifted(1, 2, -h)) / h ** 2
    assert second == pytest.approx(fd2, rel=1e-4)
    closed = ClosedFormEvaluator(A0, M, F, SETTINGS).evaluate(0, 6, SIX, params, w=w2).value
    assert second == pytest.approx(closed, rel=1e-6)

    with pytest.raises(OutOfScopeError):
        solver.evaluate_derivative(0, 6, SIX, MultiIndex.single(5, 0, 0, order=3), params)


def test_one_loop_two_point():
    print("\n[Test 4] One-loop two-point function and d_1")
    solver = get_solver(A0, M, F, SETTINGS)
    closed = ClosedFormEvaluator(A0, M, F, SETTINGS)
    entry = solver.counterterms(1)
    reference = closed.counterterms(1)
    print(f"  d_1 flow {entry.d:.10e}, heat kernel {reference.d:.10e}")
    assert entry.d == pytest.approx(reference.d, rel=1e-4)
    assert entry.d < 0.0
    assert entry.b == 0.0

    for a in (1.0, 2.0):
        params = LatticeParams(a0=A0, a=a, m=M, f=F)
        flow = solver.evaluate(1, 2, TWO, params)
        exact = closed.evaluate(1, 2, TWO, params)
        print(f"  L_12(a={a:g}) flow {flow.value:.10e}, heat kernel {exact.value:.10e}")
        assert flow.value == pytest.approx(exact.value, rel=1e-4)
    zone = tadpole_zone_quadrature(A0, M, 1.0, SETTINGS)
    assert -0.5 * F * zone.value == pytest.approx(closed.l12(1.0), rel=1e-5)


def test_renormalization_conditions():
    print("\n[Test 5] Renormalization conditions at a = inf")
    solver = get_solver(A0, M, F, SETTINGS)
    params = LatticeParams(a0=A0, a=math.inf, m=M, f=F)
    zero2 = np.zeros((2, 4))
    zero4 = np.zeros((4, 4))
    curvature = MultiIndex.from_rows([[2, 0, 0, 0]])
    l12 = solver.evaluate(1, 2, zero2, params).value
    slope = solver.evaluate(1, 2, zero2, params, w=curvature).value
    l14 = solver.evaluate(1, 4, zero4, params).value
    print(f"  L_12(0) = {l12:.3e}, d_p^2 L_12(0) = {slope:.3e}, L_14(0) = {l14:.3e}")
    assert abs(l12) < 1e-12
    assert abs(slope) < 1e-12
    assert abs(l14) < 1e-10

    c1 = solver.counterterms(1).c
    reference = ClosedFormEvaluator(A0, M, F, SETTINGS).counterterms(1).c
    print(f"  c_1 flow {c1:.10e}, bubble {reference:.10e}")
    assert c1 == pytest.approx(reference, rel=1e-3)
    assert c1 > 0.0


def test_one_loop_four_point_against_bubbles():
    print("\n[Test 6] L_14 flow against the bubble representation")
    solver = get_solver(A0, M, F, LOOSE)
    closed = ClosedFormEvaluator(A0, M, F, LOOSE)
    params = LatticeParams(a0=A0, a=1.0, m=M, f=F)
    flow = solver.evaluate(1, 4, FOUR, params)
    exact = closed.evaluate(1, 4, FOUR, params)
    print(f"  flow {flow.value:.10e}, bubbles {exact.value:.10e}")
    assert flow.value == pytest.approx(exact.value, rel=1e-2, abs=1e-5)


def test_rotated_tree_level():
    print("\n[Test 7] Rotated lattice at tree level")
    rotation = Rotation4.generic_test_rotation()
    ctx = RotationContext(rotation=rotation)
    params = LatticeParams(a0=A0, a=1.0, m=M, f=F)
    flow = FlowSolver(A0, M, F, SETTINGS, ctx).evaluate(0, 6, SIX, params)
    closed = ClosedFormEvaluator(A0, M, F, SETTINGS, ctx).evaluate(0, 6, SIX, params)
    plain = ClosedFormEvaluator(A0, M, F, SETTINGS).evaluate(0, 6, SIX, params)
    assert flow.value == pytest.approx(closed.value, rel=1e-6)
    assert flow.value != plain.value
    with pytest.raises(OutOfScopeError):
        ClosedFormEvaluator(A0, M, F, SETTINGS, ctx).evaluate(1, 2, TWO, params)

    assert RotationContext(rotation=Rotation4.identity()).key() == "none"
    assert not RotationContext(rotation=Rotation4.identity()).is_rotated
    assert RotationContext(rotation, "refit").key() != RotationContext(rotation, "inherited").key()


def test_errors():
    print("\n[Test 8] Error handling")
    solver = get_solver(A0, M, F, SETTINGS)
    params = LatticeParams(a0=A0, a=1.0, m=M, f=F)
    assert get_solver(A0, M, F, SETTINGS) is solver
    with pytest.raises(OutOfScopeError):
        solver.evaluate(2, 4, FOUR, params)
    with pytest.raises(OutOfScopeError):
        solver.evaluate(1, 6, SIX, params)
    with pytest.raises(OutOfScopeError):
        solver.counterterms(3)
    with pytest.raises(MomentumConservationError):
        solver.evaluate(0, 4, FOUR + 0.1, params)
    with pytest.raises(ConfigError):
        solver.evaluate(0, 4, FOUR, params.with_a0(0.125))
    with pytest.raises(ConfigError):
        solver.evaluate(0, 4, FOUR, params, w=MultiIndex.single(2, 0, 0))
    with pytest.raises(ValueError, match="Unknown evaluator type"):
        get_evaluator("monte_carlo", A0, M, F)
    with pytest.raises(ConfigError):
        FlowSolver(1.5, M, F)

def test_infrared_nodes_are_skipped():
    print("\n[Test 9] Deep-infrared flow scales contribute nothing")
    solver = FlowSolver(A0, M, F, SETTINGS)
    deep = 0.1
    assert solver.is_negligible(deep)
    assert solver.is_negligible(0.0)
    assert solver.tadpole_rate(deep) == 0.0
    rates = solver.bubble_rates(np.zeros((3, 4)), deep)
    assert np.all(rates.value == 0.0)
    # exp(-25) is small but resolved: the scale floor lets it converge
    shallow = 0.2
    assert not solver.is_negligible(shallow)
    rate = solver.tadpole_rate(shallow)
    print(f"  tadpole rate at lambda={shallow}: {rate:.3e}, scale {solver.rate_scale:.3e}")
    assert rate < 0.0
    assert abs(rate) < 1e-6 * solver.rate_scale
    assert solver.bubble_scale((2, 0, 0, 0)) == pytest.approx(solver.bubble_scale() / M ** 2)


def test_default_quadrature_one_loop_oracles():
    print("\n[Test 10] Default quadrature: one-loop two-point and counterterms at a0 = 1/8")
    a0 = 0.125
    solver = get_solver(a0, M, F)
    closed = ClosedFormEvaluator(a0, M, F)
    assert solver.settings.brillouin.max_depth is None
    entry = solver.counterterms(1)
    reference = closed.counterterms(1)
    print(f"  d_1 flow {entry.d:.14e}, heat kernel {reference.d:.14e}")
    assert entry.d == pytest.approx(reference.d, rel=1e-8)
    assert entry.b == 0.0
    print(f"  c_1 flow {entry.c:.12e}, bubble {reference.c:.12e}")
    assert entry.c == pytest.approx(reference.c, rel=1e-5)

    for a in (0.5, 1.0):
        params = LatticeParams(a0=a0, a=a, m=M, f=F)
        flow = solver.evaluate(1, 2, TWO, params).value
        exact = closed.evaluate(1, 2, TWO, params).value
        print(f"  L_12(a={a:g}) flow {flow:.14e}, heat kernel {exact:.14e}")
        assert flow == pytest.approx(exact, rel=1e-8)

    # renormalization conditions at a = inf
    params = LatticeParams(a0=a0, a=math.inf, m=M, f=F)
    zero2 = np.zeros((2, 4))
    curvature = MultiIndex.from_rows([[2, 0, 0, 0]])
    assert abs(solver.evaluate(1, 2, TWO, params).value) <= 1e-12 * abs(entry.d)
    assert abs(solver.evaluate(1, 2, zero2, params).value) <= 1e-12 * abs(entry.d)
    assert solver.evaluate(1, 2, zero2, params, w=curvature).value == 0.0
    l14 = solver.evaluate(1, 4, np.zeros((4, 4)), params).value
    print(f"  L_14(0) at a = inf: {l14:.3e}")
    assert abs(l14) <= 1e-10 * 24.0 * entry.c


def test_one_loop_two_point_is_momentum_independent():
    print("\n[Test 11] L_12(p) on a 3^4 momentum grid")
    a0 = 0.125
    solver = get_solver(a0, M, F)
    params = LatticeParams(a0=a0, a=1.0, m=M, f=F)
    origin = solver.evaluate(1, 2, np.zeros((2, 4)), params).value
    worst = 0.0
    for p in itertools.product((-1.0, 0.0, 1.3), repeat=4):
        p = np.array(p)
        value = solver.evaluate(1, 2, np.stack([p, -p]), params).value
        worst = max(worst, abs(value - origin))
    print(f"  max |L_12(p) - L_12(0)| = {worst:.3e} against |L_12(0)| = {abs(origin):.3e}")
    assert worst <= 1e-9 * abs(origin)


def test_tree_six_point_default_grid():
    print("\n[Test 12] L_06 flow against the closed form on the default lambda grid")
    a0 = 0.125
    solver = get_solver(a0, M, F)
    closed = ClosedFormEvaluator(a0, M, F)
    configurations = [SIX, 3.0 * SIX, SIX[[2, 0, 5, 1, 4, 3]] * -1.5]
    for a in (1.0, math.inf):
        params = LatticeParams(a0=a0, a=a, m=M, f=F)
        for momenta in configurations:
            flow = solver.evaluate(0, 6, momenta, params).value
            exact = closed.evaluate(0, 6, momenta, params).value
            print(f"  a={a:g}: flow {flow:.14e}, closed form {exact:.14e}")
            assert flow == pytest.approx(exact, rel=1e-8)


def test_permutation_invariance():
    print("\n[Test 13] CAS functions are symmetric under leg permutations")
    solver = get_solver(A0, M, F, SETTINGS)
    closed = ClosedFormEvaluator(A0, M, F, SETTINGS)
    params = LatticeParams(a0=A0, a=1.0, m=M, f=F)
    six = solver.evaluate(0, 6, SIX, params).value
    for perm in [(1, 0, 2, 3, 4, 5), (5, 4, 3, 2, 1, 0), (2, 4, 0, 5, 1, 3)]:
        assert solver.evaluate(0, 6, SIX[list(perm)], params).value == pytest.approx(six, rel=1e-12)
    four = closed.evaluate(1, 4, FOUR, params).value
    for perm in itertools.permutations(range(4)):
        assert closed.evaluate(1, 4, FOUR[list(perm)], params).value == pytest.approx(four, rel=1e-12)
    two = solver.evaluate(1, 2, TWO, params).value
    assert solver.evaluate(1, 2, TWO[::-1], params).value == pytest.approx(two, rel=1e-12)



if __name__ == "__main__":
    test_channel_decomposition()
    test_tree_level_functions()
    test_tree_six_point_derivatives()
    test_one_loop_two_point()
    test_renormalization_conditions()
    test_one_loop_four_point_against_bubbles()
    test_rotated_tree_level()
    test_errors()
    test_infrared_nodes_are_skipped()
    test_default_quadrature_one_loop_oracles()
    test_one_loop_two_point_is_momentum_independent()
    test_tree_six_point_default_grid()
    test_permutation_invariance()
