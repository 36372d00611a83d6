"""Newton map unit tests: step arithmetic, orbit statuses, multi-start clustering."""

import math

import mpmath
import pytest
from hypothesis import given, strategies as st

from nrq import (
    DerivativeZero,
    IterationPolicy,
    OrbitStatus,
    PolynomialProblem,
    iterate_orbit,
    multi_start_solve,
    newton_step,
    overlap_converged,
)

SQRT2_MINUS_2 = PolynomialProblem((-2.0, 0.0, 1.0))  # x^2 - 2
NO_REAL_ROOT = PolynomialProblem((1.0, 0.0, 1.0))  # x^2 + 1


def bisect_root(f, lo, hi, iters=200):
    """Plain bisection; the independent root oracle for fixed-point checks."""
    flo = f(lo)
    assert flo * f(hi) < 0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if flo * fm <= 0:
            hi = mid
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


def test_problem_validation():
    with pytest.raises(ValueError):
        PolynomialProblem((1.0,))  # constant
    with pytest.raises(ValueError):
        PolynomialProblem((1.0, 2.0, 0.0))  # zero leading coefficient
    with pytest.raises(ValueError):
        PolynomialProblem((0.0, math.inf))


def test_derivative_is_exact():
    p = PolynomialProblem((5.0, -3.0, 2.0, 7.0))
    assert p.derivative == (-3.0, 4.0, 21.0)
    assert p.degree == 3


def test_step_basic():
    assert newton_step(SQRT2_MINUS_2, 1.0) == 1.5


def test_step_two_cycle_value():
    # the map swaps +/- 1/sqrt(3); float rounding allows ~1 ulp of slack
    x = 1.0 / math.sqrt(3.0)
    assert newton_step(NO_REAL_ROOT, x) == pytest.approx(-x, abs=1e-15)


def test_step_pole():
    with pytest.raises(DerivativeZero):
        newton_step(NO_REAL_ROOT, 0.0)


def test_step_fn_matches_newton_step():
    step = NO_REAL_ROOT.step_fn()
    for x in (0.3, -1.7, 12.5, 1e-4):
        assert step(x) == newton_step(NO_REAL_ROOT, x)
    quartic = PolynomialProblem((0.0901, -0.06, 9.02, -6.0, 1.0))
    step4 = quartic.step_fn()
    for x in (0.3, -1.7, 2.9, 12.5):
        assert step4(x) == newton_step(quartic, x)


@given(st.floats(min_value=1e-6, max_value=1e6))
def test_step_is_odd_for_even_polynomial(x):
    # (x^2-1)/(2x) is odd, and IEEE rounding preserves the symmetry exactly
    assert newton_step(NO_REAL_ROOT, -x) == -newton_step(NO_REAL_ROOT, x)


def test_fixed_points_are_roots():
    cases = [
        (SQRT2_MINUS_2, [(1.0, 2.0), (-2.0, -1.0)]),
        # x^3 - 2x^2 - 5x + 6 = (x-1)(x-3)(x+2)
        (PolynomialProblem((6.0, -5.0, -2.0, 1.0)), [(0.5, 1.5), (2.5, 3.5), (-2.5, -1.5)]),
    ]
    for problem, brackets in cases:
        for lo, hi in brackets:
            root = bisect_root(problem.f, lo, hi)
            assert abs(newton_step(problem, root) - root) <= 1e-12 * (1.0 + abs(root))


def test_overlap_converged():
    assert overlap_converged(1.0, 1.0, 1e-12)
    assert not overlap_converged(1.0, 2.0, 1e-12)
    # threshold 1e-12 * (1 + 1e8) ~ 1e-4, so a 1e-5 move counts as converged
    assert overlap_converged(1e8, 1e8 + 1e-5, 1e-12)
    assert not overlap_converged(1e8, 1e8 + 1e-3, 1e-12)
    with pytest.raises(ValueError):
        overlap_converged(1.0, 1.0, 0.0)


def test_orbit_converges_to_sqrt2():
    orbit = iterate_orbit(SQRT2_MINUS_2, 1.0, IterationPolicy(max_steps=50))
    assert orbit.status is OrbitStatus.CONVERGED
    assert orbit.step <= 6
    oracle = float(mpmath.mpf(2) ** mpmath.mpf("0.5"))
    assert abs(orbit.value - oracle) <= 1e-12


def test_orbit_pole_hit():
    orbit = iterate_orbit(NO_REAL_ROOT, 1.0, IterationPolicy(max_steps=50))
    assert orbit.status is OrbitStatus.POLE_HIT
    assert orbit.step == 1
    assert orbit.iterates == (1.0, 0.0)


def test_orbit_two_cycle_breaks_before_100_steps():
    x0 = 1.0 / math.sqrt(3.0)
    orbit = iterate_orbit(NO_REAL_ROOT, x0, IterationPolicy(max_steps=100))
    assert orbit.status is OrbitStatus.RUNNING
    deviations = [min(abs(x - x0), abs(x + x0)) for x in orbit.iterates]
    assert max(deviations) > 0.1


def test_orbit_overflow():
    # x^2 - 2 with a huge start: first step squares past the overflow bound
    orbit = iterate_orbit(SQRT2_MINUS_2, 1e200, IterationPolicy(max_steps=10, overflow_bound=1e150))
    assert orbit.status is OrbitStatus.OVERFLOWED
    assert orbit.iterates == (1e200,)
    assert orbit.step == 0


def test_orbit_records_every_step():
    orbit = iterate_orbit(SQRT2_MINUS_2, 1.7, IterationPolicy(max_steps=30))
    assert orbit.iterates[0] == 1.7
    for prev, nxt in zip(orbit.iterates, orbit.iterates[1:]):
        assert newton_step(SQRT2_MINUS_2, prev) == nxt


def test_orbit_deterministic():
    a = iterate_orbit(NO_REAL_ROOT, 0.7, IterationPolicy(max_steps=500))
    b = iterate_orbit(NO_REAL_ROOT, 0.7, IterationPolicy(max_steps=500))
    assert a.iterates == b.iterates


def test_quadratic_convergence_constant():
    root = math.sqrt(2.0)
    for x0 in (1.2, 1.5, 2.0):
        orbit = iterate_orbit(SQRT2_MINUS_2, x0, IterationPolicy(max_steps=30))
        errors = [abs(x - root) for x in orbit.iterates]
        ratios = [
            errors[i + 1] / errors[i] ** 2
            for i in range(len(errors) - 1)
            if errors[i] > 1e-6
        ]
        assert ratios and max(ratios) <= 1.0


def test_policy_validation():
    with pytest.raises(ValueError):
        IterationPolicy(max_steps=0)
    with pytest.raises(ValueError):
        IterationPolicy(convergence_tol=0.0)
    with pytest.raises(ValueError):
        IterationPolicy(overflow_bound=-1.0)


def test_multi_start_two_roots():
    roots, missed = multi_start_solve(SQRT2_MINUS_2, [1.0, -1.0], IterationPolicy(max_steps=60))
    assert missed == 0
    values = sorted(roots)
    assert len(values) == 2
    assert values[0] == pytest.approx(-math.sqrt(2.0), abs=1e-9)
    assert values[1] == pytest.approx(math.sqrt(2.0), abs=1e-9)
    assert all(count == 1 for count in roots.values())


def test_multi_start_same_basin():
    roots, missed = multi_start_solve(SQRT2_MINUS_2, [2.0, 3.0, 4.0], IterationPolicy(max_steps=60))
    assert missed == 0
    assert len(roots) == 1
    ((value, count),) = roots.items()
    assert value == pytest.approx(math.sqrt(2.0), abs=1e-9)
    assert count == 3


def test_multi_start_no_real_roots():
    import numpy as np

    starts = np.random.default_rng(3).uniform(-5.0, 5.0, 100)
    roots, missed = multi_start_solve(NO_REAL_ROOT, starts, IterationPolicy(max_steps=100))
    assert roots == {}
    assert missed == 100


def test_multi_start_empty():
    with pytest.raises(ValueError):
        multi_start_solve(SQRT2_MINUS_2, [], IterationPolicy())
