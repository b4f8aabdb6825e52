from fractions import Fraction

import mpmath
import pytest
from mpmath import mp

from simplicial.errors import ValidationError
from simplicial.height import Slope
from simplicial.tension import (breakpoints, check_supermultiplicative, estimate_tension, log_sigma,
                                midpoint_convexity_probe, sigma_n, sigma_zero_offset)

FLAT = Slope.zero(2)


def test_breakpoints_of_the_flat_slope():
    assert breakpoints(FLAT, 2) == [0, 1, 2]


def test_breakpoints_lie_in_one_period():
    s = Slope((Fraction(1, 2), Fraction(-1, 4), Fraction(-1, 4)))
    points = breakpoints(s, 4)
    assert points[0] == 0
    assert all(0 <= a < 3 for a in points)
    assert all((4 * a).denominator == 1 for a in points)


def test_breakpoints_reject_slopes_outside_S():
    with pytest.raises(ValidationError):
        breakpoints(Slope((2, -1, -1)), 2)


def test_log_sigma_precision():
    value = log_sigma(4, 2, 2, precision=50)
    with mp.workdps(50):
        assert abs(value + mpmath.log(2) / 2) < mpmath.mpf(10) ** -45
    assert log_sigma(1, 3, 2) == 0


def test_sigma_on_the_single_vertex_box():
    value, offset, total = sigma_n(FLAT, 2)
    assert total == 1
    assert offset == 0
    assert value == 0
    assert sigma_zero_offset(FLAT, 2) == (0, 1)


def test_sigma_parallel_matches():
    assert sigma_n(FLAT, 3, workers=2) == sigma_n(FLAT, 3)


def test_estimate_tension_rows():
    estimate = estimate_tension(FLAT, [2, 3])
    assert [e.n for e in estimate.entries] == [2, 3]
    assert estimate.sigma(2) == 0
    for entry in estimate.entries:
        assert -mpmath.log(2) <= entry.sigma <= 0
        assert entry.count >= 1
    assert estimate.entries[0].to_row()[:3] == ["2", "0", "1"]


def test_estimate_tension_d3():
    estimate = estimate_tension(Slope.zero(3), [2])
    assert estimate.entries[0].count == 1


def test_supermultiplicative():
    report = check_supermultiplicative(FLAT, 2, 2)
    assert report.small == 1
    assert report.large >= 1
    assert report.holds
    with pytest.raises(ValidationError):
        check_supermultiplicative(FLAT, 2, 0)


def test_midpoint_convexity_report():
    report = midpoint_convexity_probe(FLAT, Slope.extreme(2, 1), 2)
    assert report.n == 2
    assert report.gap == (report.sigma_first + report.sigma_second) / 2 - report.sigma_mid
    with pytest.raises(ValidationError):
        midpoint_convexity_probe(FLAT, Slope.zero(3), 2)


@pytest.mark.slow
def test_midpoint_convexity_between_opposite_tilts():
    s = Slope((Fraction(1, 2), Fraction(-1, 4), Fraction(-1, 4)))
    report = midpoint_convexity_probe(s, Slope(tuple(-v for v in s.values)), 4)
    for value in (report.sigma_first, report.sigma_second, report.sigma_mid):
        assert -mpmath.log(2) <= value <= 0


@pytest.mark.parametrize("i", [1, 2, 3])
def test_extreme_slopes_are_frozen(i):
    s = Slope.extreme(2, i)
    for n in (2, 3, 4):
        value, _, total = sigma_n(s, n)
        assert total == 1
        assert value == 0
    estimate = estimate_tension(s, [2, 3, 4])
    assert [e.count for e in estimate.entries] == [1, 1, 1]
    assert all(e.sigma == 0 for e in estimate.entries)


def test_extreme_slope_is_frozen_in_three_dimensions():
    value, _, total = sigma_n(Slope.extreme(3, 4), 3)
    assert (value, total) == (0, 1)
