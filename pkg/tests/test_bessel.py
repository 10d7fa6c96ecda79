import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from qstchain.bessel import J1_ARGMAX, J1_MAX, bessel_j, invert_j1
from qstchain.errors import DomainError, UnsatisfiableCalibration


def reference(n, z):
    """Arbitrary-precision value from mpmath, independent of the code under test."""
    with mpmath.workdps(40):
        return float(mpmath.besselj(n, z))


def test_values_at_zero():
    assert bessel_j(0, 0.0) == 1.0
    assert bessel_j(1, 0.0) == 0.0


def test_first_zero_of_j0():
    assert abs(bessel_j(0, 2.404826)) < 1e-6


def test_j1_maximum():
    assert bessel_j(1, 1.841184) == pytest.approx(0.581865, abs=1e-6)
    assert J1_MAX == pytest.approx(reference(1, J1_ARGMAX), abs=1e-15)


@pytest.mark.parametrize("order", [0, 1, 2, 5])
@pytest.mark.parametrize("z", [1e-3, 0.5, 1.0, 3.7, 5.99, 6.01, 9.3, 14.0, 19.99, 20.0])
def test_matches_arbitrary_precision(order, z):
    assert bessel_j(order, z) == pytest.approx(reference(order, z), abs=1e-12)


@given(st.integers(0, 4), st.floats(-20, 20))
def test_parity_and_accuracy(order, z):
    value = bessel_j(order, z)
    assert value == pytest.approx(reference(order, z), abs=1e-12)
    assert bessel_j(order, -z) == pytest.approx((-1) ** order * value, abs=1e-15)


def test_range_guard():
    with pytest.raises(DomainError):
        bessel_j(0, 20.5)
    with pytest.raises(DomainError):
        bessel_j(-1, 1.0)


def test_invert_j1_examples():
    assert invert_j1(0.0) == 0.0
    assert invert_j1(bessel_j(1, 1.0)) == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(UnsatisfiableCalibration):
        invert_j1(0.6)
    with pytest.raises(UnsatisfiableCalibration):
        invert_j1(-0.1)


@given(st.floats(0.0, J1_MAX))
def test_invert_j1_residual(target):
    f = invert_j1(target)
    assert 0.0 <= f <= J1_ARGMAX
    assert abs(bessel_j(1, f) - target) < 1e-10


# the inverse is ill-conditioned at the branch maximum, where dJ_1/df -> 0
@given(st.floats(0.0, 1.7))
def test_round_trip(f):
    assert invert_j1(bessel_j(1, f)) == pytest.approx(f, abs=1e-9)


def test_vectorised_against_scipy_is_independent():
    # a second, independent reference across a dense grid
    from scipy.special import jv

    z = np.linspace(-20, 20, 801)
    for n in range(4):
        ours = np.array([bessel_j(n, x) for x in z])
        assert np.max(np.abs(ours - jv(n, z))) < 1e-12
