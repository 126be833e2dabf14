import math
from pathlib import Path

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mcfxt.errors import DomainError
from mcfxt.special import bessel_k1

ORACLE = Path(__file__).parent / "data" / "bessel_k1_oracle.csv"


def test_matches_prebuilt_table():
    data = np.loadtxt(ORACLE, delimiter=",", skiprows=1)
    got = bessel_k1(data[:, 0])
    assert np.max(np.abs(got / data[:, 1] - 1)) < 1e-13


@given(st.floats(min_value=0.05, max_value=50.0))
def test_matches_mpmath_anywhere(x):
    ref = float(mpmath.besselk(1, x))
    assert bessel_k1(x) == pytest.approx(ref, rel=1e-13)


@pytest.mark.parametrize("x", [1.999999, 2.0, 2.000001])
def test_continuous_across_branch_switch(x):
    assert bessel_k1(x) == pytest.approx(float(mpmath.besselk(1, x)), rel=1e-14)


def test_small_argument_limit():
    # K1(x) ~ 1/x as x -> 0
    assert bessel_k1(1e-8) * 1e-8 == pytest.approx(1.0, rel=1e-12)


def test_large_argument_asymptote():
    x = 700.0
    asym = math.sqrt(math.pi / (2 * x)) * math.exp(-x) * (1 + 3 / (8 * x) - 15 / (128 * x * x))
    assert bessel_k1(x) == pytest.approx(asym, rel=1e-7)


@given(st.floats(min_value=0.01, max_value=80.0), st.floats(min_value=1e-3, max_value=5.0))
def test_positive_and_decreasing(x, dx):
    a, b = bessel_k1(x), bessel_k1(x + dx)
    assert a > 0 and b > 0
    assert b < a


def test_array_input_keeps_shape():
    x = np.linspace(0.1, 10, 12).reshape(3, 4)
    out = bessel_k1(x)
    assert out.shape == (3, 4)
    assert out[1, 2] == bessel_k1(float(x[1, 2]))


@pytest.mark.parametrize("bad", [0.0, -1.0, float("nan")])
def test_domain_errors(bad):
    with pytest.raises(DomainError):
        bessel_k1(bad)


def test_domain_error_in_array():
    with pytest.raises(DomainError):
        bessel_k1(np.array([1.0, -2.0]))
