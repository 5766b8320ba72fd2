"""Normal CDF and quantile against a 50-digit mpmath oracle.

Oracle: mpmath.ncdf evaluated at 50 decimal digits gives the forward CDF;
the quantile oracle inverts it by bisection on [-40, 40], which depends on
nothing but the forward CDF and so is independent of any inverse-normal
algorithm.
"""

import math

import mpmath as mp
import numpy as np
import pytest

from quantmeu import normal_cdf, normal_quantile
from quantmeu.errors import DomainError

mp.mp.dps = 50


def oracle_cdf(x: float) -> float:
    return float(mp.ncdf(mp.mpf(x)))


def oracle_quantile(p: float) -> float:
    # [DERIVED] bisection on the 50-digit forward CDF
    target = mp.mpf(p)
    lo, hi = mp.mpf(-40), mp.mpf(40)
    for _ in range(220):
        mid = (lo + hi) / 2
        if mp.ncdf(mid) < target:
            lo = mid
        else:
            hi = mid
    return float((lo + hi) / 2)


CDF_POINTS = [-8.0, -3.5, -1.0, -0.1, 0.0, 0.3, 1.0, 2.5, 6.0]

# covers all three rational-approximation branches: central, intermediate
# tail, and the far tail below ~1.4e-11
QUANTILE_POINTS = [
    1e-12, 1e-10, 1e-8, 1e-6, 1e-4, 0.01, 0.1, 0.25, 0.5,
    0.6, 0.9, 0.99, 1 - 1e-4, 1 - 1e-6, 1 - 1e-8,
]


@pytest.mark.parametrize("x", CDF_POINTS)
def test_normal_cdf_matches_oracle(x):
    expected = oracle_cdf(x)
    got = normal_cdf(x)
    assert got == pytest.approx(expected, rel=1e-14, abs=1e-300)


def test_normal_cdf_array():
    xs = np.array(CDF_POINTS)
    got = normal_cdf(xs)
    expected = np.array([oracle_cdf(x) for x in CDF_POINTS])
    np.testing.assert_allclose(got, expected, rtol=1e-14)


@pytest.mark.parametrize("p", QUANTILE_POINTS)
def test_normal_quantile_matches_oracle(p):
    expected = oracle_quantile(p)
    got = normal_quantile(p)
    assert got == pytest.approx(expected, rel=5e-15, abs=5e-15)


def test_normal_quantile_array_matches_scalar():
    ps = np.array(QUANTILE_POINTS)
    got = normal_quantile(ps)
    expected = np.array([normal_quantile(p) for p in QUANTILE_POINTS])
    np.testing.assert_array_equal(got, expected)


def test_normal_quantile_median_exact():
    assert normal_quantile(0.5) == 0.0


def test_normal_quantile_symmetry():
    for p in (0.01, 0.2, 0.45):
        assert normal_quantile(p) == pytest.approx(-normal_quantile(1 - p),
                                                   rel=1e-13)


def test_roundtrip_cdf_of_quantile():
    for p in (1e-6, 0.3, 0.5, 0.9, 1 - 1e-6):
        assert normal_cdf(normal_quantile(p)) == pytest.approx(p, rel=1e-12)


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5, math.nan])
def test_normal_quantile_domain(p):
    with pytest.raises(DomainError):
        normal_quantile(p)


def test_normal_quantile_array_domain():
    with pytest.raises(DomainError):
        normal_quantile(np.array([0.5, 1.0]))
