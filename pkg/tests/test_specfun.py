import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from perovres.errors import DomainError
from perovres.specfun import EULER_GAMMA, GreenKernelKind, bessel_j0, bessel_y0, green, hankel1_0, kernel

mp.mp.dps = 40


def series_j0(x):
    """Maclaurin series of J0 in extended precision."""
    x = mp.mpf(x)
    q = (x / 2) ** 2
    term, total, m = mp.mpf(1), mp.mpf(1), 0
    while abs(term) > mp.mpf(10) ** -35:
        m += 1
        term *= -q / (m * m)
        total += term
    return total


def series_y0(x):
    """Log-plus-series form of Y0 in extended precision."""
    x = mp.mpf(x)
    q = (x / 2) ** 2
    term, tail, harmonic, m = mp.mpf(1), mp.mpf(0), mp.mpf(0), 0
    while True:
        m += 1
        term *= -q / (m * m)
        harmonic += mp.mpf(1) / m
        tail -= term * harmonic
        if abs(term * harmonic) < mp.mpf(10) ** -35:
            break
    return 2 / mp.pi * ((mp.log(x / 2) + mp.euler) * series_j0(x) + tail)


def test_constants():
    assert EULER_GAMMA == pytest.approx(float(mp.euler), abs=1e-16)
    assert bessel_j0(0.0) == 1.0


def test_j0_first_zero():
    f = lambda x: float(series_j0(x))
    lo, hi = 2.0, 3.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if f(lo) * f(mid) > 0 else (lo, mid)
    assert lo == pytest.approx(2.404825557695773, abs=1e-12)
    assert abs(bessel_j0(2.404825557695773)) < 1e-10


@pytest.mark.parametrize("x", [0.01, 0.5, 1.0, 3.3, 7.9, 8.0, 8.1, 12.0, 24.9, 25.1, 33.0, 50.0])
def test_against_mpmath(x):
    assert bessel_j0(x) == pytest.approx(float(mp.besselj(0, x)), abs=1e-12)
    assert bessel_y0(x) == pytest.approx(float(mp.bessely(0, x)), abs=1e-11)


def test_dense_grid_accuracy():
    xs = np.linspace(0.0, 50.0, 501)[1:]
    err_j = max(abs(bessel_j0(x) - float(mp.besselj(0, x))) for x in xs)
    err_y = max(abs(bessel_y0(x) - float(mp.bessely(0, x))) for x in np.concatenate(([1e-6, 1e-3], xs)))
    assert err_j < 1e-12
    assert err_y < 1e-10


@pytest.mark.parametrize("x", [1.0, 0.1, 5.0])
def test_series_oracles(x):
    assert bessel_j0(x) == pytest.approx(float(series_j0(x)), abs=1e-13)
    assert bessel_y0(x) == pytest.approx(float(series_y0(x)), abs=1e-13)


@pytest.mark.parametrize("x", [7.999999, 8.000001, 24.999999, 25.000001])
def test_regime_switch_continuity(x):
    assert bessel_j0(x) == pytest.approx(float(mp.besselj(0, x)), abs=1e-13)
    assert bessel_y0(x) == pytest.approx(float(mp.bessely(0, x)), abs=1e-13)


def test_y0_log_singularity():
    assert bessel_y0(1e-8) < -10
    for bad in (0.0, -1.0):
        with pytest.raises(DomainError):
            bessel_y0(bad)
    with pytest.raises(DomainError):
        bessel_j0(math.nan)


def test_hankel_values():
    h = hankel1_0(1.0)
    assert h.real == pytest.approx(0.7651976865579666, abs=1e-14)
    assert h.imag == pytest.approx(0.08825696421567696, abs=1e-14)
    assert abs(hankel1_0(50.0)) * math.sqrt(math.pi * 50.0 / 2.0) == pytest.approx(1.0, abs=1e-3)
    with pytest.raises(DomainError):
        hankel1_0(0.0)
    with pytest.raises(DomainError):
        hankel1_0(1.0 + 1j)


@given(st.floats(1e-3, 60.0))
def test_hankel_real_part_is_j0(x):
    assert hankel1_0(x).real == bessel_j0(x)


def test_green_values():
    assert green(1.0, 0.0, 3) == pytest.approx(-1.0 / (4.0 * math.pi))
    assert green(1.0, 1.0, 2) == pytest.approx(0.02206424105391924 - 0.19129942163949166j, abs=1e-13)
    assert green(2.0, 1.0 + 0.5j, 3) == pytest.approx(-np.exp(1j * (2.0 + 1.0j)) / (8.0 * math.pi))
    with pytest.raises(DomainError):
        green(0.0, 1.0, 2)
    with pytest.raises(DomainError):
        green(1.0, 1.0, 4)
    with pytest.raises(DomainError):
        green(1.0, 1j, 2)


@given(st.lists(st.floats(-5, 5), min_size=6, max_size=6), st.integers(2, 3))
def test_green_depends_on_distance_only(c, dim):
    x, y = np.array(c[:dim]), np.array(c[3 : 3 + dim])
    r1, r2 = float(np.linalg.norm(x - y)), float(np.linalg.norm(y - x))
    if r1 < 1e-6:
        return
    assert green(r1, 0.8, dim) == green(r2, 0.8, dim)


def test_kernels():
    assert kernel(GreenKernelKind.STATIC_2D, 1.0) == 0.0
    assert kernel(GreenKernelKind.STATIC_2D, math.e) == pytest.approx(-1.0 / (2.0 * math.pi))
    assert kernel(GreenKernelKind.DERIV_2D, 1.0) == pytest.approx(-1j / (4.0 * math.pi))
    assert kernel("full3d", 2.0, 0.5) == green(2.0, 0.5, 3)
    assert kernel("full2d", 2.0, 0.5) == green(2.0, 0.5, 2)
    arr = kernel(GreenKernelKind.STATIC_2D, np.array([1.0, math.e]))
    assert arr.shape == (2,)
    with pytest.raises(DomainError):
        kernel(GreenKernelKind.DERIV_2D, np.array([1.0, 0.0]))
