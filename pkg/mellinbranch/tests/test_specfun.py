import warnings

import numpy as np
from hypothesis import assume, given
from hypothesis.strategies import floats
from pytest import mark, raises
from scipy import special

from mellinbranch.errors import (DomainError, PoleError, QuadratureWarning, SeriesOverflowError,
                                 ValidationError)
from mellinbranch.specfun import (HankelContour, MLOrder, completely_monotone_on_grid, gamma,
                                  log_gamma, mittag_leffler, mittag_leffler_hankel,
                                  mittag_leffler_series, recip_gamma_hankel, rgamma)


@mark.parametrize("z", [0.5, 1.0, 2.0, 3.5, 7.25, -0.5, -2.5, 1 + 1j, 0.3 - 2j, -3.2 + 0.7j])
def test_gamma_matches_scipy(z):
    expected = special.gamma(z)
    assert abs(gamma(z) - expected) <= 1e-12 * abs(expected)


@given(floats(min_value=-20, max_value=20), floats(min_value=-30, max_value=30))
def test_log_gamma_exponentiates_to_scipy_gamma(x, y):
    # Stay clear of the poles, where both sides lose digits.
    assume(abs(y) > 1e-3 or x > 0.5 or abs(x - round(x)) > 1e-3)
    z = complex(x, y)
    expected = special.loggamma(z)
    # Only equal modulo 2 pi i.
    diff = log_gamma(z) - expected
    assert abs(diff.real) <= 1e-9 * max(1.0, abs(expected))
    assert abs(np.sin(0.5 * diff.imag)) <= 1e-9 * max(1.0, abs(expected))


def test_gamma_is_vectorised():
    z = np.array([0.5, 1.5, 2.5])
    np.testing.assert_allclose(gamma(z).real, special.gamma(z), rtol=1e-13)


@mark.parametrize("z", [0, -1, -2, -7])
def test_gamma_poles_raise(z):
    with raises(PoleError):
        gamma(z)


def test_rgamma_is_zero_at_poles():
    assert rgamma(-3) == 0
    np.testing.assert_allclose(rgamma(np.array([0.0, 2.0])), [0.0, 1.0], atol=1e-15)


@mark.parametrize("z", [0.5, 1.0, 2.5, 4.0, -1.5, 3 + 1j, 0.2 - 0.5j])
def test_recip_gamma_hankel(z):
    assert abs(recip_gamma_hankel(z) - special.rgamma(z)) <= 1e-9


def test_recip_gamma_hankel_warns_on_short_contour():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        recip_gamma_hankel(0.5, contour=HankelContour(cutoff=5.0))
    assert any(issubclass(w.category, QuadratureWarning) for w in caught)


@mark.parametrize("z", [0.5, 2.5, -1.5, 3 + 1j])
def test_recip_gamma_on_tilted_contour(z):
    contour = HankelContour().tilted(0.8 * np.pi)
    assert contour.cutoff > HankelContour().cutoff
    assert abs(recip_gamma_hankel(z, contour=contour) - special.rgamma(z)) <= 1e-9


def test_hankel_contour_validation():
    with raises(ValidationError):
        HankelContour(radius=2.0, cutoff=1.0)
    with raises(ValidationError):
        HankelContour(steps_ray=4)
    with raises(ValidationError):
        HankelContour(ray_angle=0.4 * np.pi)
    with raises(ValidationError):
        HankelContour(ray_angle=1.1 * np.pi)


def test_ml_order_validation():
    MLOrder(1.0)
    for bad in (0.0, 1.2, -0.5):
        with raises(ValidationError):
            MLOrder(bad)


def test_mittag_leffler_series_closed_forms():
    assert mittag_leffler_series(0.5, 0.0) == 1
    for u in (0.1, 1.0, 2.5):
        assert abs(mittag_leffler_series(1.0, u) - np.exp(-u)) <= 1e-14
        expected = np.exp(u * u) * special.erfc(u)
        assert abs(mittag_leffler_series(0.5, u) - expected) <= 1e-12


def test_mittag_leffler_derivative_at_zero():
    rho = 0.5
    h = 1e-6
    slope = (mittag_leffler_series(1 - rho, h) - mittag_leffler_series(1 - rho, -h)) / (2 * h)
    assert abs(-slope - 1.0 / special.gamma(2 - rho)) <= 1e-8


def test_mittag_leffler_series_reports_cancellation():
    with raises(SeriesOverflowError):
        mittag_leffler_series(0.3, 5.0)
    with raises(SeriesOverflowError):
        mittag_leffler_series(0.5, 1e200)


@mark.parametrize("nu", [0.8, 0.9, 1.0])
@mark.parametrize("u", np.linspace(0.0, 5.0, 6))
def test_series_and_hankel_agree(nu, u):
    assert abs(mittag_leffler_series(nu, u) - mittag_leffler_hankel(nu, u)) <= 1e-9


@mark.parametrize("nu, u", [(0.3, 0.5), (0.3, 1.0), (0.3, 1.5), (0.5, 1.0), (0.5, 2.0),
                          (0.7, 1.0), (0.7, 2.5), (0.7, 4.0)])
def test_series_and_hankel_agree_small_order(nu, u):
    assert abs(mittag_leffler_series(nu, u) - mittag_leffler_hankel(nu, u)) <= 1e-9


def test_hankel_residue_continuation_for_complex_argument():
    # E_1(u) = exp(-u) everywhere, including where the zero -u sits outside the contour.
    for u in (-3.0 + 0.5j, 2.0 - 4.0j, 6.0 + 1.0j):
        assert abs(mittag_leffler_hankel(1.0, u) - np.exp(-u)) <= 1e-9 * max(1, abs(np.exp(-u)))


def test_hankel_rejects_zero_on_explicit_contour():
    # For nu = 1 the zero of the integrand is -u; u = -1 puts it on the unit circle.
    with raises(DomainError):
        mittag_leffler_hankel(1.0, -1.0 + 0.01j, contour=HankelContour(radius=1.0))


@mark.parametrize("u", [20.0, 25.0, 30.0])
def test_unit_order_at_large_argument(u):
    assert abs(mittag_leffler(1.0, u) / np.exp(-u) - 1) <= 1e-12
    assert abs(mittag_leffler_hankel(1.0, u) - np.exp(-u)) <= 1e-12


def test_hankel_tilts_rays_off_a_zero_on_the_cut():
    # zeta* = 2^(1/0.8) e^(i pi) sits on the negative axis.
    u = 2.0 * np.exp(-0.2j * np.pi)
    expected = mittag_leffler_series(0.8, u)
    assert abs(mittag_leffler_hankel(0.8, u) - expected) <= 1e-9
    with raises(DomainError):
        mittag_leffler_hankel(0.8, u, contour=HankelContour())


def test_refined_hankel_agrees():
    coarse = mittag_leffler_hankel(0.5, 6.0)
    fine = mittag_leffler_hankel(0.5, 6.0, refine=2)
    assert abs(coarse - fine) <= 1e-10
    with raises(ValidationError):
        mittag_leffler_hankel(0.5, 6.0, refine=0)


def test_dispatcher_falls_back_to_contour():
    value = mittag_leffler(0.5, 6.0)
    assert abs(value - special.erfcx(6.0)) <= 1e-9
    values = mittag_leffler(0.5, np.array([0.5, 6.0]))
    np.testing.assert_allclose(values.real, special.erfcx([0.5, 6.0]), atol=1e-9)


def test_mittag_leffler_is_completely_monotone():
    grid = np.linspace(0.0, 3.0, 13)
    assert completely_monotone_on_grid(lambda u: mittag_leffler(0.6, u), grid)
    assert not completely_monotone_on_grid(lambda u: np.cos(u), grid)
