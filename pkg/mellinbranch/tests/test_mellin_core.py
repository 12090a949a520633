import numpy as np
from hypothesis import given
from hypothesis.strategies import integers, tuples
from pytest import mark, raises
from scipy import special

from mellinbranch.contour import BromwichLine
from mellinbranch.errors import (BranchError, DomainError, NonIntegrableError, RangeError,
                                 StripError, ValidationError)
from mellinbranch.mellin_core import (BilateralLaplace, DensityOnR, MellinPair, cauchy_density,
                                      exponential_density, exponential_laplace,
                                      fourier_from_mellin, gaussian_density, hyperbolic_pair,
                                      hyperbolic_product, laplace_from_mellin, mellin_convolve,
                                      mellin_forward, mellin_from_fourier, mellin_from_laplace,
                                      mellin_invert, plancherel_check, powered_density,
                                      product_density, scaled_density, two_sided_exponential,
                                      two_sided_exponential_laplace, uniform_density)
from mellinbranch.specfun import gamma

pair_components = tuples(integers(-50, 50), integers(-50, 50))


def zero_density():
    return DensityOnR(plus=lambda x: np.zeros(np.shape(x)))


def test_forward_examples():
    f = exponential_density()
    plus, minus = mellin_forward(f, 3.0)
    assert abs(plus - 2.0) <= 1e-8 and minus == 0
    plus, _ = mellin_forward(f, 0.5)
    assert abs(plus - np.sqrt(np.pi)) <= 1e-8
    plus, minus = mellin_forward(two_sided_exponential(), 1.0)
    assert abs(plus - 0.5) <= 1e-8 and abs(minus - 0.5) <= 1e-8


def test_forward_is_vectorised():
    s = np.array([0.5, 1.0 + 2.0j, 4.0])
    plus, minus = mellin_forward(exponential_density(), s)
    np.testing.assert_allclose(plus, special.gamma(s), rtol=1e-9)
    assert np.all(minus == 0)


def test_forward_rejects_strip():
    with raises(StripError):
        mellin_forward(exponential_density(), -0.5)
    with raises(StripError):
        mellin_forward(cauchy_density(), 2.5)


@mark.parametrize("density", [exponential_density(2.0), two_sided_exponential(0.3, 2.0, 0.5),
                              uniform_density(), gaussian_density(1.5), cauchy_density()])
def test_probability_densities_have_unit_mass(density):
    assert abs(density.total_mass() - 1.0) <= 1e-8


def test_density_validation():
    with raises(ValidationError):
        DensityOnR(plus=np.exp, strip_plus=(1.0, 1.0))
    with raises(ValidationError):
        DensityOnR(plus=np.exp, breakpoints=(-1.0,))
    with raises(ValidationError):
        MellinPair(plus=gamma).component("left")


def test_density_value_joins_both_sides():
    f = two_sided_exponential()
    np.testing.assert_allclose(f.value([-2.0, 2.0]), 0.5 * np.exp(-2.0) * np.ones(2))


def test_convolving_uniforms_gives_minus_log():
    f = uniform_density()
    assert abs(mellin_convolve(f, f, 0.5) - np.log(2.0)) <= 1e-10
    np.testing.assert_allclose(mellin_convolve(f, f, [0.1, 0.9]), -np.log([0.1, 0.9]), rtol=1e-9)
    assert mellin_convolve(f, f, -0.5) == 0


def test_convolving_with_narrow_law_near_one_is_close_to_identity():
    sd = 1e-3
    narrow = DensityOnR(plus=lambda y: np.exp(-0.5 * ((y - 1.0) / sd) ** 2) / (sd * np.sqrt(2 * np.pi)),
                        decay_plus=np.inf, breakpoints=(1.0 - 8 * sd, 1.0 + 8 * sd))
    f = exponential_density()
    for z in (0.5, 1.0, 2.0):
        assert abs(mellin_convolve(f, narrow, z) - np.exp(-z)) <= 1e-4


def test_convolution_of_symmetric_laws_is_symmetric():
    f = two_sided_exponential()
    assert abs(mellin_convolve(f, f, 0.7) - mellin_convolve(f, f, -0.7)) <= 1e-8


def test_convolution_at_zero_is_not_integrable():
    f = two_sided_exponential()
    with raises(NonIntegrableError):
        mellin_convolve(f, f, 0.0)


@given(pair_components)
def test_hyperbolic_identity_element(b):
    assert hyperbolic_product((1, 0), b) == b


def test_hyperbolic_sign_flip_squares_to_identity():
    assert hyperbolic_product((0, 1), (0, 1)) == (1, 0)


@given(pair_components, pair_components, pair_components)
def test_hyperbolic_product_is_commutative_and_associative(a, b, c):
    assert hyperbolic_product(a, b) == hyperbolic_product(b, a)
    assert hyperbolic_product(hyperbolic_product(a, b), c) == \
        hyperbolic_product(a, hyperbolic_product(b, c))


def test_symmetric_laws_multiply_to_symmetric_law():
    m = two_sided_exponential().mellin
    plus, minus = hyperbolic_product(m, m, 1.0)
    assert abs(plus - 0.5) <= 1e-14 and abs(minus - 0.5) <= 1e-14
    product = hyperbolic_pair(m, exponential_density().mellin)
    assert product.strip == (0.0, np.inf)
    plus, minus = product(2.0)
    assert abs(plus - 0.5) <= 1e-14 and abs(minus - 0.5) <= 1e-14


@mark.parametrize("s", [0.7, 1.5, 1.2 + 0.5j])
def test_convolution_theorem(s):
    f, g = exponential_density(), two_sided_exponential(0.3)
    numeric = mellin_forward(product_density(f, g), s)
    closed = hyperbolic_product(f.mellin, g.mellin, s)
    assert abs(numeric[0] - closed[0]) <= 1e-6
    assert abs(numeric[1] - closed[1]) <= 1e-6


def test_inversion_examples():
    m = exponential_density().mellin
    assert abs(mellin_invert(m, 1.0, 1.0) - np.exp(-1.0)) <= 1e-10
    assert abs(mellin_invert(m, 3.0, 1.0) - np.exp(-3.0)) <= 1e-10
    value = mellin_invert(uniform_density().mellin, 0.5, 0.5, eps_sequence=(0.02, 0.01, 0.005))
    assert abs(value - 1.0) <= 1e-6


@mark.parametrize("x", [0.3, 1.0, 2.5])
def test_inversion_recovers_both_sides(x):
    f = gaussian_density(1.5)
    m = f.mellin
    assert abs(mellin_invert(m, x, 1.0) - f.plus(x)) <= 1e-6
    g = two_sided_exponential(0.25)
    assert abs(mellin_invert(g.mellin, x, 0.5, side="minus") - g.minus(x)) <= 1e-6


def test_inversion_rejects_bad_inputs():
    m = exponential_density().mellin
    with raises(DomainError):
        mellin_invert(m, 0.0, 1.0)
    with raises(StripError):
        mellin_invert(m, 1.0, -1.0)


@mark.parametrize("density, gamma_, expected", [(exponential_density(), 0.5, 0.5),
                                                (uniform_density(), 0.5, 1.0),
                                                (uniform_density(), 0.75, 2.0 / 3.0),
                                                (zero_density(), 0.5, 0.0)])
def test_plancherel(density, gamma_, expected):
    left, right = plancherel_check(density, density, gamma_)
    assert abs(left - expected) <= 1e-6
    assert abs(right - expected) <= 1e-6


def test_plancherel_with_numeric_transforms():
    f = DensityOnR(plus=lambda x: np.exp(-np.asarray(x)), decay_plus=1.0)
    g = DensityOnR(plus=lambda x: np.exp(-2.0 * np.asarray(x)), decay_plus=2.0)
    left, right = plancherel_check(f, g, 0.75)
    # int_0^inf exp(-3x) x^(1/2) dx
    assert abs(right - special.gamma(1.5) / 3 ** 1.5) <= 1e-8
    assert abs(left - right) <= 1e-6


def test_laplace_bridge_one_sided():
    plus, minus = mellin_from_laplace(exponential_laplace(), 0.5, -0.5)
    assert abs(plus - np.sqrt(np.pi)) <= 1e-6
    assert abs(minus) <= 1e-6


def test_laplace_bridge_mittag_leffler_law():
    # E_{1/2}(u) = erfcx(u) is the Laplace transform of a law on the positive axis.
    phi = BilateralLaplace(special.erfcx, valid_strip=(-np.inf, np.inf))
    plus, minus = mellin_from_laplace(phi, 2.0, -0.5)
    assert abs(plus - 1.0 / special.gamma(1.5)) <= 1e-6
    assert abs(minus) <= 1e-6


@mark.parametrize("s", [0.5, 1.5, 2.0 + 1.0j])
def test_laplace_bridge_symmetric_law(s):
    plus, minus = mellin_from_laplace(two_sided_exponential_laplace(), s, -0.5)
    assert abs(plus - minus) <= 1e-8
    assert abs(plus - 0.5 * gamma(s)) <= 1e-6


def test_laplace_bridge_errors():
    phi = exponential_laplace()
    with raises(RangeError):
        mellin_from_laplace(phi, -0.5, -0.5)
    with raises(BranchError):
        mellin_from_laplace(phi, 0.5, 0.5)
    with raises(StripError):
        mellin_from_laplace(phi, 0.5, -2.0)


def test_laplace_from_mellin_examples():
    assert abs(laplace_from_mellin(exponential_density().mellin, 1.0, 0.5) - 0.5) <= 1e-10
    u = 1e-6
    value = laplace_from_mellin(uniform_density().mellin, u, 0.5)
    assert abs(value - (-np.expm1(-u) / u)) <= 1e-8


def test_laplace_from_mellin_two_sided():
    u = 0.3j
    line = BromwichLine(0.5, half_height=30.0, steps=3000)
    value = laplace_from_mellin(two_sided_exponential().mellin, u, 0.5, line=line)
    assert abs(value - 1.0 / (1.0 - u * u)) <= 1e-6


def test_laplace_from_mellin_errors():
    m = exponential_density().mellin
    with raises(DomainError):
        laplace_from_mellin(m, 0.0, 0.5)
    with raises(StripError):
        laplace_from_mellin(m, 1.0, 1.2)


def test_fourier_bridge_symmetric_law():
    plus, minus = mellin_from_fourier(lambda y: 1.0 / (1.0 + y * y), 0.5)
    assert abs(plus - minus) <= 1e-10
    assert abs(plus - 0.5 * np.sqrt(np.pi)) <= 1e-8


def test_fourier_bridge_gaussian():
    plus, minus = mellin_from_fourier(lambda y: np.exp(-y * y), 0.5)
    expected = 0.5 * special.gamma(0.5) / special.gamma(0.75)
    assert abs(plus - expected) <= 1e-8
    assert abs(minus - expected) <= 1e-8


def test_fourier_bridge_edge_cases():
    assert mellin_from_fourier(lambda y: 0.0, 0.5) == (0, 0)
    for s in (0.0, 1.0, 1.5):
        with raises(RangeError):
            mellin_from_fourier(lambda y: 1.0, s)


@mark.parametrize("y", [0.5, 1.0, 2.0])
def test_fourier_from_mellin(y):
    m = two_sided_exponential().mellin
    assert abs(fourier_from_mellin(m, y, 0.5) - 1.0 / (1.0 + y * y)) <= 1e-8


def test_fourier_from_mellin_one_sided_and_symmetry():
    m = exponential_density().mellin
    value = fourier_from_mellin(m, 1.0, 0.5)
    assert abs(value - 1.0 / (1.0 - 1j)) <= 1e-8
    assert abs(fourier_from_mellin(m, -1.0, 0.5) - np.conj(value)) <= 1e-14
    assert abs(fourier_from_mellin(m, 0.0, 0.5) - 1.0) <= 1e-14
    zero = MellinPair(plus=lambda s: 0.0)
    assert fourier_from_mellin(zero, 1.0, 0.5) == 0


@mark.parametrize("lam", [0.5, 2.0, 10.0])
def test_scaling_law(lam):
    f = two_sided_exponential(0.3, 1.0, 2.0)
    s = np.array([0.5, 1.5, 2.0 + 1.0j])
    plus, minus = mellin_forward(scaled_density(f, lam), s)
    base_plus, base_minus = mellin_forward(f, s)
    np.testing.assert_allclose(plus, lam ** -s * base_plus, rtol=0, atol=1e-7)
    np.testing.assert_allclose(minus, lam ** -s * base_minus, rtol=0, atol=1e-7)


@mark.parametrize("mu", [0.5, 2.0])
def test_power_law(mu):
    f = exponential_density()
    s = np.array([0.5, 1.0, 1.5])
    plus, _ = mellin_forward(powered_density(f, mu), s)
    np.testing.assert_allclose(plus, special.gamma(s / mu) / mu, rtol=0, atol=1e-7)
    closed, _ = powered_density(f, mu).mellin(s)
    np.testing.assert_allclose(closed, special.gamma(s / mu) / mu, rtol=1e-12)


def test_closed_forms_are_analytic():
    for density in (two_sided_exponential(), gaussian_density(), cauchy_density()):
        assert density.mellin.analyticity_residual(1.0 + 0.5j) <= 1e-6
    assert MellinPair(plus=np.conj).analyticity_residual(1.0 + 0.5j) > 1.0
