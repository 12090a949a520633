from functools import partial

import numpy as np
from pytest import mark, raises
from scipy import integrate

from mellinbranch import bellman_harris
from mellinbranch.bellman_harris import (LifetimeDistribution, LimitLaw, NumericInverseCDF,
                                         OffspringPGF, fixed_point_residual,
                                         gamma_case_lifetime_density, gamma_case_lifetime_laplace,
                                         malthusian, poly_case_lifetime_laplace,
                                         recover_lifetime_laplace, simulate_bellman_harris,
                                         simulate_replica)
from mellinbranch.contour import BromwichLine
from mellinbranch.errors import (BranchError, NoRootError, PopulationExplosionError, StripError,
                                 ValidationError)
from mellinbranch.specfun import completely_monotone_on_grid

GAMMA_FAMILY = [(kappa, m) for kappa in (0.5, 1.0, 2.0) for m in (2, 3)]
MIXED = OffspringPGF.from_mapping({2: 0.5, 3: 0.5})


def test_offspring_law():
    f = OffspringPGF.from_mapping({1: 0.25, 3: 0.75})
    assert f.probabilities == (0.0, 0.25, 0.0, 0.75)
    assert f.mean == 2.5
    assert abs(f(1.0) - 1.0) <= 1e-15
    assert abs(f(0.5) - (0.125 + 0.75 * 0.125)) <= 1e-15
    np.testing.assert_allclose(f.cumulative, [0.0, 0.25, 0.25, 1.0])


@mark.parametrize("probabilities", [(1.0,), (0.5, 0.6), (-0.5, 1.5)])
def test_offspring_validation(probabilities):
    with raises(ValidationError):
        OffspringPGF(probabilities)


def test_recovery_needs_no_extinction_and_growth():
    with raises(ValidationError):
        OffspringPGF((0.2, 0.0, 0.8)).check_recoverable()
    with raises(ValidationError):
        OffspringPGF.power(1).check_recoverable()


def test_malthusian_of_yule_process():
    assert abs(malthusian(OffspringPGF.power(2), LifetimeDistribution.exponential(1.0)) - 1) <= 1e-10
    beta = malthusian(OffspringPGF.power(3), LifetimeDistribution.exponential(2.0))
    assert abs(beta - 4.0) <= 1e-10


@mark.parametrize("kappa, m", GAMMA_FAMILY)
def test_malthusian_of_gamma_family_is_one(kappa, m):
    G = LifetimeDistribution.gamma_case(kappa, m)
    assert abs(malthusian(OffspringPGF.power(m), G) - 1.0) <= 1e-10


def test_malthusian_without_root():
    G = LifetimeDistribution.exponential(1.0)
    with raises(NoRootError):
        malthusian(OffspringPGF((0.5, 0.5)), G)
    with raises(NoRootError):
        malthusian(OffspringPGF.power(1), G)


def test_gamma_case_closed_forms():
    assert abs(gamma_case_lifetime_laplace(1.0, 2, 1.0) - 0.5) <= 1e-14
    assert abs(gamma_case_lifetime_laplace(0.5, 2, 2.0) - 0.375) <= 1e-14
    assert abs(gamma_case_lifetime_laplace(2.0, 3, 0.0) - 1.0) <= 1e-14
    t = np.array([0.1, 1.0, 4.0])
    np.testing.assert_allclose(gamma_case_lifetime_density(1.0, 2, t), np.exp(-t), rtol=1e-13)
    assert gamma_case_lifetime_density(2.0, 2, 0.0) == 0
    assert gamma_case_lifetime_density(2.0, 2, 1e-8) <= 1e-6
    with raises(ValidationError):
        gamma_case_lifetime_laplace(1.0, 1, 1.0)


def test_poly_case_closed_forms():
    assert abs(poly_case_lifetime_laplace(OffspringPGF.power(2), 1.0, 1.0) - 0.5) <= 1e-14
    assert abs(poly_case_lifetime_laplace(MIXED, 1.0, 1.0) - 0.4) <= 1e-14
    assert abs(poly_case_lifetime_laplace(MIXED, 0.7, 0.0) - 1.0) <= 1e-14
    s = np.array([0.5, 2.0 + 1.0j])
    np.testing.assert_allclose(poly_case_lifetime_laplace(OffspringPGF.power(3), 2.0, s),
                               gamma_case_lifetime_laplace(2.0, 3, s), rtol=1e-13)


@mark.parametrize("kappa, m", GAMMA_FAMILY)
def test_gamma_case_density_is_a_law(kappa, m):
    G = LifetimeDistribution.gamma_case(kappa, m)
    assert abs(G.total_mass() - 1.0) <= 1e-8
    numeric = LifetimeDistribution.from_density(G.density).laplace(1.5)
    assert abs(numeric - gamma_case_lifetime_laplace(kappa, m, 1.5)) <= 1e-8


def test_recovery_examples():
    psi = LimitLaw.gamma(1.0)
    f = OffspringPGF.power(2)
    assert abs(recover_lifetime_laplace(psi, f, 1.0) - 0.5) <= 1e-8
    assert abs(recover_lifetime_laplace(psi, f, 0.0) - 1.0) <= 1e-8
    value = recover_lifetime_laplace(LimitLaw.gamma(2.0), OffspringPGF.power(3), 1.5)
    assert abs(value - gamma_case_lifetime_laplace(2.0, 3, 1.5)) <= 1e-8


@mark.parametrize("kappa, m", GAMMA_FAMILY)
def test_recovery_matches_closed_form(kappa, m):
    psi = LimitLaw.gamma(kappa)
    for s in (0.5, 1.0, 2.0):
        value = recover_lifetime_laplace(psi, OffspringPGF.power(m), s)
        assert abs(value - gamma_case_lifetime_laplace(kappa, m, s)) <= 1e-8
    value = recover_lifetime_laplace(psi, OffspringPGF.power(m), 1.0 + 2.0j)
    assert abs(value) <= 1.0


def test_recovery_with_mixed_offspring():
    psi = LimitLaw.gamma(1.0)
    for s in (0.5, 1.0, 2.0):
        value = recover_lifetime_laplace(psi, MIXED, s)
        assert abs(value - poly_case_lifetime_laplace(MIXED, 1.0, s)) <= 1e-8


def test_recovery_preconditions():
    psi, f = LimitLaw.gamma(1.0), OffspringPGF.power(2)
    with raises(ValidationError):
        recover_lifetime_laplace(psi, f, -0.5)
    with raises(ValidationError):
        recover_lifetime_laplace(psi, OffspringPGF((0.1, 0.0, 0.9)), 1.0)
    with raises(BranchError):
        recover_lifetime_laplace(psi, f, 1.0, beta_line=BromwichLine(0.5, half_height=10.0))
    with raises(StripError):
        recover_lifetime_laplace(psi, f, 1.0, beta_line=BromwichLine(-1.5, half_height=10.0))
    with raises(ValidationError):
        LimitLaw(laplace=lambda u: 1.0, decay=0.0)


def test_closed_form_is_completely_monotone():
    grid = np.linspace(0.0, 5.0, 11)
    assert completely_monotone_on_grid(partial(poly_case_lifetime_laplace, MIXED, 1.0), grid)
    assert completely_monotone_on_grid(partial(gamma_case_lifetime_laplace, 0.5, 3), grid)


def test_fixed_point_of_yule_process():
    psi, f = LimitLaw.gamma(1.0), OffspringPGF.power(2)
    G = LifetimeDistribution.exponential(1.0)
    assert fixed_point_residual(psi, f, G, 1.0, 0.0) <= 1e-12
    assert fixed_point_residual(psi, f, G, 1.0, 1.0) <= 1e-8
    # Exp(2) life-times break the fixed point: the right side is 2 log 2 - 1 at u = 1.
    perturbed = fixed_point_residual(psi, f, LifetimeDistribution.exponential(2.0), 1.0, 1.0)
    assert abs(perturbed - (1.5 - 2 * np.log(2.0))) <= 1e-8
    assert perturbed > 1e-2


@mark.parametrize("kappa, m", GAMMA_FAMILY)
def test_fixed_point_of_gamma_family(kappa, m):
    psi, f = LimitLaw.gamma(kappa), OffspringPGF.power(m)
    G = LifetimeDistribution.gamma_case(kappa, m)
    for u in (0.1, 0.5, 1.0, 2.0, 5.0):
        assert fixed_point_residual(psi, f, G, 1.0, u) <= 1e-6


def test_exact_quantile_of_gamma_family():
    G = LifetimeDistribution.gamma_case(2.0, 3)
    for q in (0.1, 0.5, 0.9):
        mass, _ = integrate.quad(G.density, 0.0, G.quantile(q))
        assert abs(mass - q) <= 1e-8


def test_numeric_inverse_cdf_matches_exact_quantile():
    G = LifetimeDistribution.gamma_case(2.0, 3)
    inverse = NumericInverseCDF(G.density)
    q = np.array([0.01, 0.1, 0.5, 0.9, 0.99])
    np.testing.assert_allclose(inverse(q), G.quantile(q), rtol=1e-4)
    assert isinstance(inverse(0.5), float)
    assert inverse(0.0) == 0


def test_exponential_quantile():
    G = LifetimeDistribution.exponential(2.0)
    assert abs(G.quantile(1 - np.exp(-1.0)) - 0.5) <= 1e-14
    assert G.sampler() is G.quantile
    assert G.laplace(0.0) == 1


def test_single_offspring_keeps_one_individual():
    run = simulate_bellman_harris(OffspringPGF.power(1), LifetimeDistribution.exponential(1.0),
                                  horizon=3.0, replicas=50, seed=1)
    assert np.all(run.populations == 1)
    assert run.replicas == 50


def test_extinction_is_allowed_in_simulation():
    f = OffspringPGF((0.5, 0.0, 0.5))
    run = simulate_bellman_harris(f, LifetimeDistribution.exponential(1.0), horizon=2.0,
                                  replicas=200, seed=3)
    assert np.any(run.populations == 0)
    assert np.all(run.populations >= 0)


def test_simulation_is_reproducible():
    f, G = OffspringPGF.power(2), LifetimeDistribution.gamma_case(1.0, 2)
    first = simulate_bellman_harris(f, G, 2.0, 30, seed=7)
    second = simulate_bellman_harris(f, G, 2.0, 30, seed=7)
    np.testing.assert_array_equal(first.populations, second.populations)
    assert simulate_replica(f, G.quantile, 2.0, 7, 4) == first.populations[4]


def test_population_guard(monkeypatch):
    monkeypatch.setattr(bellman_harris, "POPULATION_GUARD", 100)
    with raises(PopulationExplosionError):
        simulate_replica(OffspringPGF.power(2), LifetimeDistribution.exponential(1.0).quantile,
                         30.0, 0, 0)


def test_simulation_validation():
    f, G = OffspringPGF.power(2), LifetimeDistribution.exponential(1.0)
    with raises(ValidationError):
        simulate_bellman_harris(f, G, 0.0, 10, 0)
    with raises(ValidationError):
        simulate_bellman_harris(f, G, 1.0, 0, 0)


def test_expected_population_limit():
    f, G = OffspringPGF.power(2), LifetimeDistribution.exponential(1.0)
    with raises(ValidationError):
        simulate_bellman_harris(f, G, 15.0, 10, 0)
    with raises(ValidationError):
        simulate_bellman_harris(OffspringPGF.power(50), LifetimeDistribution.exponential(100.0),
                                1.0, 10, 0)


@mark.parametrize("kappa, m", [(-1.0, 2), (0.0, 2), (1.0, 1), (1.0, 0), (1.0, 2.5)])
def test_gamma_family_validation(kappa, m):
    with raises(ValidationError):
        LifetimeDistribution.gamma_case(kappa, m)
    with raises(ValidationError):
        gamma_case_lifetime_laplace(kappa, m, 1.0)
    with raises(ValidationError):
        gamma_case_lifetime_density(kappa, m, 1.0)


def test_limit_and_offspring_validation():
    with raises(ValidationError):
        LimitLaw.gamma(-1.0)
    with raises(ValidationError):
        OffspringPGF.power(0)
    with raises(ValidationError):
        OffspringPGF.power(1.5)


@mark.slow
def test_yule_process_mean_and_limit_law():
    run = simulate_bellman_harris(OffspringPGF.power(2), LifetimeDistribution.exponential(1.0),
                                  horizon=5.0, replicas=10 ** 4, seed=11)
    mean, stderr = run.mean()
    assert abs(mean - np.exp(5.0)) <= 3 * stderr
    value, stderr = run.laplace_at(1.0, beta=1.0)
    assert abs(value - 0.5) <= 3 * stderr
