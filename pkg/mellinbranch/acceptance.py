"""
End-to-end checks of the library. Each check returns the worst deviation in units of its
tolerance, so a check passes when its value is at most 1. Monte Carlo checks report the
largest deviation in standard errors against a threshold of 3.
"""
import logging
import math
import time
from typing import Callable, List, NamedTuple, Tuple

import mpmath as mp
import numpy as np

from mellinbranch.bellman_harris import (LifetimeDistribution, LimitLaw, OffspringPGF,
                                         fixed_point_residual, gamma_case_lifetime_laplace,
                                         malthusian, poly_case_lifetime_laplace,
                                         recover_lifetime_laplace, simulate_bellman_harris)
from mellinbranch.contour import DEFAULT_DAMPING, DEFAULT_EPS_SEQUENCE, BromwichLine, \
    integrate_halfline
from mellinbranch.errors import SeriesOverflowError
from mellinbranch.luria_delbruck import (LDParams, ld_laplace, ld_laplace_coefficients,
                                         ld_mellin, ld_mellin_factored, ld_moment_ratios,
                                         moment_ratio_statistics, simulate_ld)
from mellinbranch.mellin_core import (exponential_density, hyperbolic_product, mellin_forward,
                                      mellin_from_laplace, mellin_invert, laplace_from_mellin,
                                      plancherel_check, product_density, scaled_density,
                                      two_sided_exponential, two_sided_exponential_laplace,
                                      uniform_density)
from mellinbranch.specfun import gamma, mittag_leffler_hankel, mittag_leffler_series, \
    recip_gamma_hankel
from mellinbranch.stable_laws import StableParams, stable_mellin, stable_mellin_numeric

logger = logging.getLogger(__name__)

S_GRID = tuple(np.round(np.arange(1, 10) * 0.1, 1))
KAPPA_GRID = (0.5, 1.0, 2.0)
M_GRID = (2, 3)
MC_THRESHOLD = 3.0


class AcceptanceResult(NamedTuple):
    name: str
    value: float
    threshold: float
    seconds: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.threshold)


class AcceptanceCheck(NamedTuple):
    name: str
    run: Callable[[float, int, int], float]
    threshold: float = 1.0


def _worst(pairs) -> float:
    """Largest |a - b| / tol over (a, b, tol) triples."""
    return max(float(abs(a - b)) / tol for a, b, tol in pairs)


def check_stable_laws(scale: float, seed: int, threads: int) -> float:
    pairs = []
    for alpha in (0.5, 1.0, 1.5, 2.0):
        for theta in StableParams(alpha).admissible_thetas():
            p = StableParams(alpha, theta)
            pairs.append((p.rho_plus + p.rho_minus, 1.0, 1e-14))
            for s in S_GRID:
                plus, minus = stable_mellin_numeric(p, s)
                pairs.append((plus, stable_mellin(p, s, "plus"), 1e-6))
                pairs.append((minus, stable_mellin(p, s, "minus"), 1e-6))
    return _worst(pairs)


def check_transform_calculus(scale: float, seed: int, threads: int) -> float:
    tol = 1e-6
    pairs = []
    f = exponential_density()
    for s in (0.5, 1.5, 2.0 + 1.0j):
        pairs.append((mellin_forward(scaled_density(f, 2.5), s)[0], 2.5 ** -s * gamma(s), tol))
    g = two_sided_exponential()
    h = product_density(f, g)
    for s in (0.7, 1.5):
        numeric = mellin_forward(h, s)
        closed = hyperbolic_product(f.mellin, g.mellin, s)
        pairs += [(numeric[0], closed[0], tol), (numeric[1], closed[1], tol)]
    pairs.append((mellin_invert(f.mellin, 1.3, 0.5), np.exp(-1.3), tol))
    pairs.append((mellin_invert(uniform_density().mellin, 0.5, 0.5,
                                eps_sequence=DEFAULT_EPS_SEQUENCE), 1.0, tol))
    for d, gamma_ in ((f, 0.5), (uniform_density(), 0.75)):
        left, right = plancherel_check(d, d, gamma_)
        pairs.append((left, right, tol))
    half = 0.5 * gamma(1.5)
    plus, minus = mellin_from_laplace(two_sided_exponential_laplace(), 1.5, -0.5)
    pairs += [(plus, half, tol), (minus, half, tol)]
    u = 0.3j
    line = BromwichLine(0.5, half_height=30.0, steps=3000)
    pairs.append((laplace_from_mellin(g.mellin, u, 0.5, line=line), 1.0 / (1.0 - u * u), tol))
    return _worst(pairs)


def check_oscillatory_constants(scale: float, seed: int, threads: int) -> float:
    pairs = []
    for s in S_GRID:
        for sign in (1.0, -1.0):
            value = integrate_halfline(lambda y: np.exp(sign * 1j * y), 1.0 - s,
                                       damping=DEFAULT_DAMPING)
            pairs.append((value, gamma(s) * np.exp(sign * 0.5j * np.pi * s), 1e-6))
    return _worst(pairs)


def check_bellman_harris_recovery(scale: float, seed: int, threads: int) -> float:
    pairs = []
    for kappa in KAPPA_GRID:
        psi = LimitLaw.gamma(kappa)
        for m in M_GRID:
            f = OffspringPGF.power(m)
            G = LifetimeDistribution.gamma_case(kappa, m)
            for s in (0.5, 1.0, 2.0):
                pairs.append((recover_lifetime_laplace(psi, f, s),
                              gamma_case_lifetime_laplace(kappa, m, s), 1e-8))
            pairs.append((G.total_mass(), 1.0, 1e-8))
            pairs.append((malthusian(f, G), 1.0, 1e-10))
            for u in (0.1, 0.5, 1.0, 2.0, 5.0):
                pairs.append((fixed_point_residual(psi, f, G, 1.0, u), 0.0, 1e-6))
    mixed = OffspringPGF.from_mapping({2: 0.5, 3: 0.5})
    for s in (0.5, 1.0, 2.0):
        pairs.append((recover_lifetime_laplace(LimitLaw.gamma(1.0), mixed, s),
                      poly_case_lifetime_laplace(mixed, 1.0, s), 1e-8))
    return _worst(pairs)


def check_yule(scale: float, seed: int, threads: int) -> float:
    replicas = max(int(10 ** 4 * scale), 100)
    run = simulate_bellman_harris(OffspringPGF.power(2), LifetimeDistribution.exponential(1.0),
                                  horizon=5.0, replicas=replicas, seed=seed, threads=threads)
    worst = 0.0
    for u in (0.5, 1.0, 2.0):
        value, stderr = run.laplace_at(u, beta=1.0)
        worst = max(worst, abs(value - 1.0 / (1.0 + u)) / stderr)
    return worst


def mittag_leffler_reference(nu: float, u: complex, digits: int = 20) -> complex:
    """
    E_nu(u) by the power series in multiprecision arithmetic, carrying enough guard digits
    to absorb the cancellation between its largest terms.
    """
    if u == 0:
        return 1 + 0j
    log_u = math.log(abs(u))
    peak, k = 0.0, 0
    while True:
        size = k * log_u - math.lgamma(nu * k + 1.0)
        peak = max(peak, size)
        if size < peak - 50.0 and size < -(digits + 20) * math.log(10.0):
            break
        k += 1
    with mp.workdps(digits + int(peak / math.log(10.0)) + 10):
        minus_u = -mp.mpc(u)
        total, power = mp.mpc(0), mp.mpc(1)
        for j in range(k + 1):
            total += power * mp.rgamma(mp.mpf(nu) * j + 1)
            power *= minus_u
        return complex(total)


def check_mittag_leffler(scale: float, seed: int, threads: int) -> float:
    pairs = []
    certified = 0
    for nu in np.round(np.arange(3, 11) * 0.1, 1):
        for u in np.linspace(0.0, 5.0, 11):
            reference = mittag_leffler_reference(nu, u)
            pairs.append((mittag_leffler_hankel(nu, u), reference, 1e-9))
            try:
                pairs.append((mittag_leffler_series(nu, u), reference, 1e-9))
                certified += 1
            except SeriesOverflowError:
                pass
    for z in (0.5, 1.0, 2.5, -1.5, 3.0 + 1.0j):
        pairs.append((recip_gamma_hankel(z), 1.0 / gamma(z), 1e-9))
    logger.info("double precision series certified %d Mittag-Leffler grid points", certified)
    return _worst(pairs)


def check_luria_delbruck_limit(scale: float, seed: int, threads: int) -> float:
    pairs = []
    for rho in (0.3, 0.5, 0.7):
        for kappa in (1, 2, 3):
            p = LDParams(rho, kappa)
            for s in (0.5, 1.0, 1.5, 2.0, 3.0):
                exact = ld_mellin(p, s)
                pairs.append((ld_mellin_factored(p, s), exact, 1e-12 * abs(exact)))
            coefficients = ld_laplace_coefficients(p, 4)
            for i in (1, 2, 3):
                moment = (-1) ** i * ld_mellin(p, i + 1.0).real
                pairs.append((coefficients[i] * math.factorial(i), moment, 1e-10 * abs(moment)))
        upper = 1.5 if rho > 0.6 else 3.0
        for u in np.linspace(0.0, upper, 7):
            pairs.append((ld_laplace(LDParams(rho, 1), u), mittag_leffler_series(1.0 - rho, u),
                          1e-10))
    return _worst(pairs)


def check_luria_delbruck_simulation(scale: float, seed: int, threads: int) -> float:
    replicas = max(int(10 ** 5 * scale), 1000)
    worst = 0.0
    for rho, kappa in ((0.5, 1), (0.3, 2)):
        p = LDParams(rho, kappa)
        samples = simulate_ld(p, 10 ** 4, replicas, seed, threads=threads)
        expected = ld_moment_ratios(p)
        for key, (value, stderr) in moment_ratio_statistics(samples, seed=seed).items():
            worst = max(worst, abs(value - expected[key]) / stderr)
    return worst


def check_determinism(scale: float, seed: int, threads: int) -> float:
    """Number of simulations whose samples change with the worker count."""
    workers = max(threads, 2)
    p = LDParams(0.5, 2)
    mismatches = 0
    ld = [simulate_ld(p, 200, 5000, seed, threads=t) for t in (1, workers)]
    mismatches += int(not np.array_equal(*ld))
    f, G = OffspringPGF.power(2), LifetimeDistribution.exponential(1.0)
    bh = [simulate_bellman_harris(f, G, 3.0, 200, seed, threads=t).populations
          for t in (1, workers)]
    mismatches += int(not np.array_equal(*bh))
    return float(mismatches)


ACCEPTANCE_CHECKS = (
    AcceptanceCheck("stable_mellin_agreement", check_stable_laws),
    AcceptanceCheck("transform_calculus", check_transform_calculus),
    AcceptanceCheck("oscillatory_constants", check_oscillatory_constants),
    AcceptanceCheck("bellman_harris_recovery", check_bellman_harris_recovery),
    AcceptanceCheck("yule_end_to_end", check_yule, MC_THRESHOLD),
    AcceptanceCheck("mittag_leffler_dual", check_mittag_leffler),
    AcceptanceCheck("luria_delbruck_limit", check_luria_delbruck_limit),
    AcceptanceCheck("luria_delbruck_simulation", check_luria_delbruck_simulation, MC_THRESHOLD),
    AcceptanceCheck("determinism", check_determinism, 0.0),
)


def run_acceptance(scale: float = 1.0, seed: int = 0, threads: int = 1,
                   checks: Tuple[AcceptanceCheck, ...] = ACCEPTANCE_CHECKS) -> List[AcceptanceResult]:
    results = []
    for check in checks:
        start = time.time()
        value = check.run(scale, seed, threads)
        result = AcceptanceResult(check.name, float(value), check.threshold, time.time() - start)
        logger.info("%s: %.3g (threshold %g) in %.1fs", result.name, result.value,
                    result.threshold, result.seconds)
        results.append(result)
    return results
