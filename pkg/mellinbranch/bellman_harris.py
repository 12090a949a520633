"""
Age-dependent branching: recover the life-time law from a postulated limit law, the
closed forms of the Gamma family, the fixed-point check and an event-driven simulator.
"""
import heapq
import logging
import time
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import bisect
from scipy.special import betaincinv

from mellinbranch.contour import BromwichLine, check_branch_continuity, integrate_bromwich, \
    integrate_halfline
from mellinbranch.errors import (BranchError, NoRootError, PoleError, PopulationExplosionError,
                                 RecoveryError, StripError, ValidationError)
from mellinbranch.mellin_core import MellinPair
from mellinbranch.parallel import ReplicaPool
from mellinbranch.specfun import gamma, log_gamma

logger = logging.getLogger(__name__)

POPULATION_GUARD = 10 ** 7
EXPECTED_POPULATION_LIMIT = 10 ** 6
CDF_GRID_SIZE = 4096
RECOVERY_FLOOR = 1e-14
RECOVERY_LINE = dict(half_height=1e12, steps=4000, mapping="sinh")
DEFAULT_BRACKET = (1e-9, 50.0)
SAMPLE_BATCH = 4096


@dataclass(frozen=True)
class OffspringPGF:
    """Offspring law; probabilities[j] is the chance of j children."""

    probabilities: Tuple[float, ...]

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if p.ndim != 1 or len(p) < 2:
            raise ValidationError("offspring law needs probabilities for j = 0, 1, ...")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValidationError("offspring probabilities must be nonnegative and sum to 1")

    @classmethod
    def from_mapping(cls, weights: Mapping[int, float]) -> "OffspringPGF":
        probs = np.zeros(max(weights) + 1)
        for j, w in weights.items():
            probs[j] = w
        return cls(tuple(probs))

    @classmethod
    def power(cls, m: int) -> "OffspringPGF":
        """f(s) = s^m."""
        if int(m) != m or m < 1:
            raise ValidationError("m must be a positive integer, got {}".format(m))
        return cls.from_mapping({int(m): 1.0})

    @property
    def mean(self) -> float:
        return float(np.dot(np.arange(len(self.probabilities)), self.probabilities))

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.probabilities)

    def __call__(self, z):
        return np.polynomial.polynomial.polyval(z, self.probabilities)

    def check_recoverable(self):
        if self.probabilities[0] > 0:
            raise ValidationError("recovery formulas assume f(0) = 0")
        if not self.mean > 1:
            raise ValidationError("recovery needs a supercritical law, mean = {}".format(self.mean))


def _check_gamma_case(kappa: float, m: int):
    if not (kappa > 0 and int(m) == m and m >= 2):
        raise ValidationError("need kappa > 0 and an integer m >= 2, got kappa={}, m={}"
                              .format(kappa, m))


def gamma_case_lifetime_laplace(kappa: float, m: int, s):
    """Gamma(s + kappa) Gamma(m kappa) / (Gamma(s + m kappa) Gamma(kappa))."""
    _check_gamma_case(kappa, m)
    value = np.exp(log_gamma(np.asarray(s, dtype=complex) + kappa) + log_gamma(m * kappa)
                   - log_gamma(np.asarray(s, dtype=complex) + m * kappa) - log_gamma(kappa))
    return complex(value) if np.ndim(value) == 0 else value


def gamma_case_lifetime_density(kappa: float, m: int, t):
    """Gamma(m k)/(Gamma(k) Gamma(m k - k)) e^(-k t) (1 - e^(-t))^((m - 1) k - 1) for t > 0."""
    _check_gamma_case(kappa, m)
    t = np.asarray(t, dtype=float)
    log_norm = (log_gamma(m * kappa) - log_gamma(kappa) - log_gamma((m - 1) * kappa)).real
    with np.errstate(divide="ignore", invalid="ignore"):
        log_density = log_norm - kappa * t + ((m - 1) * kappa - 1.0) * np.log(-np.expm1(-t))
        value = np.where(t > 0, np.exp(log_density), 0.0)
    return float(value) if value.ndim == 0 else value


def poly_case_lifetime_laplace(f: OffspringPGF, kappa: float, s):
    """[Gamma(s + k)/Gamma(k)] / sum_j pi_j Gamma(s + j k)/Gamma(j k)."""
    f.check_recoverable()
    s = np.asarray(s, dtype=complex)
    numerator = np.exp(log_gamma(s + kappa) - log_gamma(kappa))
    denominator = 0
    for j, weight in enumerate(f.probabilities):
        if weight > 0:
            denominator = denominator + weight * np.exp(log_gamma(s + j * kappa)
                                                        - log_gamma(j * kappa))
    if np.any(denominator == 0):
        raise PoleError("the offspring-weighted Gamma sum vanishes at s = {}".format(s))
    value = numerator / denominator
    return complex(value) if np.ndim(value) == 0 else value


class NumericInverseCDF:
    """
    Quantile function of a density on (0, inf) built from its numeric CDF on a grid.

    Monotone cubic interpolation of t against G(t), with bisection on the tabulated CDF
    wherever the interpolant is unusable.
    """

    def __init__(self, density: Callable, upper: float = None, size: int = CDF_GRID_SIZE):
        self.density = density
        self.upper = upper if upper is not None else self._find_upper(density)
        grid = np.concatenate([[0.0], np.geomspace(1e-8 * self.upper, self.upper, size - 1)])
        values = np.nan_to_num(np.asarray(density(grid[1:]), dtype=float), posinf=0.0)
        pieces = [integrate_halfline(density, 0.0, upper=grid[1], steps=400).real]
        # Trapezoid increments on the geometric grid, corrected below by a global rescale.
        pieces += list(0.5 * (values[1:] + values[:-1]) * np.diff(grid[1:]))
        cdf = np.cumsum(pieces)
        cdf = np.concatenate([[0.0], cdf / cdf[-1]])
        keep = np.concatenate([[True], np.diff(cdf) > 0])
        self.grid, self.cdf = grid[keep], cdf[keep]
        self._interp = PchipInterpolator(self.cdf, self.grid, extrapolate=False)
        self._forward = PchipInterpolator(self.grid, self.cdf)

    @staticmethod
    def _find_upper(density: Callable) -> float:
        upper = 1.0
        while density(upper) > 1e-18 * max(density(upper / 2.0), 1.0) and upper < 1e6:
            upper *= 2.0
        return 4.0 * upper

    def _bisect(self, q: float) -> float:
        q = min(max(q, 0.0), 1.0)
        i = int(np.clip(np.searchsorted(self.cdf, q), 1, len(self.cdf) - 1))
        lo, hi = self.grid[i - 1], self.grid[i]
        if q <= self.cdf[i - 1]:
            return float(lo)
        if q >= self.cdf[i]:
            return float(hi)
        return bisect(lambda t: float(self._forward(t)) - q, lo, hi, xtol=1e-13 * max(hi, 1.0))

    def __call__(self, q):
        scalar = np.ndim(q) == 0
        q = np.atleast_1d(np.asarray(q, dtype=float))
        t = self._interp(q)
        for i in np.flatnonzero(~np.isfinite(t)):
            t[i] = self._bisect(q[i])
        return float(t[0]) if scalar else t


@dataclass(frozen=True)
class LifetimeDistribution:
    """Life-time law G given by its density and Laplace transform; quantile is optional."""

    density: Callable
    laplace: Callable
    support_note: str = "(0, inf)"
    quantile: Optional[Callable] = field(default=None, compare=False)

    @classmethod
    def exponential(cls, rate: float = 1.0) -> "LifetimeDistribution":
        return cls(density=lambda t: rate * np.exp(-rate * np.asarray(t)),
                   laplace=lambda u: rate / (rate + np.asarray(u, dtype=complex)),
                   support_note="Exp({})".format(rate),
                   quantile=lambda q: -np.log1p(-np.asarray(q)) / rate)

    @classmethod
    def gamma_case(cls, kappa: float, m: int) -> "LifetimeDistribution":
        """The life-time law under which the Gamma(kappa) limit law solves the fixed point."""
        _check_gamma_case(kappa, m)
        b = (m - 1) * kappa

        def quantile(q):
            # e^(-T) is Beta(kappa, (m - 1) kappa).
            return -np.log(betaincinv(kappa, b, 1.0 - np.asarray(q)))

        return cls(density=partial(gamma_case_lifetime_density, kappa, m),
                   laplace=partial(gamma_case_lifetime_laplace, kappa, m),
                   support_note="gamma case kappa={} m={}".format(kappa, m),
                   quantile=quantile)

    @classmethod
    def from_density(cls, density: Callable, support_note: str = "numeric") -> "LifetimeDistribution":
        """A law known only through its density; transform and quantiles are numeric."""

        def laplace(u):
            u = np.atleast_1d(np.asarray(u, dtype=complex))
            out = np.array([integrate_halfline(lambda t: np.exp(-v * t) * density(t), 0.0)
                            for v in u])
            return out if out.size > 1 else complex(out[0])

        return cls(density=density, laplace=laplace, support_note=support_note)

    def total_mass(self) -> float:
        return float(integrate_halfline(self.density, 0.0).real)

    def sampler(self) -> Callable:
        return self.quantile if self.quantile is not None else NumericInverseCDF(self.density)


@dataclass(frozen=True)
class LimitLaw:
    """Limit law with Laplace transform psi; decay is the exponential tail rate of its density."""

    laplace: Callable
    decay: float
    mellin: Optional[MellinPair] = field(default=None, compare=False)

    def __post_init__(self):
        if not self.decay > 0:
            raise ValidationError("the limit density must decay exponentially")

    @classmethod
    def gamma(cls, kappa: float) -> "LimitLaw":
        """Gamma(kappa, 1) law, psi(u) = (1 + u)^(-kappa)."""
        if not kappa > 0:
            raise ValidationError("kappa must be positive, got {}".format(kappa))
        return cls(laplace=lambda u: np.exp(-kappa * np.log1p(np.asarray(u, dtype=complex))),
                   decay=1.0,
                   mellin=MellinPair(plus=lambda s: gamma(s + kappa - 1.0) / gamma(kappa),
                                     strip=(1.0 - kappa, np.inf)))

    def __call__(self, u):
        return self.laplace(u)


def malthusian(f: OffspringPGF, G: LifetimeDistribution,
               bracket: Tuple[float, float] = DEFAULT_BRACKET) -> float:
    """Root beta of mu * int e^(-beta t) dG(t) = 1."""
    mu = f.mean

    def excess(y):
        return mu * complex(G.laplace(y)).real - 1.0

    lo, hi = bracket
    if excess(lo) * excess(hi) > 0:
        raise NoRootError("mu * laplace(y) - 1 keeps its sign on [{}, {}] (mu = {})"
                          .format(lo, hi, mu))
    beta = bisect(excess, lo, hi, xtol=1e-15, maxiter=500)
    logger.debug("Malthusian parameter %.15g, residual %.2e", beta, excess(beta))
    return beta


def recover_lifetime_laplace(psi: LimitLaw, f: OffspringPGF, s: complex,
                             beta_line: BromwichLine = None) -> complex:
    """
    Laplace transform of G at s from the limit law and the offspring law, as the ratio
    int psi(u) (-u)^(-s-1) du / int f(psi(u)) (-u)^(-s-1) du along Re(u) = beta < 0.
    """
    s = complex(s)
    if s.real < 0:
        raise ValidationError("recovery needs Re(s) >= 0, got {}".format(s))
    f.check_recoverable()
    line = beta_line if beta_line is not None else BromwichLine(-0.5, **RECOVERY_LINE)
    if not line.abscissa < 0:
        raise BranchError("the line must lie left of the origin, got {}".format(line.abscissa))
    if not -line.abscissa < psi.decay:
        raise StripError("|beta| = {} must stay below the decay rate {} of the limit density"
                         .format(-line.abscissa, psi.decay))
    nodes, _ = line.nodes()
    check_branch_continuity(nodes)

    def kernel(u):
        return np.exp(-(s + 1.0) * np.log(-u))

    numerator = integrate_bromwich(lambda u: psi(u) * kernel(u), line)
    denominator = integrate_bromwich(lambda u: f(psi(u)) * kernel(u), line)
    if abs(denominator) < RECOVERY_FLOOR:
        raise RecoveryError("denominator {:.2e} is too small at s = {}".format(abs(denominator), s))
    return numerator / denominator


def fixed_point_residual(psi: LimitLaw, f: OffspringPGF, G: LifetimeDistribution,
                         beta: float, u: float) -> float:
    """|psi(u) - int f(psi(u e^(-beta t))) dG(t)|."""
    if u < 0 or not beta > 0:
        raise ValidationError("need u >= 0 and beta > 0")

    def integrand(t):
        return f(psi(u * np.exp(-beta * np.asarray(t)))) * G.density(t)

    right = integrate_halfline(integrand, 0.0)
    return float(abs(complex(psi(u)) - right))


class _BufferedDraws:
    """Batches of life-times and offspring counts from one generator."""

    def __init__(self, rng: np.random.Generator, quantile: Callable, cumulative: np.ndarray):
        self.rng = rng
        self.quantile = quantile
        self.cumulative = cumulative
        self._lifetimes, self._children = [], []

    def lifetime(self) -> float:
        if not self._lifetimes:
            self._lifetimes = list(np.asarray(self.quantile(self.rng.random(SAMPLE_BATCH)))[::-1])
        return float(self._lifetimes.pop())

    def children(self) -> int:
        if not self._children:
            u = self.rng.random(SAMPLE_BATCH)
            counts = np.searchsorted(self.cumulative, u, side="right")
            self._children = list(np.minimum(counts, len(self.cumulative) - 1)[::-1])
        return int(self._children.pop())


def simulate_replica(f: OffspringPGF, sampler: Callable, horizon: float, seed: int,
                     index: int) -> int:
    """Population alive at the horizon for one replica, started by one newborn at time 0."""
    draws = _BufferedDraws(np.random.default_rng([seed, index]), sampler, f.cumulative)
    deaths = [draws.lifetime()]
    while deaths and deaths[0] <= horizon:
        now = heapq.heappop(deaths)
        for _ in range(draws.children()):
            heapq.heappush(deaths, now + draws.lifetime())
        if len(deaths) > POPULATION_GUARD:
            raise PopulationExplosionError("replica {} exceeded {} individuals before t = {}"
                                           .format(index, POPULATION_GUARD, horizon))
    return len(deaths)


def empirical_laplace(samples: np.ndarray, scale: float, u: float) -> Tuple[float, float]:
    """Mean of exp(-u * samples * scale) and its standard error."""
    values = np.exp(-u * np.asarray(samples, dtype=float) * scale)
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(len(values)))


@dataclass(frozen=True)
class BHSimulation:
    populations: np.ndarray
    horizon: float
    seed: int

    @property
    def replicas(self) -> int:
        return len(self.populations)

    def mean(self) -> Tuple[float, float]:
        z = self.populations.astype(float)
        return float(z.mean()), float(z.std(ddof=1) / np.sqrt(len(z)))

    def malthusian_scaled(self, beta: float) -> np.ndarray:
        """Z_T e^(-beta T)."""
        return self.populations * np.exp(-beta * self.horizon)

    def laplace_at(self, u: float, beta: float) -> Tuple[float, float]:
        return empirical_laplace(self.populations, np.exp(-beta * self.horizon), u)


def check_expected_population(f: OffspringPGF, G: LifetimeDistribution, horizon: float):
    """Reject horizons whose expected population e^(beta t) is out of reach."""
    if not f.mean > 1:
        return
    try:
        beta = malthusian(f, G)
    except NoRootError:
        raise ValidationError("the Malthusian parameter exceeds {}; no horizon is affordable"
                              .format(DEFAULT_BRACKET[1]))
    if beta * horizon > np.log(EXPECTED_POPULATION_LIMIT):
        raise ValidationError("expected population e^(beta t) = e^{:.3g} exceeds {} at t = {}"
                              .format(beta * horizon, EXPECTED_POPULATION_LIMIT, horizon))


def simulate_bellman_harris(f: OffspringPGF, G: LifetimeDistribution, horizon: float,
                            replicas: int, seed: int, threads: int = 1,
                            progress: bool = False) -> BHSimulation:
    """Event-driven simulation of independent replicas; replica i draws from (seed, i)."""
    if not horizon > 0 or int(replicas) < 1:
        raise ValidationError("need horizon > 0 and at least one replica")
    check_expected_population(f, G, horizon)
    start = time.time()
    task = partial(simulate_replica, f, G.sampler(), float(horizon), int(seed))
    pool = ReplicaPool(threads=threads, progress=progress, description="bellman-harris")
    populations = np.asarray(pool.map(task, range(int(replicas))), dtype=np.int64)
    logger.info("simulated %d Bellman-Harris replicas to t=%g in %.2fs", replicas, horizon,
                time.time() - start)
    return BHSimulation(populations=populations, horizon=float(horizon), seed=int(seed))
