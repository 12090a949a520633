"""Luria-Delbrück process with mutation probability rho and burst size kappa, and its limit law."""
import logging
import time
from dataclasses import dataclass
from functools import partial
from typing import Callable, Dict, NamedTuple, Tuple

import numpy as np

from mellinbranch.errors import BudgetError, PoleError, SeriesOverflowError, ValidationError
from mellinbranch.mellin_core import hyperbolic_product
from mellinbranch.parallel import ReplicaPool
from mellinbranch.specfun import gamma, rgamma

logger = logging.getLogger(__name__)

DIVISION_BUDGET = 10 ** 7
LD_BLOCK_SIZE = 4096
MAX_LAPLACE_TERMS = 10000
LAPLACE_ROUNDING_BUDGET = 1e-10
BOOTSTRAP_RESAMPLES = 200


@dataclass(frozen=True)
class LDParams:
    """rho = 0 is accepted as the degenerate no-mutation case."""

    rho: float
    kappa: int = 1

    def __post_init__(self):
        if not 0 <= self.rho < 1:
            raise ValidationError("rho must lie in [0, 1), got {}".format(self.rho))
        if int(self.kappa) != self.kappa or self.kappa < 1:
            raise ValidationError("kappa must be a positive integer, got {}".format(self.kappa))

    @property
    def kbar(self) -> float:
        return 1.0 / self.kappa


class LDState(NamedTuple):
    nonmutants: int
    total: int
    divisions: int

    @classmethod
    def initial(cls) -> "LDState":
        return cls(nonmutants=1, total=1, divisions=0)


def ld_step(state: LDState, p: LDParams, draw: Tuple[float, float]) -> LDState:
    """
    One division. draw = (u_cell, u_mutation), two uniforms on [0, 1): the divider is a
    non-mutant iff u_cell * total < nonmutants, and it mutates iff u_mutation < rho.
    """
    u_cell, u_mutation = draw
    nonmutants = state.nonmutants
    if u_cell * state.total < state.nonmutants and u_mutation >= p.rho:
        nonmutants += p.kappa
    return LDState(nonmutants=nonmutants, total=state.total + p.kappa,
                   divisions=state.divisions + 1)


def simulate_block(p: LDParams, n: int, replicas: int, seed: int, block: int) -> np.ndarray:
    """L_n for one block of replicas, all driven by the generator of (seed, block)."""
    size = min(LD_BLOCK_SIZE, replicas - block * LD_BLOCK_SIZE)
    rng = np.random.default_rng([seed, block])
    nonmutants = np.ones(size, dtype=np.int64)
    keep = 1.0 - p.rho
    for k in range(n):
        total = k * p.kappa + 1
        grows = rng.random(size) < nonmutants * (keep / total)
        nonmutants += p.kappa * grows
    return nonmutants


def simulate_ld(p: LDParams, n: int, replicas: int, seed: int, threads: int = 1,
                progress: bool = False) -> np.ndarray:
    """
    L_n for independent replicas started from one non-mutant cell.

    Replicas run in blocks of LD_BLOCK_SIZE and block b draws from the generator of
    (seed, b), so the samples depend on (seed, replicas) and not on the worker count.
    """
    if int(n) < 0 or int(replicas) < 1:
        raise ValidationError("need n >= 0 and at least one replica")
    if n * p.kappa > DIVISION_BUDGET:
        raise BudgetError("n * kappa = {} exceeds the budget of {}".format(n * p.kappa,
                                                                         DIVISION_BUDGET))
    start = time.time()
    blocks = int(np.ceil(replicas / LD_BLOCK_SIZE))
    task = partial(simulate_block, p, int(n), int(replicas), int(seed))
    pool = ReplicaPool(threads=threads, progress=progress, description="luria-delbruck")
    samples = np.concatenate(pool.map(task, range(blocks)))
    logger.info("simulated %d Luria-Delbruck replicas of %d divisions in %.2fs", replicas, n,
                time.time() - start)
    return samples


def _scalar(value):
    return complex(value) if np.ndim(value) == 0 else value


def ml_mellin(rho: float, s):
    """Gamma(s) / Gamma((1 - rho)(s - 1) + 1), the Mittag-Leffler law of order 1 - rho."""
    s = np.asarray(s, dtype=complex)
    return _scalar(gamma(s) * rgamma((1.0 - rho) * (s - 1.0) + 1.0))


def size_biased_mellin(base: Callable, weight: float, s):
    """Transform of the law reweighted by x^weight: base(s + weight) / base(1 + weight)."""
    normalizer = complex(base(1.0 + weight))
    if normalizer == 0:
        raise PoleError("the biasing normalizer vanishes for weight {}".format(weight))
    return _scalar(base(np.asarray(s, dtype=complex) + weight) / normalizer)


def beta_power_mellin(rho: float, kbar: float, s):
    """Transform of B^(1 - rho) for B ~ Beta(kbar (1 - rho), kbar rho)."""
    s = np.asarray(s, dtype=complex)
    r = 1.0 - rho
    value = (gamma(kbar) * rgamma(r * kbar) * gamma(r * (s - 1.0 + kbar))
             * rgamma(r * (s - 1.0) + kbar))
    return _scalar(value)


def ld_mellin(p: LDParams, s):
    """Gamma(s + kbar - 1) / Gamma((1 - rho)(s - 1) + kbar)."""
    s = np.asarray(s, dtype=complex)
    return _scalar(gamma(s + p.kbar - 1.0) * rgamma((1.0 - p.rho) * (s - 1.0) + p.kbar))


def ld_mellin_factored(p: LDParams, s):
    """The same transform as the product of the Beta-power and size-biased factors."""
    beta = beta_power_mellin(p.rho, p.kbar, s)
    biased = size_biased_mellin(partial(ml_mellin, p.rho), p.kbar, s)
    # Both factors live on the positive half-line.
    plus, _ = hyperbolic_product((beta, 0.0), (biased, 0.0))
    return plus


def ld_laplace_coefficients(p: LDParams, count: int) -> np.ndarray:
    """c_i = Gamma(kbar) C(-kbar, i) / Gamma(i (1 - rho) + kbar) for i < count."""
    out = np.empty(count)
    binomial = 1.0
    for i in range(count):
        if i > 0:
            binomial *= (-p.kbar - i + 1.0) / i
        out[i] = (gamma(p.kbar) * binomial * rgamma(i * (1.0 - p.rho) + p.kbar)).real
    return out


def ld_laplace(p: LDParams, u: float, tol: float = 1e-16) -> float:
    """E exp(-u L) by its power series in u."""
    if u < 0 or not tol > 0:
        raise ValidationError("need u >= 0 and tol > 0")
    scale = gamma(p.kbar).real
    binomial = 1.0
    power = 1.0
    total = 0.0
    magnitude = 0.0
    small_in_a_row = 0
    for i in range(MAX_LAPLACE_TERMS):
        if i > 0:
            binomial *= (-p.kbar - i + 1.0) / i
            power *= u
        if not np.isfinite(power):
            raise SeriesOverflowError("u^i overflowed at i = {} for u = {}".format(i, u))
        term = scale * binomial * power * rgamma(i * (1.0 - p.rho) + p.kbar).real
        total += term
        magnitude += abs(term)
        if abs(term) < tol * abs(total):
            small_in_a_row += 1
            if small_in_a_row == 2:
                break
        else:
            small_in_a_row = 0
    else:
        raise SeriesOverflowError("Laplace series did not settle within {} terms; use the "
                                  "Mellin route for u = {}".format(MAX_LAPLACE_TERMS, u))
    if np.finfo(float).eps * magnitude > LAPLACE_ROUNDING_BUDGET * abs(total):
        raise SeriesOverflowError("Laplace series cancels {:.1e}-sized terms at u = {}"
                                  .format(magnitude, u))
    return float(total)


def ld_moment_ratios(p: LDParams) -> Dict[str, float]:
    """Scale-free ratios E[L^2]/E[L]^2 and E[L^(1/2)]^2/E[L] from the transform."""
    m = partial(ld_mellin, p)
    return {"second": float((m(3.0) * m(1.0) / m(2.0) ** 2).real),
            "half": float((m(1.5) ** 2 / m(2.0)).real)}


def _ratios(x: np.ndarray) -> Tuple[float, float]:
    mean = x.mean()
    return (x * x).mean() / mean ** 2, np.sqrt(x).mean() ** 2 / mean


def moment_ratio_statistics(samples: np.ndarray, resamples: int = BOOTSTRAP_RESAMPLES,
                            seed: int = 0) -> Dict[str, Tuple[float, float]]:
    """Empirical ratios with bootstrap standard errors; invariant to rescaling the samples."""
    x = np.asarray(samples, dtype=float)
    second, half = _ratios(x)
    rng = np.random.default_rng(seed)
    boot = np.array([_ratios(x[rng.integers(0, len(x), len(x))]) for _ in range(resamples)])
    return {"second": (float(second), float(boot[:, 0].std(ddof=1))),
            "half": (float(half), float(boot[:, 1].std(ddof=1)))}


def ld_scale_factor(samples: np.ndarray, p: LDParams, n: int) -> float:
    """Empirical c in L_n / n^(1 - rho) ~ c L, estimated from the first moment."""
    normalized = np.asarray(samples, dtype=float) / float(n) ** (1.0 - p.rho)
    return float(normalized.mean() / ld_mellin(p, 2.0).real)
