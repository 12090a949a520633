import logging
import warnings
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from mellinbranch.contour import LOG_TINY, BromwichLine
from mellinbranch.errors import ConvergenceWarning, DomainError, ValidationError
from mellinbranch.mellin_core import MellinPair, mellin_from_fourier, mellin_invert
from mellinbranch.specfun import gamma, rgamma

logger = logging.getLogger(__name__)

DEFAULT_GAMMA = 0.5
# Inversion is reported slow beyond these, where the density is tiny against the quadrature noise.
SLOW_ALPHA = 1.9
SLOW_ABS_X = 8.0


@dataclass(frozen=True)
class StableParams:
    """
    Stable law with Fourier transform exp(-|y|^alpha e^(i pi theta sgn(y) / 2)).

    rho_plus and rho_minus are the masses the law puts on each half-line.
    """

    alpha: float
    theta: float = 0.0

    def __post_init__(self):
        if not 0 < self.alpha <= 2:
            raise ValidationError("alpha must lie in (0, 2], got {}".format(self.alpha))
        bound = min(self.alpha, 2.0 - self.alpha)
        if abs(self.theta) > bound + 1e-12:
            raise ValidationError("|theta| must be at most {} for alpha = {}, got {}"
                                  .format(bound, self.alpha, self.theta))
        if self.alpha == 1 and self.theta != 0:
            raise ValidationError("asymmetric laws with alpha = 1 are not supported")

    @property
    def rho_plus(self) -> float:
        return (self.alpha - self.theta) / (2.0 * self.alpha)

    @property
    def rho_minus(self) -> float:
        return 1.0 - self.rho_plus

    def rho(self, side: str) -> float:
        if side == "plus":
            return self.rho_plus
        if side == "minus":
            return self.rho_minus
        raise ValidationError("side must be 'plus' or 'minus', got {}".format(side))

    def fourier(self, y):
        """psi*(y) for real y."""
        y = np.asarray(y, dtype=float)
        phase = np.exp(0.5j * np.pi * self.theta * np.sign(y))
        return np.exp(-np.abs(y) ** self.alpha * phase)

    def admissible_thetas(self) -> Tuple[float, ...]:
        """theta in {0, +-alpha/2} restricted to the admissible range."""
        if self.alpha == 1:
            return (0.0,)
        bound = min(self.alpha, 2.0 - self.alpha)
        half = 0.5 * self.alpha
        return tuple(t for t in (0.0, half, -half) if abs(t) <= bound + 1e-12)


def stable_mellin(p: StableParams, s, side: str = "plus"):
    """rho Gamma(s) Gamma(1 + (1 - s)/alpha) / (Gamma(1 + rho (1 - s)) Gamma(1 - rho (1 - s)))."""
    rho = p.rho(side)
    s = np.asarray(s, dtype=complex)
    w = 1.0 - s
    value = (rho * gamma(s) * gamma(1.0 + w / p.alpha)
             * rgamma(1.0 + rho * w) * rgamma(1.0 - rho * w))
    return complex(value) if np.ndim(value) == 0 else value


def stable_mellin_sine_form(p: StableParams, s, side: str = "plus"):
    """Gamma(s) Gamma((1 - s)/alpha) sin(pi rho (1 - s)) / (alpha pi); undefined at s = 1."""
    rho = p.rho(side)
    s = np.asarray(s, dtype=complex)
    w = 1.0 - s
    value = gamma(s) * gamma(w / p.alpha) * np.sin(np.pi * rho * w) / (p.alpha * np.pi)
    return complex(value) if np.ndim(value) == 0 else value


def stable_phase_identity(p: StableParams, s: float) -> Tuple[float, float]:
    """Both sides of cos(((1 - s) pi theta + s pi alpha)/(2 alpha)) = sin((1 - s) pi (alpha - theta)/(2 alpha))."""
    a, t = p.alpha, p.theta
    left = np.cos(((1.0 - s) * np.pi * t + s * np.pi * a) / (2.0 * a))
    right = np.sin((1.0 - s) * np.pi * (a - t) / (2.0 * a))
    return float(left), float(right)


def stable_pair(p: StableParams) -> MellinPair:
    return MellinPair(plus=lambda s: stable_mellin(p, s, "plus"),
                      minus=lambda s: stable_mellin(p, s, "minus"),
                      strip=(0.0, 1.0 + p.alpha))


def stable_mellin_numeric(p: StableParams, s: float) -> Tuple[complex, complex]:
    """Both transforms at real s in (0, 1) from the Fourier transform of the law."""
    return mellin_from_fourier(p.fourier, s)


def default_density_line(p: StableParams, gamma_: float = DEFAULT_GAMMA) -> BromwichLine:
    """A line long enough for the closed form to decay below exp(-LOG_TINY)."""
    rho = max(p.rho_plus, p.rho_minus)
    rate = 0.5 * np.pi * (1.0 + 1.0 / p.alpha - 2.0 * rho)
    height = (LOG_TINY + 10.0) / max(rate, 0.05)
    return BromwichLine(gamma_, half_height=height, steps=int(40 * height))


def stable_density(p: StableParams, x: float, gamma_: float = DEFAULT_GAMMA,
                   line: BromwichLine = None) -> float:
    """Density of the law at x != 0 by inversion of the closed-form pair."""
    if x == 0:
        raise DomainError("the Mellin route evaluates the density away from x = 0")
    if not 0 < gamma_ < 1:
        raise ValidationError("gamma must lie in (0, 1), got {}".format(gamma_))
    if p.alpha > SLOW_ALPHA and abs(x) > SLOW_ABS_X:
        warnings.warn("inversion converges slowly for alpha = {} at |x| = {}; the result is "
                      "dominated by quadrature noise".format(p.alpha, abs(x)),
                      ConvergenceWarning, stacklevel=2)
    line = line if line is not None else default_density_line(p, gamma_)
    side = "plus" if x > 0 else "minus"
    return mellin_invert(stable_pair(p), abs(x), gamma_, line=line, side=side)
