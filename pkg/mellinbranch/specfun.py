"""Complex special functions: Gamma, its reciprocal on a Hankel contour, Mittag-Leffler."""
import cmath
import logging
import warnings
from dataclasses import dataclass, replace
from typing import Callable, Sequence, Tuple, Union

import numpy as np

from mellinbranch.contour import tanh_sinh_rule
from mellinbranch.errors import (DomainError, PoleError, QuadratureWarning, SeriesOverflowError,
                                 ValidationError)

logger = logging.getLogger(__name__)

Number = Union[complex, float, np.ndarray]

# Lanczos approximation, g = 7, nine terms.
LANCZOS_G = 7.0
LANCZOS_COEFFICIENTS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_TWO_PI = 0.5 * np.log(2.0 * np.pi)
_EPS = np.finfo(float).eps
# Accepted loss of accuracy of an alternating series to cancellation.
SERIES_ROUNDING_BUDGET = 1e-10
MAX_SERIES_TERMS = 100000


def _pole_mask(z: np.ndarray) -> np.ndarray:
    return (z.imag == 0) & (z.real <= 0) & (z.real == np.round(z.real))


def _log_gamma_lanczos(z: np.ndarray) -> np.ndarray:
    """log Gamma(z) for Re(z) >= 1/2."""
    zm = z - 1.0
    series = np.full(zm.shape, LANCZOS_COEFFICIENTS[0], dtype=complex)
    for i, coefficient in enumerate(LANCZOS_COEFFICIENTS[1:], start=1):
        series = series + coefficient / (zm + i)
    t = zm + LANCZOS_G + 0.5
    return _HALF_LOG_TWO_PI + (zm + 0.5) * np.log(t) - t + np.log(series)


def _log_sin_pi(z: np.ndarray) -> np.ndarray:
    """A logarithm of sin(pi z) that does not overflow for large |Im z|."""
    w = np.pi * z
    upper = w.imag >= 0
    out = np.empty(w.shape, dtype=complex)
    wu = w[upper]
    out[upper] = -1j * wu + np.log(0.5j) + np.log1p(-np.exp(2j * wu))
    wl = w[~upper]
    out[~upper] = 1j * wl + np.log(-0.5j) + np.log1p(-np.exp(-2j * wl))
    return out


def log_gamma(z: Number) -> Number:
    """
    A logarithm of Gamma(z) on the complex plane.

    The imaginary part is not reduced to the principal branch: exp(log_gamma(z)) == gamma(z),
    which is all the closed forms need.
    :param z: Scalar or array, not a nonpositive integer.
    :return: Complex scalar or array of the same shape.
    """
    arr = np.asarray(z, dtype=complex)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if np.any(_pole_mask(arr)):
        raise PoleError("Gamma has a pole at {}".format(arr[_pole_mask(arr)][0].real))
    out = np.empty(arr.shape, dtype=complex)
    right = arr.real >= 0.5
    out[right] = _log_gamma_lanczos(arr[right])
    left = arr[~right]
    if left.size:
        out[~right] = np.log(np.pi) - _log_sin_pi(left) - _log_gamma_lanczos(1.0 - left)
    return complex(out[0]) if scalar else out


def gamma(z: Number) -> Number:
    """Gamma(z) for complex z; raises PoleError at 0, -1, -2, ..."""
    value = np.exp(log_gamma(z))
    return complex(value) if np.ndim(value) == 0 else value


def rgamma(z: Number) -> Number:
    """1/Gamma(z), an entire function: zero at the poles of Gamma."""
    arr = np.asarray(z, dtype=complex)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    out = np.zeros(arr.shape, dtype=complex)
    regular = ~_pole_mask(arr)
    out[regular] = np.exp(-log_gamma(arr[regular]))
    return complex(out[0]) if scalar else out


@dataclass(frozen=True)
class MLOrder:
    """Order nu in (0, 1] of a Mittag-Leffler function."""

    nu: float

    def __post_init__(self):
        if not 0 < self.nu <= 1:
            raise ValidationError("Mittag-Leffler order must lie in (0, 1], got {}".format(self.nu))


@dataclass(frozen=True)
class HankelContour:
    """
    Lollipop contour: the ray arg(zeta) = -ray_angle from the cutoff in to the given radius,
    the arc of that radius counterclockwise across the positive axis, then the ray
    arg(zeta) = +ray_angle back out. ray_angle = pi hugs both sides of the negative axis;
    smaller angles tilt the rays into the left half-plane.
    """

    radius: float = 1.0
    cutoff: float = 40.0
    steps_ray: int = 2000
    steps_arc: int = 400
    ray_angle: float = np.pi

    def __post_init__(self):
        if not self.radius > 0:
            raise ValidationError("radius must be positive, got {}".format(self.radius))
        if not self.cutoff > self.radius:
            raise ValidationError("cutoff must exceed radius")
        if min(self.steps_ray, self.steps_arc) < 16:
            raise ValidationError("step counts must be at least 16")
        if not np.pi / 2 < self.ray_angle <= np.pi:
            raise ValidationError("ray_angle must lie in (pi/2, pi], got {}".format(self.ray_angle))

    @property
    def decay(self) -> float:
        """Rate at which |exp(zeta)| decays along the rays."""
        return -np.cos(self.ray_angle)

    def tilted(self, ray_angle: float) -> "HankelContour":
        """The same contour with rays at ray_angle, cutoff stretched to keep the ray decay."""
        return replace(self, ray_angle=ray_angle,
                       cutoff=self.cutoff * self.decay / -np.cos(ray_angle))

    def refined(self, factor: int) -> "HankelContour":
        return replace(self, steps_ray=self.steps_ray * factor, steps_arc=self.steps_arc * factor)

    def nodes(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Nodes zeta, their logarithms (arg = -ray_angle on the lower ray, +ray_angle on the
        upper ray) and weights w with (1/2 pi i) int_H g(zeta) dzeta ~ sum w g(zeta).
        """
        theta = self.ray_angle
        x, log_x, wx = tanh_sinh_rule(self.radius, self.cutoff, self.steps_ray)
        phi, _, wphi = tanh_sinh_rule(-theta, theta, self.steps_arc)
        lower, upper = np.exp(-1j * theta), np.exp(1j * theta)
        arc = self.radius * np.exp(1j * phi)
        zeta = np.concatenate([x * lower, arc, x * upper])
        log_zeta = np.concatenate([log_x - 1j * theta, np.log(self.radius) + 1j * phi,
                                   log_x + 1j * theta])
        # Lower ray runs inward, upper ray outward.
        weights = np.concatenate([-lower * wx, 1j * arc * wphi, upper * wx])
        return zeta, log_zeta, weights / (2j * np.pi)


DEFAULT_HANKEL = HankelContour()
TILTED_RAY_ANGLE = 0.85 * np.pi


def recip_gamma_hankel(z: complex, contour: HankelContour = DEFAULT_HANKEL,
                       tol: float = 1e-9) -> complex:
    """
    1/Gamma(z) as (1/2 pi i) times the integral of exp(zeta) zeta^(-z) over the Hankel contour.

    Warns when the part of the rays cut off beyond the contour's cutoff may exceed tol.
    """
    z = complex(z)
    zeta, log_zeta, w = contour.nodes()
    result = complex(np.sum(np.exp(zeta - z * log_zeta) * w))
    tail = (np.exp(-contour.decay * contour.cutoff) * contour.cutoff ** (-z.real)
            * np.exp(contour.ray_angle * abs(z.imag)) / (np.pi * contour.decay))
    if tail > tol * max(1.0, abs(result)):
        warnings.warn("Hankel truncation error may reach {:.2e} at z = {}".format(tail, z),
                      QuadratureWarning, stacklevel=2)
    return result


def _as_order(nu) -> MLOrder:
    return nu if isinstance(nu, MLOrder) else MLOrder(float(nu))


def mittag_leffler_series(nu: Union[MLOrder, float], u: complex, tol: float = 1e-16) -> complex:
    """
    E_nu(u) = sum_k (-u)^k / Gamma(nu k + 1).

    Stops once two consecutive terms fall below tol times the partial sum. Raises
    SeriesOverflowError when a term overflows or when cancellation between terms
    spoils more than SERIES_ROUNDING_BUDGET of the result; the contour route is the
    fallback then.
    """
    order = _as_order(nu)
    if not tol > 0:
        raise ValidationError("tol must be positive")
    u = complex(u)
    total = 0j
    magnitude = 0.0
    power = 1 + 0j
    small_in_a_row = 0
    for k in range(MAX_SERIES_TERMS):
        term = power * rgamma(order.nu * k + 1.0)
        if not cmath.isfinite(term):
            raise SeriesOverflowError("term {} of the Mittag-Leffler series overflowed at u = {}"
                                      .format(k, u))
        total += term
        magnitude += abs(term)
        if abs(term) < tol * abs(total):
            small_in_a_row += 1
            if small_in_a_row == 2:
                break
        else:
            small_in_a_row = 0
        power *= -u
        if not cmath.isfinite(power):
            raise SeriesOverflowError("(-u)^k overflowed at k = {} for u = {}".format(k, u))
    else:
        raise SeriesOverflowError("Mittag-Leffler series did not settle within {} terms"
                                  .format(MAX_SERIES_TERMS))
    if _EPS * magnitude > SERIES_ROUNDING_BUDGET * max(abs(total), np.finfo(float).tiny):
        raise SeriesOverflowError(
            "series for E_{}({}) cancels {:.1e}-sized terms down to {:.1e}; use the contour path"
            .format(order.nu, u, magnitude, abs(total)))
    return total


def _ml_zero(nu: float, u: complex):
    """Zero of zeta + u zeta^(1 - nu), i.e. zeta^nu = -u, continued across the cut."""
    log_minus_u = cmath.log(-u)
    return cmath.exp(log_minus_u / nu), abs(log_minus_u.imag) / nu


def _zero_distance(zeta_star: complex, angle: float, contour: HankelContour) -> float:
    if angle > 1.5 * np.pi:
        return np.inf
    radius, theta = contour.radius, contour.ray_angle
    distances = []
    for direction in (np.exp(-1j * theta), np.exp(1j * theta)):
        t = max((zeta_star * direction.conjugate()).real, radius)
        distances.append(abs(zeta_star - t * direction))
    if abs(cmath.phase(zeta_star)) <= theta:
        distances.append(abs(abs(zeta_star) - radius))
    return min(distances)


MAX_AUTO_RADIUS = 20.0


def _auto_contours(zeta_star: complex):
    """Default contour, then tilted rays, then a radius past the zero, then both."""
    yield DEFAULT_HANKEL
    yield DEFAULT_HANKEL.tilted(TILTED_RAY_ANGLE)
    radius = abs(zeta_star) + 1.0
    if radius <= MAX_AUTO_RADIUS:
        wide = replace(DEFAULT_HANKEL, radius=radius, cutoff=DEFAULT_HANKEL.cutoff + radius)
        yield wide
        yield wide.tilted(TILTED_RAY_ANGLE)


def mittag_leffler_hankel(nu: Union[MLOrder, float], u: complex, contour: HankelContour = None,
                          exclusion: float = 0.1, refine: int = 1) -> complex:
    """
    E_nu(u) from the Hankel integral of exp(zeta) / (zeta + u zeta^(1 - nu)).

    The integral reproduces E_nu when the zero zeta* of the denominator is enclosed, i.e. it
    lies in the disk or beyond the rays. When zeta* sits outside the disk between the rays,
    its residue exp(zeta*)/nu is added. The argument is rejected when zeta* lies within the
    exclusion distance of the path. Without an explicit contour the rays are tilted and the
    radius enlarged (up to MAX_AUTO_RADIUS) until the path clears zeta*. refine multiplies
    the step counts of whichever contour is used.
    """
    order = _as_order(nu)
    u = complex(u)
    if int(refine) < 1:
        raise ValidationError("refine must be a positive integer, got {}".format(refine))
    if u == 0:
        return 1 + 0j
    zeta_star, angle = _ml_zero(order.nu, u)
    candidates = [contour] if contour is not None else _auto_contours(zeta_star)
    for chosen in candidates:
        distance = _zero_distance(zeta_star, angle, chosen)
        if distance >= exclusion:
            break
    else:
        raise DomainError("u = {} is within {:.3g} of the zero set of the Hankel integrand"
                          .format(u, distance))
    if chosen is not DEFAULT_HANKEL and contour is None:
        logger.debug("Hankel contour radius %g, ray angle %.4g for u=%r", chosen.radius,
                     chosen.ray_angle, u)
    if refine > 1:
        chosen = chosen.refined(int(refine))
    zeta, log_zeta, w = chosen.nodes()
    rho = 1.0 - order.nu
    integrand = np.exp(zeta) / (zeta + u * np.exp(rho * log_zeta))
    result = complex(np.sum(integrand * w))
    if angle < chosen.ray_angle and abs(zeta_star) > chosen.radius:
        result += cmath.exp(zeta_star) / order.nu
    return result


def mittag_leffler(nu: Union[MLOrder, float], u: Number) -> Number:
    """
    E_nu(u) by the series where it certifies its accuracy, by the contour otherwise.
    E_1(u) is exp(-u).
    """
    order = _as_order(nu)
    arr = np.asarray(u, dtype=complex)
    if order.nu == 1:
        out = np.exp(-arr)
        return complex(out) if arr.ndim == 0 else out
    flat = arr.reshape(-1)
    out = np.empty(flat.shape, dtype=complex)
    for i, value in enumerate(flat):
        try:
            out[i] = mittag_leffler_series(order, value)
        except SeriesOverflowError:
            out[i] = mittag_leffler_hankel(order, value)
    out = out.reshape(arr.shape)
    return complex(out) if arr.ndim == 0 else out


def completely_monotone_on_grid(fn: Callable, grid: Sequence[float], max_order: int = 4,
                                tol: float = 1e-9) -> bool:
    """
    Check that (-1)^n times the n-th forward difference of fn on an even grid is
    nonnegative for n = 0..max_order, up to -tol.
    """
    values = np.real(np.asarray([fn(x) for x in grid], dtype=complex))
    differences = values
    for order in range(max_order + 1):
        if np.any((-1) ** order * differences < -tol):
            logger.debug("sign pattern breaks at difference order %d", order)
            return False
        differences = np.diff(differences)
    return True
