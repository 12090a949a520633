"""Quadrature along vertical Bromwich lines and along the positive half-line.

Every rule here is the trapezoid rule, either on a uniform grid or in the
variable of a graded (double-exponential) substitution. Evaluators are called
once per rule with a numpy array of nodes and must be vectorised.
"""
import dataclasses
import logging
import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence, Tuple, Union

import numpy as np
from scipy.special import expit

from mellinbranch.errors import (BranchError, ConvergenceError, DivergenceError,
                                 QuadratureWarning, SingularityError, ValidationError)

logger = logging.getLogger(__name__)

DEFAULT_EPS_SEQUENCE = (0.02, 0.01, 0.005)
DEFAULT_DAMPING = tuple(0.1 * 2.0 ** -k for k in range(6))
MIN_EPS = 1e-4
TAIL_RATIO = 1e-3
NONFINITE_RATIO = 1e-6
# exp(-LOG_TINY) is treated as zero relative to O(1) integrals.
LOG_TINY = 40.0
LOG_HUGE = 700.0
_HALF_PI = 0.5 * np.pi


@dataclass(frozen=True)
class ComplexFunction:
    """A vectorised map from complex nodes to complex values."""

    evaluator: Callable
    domain_note: str = ""

    def __call__(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=complex)
        with np.errstate(all="ignore"):
            value = np.asarray(self.evaluator(s), dtype=complex)
        return np.broadcast_to(value, s.shape)


FunctionLike = Union[ComplexFunction, Callable]


def as_function(f: FunctionLike) -> ComplexFunction:
    return f if isinstance(f, ComplexFunction) else ComplexFunction(f)


@dataclass(frozen=True)
class BromwichLine:
    """
    Truncated vertical line Re(s) = abscissa, |Im(s)| <= half_height.

    :param abscissa: Real part of every node.
    :param half_height: Truncation of the imaginary part.
    :param steps: Number of trapezoid panels.
    :param regularizer_eps: Width of the Gaussian factor exp(pi eps^2 s^2); 0 disables it.
    :param mapping: "uniform" spaces Im(s) evenly, "sinh" spaces asinh(Im(s)) evenly,
        which reaches very large heights cheaply for algebraically decaying integrands.
    """

    abscissa: float
    half_height: float = 200.0
    steps: int = 20000
    regularizer_eps: float = 0.0
    mapping: str = "uniform"

    def __post_init__(self):
        if not np.isfinite(self.abscissa):
            raise ValidationError("abscissa must be finite, got {}".format(self.abscissa))
        if not self.half_height > 0:
            raise ValidationError("half_height must be positive, got {}".format(self.half_height))
        if int(self.steps) < 64:
            raise ValidationError("steps must be at least 64, got {}".format(self.steps))
        if self.regularizer_eps < 0:
            raise ValidationError("regularizer_eps must be >= 0, got {}".format(self.regularizer_eps))
        if self.mapping not in ("uniform", "sinh"):
            raise ValidationError("mapping must be 'uniform' or 'sinh', got {}".format(self.mapping))

    def replace(self, **changes) -> "BromwichLine":
        return dataclasses.replace(self, **changes)

    def nodes(self) -> Tuple[np.ndarray, np.ndarray]:
        """Nodes s_k and weights w_k with (1/2 pi i) int f(s) ds ~ sum w_k f(s_k)."""
        steps = int(self.steps)
        if self.mapping == "uniform":
            y = np.linspace(-self.half_height, self.half_height, steps + 1)
            h = 2.0 * self.half_height / steps
            w = np.full(steps + 1, h)
        else:
            t_max = np.arcsinh(self.half_height)
            t = np.linspace(-t_max, t_max, steps + 1)
            h = 2.0 * t_max / steps
            y = np.sinh(t)
            w = h * np.cosh(t)
        w[0] *= 0.5
        w[-1] *= 0.5
        # ds = i dy cancels the i of 1/(2 pi i).
        return self.abscissa + 1j * y, w / (2.0 * np.pi)


class Extrapolation(NamedTuple):
    value: complex
    error_estimate: float


def drop_nonfinite(terms: np.ndarray, what: str = "quadrature") -> np.ndarray:
    """
    Zero the non-finite entries along the last axis of terms, as left behind where the
    integrand under- or overflows at the ends of a graded mesh. Only entries whose finite
    neighbours are below NONFINITE_RATIO times the largest finite term are dropped; any
    other non-finite entry raises ConvergenceError, as does a row with no finite term.
    """
    terms = np.asarray(terms)
    bad = ~np.isfinite(terms)
    if not bad.any():
        return terms
    if np.any(bad.all(axis=-1)):
        raise ConvergenceError("every {} term is non-finite".format(what))
    size = np.abs(np.where(bad, 0.0, terms))
    scale = size.max(axis=-1, keepdims=True)
    neighbour = np.zeros_like(size)
    neighbour[..., 1:] = size[..., :-1]
    neighbour[..., :-1] = np.maximum(neighbour[..., :-1], size[..., 1:])
    if np.any(bad & (neighbour > NONFINITE_RATIO * scale)):
        raise ConvergenceError("{} non-finite {} terms border terms that matter (largest {:.3e}); "
                               "the integrand is singular inside the range"
                               .format(int(bad.sum()), what, float(scale.max())))
    logger.debug("dropping %d non-finite %s terms at the ends of the mesh", int(bad.sum()), what)
    return np.where(bad, 0.0, terms)


def _finite_sum(values: np.ndarray, weights: np.ndarray) -> complex:
    return complex(np.sum(drop_nonfinite(values * weights)))


def integrate_bromwich(f: FunctionLike, line: BromwichLine) -> complex:
    """
    Compute (1/2 pi i) times the integral of f(s) ds up the truncated line, multiplied
    by exp(pi eps^2 s^2) when the line carries a regularizer.
    """
    f = as_function(f)
    s, w = line.nodes()
    values = np.array(f(s), dtype=complex)
    if line.regularizer_eps > 0:
        values *= np.exp(np.pi * line.regularizer_eps ** 2 * s * s)
    edge_values = values[[0, -1]]
    if not np.all(np.isfinite(values)):
        raise ConvergenceError("integrand is not finite along Re(s) = {}".format(line.abscissa))
    result = complex(np.sum(values * w))
    tail = float(np.max(np.abs(edge_values)))
    if tail > TAIL_RATIO * abs(result) and tail > 1e-16:
        warnings.warn("Bromwich tail {:.3e} is not negligible against the result {:.3e}; "
                      "raise half_height or use a regularizer".format(tail, abs(result)),
                      QuadratureWarning, stacklevel=2)
    return result


def richardson_limit(nodes: Sequence[float], values: Sequence[complex]) -> Extrapolation:
    """Neville extrapolation of values sampled at nodes to node = 0."""
    x = np.asarray(nodes, dtype=float)
    p = np.array(values, dtype=complex)
    n = len(x)
    if n == 1:
        return Extrapolation(complex(p[0]), float("inf"))
    previous = p[0]
    for level in range(1, n):
        for i in range(n - level):
            j = i + level
            p[i] = (x[i] * p[i + 1] - x[j] * p[i]) / (x[i] - x[j])
        if level == n - 2:
            previous = p[1]
    return Extrapolation(complex(p[0]), float(abs(p[0] - previous)))


def _check_decreasing(sequence: Sequence[float], name: str, floor: float) -> np.ndarray:
    seq = np.asarray(sequence, dtype=float)
    if seq.ndim != 1 or len(seq) < 2:
        raise ValidationError("{} needs at least two values".format(name))
    if np.any(np.diff(seq) >= 0):
        raise ValidationError("{} must be strictly decreasing, got {}".format(name, tuple(seq)))
    if seq[-1] < floor:
        raise ValidationError("{} values must be >= {}, got {}".format(name, floor, seq[-1]))
    return seq


def _check_divergence(values: Sequence[complex]):
    scale = max(1.0, max(abs(v) for v in values))
    noise = 1e-13 * scale
    diffs = [abs(b - a) for a, b in zip(values[:-1], values[1:])]
    for before, after in zip(diffs[:-1], diffs[1:]):
        if after > 10.0 * max(before, noise):
            raise DivergenceError("extrapolation sequence diverges: successive differences "
                                  "{:.3e} then {:.3e}".format(before, after))


def extrapolate_regularizer(f: FunctionLike, line: BromwichLine,
                            eps_sequence: Sequence[float] = DEFAULT_EPS_SEQUENCE) -> Extrapolation:
    """
    Integrate with the Gaussian regularizer at each eps and extrapolate to eps = 0.

    The regularized integrand decays like exp(-pi eps^2 y^2), so each run extends the
    line until that factor falls below exp(-LOG_TINY), keeping the node spacing of the
    given line. The error estimate is the spread between the last two extrapolants.
    """
    f = as_function(f)
    eps = _check_decreasing(eps_sequence, "eps_sequence", MIN_EPS)
    values = []
    for e in eps:
        height = max(line.half_height, np.sqrt(LOG_TINY / np.pi) / e)
        steps = int(line.steps)
        if line.mapping == "uniform":
            steps = int(np.ceil(line.steps * height / line.half_height))
        scaled = line.replace(half_height=height, steps=steps, regularizer_eps=float(e))
        values.append(integrate_bromwich(f, scaled))
        logger.debug("regularized integral at eps=%g: %r", e, values[-1])
    _check_divergence(values)
    return richardson_limit(eps ** 2, values)


def check_branch_continuity(u: np.ndarray):
    """Assert that -u stays in the right half-plane with no jump of arg(-u) between nodes."""
    w = -np.asarray(u, dtype=complex)
    if np.any(w.real <= 0):
        raise BranchError("the line reaches Re(u) >= 0, where (-u)^(-s) crosses its branch cut")
    if len(w) > 1 and np.any(np.abs(np.diff(np.angle(w))) > np.pi):
        raise BranchError("arg(-u) jumps between adjacent nodes")


def tanh_sinh_rule(a: float, b: float, steps: int, singular_exponent: float = 1.0,
                   max_spacing: float = None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Nodes, log-nodes and weights of the trapezoid rule in the tanh-sinh variable on [a, b].

    :param singular_exponent: sigma such that the integrand behaves like (x - a)^(sigma - 1)
        at the left end; smaller values push the left end of the mesh further out.
    :param max_spacing: Upper bound for the node spacing in x, for oscillatory integrands.
    """
    width = float(b - a)
    sigma = min(max(float(singular_exponent), 1e-3), 1.0)
    u_left = min(0.5 * LOG_TINY / sigma, 2e4)
    t_lo = -np.arcsinh(u_left / _HALF_PI)
    t_hi = np.arcsinh(0.5 * LOG_TINY / _HALF_PI)
    steps = int(steps)
    if max_spacing is not None:
        steps = max(steps, int(np.ceil(width * 0.25 * np.pi * (t_hi - t_lo) / max_spacing)))
    t = np.linspace(t_lo, t_hi, steps + 1)
    h = (t_hi - t_lo) / steps
    u = _HALF_PI * np.sinh(t)
    left = expit(2.0 * u)
    right = expit(-2.0 * u)
    x = a + width * left
    if a == 0:
        log_x = np.log(width) - np.logaddexp(0.0, -2.0 * u)
    else:
        # Only meaningful for a > 0; rules on signed ranges ignore it.
        with np.errstate(invalid="ignore", divide="ignore"):
            log_x = np.log(x)
    w = width * 2.0 * left * right * _HALF_PI * np.cosh(t) * h
    return x, log_x, w


def exp_sinh_rule(a: float, steps: int, singular_exponent: float = 1.0,
                  log_upper: float = LOG_HUGE) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Nodes, log-nodes and weights of the trapezoid rule in the exp-sinh variable on [a, inf)."""
    sigma = min(max(float(singular_exponent), 1e-3), 1.0)
    v_lo = -min(LOG_TINY / sigma, 4e4) if a == 0 else -LOG_TINY
    t_lo = np.arcsinh(v_lo / _HALF_PI)
    t_hi = np.arcsinh(float(log_upper) / _HALF_PI)
    steps = int(steps)
    t = np.linspace(t_lo, t_hi, steps + 1)
    h = (t_hi - t_lo) / steps
    v = _HALF_PI * np.sinh(t)
    with np.errstate(over="ignore"):
        offset = np.exp(v)
    x = a + offset
    log_x = v if a == 0 else np.logaddexp(np.log(a), v)
    w = offset * _HALF_PI * np.cosh(t) * h
    return x, log_x, w


def integrate_halfline(f: FunctionLike, power: complex, upper: float = np.inf, steps: int = 4000,
                       damping: Sequence[float] = None, resolution: float = 0.2) -> complex:
    """
    Integrate f(y) y^(-power) over (0, upper).

    Without damping the integral runs on a graded double-exponential mesh that crowds
    nodes near 0. With a damping schedule, the integrand is multiplied by exp(-eta y)
    for each eta, integrated over the range where that factor exceeds exp(-LOG_TINY)
    on a mesh no coarser than resolution, and extrapolated to eta = 0. That is the
    route for oscillatory integrands such as exp(i y) that do not decay.
    """
    f = as_function(f)
    power = complex(power)
    if power.real >= 1:
        raise SingularityError("y^(-power) is not integrable at 0 for Re(power) = {}".format(power.real))
    sigma = 1.0 - power.real
    if damping is None:
        if np.isinf(upper):
            y, log_y, w = exp_sinh_rule(0.0, steps, singular_exponent=sigma)
        else:
            y, log_y, w = tanh_sinh_rule(0.0, upper, steps, singular_exponent=sigma)
        with np.errstate(all="ignore"):
            values = f(y) * np.exp(-power * log_y)
        return _finite_sum(values, w)

    etas = _check_decreasing(damping, "damping", 0.0)
    if etas[-1] <= 0:
        raise ValidationError("damping rates must be positive")
    values = []
    for eta in etas:
        reach = min(float(upper), LOG_TINY / eta)
        y, log_y, w = tanh_sinh_rule(0.0, reach, steps, singular_exponent=sigma,
                                     max_spacing=resolution)
        with np.errstate(all="ignore"):
            integrand = f(y) * np.exp(-power * log_y - eta * y)
        values.append(_finite_sum(integrand, w))
        logger.debug("damped half-line integral at eta=%g over %d nodes: %r", eta, len(y), values[-1])
    return richardson_limit(etas, values).value
