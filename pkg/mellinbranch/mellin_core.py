"""Two-sided Mellin transform calculus for functions on the whole real line.

A function f on R is carried as the pair (f+, f-) with f+(x) = f(x) and f-(x) = f(-x)
for x > 0, and its transform as the pair (M f+, M f-). Products of independent random
variables correspond to the hyperbolic product of these pairs.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from mellinbranch.contour import (LOG_TINY, BromwichLine, ComplexFunction, as_function,
                                  check_branch_continuity, drop_nonfinite, exp_sinh_rule,
                                  extrapolate_regularizer, integrate_bromwich, integrate_halfline,
                                  tanh_sinh_rule)
from mellinbranch.errors import (BranchError, DomainError, NonIntegrableError, RangeError, StripError,
                                 ValidationError)
from mellinbranch.specfun import gamma as cgamma

logger = logging.getLogger(__name__)

Strip = Tuple[float, float]
PairValue = Tuple[complex, complex]

DEFAULT_FORWARD_STEPS = 2000
CHUNK = 256
# Largest log(x - a) reached on the last piece when nothing is known about the tail.
DEFAULT_LOG_REACH = 60.0
LAPLACE_LINE = dict(half_height=1e24, steps=6000, mapping="sinh")


def _zero(s):
    return np.zeros(np.shape(s), dtype=complex)


def _check_strip(strip: Strip, name: str):
    if not strip[0] < strip[1]:
        raise ValidationError("{} must be a nonempty open interval, got {}".format(name, strip))


def _in_strip(strip: Strip, sigma: float) -> bool:
    return strip[0] < sigma < strip[1]


@dataclass(frozen=True)
class MellinPair:
    """Transforms (M f+, M f-) valid for strip[0] < Re(s) < strip[1]; minus=None means zero."""

    plus: Callable
    minus: Optional[Callable] = None
    strip: Strip = (0.0, np.inf)

    def __post_init__(self):
        _check_strip(self.strip, "strip")

    def component(self, side: str) -> ComplexFunction:
        if side == "plus":
            return as_function(self.plus)
        if side == "minus":
            return as_function(self.minus if self.minus is not None else _zero)
        raise ValidationError("side must be 'plus' or 'minus', got {}".format(side))

    def __call__(self, s) -> PairValue:
        plus = self.component("plus")(s)
        minus = self.component("minus")(s)
        if np.ndim(s) == 0:
            return complex(plus), complex(minus)
        return plus, minus

    def analyticity_residual(self, s: complex, h: float = 1e-4) -> float:
        """Largest Cauchy-Riemann defect |df/dy - i df/dx| of either component at s."""
        worst = 0.0
        for side in ("plus", "minus"):
            fn = self.component(side)
            dx = (fn(s + h) - fn(s - h)) / (2 * h)
            dy = (fn(s + 1j * h) - fn(s - 1j * h)) / (2 * h)
            worst = max(worst, float(abs(dy - 1j * dx)))
        return worst


@dataclass(frozen=True)
class DensityOnR:
    """
    A function on R given by its two half-line restrictions.

    :param plus: Vectorised x -> f(x) for x > 0.
    :param minus: Vectorised x -> f(-x) for x > 0, or None when f vanishes on the negative axis.
    :param strip_plus: Fundamental strip of M f+.
    :param strip_minus: Fundamental strip of M f-.
    :param decay_plus: Exponential decay rate of f+ (0 if unknown or subexponential).
    :param decay_minus: Exponential decay rate of f-.
    :param breakpoints: Points x > 0 where either restriction jumps or kinks.
    :param mellin: Closed-form transform pair, used instead of quadrature when present.
    """

    plus: Callable
    minus: Optional[Callable] = None
    strip_plus: Strip = (0.0, np.inf)
    strip_minus: Strip = (0.0, np.inf)
    decay_plus: float = 0.0
    decay_minus: float = 0.0
    breakpoints: Tuple[float, ...] = ()
    mellin: Optional[MellinPair] = field(default=None, compare=False)

    def __post_init__(self):
        _check_strip(self.strip_plus, "strip_plus")
        _check_strip(self.strip_minus, "strip_minus")
        if any(b <= 0 for b in self.breakpoints):
            raise ValidationError("breakpoints must be positive")

    def side(self, side: str) -> Callable:
        if side == "plus":
            return self.plus
        fn = self.minus
        return fn if fn is not None else (lambda x: np.zeros(np.shape(x)))

    def value(self, x):
        """f at real x (vectorised), combining both restrictions."""
        x = np.asarray(x, dtype=float)
        with np.errstate(all="ignore"):
            out = np.where(x > 0, self.side("plus")(np.abs(x)), self.side("minus")(np.abs(x)))
        return out

    def total_mass(self) -> float:
        plus, minus = mellin_forward(self, 1.0)
        return float((plus + minus).real)


def _log_reach(decay: float, strip_upper: float, sigma: float) -> float:
    if np.isinf(decay):
        return 0.0
    if decay > 0:
        return float(np.log(2.0 * LOG_TINY / decay + 10.0))
    if np.isfinite(strip_upper):
        return float(min(DEFAULT_LOG_REACH, LOG_TINY / max(strip_upper - sigma, 1e-3)))
    return DEFAULT_LOG_REACH


def _halfline_rules(breakpoints: Sequence[float], sigma: float, log_reach: float, steps: int):
    """Graded rules covering (0, inf) split at the breakpoints; yields (x, log x, w)."""
    points = sorted(set(float(b) for b in breakpoints))
    edges = [0.0] + points
    for a, b in zip(edges[:-1], edges[1:]):
        yield tanh_sinh_rule(a, b, steps, singular_exponent=sigma if a == 0 else 1.0)
    yield exp_sinh_rule(edges[-1], steps, singular_exponent=sigma if edges[-1] == 0 else 1.0,
                        log_upper=log_reach)


def _halfline_transform(fn: Callable, s: np.ndarray, breakpoints, log_reach: float,
                        steps: int) -> np.ndarray:
    """Integral of fn(x) x^(s-1) over (0, inf) for every s in a 1-d array."""
    sigma = float(np.min(s.real))
    out = np.zeros(s.shape, dtype=complex)
    for x, log_x, w in _halfline_rules(breakpoints, sigma, log_reach, steps):
        with np.errstate(all="ignore"):
            weighted = drop_nonfinite(np.asarray(fn(x), dtype=float) * w, "density")
        keep = weighted != 0
        log_xw, sign, lx = np.log(np.abs(weighted[keep])), np.sign(weighted[keep]), log_x[keep]
        for start in range(0, len(s), CHUNK):
            block = s[start:start + CHUNK, None]
            with np.errstate(all="ignore"):
                terms = np.exp((block - 1.0) * lx[None, :] + log_xw[None, :]) * sign[None, :]
            out[start:start + CHUNK] += drop_nonfinite(terms, "Mellin").sum(axis=1)
    return out


def mellin_forward(f: DensityOnR, s, steps: int = DEFAULT_FORWARD_STEPS):
    """
    Numerical (M f+(s), M f-(s)) by graded quadrature in log x.

    Accurate to about 1e-10 for smooth restrictions and moderate |Im s| (below ~20);
    use DensityOnR.mellin for closed forms far up a line.
    """
    s_arr = np.atleast_1d(np.asarray(s, dtype=complex))
    sigma_lo, sigma_hi = float(np.min(s_arr.real)), float(np.max(s_arr.real))
    results = []
    for side, strip, decay in (("plus", f.strip_plus, f.decay_plus),
                               ("minus", f.strip_minus, f.decay_minus)):
        if side == "minus" and f.minus is None:
            results.append(np.zeros(s_arr.shape, dtype=complex))
            continue
        if not (_in_strip(strip, sigma_lo) and _in_strip(strip, sigma_hi)):
            raise StripError("Re(s) in [{}, {}] leaves the {} strip {}".format(
                sigma_lo, sigma_hi, side, strip))
        reach = _log_reach(decay, strip[1], sigma_hi)
        results.append(_halfline_transform(f.side(side), s_arr, f.breakpoints, reach, steps))
    if np.ndim(s) == 0:
        return complex(results[0][0]), complex(results[1][0])
    return results[0], results[1]


def _convolve_at(f: DensityOnR, g: DensityOnR, z: float, steps: int) -> float:
    if z == 0:
        raise NonIntegrableError("dy/y diverges at z = 0 for densities positive near the origin")
    a = abs(z)
    if z > 0:
        pairs = ((f.side("plus"), g.side("plus")), (f.side("minus"), g.side("minus")))
    else:
        pairs = ((f.side("minus"), g.side("plus")), (f.side("plus"), g.side("minus")))
    breakpoints = tuple(g.breakpoints) + tuple(a / b for b in f.breakpoints)
    total = 0.0
    for x, log_x, w in _halfline_rules(breakpoints, 1.0, DEFAULT_LOG_REACH, steps):
        with np.errstate(all="ignore"):
            integrand = sum(fz(a / x) * gy(x) for fz, gy in pairs) * w / x
        total += float(np.sum(drop_nonfinite(integrand, "product density")))
    if not np.isfinite(total):
        raise NonIntegrableError("product density is not finite at z = {}".format(z))
    return total


def mellin_convolve(f: DensityOnR, g: DensityOnR, z, steps: int = DEFAULT_FORWARD_STEPS):
    """
    Density of X * Y at z, f (*) g(z) = int_0^inf [f(z/y) g(y) + f(-z/y) g(-y)] dy / y.
    """
    z_arr = np.atleast_1d(np.asarray(z, dtype=float))
    out = np.array([_convolve_at(f, g, float(v), steps) for v in z_arr])
    return float(out[0]) if np.ndim(z) == 0 else out


def hyperbolic_product(a, b, s=None) -> PairValue:
    """
    (a+ b+ + a- b-, a+ b- + a- b+), the transform of the product density.

    a and b are MellinPair objects evaluated at s, or already evaluated pairs.
    """
    ap, am = a(s) if isinstance(a, MellinPair) else a
    bp, bm = b(s) if isinstance(b, MellinPair) else b
    return ap * bp + am * bm, ap * bm + am * bp


def hyperbolic_pair(a: MellinPair, b: MellinPair) -> MellinPair:
    """The MellinPair of the product density, on the intersection of the strips."""
    strip = (max(a.strip[0], b.strip[0]), min(a.strip[1], b.strip[1]))
    return MellinPair(plus=lambda s: hyperbolic_product(a, b, s)[0],
                      minus=lambda s: hyperbolic_product(a, b, s)[1], strip=strip)


def product_density(f: DensityOnR, g: DensityOnR, steps: int = DEFAULT_FORWARD_STEPS) -> DensityOnR:
    """DensityOnR of X * Y computed pointwise by mellin_convolve."""
    strip_plus = (max(f.strip_plus[0], g.strip_plus[0], f.strip_minus[0], g.strip_minus[0]),
                  min(f.strip_plus[1], g.strip_plus[1], f.strip_minus[1], g.strip_minus[1]))
    closed = None
    if f.mellin is not None and g.mellin is not None:
        closed = hyperbolic_pair(f.mellin, g.mellin)
    return DensityOnR(plus=lambda x: mellin_convolve(f, g, x, steps),
                      minus=lambda x: mellin_convolve(f, g, -np.asarray(x), steps),
                      strip_plus=strip_plus, strip_minus=strip_plus, mellin=closed)


def _line_at(line: Optional[BromwichLine], abscissa: float, **defaults) -> BromwichLine:
    if line is None:
        return BromwichLine(abscissa, **defaults)
    return line.replace(abscissa=abscissa)


def mellin_invert(m: MellinPair, x: float, gamma: float, line: BromwichLine = None,
                  side: str = "plus", eps_sequence: Sequence[float] = None) -> float:
    """
    f+(x) (or f-(x) with side="minus") as (1/2 pi i) int M(s) x^(-s) ds on Re(s) = gamma.

    With eps_sequence the integral is regularized and extrapolated, which is needed for
    transforms decaying only algebraically, such as 1/s.
    """
    if not x > 0:
        raise DomainError("inversion needs x > 0, got {}".format(x))
    if not _in_strip(m.strip, gamma):
        raise StripError("gamma = {} lies outside the strip {}".format(gamma, m.strip))
    component = m.component(side)
    log_x = np.log(x)
    integrand = ComplexFunction(lambda s: component(s) * np.exp(-s * log_x))
    line = _line_at(line, gamma)
    if eps_sequence is not None:
        return float(extrapolate_regularizer(integrand, line, eps_sequence).value.real)
    return float(integrate_bromwich(integrand, line).real)


def plancherel_check(f: DensityOnR, g: DensityOnR, gamma: float,
                     line: BromwichLine = None) -> Tuple[float, float]:
    """
    Both sides of (1/2 pi i) int M f+(s) conj(M g+(s)) ds = int_0^inf f+ g+ x^(2 gamma - 1) dx.

    The left side uses closed-form transforms when both densities carry them.
    """
    for d, name in ((f, "f"), (g, "g")):
        if not _in_strip(d.strip_plus, gamma):
            raise StripError("gamma = {} is outside the plus strip of {}".format(gamma, name))
    closed = f.mellin is not None and g.mellin is not None
    if line is None:
        line = (BromwichLine(gamma, half_height=1e8, steps=4000, mapping="sinh") if closed
                else BromwichLine(gamma, half_height=40.0, steps=4000))
    else:
        line = line.replace(abscissa=gamma)

    def transform(d: DensityOnR, s):
        if closed:
            return d.mellin.component("plus")(s)
        return mellin_forward(DensityOnR(plus=d.plus, strip_plus=d.strip_plus,
                                         decay_plus=d.decay_plus, breakpoints=d.breakpoints), s)[0]

    left = integrate_bromwich(lambda s: transform(f, s) * np.conj(transform(g, s)), line)

    def pointwise(x):
        return f.plus(x) * g.plus(x)

    breakpoints = tuple(f.breakpoints) + tuple(g.breakpoints)
    reach = _log_reach(f.decay_plus + g.decay_plus, min(f.strip_plus[1], g.strip_plus[1]), gamma)
    right = _halfline_transform(pointwise, np.array([2.0 * gamma + 0j]), breakpoints, reach,
                                DEFAULT_FORWARD_STEPS)[0]
    return float(left.real), float(right.real)


@dataclass(frozen=True)
class BilateralLaplace:
    """phi(u) = int e^(-u x) f(x) dx, analytic for valid_strip[0] < Re(u) < valid_strip[1]."""

    evaluator: Callable
    valid_strip: Strip

    def __post_init__(self):
        _check_strip(self.valid_strip, "valid_strip")

    def __call__(self, u):
        return as_function(self.evaluator)(u)


def mellin_from_laplace(phi: BilateralLaplace, s: complex, beta: float,
                        line: BromwichLine = None) -> PairValue:
    """
    (M f+(s), M f-(s)) from the bilateral Laplace transform:
    M f+(s) = Gamma(s)/(2 pi i) int_{Re u = beta} phi(u) (-u)^(-s) du and the mirror image
    on Re u = -beta for f-, with beta < 0 and both lines inside the strip of phi.
    """
    s = complex(s)
    if not s.real > 0:
        raise RangeError("the Laplace bridge needs Re(s) > 0, got {}".format(s))
    if not beta < 0:
        raise BranchError("beta must be negative so that -u stays off the branch cut")
    if not (_in_strip(phi.valid_strip, beta) and _in_strip(phi.valid_strip, -beta)):
        raise StripError("lines Re(u) = +-{} must lie in the strip {}".format(-beta, phi.valid_strip))
    left_line = _line_at(line, beta, **LAPLACE_LINE)
    nodes, _ = left_line.nodes()
    check_branch_continuity(nodes)
    gamma_s = cgamma(s)
    plus = integrate_bromwich(lambda u: phi(u) * np.exp(-s * np.log(-u)), left_line)
    minus = integrate_bromwich(lambda v: phi(v) * np.exp(-s * np.log(v)), left_line.replace(abscissa=-beta))
    return gamma_s * plus, gamma_s * minus


def laplace_from_mellin(m: MellinPair, u: complex, gamma: float, line: BromwichLine = None,
                        eps_sequence: Sequence[float] = None) -> complex:
    """
    phi(u) = (1/2 pi i) int M f+(s) Gamma(1 - s) u^(s-1) ds
           + (1/2 pi i) int M f-(s) Gamma(1 - s) (-u)^(s-1) ds, both on Re(s) = gamma.

    For real u > 0 the second integral converges only conditionally; pass eps_sequence
    to regularize it.
    """
    u = complex(u)
    if u == 0:
        raise DomainError("u = 0 is a branch point of u^(s - 1)")
    if not (_in_strip(m.strip, gamma) and gamma < 1):
        raise StripError("gamma = {} must lie in {} and below 1".format(gamma, m.strip))
    log_u = np.log(u)
    log_minus_u = np.log(-u)
    plus = m.component("plus")
    minus = m.component("minus")

    def integrand(s):
        g = cgamma(1.0 - s)
        value = plus(s) * g * np.exp((s - 1.0) * log_u)
        if m.minus is not None:
            value = value + minus(s) * g * np.exp((s - 1.0) * log_minus_u)
        return value

    line = _line_at(line, gamma)
    if eps_sequence is not None:
        return extrapolate_regularizer(integrand, line, eps_sequence).value
    return integrate_bromwich(integrand, line)


def mellin_from_fourier(fstar: Callable, s: float, upper: float = np.inf,
                        damping: Sequence[float] = None) -> PairValue:
    """
    (M f+(s), M f-(s)) for 0 < s < 1 from the Fourier transform f*(y) = int e^(iyx) f(x) dx
    of a real function: Gamma(s)/pi Re(e^(-+ i s pi/2) int_0^inf f*(y) y^(-s) dy).
    """
    s = float(s)
    if not 0 < s < 1:
        raise RangeError("the Fourier bridge holds for 0 < s < 1, got {}".format(s))
    integral = integrate_halfline(fstar, s, upper=upper, damping=damping)
    scale = cgamma(s).real / np.pi
    plus = scale * (np.exp(-0.5j * np.pi * s) * integral).real
    minus = scale * (np.exp(0.5j * np.pi * s) * integral).real
    return complex(plus), complex(minus)


def fourier_from_mellin(m: MellinPair, y: float, gamma: float, line: BromwichLine = None,
                        eps_sequence: Sequence[float] = None) -> complex:
    """f*(y) from the transform pair, using f*(-y) = conj(f*(y)) for y < 0."""
    if not (_in_strip(m.strip, gamma) and 0 < gamma < 1):
        raise StripError("gamma = {} must lie in {} and in (0, 1)".format(gamma, m.strip))
    if y == 0:
        return complex(sum(m(1.0)))
    if y < 0:
        return np.conj(fourier_from_mellin(m, -y, gamma, line, eps_sequence))
    log_y = np.log(y)
    plus = m.component("plus")
    minus = m.component("minus")

    def integrand(s):
        g = cgamma(1.0 - s) * np.exp((s - 1.0) * log_y)
        return 1j * g * (plus(s) * np.exp(-0.5j * np.pi * s) - minus(s) * np.exp(0.5j * np.pi * s))

    line = _line_at(line, gamma)
    if eps_sequence is not None:
        return extrapolate_regularizer(integrand, line, eps_sequence).value
    return integrate_bromwich(integrand, line)


def scaled_density(f: DensityOnR, lam: float) -> DensityOnR:
    """x -> f(lam x), whose transform is lam^(-s) M f(s)."""
    if not lam > 0:
        raise ValidationError("scale must be positive")
    closed = None
    if f.mellin is not None:
        m = f.mellin
        closed = MellinPair(plus=lambda s: lam ** (-s) * m.component("plus")(s),
                            minus=None if m.minus is None else
                            (lambda s: lam ** (-s) * m.component("minus")(s)), strip=m.strip)
    return DensityOnR(plus=lambda x: f.plus(lam * np.asarray(x)),
                      minus=None if f.minus is None else (lambda x: f.minus(lam * np.asarray(x))),
                      strip_plus=f.strip_plus, strip_minus=f.strip_minus,
                      decay_plus=f.decay_plus * lam, decay_minus=f.decay_minus * lam,
                      breakpoints=tuple(b / lam for b in f.breakpoints), mellin=closed)


def powered_density(f: DensityOnR, mu: float) -> DensityOnR:
    """x -> f(sign(x) |x|^mu), whose transform is M f(s / mu) / mu."""
    if not mu > 0:
        raise ValidationError("power must be positive")
    closed = None
    if f.mellin is not None:
        m = f.mellin
        closed = MellinPair(plus=lambda s: m.component("plus")(s / mu) / mu,
                            minus=None if m.minus is None else
                            (lambda s: m.component("minus")(s / mu) / mu),
                            strip=(m.strip[0] * mu, m.strip[1] * mu))
    keep_decay = mu >= 1
    return DensityOnR(plus=lambda x: f.plus(np.asarray(x) ** mu),
                      minus=None if f.minus is None else (lambda x: f.minus(np.asarray(x) ** mu)),
                      strip_plus=(f.strip_plus[0] * mu, f.strip_plus[1] * mu),
                      strip_minus=(f.strip_minus[0] * mu, f.strip_minus[1] * mu),
                      decay_plus=f.decay_plus if keep_decay else 0.0,
                      decay_minus=f.decay_minus if keep_decay else 0.0,
                      breakpoints=tuple(b ** (1.0 / mu) for b in f.breakpoints), mellin=closed)


def exponential_density(rate: float = 1.0) -> DensityOnR:
    """rate e^(-rate x) on x > 0."""
    return DensityOnR(plus=lambda x: rate * np.exp(-rate * np.asarray(x)),
                      decay_plus=rate,
                      mellin=MellinPair(plus=lambda s: cgamma(s) * rate ** (1.0 - s)))


def two_sided_exponential(left_weight: float = 0.5, right_rate: float = 1.0,
                          left_rate: float = 1.0) -> DensityOnR:
    """Mixture of an exponential on each half-line; the default is (1/2) e^(-|x|)."""
    wr, wl = 1.0 - left_weight, left_weight
    return DensityOnR(plus=lambda x: wr * right_rate * np.exp(-right_rate * np.asarray(x)),
                      minus=lambda x: wl * left_rate * np.exp(-left_rate * np.asarray(x)),
                      decay_plus=right_rate, decay_minus=left_rate,
                      mellin=MellinPair(plus=lambda s: wr * cgamma(s) * right_rate ** (1.0 - s),
                                        minus=lambda s: wl * cgamma(s) * left_rate ** (1.0 - s)))


def uniform_density() -> DensityOnR:
    """Uniform law on (0, 1)."""
    return DensityOnR(plus=lambda x: np.where(np.asarray(x) < 1.0, 1.0, 0.0),
                      decay_plus=np.inf, breakpoints=(1.0,),
                      mellin=MellinPair(plus=lambda s: 1.0 / s))


def gaussian_density(sd: float = 1.0) -> DensityOnR:
    norm = 1.0 / (sd * np.sqrt(2.0 * np.pi))

    def half(x):
        return norm * np.exp(-0.5 * (np.asarray(x) / sd) ** 2)

    def transform(s):
        return norm * 0.5 * (2.0 * sd * sd) ** (0.5 * s) * cgamma(0.5 * s)

    return DensityOnR(plus=half, minus=half, decay_plus=1.0 / sd, decay_minus=1.0 / sd,
                      mellin=MellinPair(plus=transform, minus=transform))


def cauchy_density() -> DensityOnR:
    def half(x):
        return 1.0 / (np.pi * (1.0 + np.asarray(x) ** 2))

    def transform(s):
        return 0.5 / np.sin(0.5 * np.pi * s)

    return DensityOnR(plus=half, minus=half, strip_plus=(0.0, 2.0), strip_minus=(0.0, 2.0),
                      mellin=MellinPair(plus=transform, minus=transform, strip=(0.0, 2.0)))


def exponential_laplace(rate: float = 1.0) -> BilateralLaplace:
    """Laplace transform rate / (rate + u) of exponential_density(rate)."""
    return BilateralLaplace(lambda u: rate / (rate + u), valid_strip=(-rate, np.inf))


def two_sided_exponential_laplace() -> BilateralLaplace:
    """Laplace transform 1 / (1 - u^2) of (1/2) e^(-|x|)."""
    return BilateralLaplace(lambda u: 0.5 / (1.0 + u) + 0.5 / (1.0 - u), valid_strip=(-1.0, 1.0))
