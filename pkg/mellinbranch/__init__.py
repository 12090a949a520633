from .version import __version__

from .contour import BromwichLine, extrapolate_regularizer, integrate_bromwich, \
                     integrate_halfline
from .mellin_core import DensityOnR, MellinPair, BilateralLaplace, mellin_forward, \
                         mellin_convolve, hyperbolic_product, mellin_invert, plancherel_check, \
                         mellin_from_laplace, laplace_from_mellin, mellin_from_fourier, \
                         fourier_from_mellin
from .specfun import HankelContour, MLOrder, gamma, recip_gamma_hankel, mittag_leffler, \
                     mittag_leffler_series, mittag_leffler_hankel
from .stable_laws import StableParams, stable_mellin, stable_mellin_numeric, stable_density
from .bellman_harris import OffspringPGF, LifetimeDistribution, LimitLaw, malthusian, \
                            recover_lifetime_laplace, simulate_bellman_harris
from .luria_delbruck import LDParams, LDState, ld_step, simulate_ld, ld_mellin, ld_laplace
