"""Numerical kernels: polynomial roots, ODEs, quadrature, fitting."""

from .fitting import ExponentialFit, PowerLawFit, fit_exponential_inverse, fit_powerlaw
from .ode import DEFAULT_ATOL, DEFAULT_RTOL, OdeSolution, integrate_ode
from .quadrature import DEFAULT_QUAD_TOL, quad_adaptive
from .roots import RealRoots, find_root_scalar, real_roots_poly, real_roots_quartic

__all__ = [
    "DEFAULT_ATOL",
    "DEFAULT_QUAD_TOL",
    "DEFAULT_RTOL",
    "ExponentialFit",
    "OdeSolution",
    "PowerLawFit",
    "RealRoots",
    "find_root_scalar",
    "fit_exponential_inverse",
    "fit_powerlaw",
    "integrate_ode",
    "quad_adaptive",
    "real_roots_poly",
    "real_roots_quartic",
]
