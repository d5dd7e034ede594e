"""Regularized Stokes single and double layer integrals on closed surfaces."""
from .geometry import ellipsoid, molecule, parse_surface, sphere, spheroid
from .kernels import Smoothing, moment_integrals
from .quadrature import generate_nodes, integrate

__all__ = ["ellipsoid", "molecule", "parse_surface", "sphere", "spheroid",
           "Smoothing", "moment_integrals", "generate_nodes", "integrate"]
