"""Numerical laboratory for translators and ancient solutions of Gauss curvature flow."""

from .geometry import ConvexDomain, DomainError, make_domain, soliton_speed
from .translator import TranslatorSolution, solve_translator

__version__ = "0.1.0"

__all__ = ["ConvexDomain", "DomainError", "make_domain", "soliton_speed", "TranslatorSolution",
           "solve_translator", "__version__"]
