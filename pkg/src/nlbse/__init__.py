"""Exact solutions, symmetries and verification tools for the nonlinear
Black-Scholes equation u_t + a x^2 u_xx + b x^3 u_xx^2 + c (x u_x - u) = 0."""

from .model import Jet2, ModelParams, VolatilityModelKind

__version__ = "0.1.0"

__all__ = ["Jet2", "ModelParams", "VolatilityModelKind", "__version__"]
