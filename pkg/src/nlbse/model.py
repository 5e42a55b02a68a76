"""Financial model: volatility functions, parameters and PDE residuals.

The working equation is

    u_t + a x^2 u_xx + b x^3 u_xx^2 + c (x u_x - u) = 0,   a, b > 0, c >= 0,

obtained from the transaction-cost volatility with a = sigma^2/2,
b = rho sigma^2 and c = r. Its simplified (canonical) form is

    u_t + (u_x + u_xx)^2 = 0.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConstraintViolation, DenominatorVanishes, DomainError

POLE_GUARD = 1e-14


class Jet2(NamedTuple):
    """Second-order jet (u, u_t, u_x, u_xx) of a field at a point (or grid)."""

    u: float
    u_t: float
    u_x: float
    u_xx: float


@dataclass(frozen=True)
class ModelParams:
    """Coefficients (a, b, c) of the nonlinear BSE."""

    a: float
    b: float
    c: float = 0.0

    def __post_init__(self):
        for name in ("a", "b", "c"):
            if not math.isfinite(getattr(self, name)):
                raise ConstraintViolation(f"{name} must be finite")
        if not (self.a > 0 and self.b > 0 and self.c >= 0):
            raise ConstraintViolation(
                f"need a>0, b>0, c>=0, got a={self.a}, b={self.b}, c={self.c}")

    @classmethod
    def from_market(cls, sigma: float, rho: float, r: float = 0.0) -> "ModelParams":
        return cls(a=0.5 * sigma * sigma, b=rho * sigma * sigma, c=r)

    @property
    def sigma(self) -> float:
        return math.sqrt(2.0 * self.a)

    @property
    def rho(self) -> float:
        return self.b / (2.0 * self.a)

    @property
    def r(self) -> float:
        return self.c


class VolatilityModelKind(enum.Enum):
    TRANSACTION_COST = "transaction-cost"
    REDUCED_FORM = "reduced-form"
    EQUILIBRIUM = "equilibrium"

    @classmethod
    def parse(cls, value) -> "VolatilityModelKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        for kind in cls:
            if kind.value == key or kind.name.lower().replace("_", "-") == key:
                return kind
        raise ValueError(f"unknown volatility model {value!r}")


def _guard(denominator: float, what: str) -> None:
    if abs(denominator) < POLE_GUARD:
        raise DenominatorVanishes(f"{what} = {denominator!r} is at a pole of the volatility function")


def volatility_sq(kind, sigma: float, rho: float, S: float, u_S: float, u_SS: float) -> float:
    """Squared effective volatility of the chosen illiquid-market model."""
    kind = VolatilityModelKind.parse(kind)
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    s2 = sigma * sigma
    if kind is VolatilityModelKind.TRANSACTION_COST:
        return s2 * (1.0 + 2.0 * rho * S * u_SS)
    if kind is VolatilityModelKind.REDUCED_FORM:
        den = 1.0 - rho * S * u_SS
        _guard(den, "1 - rho S u_SS")
        return s2 / (den * den)
    num = 1.0 - rho * u_S
    den = 1.0 - rho * u_S - rho * S * u_SS
    _guard(den, "1 - rho u_S - rho S u_SS")
    return s2 * num * num / (den * den)


def taylor_gap(kind, sigma: float, rho: float, S: float, u_S: float, u_SS: float) -> float:
    """Distance between a model's volatility and its first-order expansion in rho."""
    linear = volatility_sq(VolatilityModelKind.TRANSACTION_COST, sigma, rho, S, u_S, u_SS)
    return abs(volatility_sq(kind, sigma, rho, S, u_S, u_SS) - linear)


def bse_terms(params: ModelParams, x, jet: Jet2):
    """Addends of the BSE residual, in the order u_t, diffusion, liquidity, c x u_x, -c u."""
    if np.any(np.asarray(x) <= 0):
        raise DomainError("the BSE is posed for x > 0")
    u, u_t, u_x, u_xx = jet
    return (
        u_t,
        params.a * x * x * u_xx,
        params.b * x ** 3 * u_xx * u_xx,
        params.c * x * u_x,
        -params.c * u,
    )


def bse_residual(params: ModelParams, x, jet: Jet2):
    """u_t + a x^2 u_xx + b x^3 u_xx^2 + c (x u_x - u)."""
    return sum(bse_terms(params, x, jet))


def bse_relative_residual(params: ModelParams, x, jet: Jet2):
    """|residual| / (1 + largest addend magnitude)."""
    terms = bse_terms(params, x, jet)
    scale = np.max(np.abs(np.broadcast_arrays(*terms)), axis=0)
    return np.abs(sum(terms)) / (1.0 + scale)


def canonical_residual(jet: Jet2):
    """u_t + (u_x + u_xx)^2."""
    _, u_t, u_x, u_xx = jet
    s = u_x + u_xx
    return u_t + s * s


def canonical_relative_residual(jet: Jet2):
    # The squared term is scaled by (|u_x| + |u_xx|)^2 because cancellation
    # inside u_x + u_xx loses absolute, not relative, accuracy.
    _, u_t, u_x, u_xx = jet
    scale = np.maximum(np.abs(u_t), (np.abs(u_x) + np.abs(u_xx)) ** 2)
    return np.abs(canonical_residual(jet)) / (1.0 + scale)
