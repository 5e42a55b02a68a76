"""Point transformation between BSE variables and canonical variables.

For c = 0 the map is

    tbar = t,   xbar = log(x/b),   ubar = b u / x + (a/2) log(x/b) - (a^2/4) t,

and for c > 0

    tbar = c t,   xbar = log(c x/b) - c t,
    ubar = b u/(c x) + (a/2c) log(c x/b) - (a/2)(1 + a/2c) t.

The two branches are separate code paths selected exactly at c == 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import jet as J
from .errors import DomainError
from .model import Jet2, ModelParams

Evaluator = Callable[..., Jet2]


@dataclass(frozen=True)
class SpacePoint:
    t: float
    x: float
    u: float

    def as_tuple(self):
        return (self.t, self.x, self.u)


def canonical_coordinates(params: ModelParams, t, x):
    """(tbar, xbar) as functions of (t, x); accepts jets."""
    b, c = params.b, params.c
    if c == 0:
        return t, J.log(x / b)
    return c * t, J.log(c * x / b) - c * t


def _ubar(params: ModelParams, t, x, u):
    a, b, c = params.a, params.b, params.c
    if c == 0:
        return b * u / x + 0.5 * a * J.log(x / b) - 0.25 * a * a * t
    return b * u / (c * x) + (a / (2 * c)) * J.log(c * x / b) - 0.5 * a * (1 + a / (2 * c)) * t


def _u_from_canonical(params: ModelParams, tbar, xbar, ubar, x):
    """Invert the u-map given (tbar, xbar, ubar) and the already computed price x."""
    a, b, c = params.a, params.b, params.c
    if c == 0:
        return (x / b) * (ubar - 0.5 * a * xbar + 0.25 * a * a * tbar)
    h = a / (2 * c)
    return (c * x / b) * (ubar - h * (xbar + tbar) + h * (1 + h) * tbar)


def to_canonical(params: ModelParams, p: SpacePoint) -> SpacePoint:
    if np.any(np.asarray(p.x) <= 0):
        raise DomainError("to_canonical needs x > 0")
    tbar, xbar = canonical_coordinates(params, p.t, p.x)
    return SpacePoint(tbar, xbar, _ubar(params, p.t, p.x, p.u))


def from_canonical(params: ModelParams, q: SpacePoint) -> SpacePoint:
    b, c = params.b, params.c
    if c == 0:
        t = q.t
        x = b * np.exp(q.x)
    else:
        t = q.t / c
        x = (b / c) * np.exp(q.x + q.t)
    return SpacePoint(t, x, _u_from_canonical(params, q.t, q.x, q.u, x))


def compose(outer: Jet2, inner_t: J.JetValue, inner_x: J.JetValue) -> J.JetValue:
    """Jet of U(T(t,x), X(t,x)) from the jet of U at (T, X) and the jets of T and X.

    T must not depend on x, which holds for the point transformation; then
    no mixed or second time derivatives of U are needed.
    """
    if np.any(np.asarray(inner_t.d_x) != 0) or np.any(np.asarray(inner_t.d_xx) != 0):
        raise ValueError("compose requires the time map to be independent of x")
    U, U_t, U_x, U_xx = outer
    return J.JetValue(
        U,
        U_t * inner_t.d_t + U_x * inner_x.d_t,
        U_x * inner_x.d_x,
        U_xx * inner_x.d_x * inner_x.d_x + U_x * inner_x.d_xx,
    )


def pushforward(params: ModelParams, f: Evaluator) -> Evaluator:
    """Turn a canonical-space solution evaluator into a BSE-space one."""

    def evaluate(t, x) -> Jet2:
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0):
            raise DomainError("pushforward evaluation needs x > 0")
        tj, xj = J.t_seed(t), J.x_seed(x)
        tbar, xbar = canonical_coordinates(params, tj, xj)
        if not isinstance(tbar, J.JetValue):
            tbar = J.const(tbar)
        ubar = compose(f(tbar.v, xbar.v), tbar, xbar)
        u = _u_from_canonical(params, tbar, xbar, ubar, xj)
        return Jet2(*np.broadcast_arrays(u.v, u.d_t, u.d_x, u.d_xx))

    return evaluate
