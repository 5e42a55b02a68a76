"""Second-order jets over (t, x).

A :class:`JetValue` carries ``(v, d_t, d_x, d_xx)``. Components may be Python
floats or numpy arrays of a common shape, so a whole grid is evaluated in one
pass. The elementary functions below accept plain numbers too, in which case
they return plain values; catalog formulas use this to evaluate values only.
"""

from __future__ import annotations

import numpy as np

from .errors import BranchPoint, DomainError

__all__ = [
    "JetValue",
    "t_seed",
    "x_seed",
    "const",
    "jet_mul",
    "jet_fn",
    "exp",
    "log",
    "sqrt",
    "atan",
    "absval",
    "power",
    "is_jet",
]


class JetValue:
    """Value and derivatives ``(v, d_t, d_x, d_xx)`` of a scalar field."""

    __slots__ = ("v", "d_t", "d_x", "d_xx")
    # make numpy defer to our reflected operators
    __array_ufunc__ = None

    def __init__(self, v, d_t=0.0, d_x=0.0, d_xx=0.0):
        self.v = v
        self.d_t = d_t
        self.d_x = d_x
        self.d_xx = d_xx

    def __repr__(self):
        return f"JetValue(v={self.v!r}, d_t={self.d_t!r}, d_x={self.d_x!r}, d_xx={self.d_xx!r})"

    def components(self):
        return (self.v, self.d_t, self.d_x, self.d_xx)

    def __iter__(self):
        return iter(self.components())

    def __add__(self, other):
        if isinstance(other, JetValue):
            return JetValue(self.v + other.v, self.d_t + other.d_t,
                            self.d_x + other.d_x, self.d_xx + other.d_xx)
        return JetValue(self.v + other, self.d_t, self.d_x, self.d_xx)

    __radd__ = __add__

    def __neg__(self):
        return JetValue(-self.v, -self.d_t, -self.d_x, -self.d_xx)

    def __pos__(self):
        return self

    def __sub__(self, other):
        if isinstance(other, JetValue):
            return JetValue(self.v - other.v, self.d_t - other.d_t,
                            self.d_x - other.d_x, self.d_xx - other.d_xx)
        return JetValue(self.v - other, self.d_t, self.d_x, self.d_xx)

    def __rsub__(self, other):
        return JetValue(other - self.v, -self.d_t, -self.d_x, -self.d_xx)

    def __mul__(self, other):
        if isinstance(other, JetValue):
            return jet_mul(self, other)
        return JetValue(self.v * other, self.d_t * other, self.d_x * other, self.d_xx * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, JetValue):
            return jet_mul(self, reciprocal(other))
        if np.any(np.asarray(other) == 0):
            raise DomainError("division by zero")
        return JetValue(self.v / other, self.d_t / other, self.d_x / other, self.d_xx / other)

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, exponent):
        return power(self, exponent)


def is_jet(p) -> bool:
    return isinstance(p, JetValue)


def t_seed(t) -> JetValue:
    return JetValue(t, 1.0, 0.0, 0.0)


def x_seed(x) -> JetValue:
    return JetValue(x, 0.0, 1.0, 0.0)


def const(k) -> JetValue:
    return JetValue(k, 0.0, 0.0, 0.0)


def jet_mul(p: JetValue, q: JetValue) -> JetValue:
    return JetValue(
        p.v * q.v,
        p.d_t * q.v + p.v * q.d_t,
        p.d_x * q.v + p.v * q.d_x,
        p.d_xx * q.v + 2.0 * p.d_x * q.d_x + p.v * q.d_xx,
    )


def _chain(p: JetValue, f0, f1, f2) -> JetValue:
    return JetValue(f0, f1 * p.d_t, f1 * p.d_x, f2 * p.d_x * p.d_x + f1 * p.d_xx)


def reciprocal(p):
    if not isinstance(p, JetValue):
        if np.any(np.asarray(p) == 0):
            raise DomainError("division by zero")
        return 1.0 / p
    if np.any(p.v == 0):
        raise DomainError("division by zero")
    r = 1.0 / p.v
    return _chain(p, r, -r * r, 2.0 * r * r * r)


def exp(p):
    if not isinstance(p, JetValue):
        return np.exp(p)
    e = np.exp(p.v)
    return _chain(p, e, e, e)


def log(p):
    if not isinstance(p, JetValue):
        if np.any(np.asarray(p) <= 0):
            raise DomainError("log of nonpositive argument")
        return np.log(p)
    if np.any(p.v <= 0):
        raise DomainError("log of nonpositive argument")
    r = 1.0 / p.v
    return _chain(p, np.log(p.v), r, -r * r)


def sqrt(p):
    if not isinstance(p, JetValue):
        if np.any(np.asarray(p) < 0):
            raise DomainError("sqrt of negative argument")
        return np.sqrt(p)
    if np.any(p.v < 0):
        raise DomainError("sqrt of negative argument")
    if np.any(p.v == 0):
        raise BranchPoint("sqrt at its branch point 0 has unbounded derivatives")
    s = np.sqrt(p.v)
    return _chain(p, s, 0.5 / s, -0.25 / (s * p.v))


def atan(p):
    if not isinstance(p, JetValue):
        return np.arctan(p)
    q = 1.0 / (1.0 + p.v * p.v)
    return _chain(p, np.arctan(p.v), q, -2.0 * p.v * q * q)


def absval(p):
    """|p| for p bounded away from zero."""
    if not isinstance(p, JetValue):
        if np.any(np.asarray(p) == 0):
            raise BranchPoint("abs at 0 is not differentiable")
        return np.abs(p)
    if np.any(p.v == 0):
        raise BranchPoint("abs at 0 is not differentiable")
    s = np.sign(p.v)
    return _chain(p, np.abs(p.v), s, 0.0 * s)


def power(p, n):
    """p**n for a real constant exponent n; non-integer n needs p > 0."""
    n_is_int = float(n).is_integer()
    if not isinstance(p, JetValue):
        if not n_is_int and np.any(np.asarray(p) <= 0):
            raise DomainError("non-integer power of nonpositive base")
        return np.power(p, n)
    if n_is_int:
        n = int(n)
        if n == 0:
            return JetValue(np.ones_like(p.v) * 1.0, 0.0 * p.d_t, 0.0 * p.d_x, 0.0 * p.d_xx)
        if n < 0 and np.any(p.v == 0):
            raise DomainError("negative power of zero")
        f0 = p.v ** n
        f1 = n * p.v ** (n - 1) if n != 1 else np.ones_like(p.v) * 1.0
        f2 = n * (n - 1) * p.v ** (n - 2) if n not in (0, 1, 2) else n * (n - 1) * 1.0
        return _chain(p, f0, f1, f2)
    if np.any(p.v <= 0):
        raise DomainError("non-integer power of nonpositive base")
    f0 = p.v ** n
    return _chain(p, f0, n * f0 / p.v, n * (n - 1) * f0 / (p.v * p.v))


_FUNCTIONS = {"exp": exp, "log": log, "sqrt": sqrt, "atan": atan, "abs": absval}


def jet_fn(f: str, p: JetValue) -> JetValue:
    """Apply the elementary function named ``f`` to ``p``."""
    try:
        fn = _FUNCTIONS[f]
    except KeyError:
        raise ValueError(f"unknown elementary function {f!r}") from None
    return fn(p)
