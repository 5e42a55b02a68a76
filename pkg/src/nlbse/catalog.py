"""Library of exact solutions.

Families are keyed by :class:`FamilyId`:

* ``T2.1`` .. ``T2.10`` solve the canonical equation u_t + (u_x + u_xx)^2 = 0,
* ``T3.1`` .. ``T3.8`` solve the BSE with c = 0,
* ``T4.1`` .. ``T4.8`` solve the BSE with c > 0,
* ``EQ6`` (traveling wave) and ``EQ7`` (traveling wave plus c1 + c2 t) are
  templates for the canonical equation whose profile ODE is left unsolved.

Each closed form is written once over the jet-aware elementary functions of
:mod:`nlbse.jet`, so the same code returns values (float input) or exact
derivatives (jet input). BSE-space rows are coded directly from their own
formulas and never generated from the canonical rows at runtime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import jet as J
from .errors import BranchPoint, ConstraintViolation, DomainViolation, EmptyDomain
from .grid import GridSpec
from .model import (
    Jet2,
    ModelParams,
    bse_relative_residual,
    bse_residual,
    canonical_relative_residual,
    canonical_residual,
)

CLAMP = 1e-12
TABLES = ("T2", "T3", "T4", "EQ6", "EQ7")


@dataclass(frozen=True, order=True)
class FamilyId:
    table: str
    row: int = 1

    def __post_init__(self):
        if self.table not in TABLES:
            raise ValueError(f"unknown table {self.table!r}")

    def __str__(self):
        if self.table.startswith("EQ"):
            return self.table
        return f"{self.table}.{self.row}"

    @classmethod
    def parse(cls, text) -> "FamilyId":
        if isinstance(text, FamilyId):
            return text
        s = str(text).strip().upper()
        if s in ("EQ6", "EQ7"):
            return cls(s, 1)
        table, sep, row = s.partition(".")
        if not sep or not row.isdigit():
            raise ValueError(f"malformed family id {text!r} (expected e.g. T2.5 or EQ6)")
        return cls(table, int(row))


@dataclass(frozen=True)
class FamilyConstants:
    """Free constants of a family; entries a row does not use are ignored.

    ``eps=None`` means the row's fixed value (or +1 if the row leaves it free).
    ``lam`` is the wave speed of the EQ6/EQ7 templates.
    """

    c1: float = 0.0
    c2: float = 0.0
    eps: int | None = None
    delta: int = 1
    k: float | None = None
    lam: float | None = None


@dataclass(frozen=True)
class ResidualStats:
    max_abs: float
    max_rel: float
    n_evaluated: int
    n_excluded: int
    n_singular: int = 0

    def merge(self, other: "ResidualStats") -> "ResidualStats":
        return ResidualStats(
            max(self.max_abs, other.max_abs),
            max(self.max_rel, other.max_rel),
            self.n_evaluated + other.n_evaluated,
            self.n_excluded + other.n_excluded,
            self.n_singular + other.n_singular,
        )


@dataclass(frozen=True)
class Family:
    id: FamilyId
    uses: tuple[str, ...]
    equation: str
    domain_text: str
    formula: Callable | None = field(repr=False, default=None)
    status: str = "closed-form"
    fixed_eps: int | None = None
    source: str = ""
    check: Callable | None = field(repr=False, default=None)
    region: Callable | None = field(repr=False, default=None)

    @property
    def sign_names(self) -> tuple[str, ...]:
        names = []
        if "eps" in self.uses and self.fixed_eps is None:
            names.append("eps")
        if "delta" in self.uses:
            names.append("delta")
        return tuple(names)

    @property
    def is_template(self) -> bool:
        return self.status != "closed-form"


# ---------------------------------------------------------------- helpers

def _sqrt(p):
    """sqrt with round-off clamping of arguments in [-1e-12, 0)."""
    v = p.v if J.is_jet(p) else np.asarray(p, dtype=float)
    tiny = (v < 0) & (v >= -CLAMP)
    if np.any(tiny):
        v = np.where(tiny, 0.0, v)
        p = J.JetValue(v, p.d_t, p.d_x, p.d_xx) if J.is_jet(p) else v
    return J.sqrt(p)


def _slope7(k: float, eps: int, delta: int) -> float:
    """Constant slope (delta sqrt(1 - 4 eps k^2) - 1)/(2k) of the linear row-7 profile."""
    return (delta * math.sqrt(max(1.0 - 4.0 * eps * k * k, 0.0)) - 1.0) / (2.0 * k)


def _need_k(cs: FamilyConstants, fid) -> float:
    if cs.k is None:
        raise ConstraintViolation(f"{fid} needs the constant k")
    return float(cs.k)


def _check_k_row7(fid, cs):
    k = _need_k(cs, fid)
    if cs.eps == -1 and k == 0:
        raise ConstraintViolation(f"{fid}: requires k≠0 if eps=-1")
    if cs.eps == 1 and not (0 < abs(k) <= 0.5):
        raise ConstraintViolation(f"{fid}: requires 0<|k|≤1/2 if eps=1 (got k={k})")


def _check_k_unit(fid, cs):
    k = _need_k(cs, fid)
    if not 0 < k < 1:
        raise ConstraintViolation(f"{fid}: requires 0<k<1 (got k={k})")


# ---------------------------------------------------------------- T2: canonical equation

def _t2_1(t, x, p, cs):
    return cs.c1 + 0.0 * x + 0.0 * t


def _t2_2(t, x, p, cs):
    return cs.c1 + cs.c2 * J.exp(-x) + 0.0 * t


def _t2_3(t, x, p, cs):
    e, d = cs.eps, cs.delta
    xi = x + e * t
    return cs.c1 - e * xi + 4 * d * cs.c2 * J.exp(-0.5 * xi) + e * cs.c2 ** 2 * J.exp(-xi)


def _t2_4(t, x, p, cs):
    return cs.c1 - t - cs.eps * x


def _t2_5(t, x, p, cs):
    return cs.c1 + 4 * cs.delta * J.exp(-0.5 * x) - (t + cs.c2) * J.exp(-x)


def _t2_6(t, x, p, cs):
    return cs.c1 + cs.c2 * J.exp(-x) + cs.delta * x - t


def _t2_7(t, x, p, cs):
    k = cs.k
    return cs.c1 + cs.eps * t + _slope7(k, cs.eps, cs.delta) * (x + t / k)


def _t2_8(t, x, p, cs):
    k, d = cs.k, cs.delta
    ex = J.exp(-x)
    r = _sqrt(k + ex)
    br = (k - 0.5 * ex) * x - 3 * math.sqrt(k) * r + (2 * k - ex) * J.log(math.sqrt(k) + r)
    return cs.c1 + cs.c2 * ex - (1 + ex / k) * t + (d / k) * br


def _t2_9(t, x, p, cs):
    k, d = cs.k, cs.delta
    ex = J.exp(-x)
    r = _sqrt(k - ex)
    br = (k + 0.5 * ex) * x - 3 * math.sqrt(k) * r + (2 * k + ex) * J.log(math.sqrt(k) + r)
    return cs.c1 + cs.c2 * ex - (1 - ex / k) * t + (d / k) * br


def _t2_10(t, x, p, cs):
    k, d = cs.k, cs.delta
    ex = J.exp(-x)
    r = _sqrt(ex - k)
    br = 2 * (k + 0.5 * ex) * J.atan(r / math.sqrt(k)) - 3 * math.sqrt(k) * r
    return cs.c1 + cs.c2 * ex + (1 - ex / k) * t + (d / k) * br


def _region_t2_9(p, cs, t, x):
    return x >= -math.log(cs.k)


def _region_t2_10(p, cs, t, x):
    return x <= -math.log(cs.k)


# ---------------------------------------------------------------- T3 (c = 0)

def _bse_linear(p, x, t, coef, tcoef, c2):
    """coef * x * (c2 + tcoef * t - log x)."""
    return coef * x * (c2 + tcoef * t - J.log(x))


def _t3_1(t, x, p, cs):
    return cs.c1 + _bse_linear(p, x, t, p.a / (2 * p.b), p.a / 2, cs.c2)


def _t3_2(t, x, p, cs):
    return (cs.c1 - t + 4 * cs.delta * _sqrt(x / p.b)
            + _bse_linear(p, x, t, p.a / (2 * p.b), p.a / 2, cs.c2))


def _t3_3(t, x, p, cs):
    e = cs.eps
    return cs.c1 + _bse_linear(p, x, t, (p.a + 2 * e) / (2 * p.b), (p.a - 2 * e) / 2, cs.c2)


def _t3_4(t, x, p, cs):
    e, d, c1 = cs.eps, cs.delta, cs.c1
    return (e * c1 * c1 * J.exp(-e * t) + 4 * d * c1 * J.exp(-0.5 * e * t) * _sqrt(x / p.b)
            + _bse_linear(p, x, t, (p.a + 2 * e) / (2 * p.b), (p.a - 2 * e) / 2, cs.c2))


def _t3_5(t, x, p, cs):
    a, b, k, e = p.a, p.b, cs.k, cs.eps
    lx = J.log(x)
    inner = cs.c1 + (e + a * a / 4) * t - 0.5 * a * lx + _slope7(k, e, cs.delta) * (t / k + lx)
    return (x / b) * inner


def _t3_6(t, x, p, cs):
    a, b, k, d = p.a, p.b, cs.k, cs.delta
    q = b / (k * x)
    r = _sqrt(1 + q)
    br = (1 - 0.5 * q) * J.log((2 / q) * (1 + r) + 1) - 3 * r
    inner = cs.c2 + (a * a / 4 - 1) * t - 0.5 * a * J.log(x) + d * br
    return cs.c1 - t / k + (x / b) * inner


def _t3_7(t, x, p, cs):
    a, b, k, d = p.a, p.b, cs.k, cs.delta
    q = b / (k * x)
    r = _sqrt(1 - q)
    br = (1 + 0.5 * q) * J.log((2 / q) * (1 + r) - 1) - 3 * r
    inner = cs.c2 + (a * a / 4 - 1) * t - 0.5 * a * J.log(x) + d * br
    return cs.c1 + t / k + (x / b) * inner


def _t3_8(t, x, p, cs):
    a, b, k, d = p.a, p.b, cs.k, cs.delta
    q = b / (k * x)
    r = _sqrt(q - 1)
    br = 2 * (1 + 0.5 * q) * J.atan(r) - 3 * r
    inner = cs.c2 + (a * a / 4 + 1) * t - 0.5 * a * J.log(x) + d * br
    return cs.c1 - t / k + (x / b) * inner


def _region_t3_7(p, cs, t, x):
    return x >= p.b / cs.k


def _region_t3_8(p, cs, t, x):
    return x <= p.b / cs.k


# ---------------------------------------------------------------- T4 (c > 0)

def _t4_1(t, x, p, cs):
    a, b, c = p.a, p.b, p.c
    return cs.c1 * J.exp(c * t) + _bse_linear(p, x, t, a / (2 * b), (a + 2 * c) / 2, cs.c2)


def _t4_2(t, x, p, cs):
    a, b, c = p.a, p.b, p.c
    return ((cs.c1 - c * t) * J.exp(c * t) + 4 * cs.delta * J.exp(0.5 * c * t) * _sqrt(c * x / b)
            + _bse_linear(p, x, t, a / (2 * b), (a + 2 * c) / 2, cs.c2))


def _t4_3(t, x, p, cs):
    a, b, c, e = p.a, p.b, p.c, cs.eps
    return (cs.c1 * J.exp(c * t)
            + _bse_linear(p, x, t, (a + 2 * e * c) / (2 * b), (a + 2 * (1 - e) * c) / 2, cs.c2))


def _t4_4(t, x, p, cs):
    a, b, c, e, d, c1 = p.a, p.b, p.c, cs.eps, cs.delta, cs.c1
    return (e * c1 * c1 * J.exp((1 - e) * c * t)
            + 4 * d * c1 * J.exp(0.5 * c * (1 - e) * t) * _sqrt(c * x / b)
            + _bse_linear(p, x, t, (a + 2 * e * c) / (2 * b), (a + 2 * (1 - e) * c) / 2, cs.c2))


def _t4_5(t, x, p, cs):
    a, b, c, k, e = p.a, p.b, p.c, cs.k, cs.eps
    lx = J.log(x)
    inner = (cs.c1 + (e * c + 0.5 * a * (1 + a / (2 * c))) * t - (a / (2 * c)) * lx
             + _slope7(k, e, cs.delta) * ((1 / k - 1) * c * t + lx))
    return (c * x / b) * inner


def _t4_q(t, x, p, cs):
    return (p.b / (cs.k * p.c * x)) * J.exp(p.c * t)


def _t4_6(t, x, p, cs):
    a, b, c, k, d = p.a, p.b, p.c, cs.k, cs.delta
    q = _t4_q(t, x, p, cs)
    r = _sqrt(1 + q)
    br = (1 - 0.5 * q) * J.log((2 / q) * (1 + r) + 1) - 3 * r
    inner = cs.c2 + (0.5 * a * (1 + a / (2 * c)) - c) * t - (a / (2 * c)) * J.log(x) + d * br
    return (cs.c1 - (c / k) * t) * J.exp(c * t) + (c * x / b) * inner


def _t4_7(t, x, p, cs):
    a, b, c, k, d = p.a, p.b, p.c, cs.k, cs.delta
    q = _t4_q(t, x, p, cs)
    r = _sqrt(1 - q)
    br = (1 + 0.5 * q) * J.log((2 / q) * (1 + r) - 1) - 3 * r
    inner = cs.c2 + (0.5 * a * (1 + a / (2 * c)) - c) * t - (a / (2 * c)) * J.log(x) + d * br
    return (cs.c1 + (c / k) * t) * J.exp(c * t) + (c * x / b) * inner


def _t4_8(t, x, p, cs):
    a, b, c, k, d = p.a, p.b, p.c, cs.k, cs.delta
    q = _t4_q(t, x, p, cs)
    r = _sqrt(q - 1)
    br = 2 * (1 + 0.5 * q) * J.atan(r) - 3 * r
    inner = cs.c2 + (0.5 * a * (1 + a / (2 * c)) + c) * t - (a / (2 * c)) * J.log(x) + d * br
    return (cs.c1 - (c / k) * t) * J.exp(c * t) + (c * x / b) * inner


def _region_t4_7(p, cs, t, x):
    return x >= (p.b / (cs.k * p.c)) * np.exp(p.c * t)


def _region_t4_8(p, cs, t, x):
    return x <= (p.b / (cs.k * p.c)) * np.exp(p.c * t)


# ---------------------------------------------------------------- templates

def wave_profile_residual(k: float, lam: float, dphi, ddphi, c2: float = 0.0):
    """Defect of the profile ODE -(k phi' + k^2 phi'')^2 - lam phi' - c2 = 0."""
    s = k * dphi + k * k * ddphi
    return -s * s - lam * dphi - c2


def linear_profile_slope(k: float, lam: float, c2: float, delta: int) -> float:
    """Slope p of a linear EQ7 profile: k^2 p^2 + lam p + c2 = 0, written as
    p = lam (delta sqrt(1 - 4 k^2 c2 / lam^2) - 1) / (2 k^2)."""
    if lam == 0 or k == 0:
        raise ConstraintViolation("the linear EQ7 profile needs k≠0 and lam≠0")
    disc = 1.0 - 4.0 * k * k * c2 / (lam * lam)
    if disc < 0:
        raise ConstraintViolation("the linear EQ7 profile is complex: lam^2 < 4 k^2 c2")
    return lam * (delta * math.sqrt(disc) - 1.0) / (2.0 * k * k)


def _profile_at(profile, xi):
    """Evaluate a profile (callable of a jet or float) at the wave variable."""
    return profile(xi)


def traveling_wave(k: float, lam: float, profile) -> Callable[..., Jet2]:
    """u(t, x) = profile(k x + lam t)."""

    def evaluate(t, x):
        xi = k * J.x_seed(np.asarray(x, float)) + lam * J.t_seed(np.asarray(t, float))
        u = _profile_at(profile, xi)
        return Jet2(*np.broadcast_arrays(u.v, u.d_t, u.d_x, u.d_xx))

    return evaluate


def generalized_traveling_wave(c1: float, c2: float, k: float, lam: float, profile) -> Callable[..., Jet2]:
    """u(t, x) = c1 + c2 t + profile(k x + lam t)."""

    def evaluate(t, x):
        tj = J.t_seed(np.asarray(t, float))
        xi = k * J.x_seed(np.asarray(x, float)) + lam * tj
        u = c1 + c2 * tj + _profile_at(profile, xi)
        return Jet2(*np.broadcast_arrays(u.v, u.d_t, u.d_x, u.d_xx))

    return evaluate


def _eq7_linear(t, x, p, cs):
    slope = linear_profile_slope(cs.k, cs.lam, cs.c2, cs.delta)
    return cs.c1 + cs.c2 * t + slope * (cs.k * x + cs.lam * t)


def _check_eq(fid, cs):
    if cs.k is None or cs.lam is None:
        raise ConstraintViolation(f"{fid} needs k and lam")
    if cs.k == 0:
        raise ConstraintViolation(f"{fid} needs k≠0")


# ---------------------------------------------------------------- registry

_C0 = "t,x > 0"


def _fam(table, row, uses, equation, domain, formula, **kw):
    return Family(FamilyId(table, row), tuple(uses), equation, domain, formula, **kw)


def _build_registry() -> tuple[Family, ...]:
    t2 = [
        _fam("T2", 1, ["c1"], "canonical", "all (t,x)", _t2_1, source="reduction row 1"),
        _fam("T2", 2, ["c1", "c2"], "canonical", "all (t,x)", _t2_2, source="reduction row 2"),
        _fam("T2", 3, ["c1", "c2", "eps", "delta"], "canonical", "all (t,x)", _t2_3,
             source="reduction row 3"),
        _fam("T2", 4, ["c1", "eps"], "canonical", "all (t,x)", _t2_4, source="reduction row 4"),
        _fam("T2", 5, ["c1", "c2", "delta"], "canonical", "all (t,x)", _t2_5,
             source="reduction row 5"),
        _fam("T2", 6, ["c1", "c2", "delta"], "canonical", "all (t,x); eps=-1", _t2_6,
             fixed_eps=-1, source="reduction row 6"),
        _fam("T2", 7, ["c1", "eps", "delta", "k"], "canonical",
             "all (t,x); k≠0 if eps=-1, 0<|k|≤1/2 if eps=1", _t2_7,
             source="reduction row 7 (phi' const)", check=_check_k_row7),
        _fam("T2", 8, ["c1", "c2", "delta", "k"], "canonical", "all (t,x); 0<k<1; eps=-1", _t2_8,
             fixed_eps=-1, source="reduction row 8", check=_check_k_unit),
        _fam("T2", 9, ["c1", "c2", "delta", "k"], "canonical", "x ≥ -log k; 0<k<1; eps=-1", _t2_9,
             fixed_eps=-1, source="reduction row 8", check=_check_k_unit, region=_region_t2_9),
        _fam("T2", 10, ["c1", "c2", "delta", "k"], "canonical", "x ≤ -log k; 0<k<1; eps=1",
             _t2_10, fixed_eps=1, source="reduction row 8", check=_check_k_unit,
             region=_region_t2_10),
    ]
    t3 = [
        _fam("T3", 1, ["c1", "c2"], "bse", _C0, _t3_1, source="T2.2"),
        _fam("T3", 2, ["c1", "c2", "delta"], "bse", _C0, _t3_2, source="T2.5"),
        _fam("T3", 3, ["c1", "c2", "eps"], "bse", _C0, _t3_3, source="T2.6"),
        _fam("T3", 4, ["c1", "c2", "eps", "delta"], "bse", _C0, _t3_4, source="T2.3"),
        _fam("T3", 5, ["c1", "eps", "delta", "k"], "bse",
             _C0 + "; k≠0 if eps=-1, 0<|k|≤1/2 if eps=1", _t3_5, source="T2.7",
             check=_check_k_row7),
        _fam("T3", 6, ["c1", "c2", "delta", "k"], "bse", _C0 + "; 0<k<1", _t3_6, source="T2.8",
             check=_check_k_unit),
        _fam("T3", 7, ["c1", "c2", "delta", "k"], "bse", _C0 + "; x ≥ b/k; 0<k<1", _t3_7,
             source="T2.9", check=_check_k_unit, region=_region_t3_7),
        _fam("T3", 8, ["c1", "c2", "delta", "k"], "bse", _C0 + "; x ≤ b/k; 0<k<1", _t3_8,
             source="T2.10", check=_check_k_unit, region=_region_t3_8),
    ]
    t4 = [
        _fam("T4", 1, ["c1", "c2"], "bse", _C0, _t4_1, source="T2.2"),
        _fam("T4", 2, ["c1", "c2", "delta"], "bse", _C0, _t4_2, source="T2.5"),
        _fam("T4", 3, ["c1", "c2", "eps"], "bse", _C0, _t4_3, source="T2.6"),
        _fam("T4", 4, ["c1", "c2", "eps", "delta"], "bse", _C0, _t4_4, source="T2.3"),
        _fam("T4", 5, ["c1", "eps", "delta", "k"], "bse",
             _C0 + "; k≠0 if eps=-1, 0<|k|≤1/2 if eps=1", _t4_5, source="T2.7",
             check=_check_k_row7),
        _fam("T4", 6, ["c1", "c2", "delta", "k"], "bse", _C0 + "; 0<k<1", _t4_6, source="T2.8",
             check=_check_k_unit),
        _fam("T4", 7, ["c1", "c2", "delta", "k"], "bse", _C0 + "; x ≥ (b/kc)e^{ct}; 0<k<1",
             _t4_7, source="T2.9", check=_check_k_unit, region=_region_t4_7),
        _fam("T4", 8, ["c1", "c2", "delta", "k"], "bse", _C0 + "; x ≤ (b/kc)e^{ct}; 0<k<1",
             _t4_8, source="T2.10", check=_check_k_unit, region=_region_t4_8),
    ]
    eq = [
        _fam("EQ6", 1, ["k", "lam"], "canonical",
             "all (t,x); profile ODE -(k φ'+k²φ'')² - λφ' = 0 unsolved", None,
             status="unsolved-template", check=_check_eq),
        _fam("EQ7", 1, ["c1", "c2", "delta", "k", "lam"], "canonical",
             "all (t,x); profile ODE unsolved, linear-profile branch closed", _eq7_linear,
             status="unsolved-template", check=_check_eq),
    ]
    return tuple(t2 + t3 + t4 + eq)


_REGISTRY = _build_registry()
_BY_ID = {f.id: f for f in _REGISTRY}


def list_families(table: str | None = None) -> list[Family]:
    """The 28 catalog entries in table order, optionally filtered by table."""
    if table is None:
        return list(_REGISTRY)
    table = table.upper()
    if table not in TABLES:
        raise ValueError(f"unknown table {table!r}")
    return [f for f in _REGISTRY if f.id.table == table]


def get_family(fid) -> Family:
    fid = FamilyId.parse(fid)
    try:
        return _BY_ID[fid]
    except KeyError:
        raise ValueError(f"no catalog family {fid}") from None


def resolve_constants(fid, consts: FamilyConstants) -> FamilyConstants:
    """Fill defaults and enforce the row's parameter constraints."""
    fam = get_family(fid)
    eps = consts.eps
    if fam.fixed_eps is not None:
        if eps is not None and eps != fam.fixed_eps:
            raise ConstraintViolation(
                f"{fam.id}: real solutions require eps={fam.fixed_eps:+d} "
                f"(reduced equations 6 and 8 with k<0 have real solutions only if eps=-1)")
        eps = fam.fixed_eps
    elif eps is None:
        eps = 1
    if eps not in (1, -1):
        raise ConstraintViolation("eps must be +1 or -1")
    if consts.delta not in (1, -1):
        raise ConstraintViolation("delta must be +1 or -1")
    cs = replace(consts, eps=eps)
    if fam.check is not None:
        fam.check(fam.id, cs)
    return cs


def _check_params(fam: Family, params: ModelParams | None):
    if fam.equation == "canonical":
        return
    if params is None:
        raise ConstraintViolation(f"{fam.id} needs model parameters")
    if fam.id.table == "T3" and params.c != 0:
        raise ConstraintViolation(f"{fam.id} belongs to the c=0 table (got c={params.c})")
    if fam.id.table == "T4" and not params.c > 0:
        raise ConstraintViolation(f"{fam.id} belongs to the c>0 table (got c={params.c})")


def domain_ok(fid, params: ModelParams | None, consts: FamilyConstants, t, x):
    """Validity predicate with the printed (nonstrict) boundaries; vectorised."""
    fam = get_family(fid)
    cs = resolve_constants(fam.id, consts)
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    ok = np.ones(np.broadcast(t, x).shape, dtype=bool)
    if fam.equation == "bse":
        ok &= (t > 0) & (x > 0)
    if fam.region is not None:
        ok &= np.asarray(fam.region(params, cs, t, x))
    return bool(ok) if ok.ndim == 0 else ok


def _formula_for(fam: Family, profile):
    if fam.id.table == "EQ6":
        if profile is None:
            raise ConstraintViolation("EQ6 is an unsolved template: pass a profile")
        return lambda t, x, p, cs: profile(cs.k * x + cs.lam * t)
    if fam.id.table == "EQ7" and profile is not None:
        return lambda t, x, p, cs: cs.c1 + cs.c2 * t + profile(cs.k * x + cs.lam * t)
    return fam.formula


def evaluate(fid, params: ModelParams | None, consts: FamilyConstants, t, x, profile=None) -> Jet2:
    """Exact jet (u, u_t, u_x, u_xx) of a family on points (t, x)."""
    fam = get_family(fid)
    cs = resolve_constants(fam.id, consts)
    _check_params(fam, params)
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if not np.all(domain_ok(fam.id, params, cs, t, x)):
        raise DomainViolation(f"{fam.id} evaluated outside its domain ({fam.domain_text})")
    formula = _formula_for(fam, profile)
    t, x = np.broadcast_arrays(t, x)
    u = formula(J.t_seed(t), J.x_seed(x), params, cs)
    return Jet2(*np.broadcast_arrays(u.v, u.d_t, u.d_x, u.d_xx))


def value(fid, params: ModelParams | None, consts: FamilyConstants, t, x, profile=None):
    """Value only (works on validity boundaries where derivatives blow up)."""
    fam = get_family(fid)
    cs = resolve_constants(fam.id, consts)
    _check_params(fam, params)
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if not np.all(domain_ok(fam.id, params, cs, t, x)):
        raise DomainViolation(f"{fam.id} evaluated outside its domain ({fam.domain_text})")
    t, x = np.broadcast_arrays(t, x)
    return _formula_for(fam, profile)(t, x, params, cs) + 0.0 * x


def value_fn(fid, params: ModelParams | None, consts: FamilyConstants, profile=None):
    """Unchecked value-only closure (t, x) -> u, for hot loops after a domain check."""
    fam = get_family(fid)
    cs = resolve_constants(fam.id, consts)
    _check_params(fam, params)
    formula = _formula_for(fam, profile)
    return lambda t, x: formula(t, x, params, cs) + 0.0 * np.asarray(x, dtype=float)


def evaluator(fid, params: ModelParams | None, consts: FamilyConstants, profile=None):
    """Bind a family to a callable (t, x) -> Jet2."""
    fam = get_family(fid)
    cs = resolve_constants(fam.id, consts)
    _check_params(fam, params)
    return lambda t, x: evaluate(fam.id, params, cs, t, x, profile=profile)


def owning_residual(fam: Family, params, x, jet: Jet2):
    """(raw, relative) residual of the equation the family solves."""
    if fam.equation == "canonical":
        return canonical_residual(jet), canonical_relative_residual(jet)
    return bse_residual(params, x, jet), bse_relative_residual(params, x, jet)


def _stats(fam, params, cs, t, x, profile):
    jet = evaluate(fam.id, params, cs, t, x, profile=profile)
    raw, rel = owning_residual(fam, params, x, jet)
    return float(np.max(np.abs(raw))), float(np.max(rel))


def residual_scan(fid, params: ModelParams | None, consts: FamilyConstants, grid: GridSpec,
                  profile=None) -> ResidualStats:
    """Residual of the owning equation over all in-domain grid nodes.

    Nodes outside the predicate are counted in ``n_excluded``; in-domain nodes
    on a branch point (e.g. a square root vanishing on the boundary) are
    counted in ``n_singular``.
    """
    fam = get_family(fid)
    cs = resolve_constants(fam.id, consts)
    T, X = grid.mesh()
    mask = np.asarray(domain_ok(fam.id, params, cs, T, X))
    n_excl = int(mask.size - mask.sum())
    if not mask.any():
        raise EmptyDomain(f"no grid node lies in the domain of {fam.id}")
    t, x = T[mask], X[mask]
    try:
        mabs, mrel = _stats(fam, params, cs, t, x, profile)
        return ResidualStats(mabs, mrel, int(t.size), n_excl, 0)
    except BranchPoint:
        pass
    total = ResidualStats(0.0, 0.0, 0, n_excl, 0)
    for ti, xi in zip(t, x):
        try:
            mabs, mrel = _stats(fam, params, cs, np.array([ti]), np.array([xi]), profile)
        except BranchPoint:
            total = total.merge(ResidualStats(0.0, 0.0, 0, 0, 1))
            continue
        total = total.merge(ResidualStats(mabs, mrel, 1, 0, 0))
    if total.n_evaluated == 0:
        raise EmptyDomain(f"every in-domain node of {fam.id} is a branch point")
    return total


def default_grid(fid, params: ModelParams | None, consts: FamilyConstants, n: int = 50) -> GridSpec:
    """A box lying inside the family's validity domain."""
    fam = get_family(fid)
    cs = resolve_constants(fam.id, consts)
    tab, row = fam.id.table, fam.id.row
    if fam.equation == "canonical":
        x_lo, x_hi = -2.0, 2.0
        if tab == "T2" and row == 9:
            x_lo, x_hi = -math.log(cs.k) + 0.05, -math.log(cs.k) + 3.0
        elif tab == "T2" and row == 10:
            x_lo, x_hi = -math.log(cs.k) - 3.0, -math.log(cs.k) - 0.05
        return GridSpec(x_lo, x_hi, n, 0.1, 2.0, nt=n)
    if tab == "T3":
        t0, t1 = 0.1, 2.0
        if row == 7:
            edge = params.b / cs.k
            return GridSpec(1.02 * edge, 4.0 * edge, n, t0, t1, nt=n)
        if row == 8:
            edge = params.b / cs.k
            return GridSpec(0.25 * edge, 0.98 * edge, n, t0, t1, nt=n)
        return GridSpec(0.1, 5.0, n, t0, t1, nt=n)
    t0, t1 = 0.1, 1.0
    if row in (7, 8):
        edge = params.b / (cs.k * params.c)
        if row == 7:
            return GridSpec(1.02 * edge * math.exp(params.c * t1), 4.0 * edge * math.exp(params.c * t1),
                            n, t0, t1, nt=n)
        return GridSpec(0.25 * edge * math.exp(params.c * t0), 0.98 * edge * math.exp(params.c * t0),
                        n, t0, t1, nt=n)
    return GridSpec(0.1, 5.0, n, t0, t1, nt=n)


def sign_combinations(fid) -> list[dict]:
    """Every assignment of the row's free signs (eps and/or delta)."""
    fam = get_family(fid)
    combos = [{}]
    for name in fam.sign_names:
        combos = [dict(c, **{name: s}) for c in combos for s in (1, -1)]
    return combos


def sample_constants(fid, rng: np.random.Generator, eps: int | None = None, delta: int = 1) -> FamilyConstants:
    """Random admissible constants for a row."""
    fam = get_family(fid)
    c1, c2 = rng.uniform(-2, 2, size=2)
    k = None
    tab, row = fam.id.table, fam.id.row
    e = fam.fixed_eps if fam.fixed_eps is not None else (1 if eps is None else eps)
    if "k" in fam.uses:
        if (tab == "T2" and row == 7) or (tab in ("T3", "T4") and row == 5):
            if e == 1:
                k = rng.uniform(0.1, 0.5) * rng.choice([-1.0, 1.0])
            else:
                k = rng.uniform(0.2, 2.0) * rng.choice([-1.0, 1.0])
        elif fam.id.table.startswith("EQ"):
            k = rng.uniform(0.5, 2.0)
        else:
            k = rng.uniform(0.1, 0.9)
    lam = rng.uniform(0.5, 2.0) * rng.choice([-1.0, 1.0]) if "lam" in fam.uses else None
    return FamilyConstants(c1=float(c1), c2=float(c2),
                           eps=e if fam.fixed_eps is None else None, delta=delta, k=k, lam=lam)


def sample_params(fid, rng: np.random.Generator) -> ModelParams | None:
    fam = get_family(fid)
    if fam.equation == "canonical":
        return None
    a, b = rng.uniform(0.5, 3.0, size=2)
    c = 0.0 if fam.id.table == "T3" else float(rng.uniform(0.2, 2.0))
    return ModelParams(float(a), float(b), c)


def manifest_rows(table: str | None = None) -> list[list[str]]:
    """CSV rows (header first) of the catalog manifest."""
    rows = [["family_id", "constants_used", "domain_description", "owning_equation", "status"]]
    for fam in list_families(table):
        rows.append([str(fam.id), ";".join(fam.uses), fam.domain_text, fam.equation, fam.status])
    return rows


# ---------------------------------------------------------------- Bobrov forms

@dataclass(frozen=True)
class BobrovParams:
    a: float
    b: float
    c1: float = 0.0
    c2: float = 0.0
    c3: float = 1.0
    c4: float = 0.0
    delta: int = 1

    @property
    def K(self) -> float:
        return (4 * self.c4 * self.b - self.a ** 2) / (4 * self.c3 * self.b)


def bobrov_first(bp: BobrovParams, t, x):
    """u = c1 + c3 x (c2 + (a - b c3) t - log x)."""
    return bp.c1 + bp.c3 * x * (bp.c2 + (bp.a - bp.b * bp.c3) * t - J.log(x))


def bobrov_second(bp: BobrovParams, t, x):
    a, b, c3, c4, d = bp.a, bp.b, bp.c3, bp.c4, bp.delta
    if c3 == 0:
        raise ConstraintViolation("the second Bobrov form needs c3≠0")
    K = bp.K
    g = -c3 * b * K
    if not g > 0:
        raise DomainViolation(f"the second Bobrov form needs -c3 b K > 0 (got {g})")
    sg = math.sqrt(g)
    xv = x.v if J.is_jet(x) else np.asarray(x)
    if np.any(1 + 1 / (K * xv) < 0):
        raise DomainViolation("negative radicand 1 + 1/(Kx) in the second Bobrov form")
    r = _sqrt(1 + 1 / (K * x))
    inner = (bp.c2 + c4 * t - (a / (2 * b)) * J.log(x) - (3 * d * sg / b) * r
             - (d * c3 * K / sg) * (1 - 1 / (2 * K * x)) * J.log(2 * K * x * (1 + r) + 1))
    return bp.c1 + c3 * t + x * inner


def bobrov_form_check(which: str, bp: BobrovParams, grid: GridSpec) -> ResidualStats:
    """Residual scan of a Bobrov form against the c = 0 BSE."""
    form = {"first": bobrov_first, "second": bobrov_second}[which]
    params = ModelParams(bp.a, bp.b, 0.0)
    T, X = grid.mesh()
    t, x = T.ravel(), X.ravel()
    if np.any(x <= 0):
        raise DomainViolation("Bobrov forms are checked on x > 0")
    u = form(bp, J.t_seed(t), J.x_seed(x))
    jet = Jet2(*np.broadcast_arrays(u.v, u.d_t, u.d_x, u.d_xx))
    raw = bse_residual(params, x, jet)
    rel = bse_relative_residual(params, x, jet)
    return ResidualStats(float(np.max(np.abs(raw))), float(np.max(rel)), int(t.size), 0, 0)


def bobrov_first_vs_t3_row1(a: float, b: float, c1: float, c2: float, grid: GridSpec) -> float:
    """Max pointwise gap between form (1st) with c3 = a/(2b) and T3 row 1."""
    T, X = grid.mesh()
    bp = BobrovParams(a, b, c1=c1, c2=c2, c3=a / (2 * b))
    lhs = bobrov_first(bp, T, X)
    rhs = value(FamilyId("T3", 1), ModelParams(a, b, 0.0), FamilyConstants(c1=c1, c2=c2), T, X)
    return float(np.max(np.abs(lhs - rhs) / (1 + np.abs(rhs))))


# ---------------------------------------------------------------- pushforward cross-check

def cross_check_pushforward(fid, params: ModelParams, t2_consts: FamilyConstants,
                            grid: GridSpec | None = None):
    """Fit the free constants (c1, c2, signs) of a T3/T4 row to the pushforward of
    its source T2 row; return the best-fit constants and the max relative mismatch."""
    from scipy.optimize import least_squares

    from .transform import canonical_coordinates, pushforward

    fam = get_family(fid)
    if fam.id.table not in ("T3", "T4"):
        raise ValueError("cross-check applies to T3/T4 rows")
    _check_params(fam, params)
    src = FamilyId.parse(fam.source)
    src_cs = resolve_constants(src, t2_consts)
    k = src_cs.k
    if grid is None:
        if fam.id.row in (7, 8):
            grid = default_grid(fam.id, params, FamilyConstants(k=k), n=12)
        else:
            grid = GridSpec(0.2, 4.0, 12, 0.1, 1.0, nt=12)
    T, X = grid.mesh()
    t, x = T.ravel(), X.ravel()
    tb, xb = canonical_coordinates(params, t, x)
    keep = np.asarray(domain_ok(src, None, src_cs, tb, xb))
    if fam.region is not None:
        keep &= np.asarray(fam.region(params, FamilyConstants(k=k), t, x))
    t, x = t[keep], x[keep]
    if t.size < 3:
        raise EmptyDomain("too few common nodes for the cross-check")
    ref = pushforward(params, evaluator(src, None, src_cs))(t, x).u
    best = None
    for signs in sign_combinations(fam.id):
        try:
            resolve_constants(fam.id, FamilyConstants(k=k, **signs))
        except ConstraintViolation:
            continue

        def mismatch(c, signs=signs):
            cs = FamilyConstants(c1=c[0], c2=c[1], k=k, **signs)
            return (value(fam.id, params, cs, t, x) - ref) / (1 + np.abs(ref))

        for c0 in ((1.0, 1.0), (-1.0, 1.0), (0.5, -0.5)):
            sol = least_squares(mismatch, np.array(c0), xtol=1e-15, ftol=1e-15, gtol=1e-15)
            gap = float(np.max(np.abs(mismatch(sol.x))))
            if best is None or gap < best[0]:
                best = (gap, FamilyConstants(c1=float(sol.x[0]), c2=float(sol.x[1]), k=k, **signs))
    return best[1], best[0]
