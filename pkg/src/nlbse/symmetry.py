"""Lie point symmetries of u_t + (u_x + u_xx)^2 = 0.

Basis of the maximal invariance algebra::

    X1 = -d_x,  X2 = -e^{-x} d_u,  X3 = d_t,  X4 = d_u,  X5 = t d_t - u d_u

Brackets are computed numerically from the coefficient functions (directional
derivatives via jets), so the commutator table is an output, not an input.
Flows are available for any linear combination sum_i alpha_i X_i in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import jet as J
from .errors import NotInSpan
from .model import Jet2, canonical_relative_residual
from .transform import SpacePoint

SPAN_TOL = 1e-8


@dataclass(frozen=True)
class VectorField:
    """Generator xi_t d_t + xi_x d_x + eta d_u with jet-aware coefficients of (t, x, u)."""

    name: str
    xi_t: Callable = field(repr=False)
    xi_x: Callable = field(repr=False)
    eta: Callable = field(repr=False)

    def coefficients(self, t, x, u):
        return (self.xi_t(t, x, u), self.xi_x(t, x, u), self.eta(t, x, u))

    def at(self, p: SpacePoint) -> np.ndarray:
        return np.array([float(_value(c)) for c in self.coefficients(p.t, p.x, p.u)])


def _value(c):
    return c.v if J.is_jet(c) else c


def _zero(t, x, u):
    return 0.0


BASIS: tuple[VectorField, ...] = (
    VectorField("X1", _zero, lambda t, x, u: -1.0, _zero),
    VectorField("X2", _zero, _zero, lambda t, x, u: -J.exp(-x)),
    VectorField("X3", lambda t, x, u: 1.0, _zero, _zero),
    VectorField("X4", _zero, _zero, lambda t, x, u: 1.0),
    VectorField("X5", lambda t, x, u: t, _zero, lambda t, x, u: -u),
)


def generator(index: int) -> VectorField:
    """Basis field X_index, 1-based."""
    if not 1 <= index <= 5:
        raise ValueError("generator index must be 1..5")
    return BASIS[index - 1]


def combination(coeffs: Sequence[float], name: str | None = None) -> VectorField:
    """sum_i coeffs[i] X_{i+1}."""
    al = np.asarray(coeffs, dtype=float)
    if al.shape != (5,):
        raise ValueError("need five basis coefficients")

    def part(slot):
        def f(t, x, u):
            total = 0.0
            for a, X in zip(al, BASIS):
                if a != 0:
                    total = total + a * X.coefficients(t, x, u)[slot]
            return total
        return f

    return VectorField(name or "+".join(f"{a:g}*X{i + 1}" for i, a in enumerate(al) if a),
                       part(0), part(1), part(2))


def _directional(A: VectorField, f: Callable, p: SpacePoint) -> float:
    """A(f) at p, carried in the d_t slot of the jets."""
    at, ax, au = A.at(p)
    val = f(J.JetValue(p.t, at), J.JetValue(p.x, ax), J.JetValue(p.u, au))
    return float(val.d_t) if J.is_jet(val) else 0.0


def lie_bracket(A: VectorField, B: VectorField, at: SpacePoint) -> np.ndarray:
    """Components (xi_t, xi_x, eta) of [A, B] at a point: [A,B]^i = A(B^i) - B(A^i)."""
    slots = (
        (A.xi_t, B.xi_t),
        (A.xi_x, B.xi_x),
        (A.eta, B.eta),
    )
    return np.array([_directional(A, fb, at) - _directional(B, fa, at) for fa, fb in slots])


def sample_points(n: int = 10, seed: int = 0) -> list[SpacePoint]:
    rng = np.random.default_rng(seed)
    return [SpacePoint(*map(float, rng.uniform([0.2, -1.5, -2.0], [2.0, 1.5, 2.0]))) for _ in range(n)]


def commutator_table(points: Sequence[SpacePoint] | None = None) -> np.ndarray:
    """C[i, j] = basis coordinates of [X_{i+1}, X_{j+1}], shape (5, 5, 5)."""
    points = sample_points() if points is None else list(points)
    # rows: (point, component); columns: basis fields
    M = np.vstack([np.column_stack([X.at(p) for X in BASIS]) for p in points])
    table = np.zeros((5, 5, 5))
    for i in range(5):
        for j in range(5):
            rhs = np.concatenate([lie_bracket(BASIS[i], BASIS[j], p) for p in points])
            coef, *_ = np.linalg.lstsq(M, rhs, rcond=None)
            miss = np.max(np.abs(M @ coef - rhs))
            if miss > SPAN_TOL:
                raise NotInSpan(f"[X{i + 1},X{j + 1}] leaves the basis span (defect {miss:.3e})")
            table[i, j] = coef
    return table


EXPECTED_NONZERO = {(1, 2): (2, 1.0), (2, 5): (2, -1.0), (3, 5): (3, 1.0), (4, 5): (4, -1.0)}


def expected_table() -> np.ndarray:
    """The four nonzero brackets [X1,X2]=X2, [X2,X5]=-X2, [X3,X5]=X3, [X4,X5]=-X4."""
    table = np.zeros((5, 5, 5))
    for (i, j), (k, s) in EXPECTED_NONZERO.items():
        table[i - 1, j - 1, k - 1] = s
        table[j - 1, i - 1, k - 1] = -s
    return table


def table_matches(table: np.ndarray, tol: float = 1e-10) -> bool:
    return bool(np.max(np.abs(table - expected_table())) <= tol)


# ---------------------------------------------------------------- flows

def _phi1(lam: float, s: float) -> float:
    """(e^{lam s} - 1)/lam, continuous at lam = 0."""
    if lam == 0:
        return s
    return math.expm1(lam * s) / lam


@dataclass(frozen=True)
class FlowMap:
    """exp(s V) for V = sum_i alpha_i X_i.

    ``generator`` may be a basis index 1..5 or a coefficient 5-vector.
    """

    generator: object
    s: float

    @property
    def alpha(self) -> np.ndarray:
        g = self.generator
        if isinstance(g, (int, np.integer)):
            if not 1 <= int(g) <= 5:
                raise ValueError("generator index must be 1..5")
            al = np.zeros(5)
            al[int(g) - 1] = 1.0
            return al
        al = np.asarray(g, dtype=float)
        if al.shape != (5,):
            raise ValueError("flow generator must be an index or five coefficients")
        return al

    def point(self, t, x, u):
        """Image of (t, x, u) under the flow."""
        a1, a2, a3, a4, a5 = self.alpha
        s = self.s
        t_new = math.exp(a5 * s) * t + a3 * _phi1(a5, s)
        x_new = x - a1 * s
        u_new = math.exp(-a5 * s) * u + self._beta(x)
        return t_new, x_new, u_new

    def _beta(self, x):
        """u-shift added after scaling by e^{-alpha5 s}, as a function of the source x."""
        a1, a2, a3, a4, a5 = self.alpha
        s = self.s
        damp = math.exp(-a5 * s)
        out = a4 * damp * _phi1(a5, s)
        if a2 != 0:
            out = out - a2 * damp * _phi1(a5 + a1, s) * J.exp(-x)
        return out

    def preimage_tx(self, t_new, x_new):
        a1, a2, a3, a4, a5 = self.alpha
        s = self.s
        return (t_new - a3 * _phi1(a5, s)) * math.exp(-a5 * s), x_new + a1 * s


def apply_flow(fm: FlowMap, f: Callable[..., Jet2]) -> Callable[..., Jet2]:
    """Evaluator of the solution obtained by flowing the graph of f."""
    a5 = fm.alpha[4]
    scale = math.exp(-a5 * fm.s)

    def g(t, x) -> Jet2:
        t0, x0 = fm.preimage_tx(np.asarray(t, float), np.asarray(x, float))
        jf = f(t0, x0)
        beta = fm._beta(J.x_seed(x0))
        if not J.is_jet(beta):
            beta = J.const(beta)
        return Jet2(*np.broadcast_arrays(
            scale * jf.u + beta.v,
            scale * scale * jf.u_t,
            scale * jf.u_x + beta.d_x,
            scale * jf.u_xx + beta.d_xx,
        ))

    return g


@dataclass(frozen=True)
class InvarianceEntry:
    label: str
    s: float
    max_rel: float
    n_points: int


@dataclass(frozen=True)
class InvarianceReport:
    generator: str
    entries: tuple[InvarianceEntry, ...]
    tol: float

    @property
    def worst(self) -> InvarianceEntry:
        return max(self.entries, key=lambda e: e.max_rel)

    @property
    def ok(self) -> bool:
        return all(e.max_rel <= self.tol for e in self.entries)


def invariance_certificate(gen, solutions, s_values: Sequence[float], grid=None,
                           tol: float = 1e-8) -> InvarianceReport:
    """Flow each catalog solution by each s and measure the canonical residual.

    ``solutions`` is a sequence of ``FamilyId`` (or id strings) or of
    ``(FamilyId, FamilyConstants)`` pairs. Without a ``grid`` the flow is
    applied to nodes of each family's default box, so every pre-image is in
    its domain. With a ``grid``, nodes whose pre-image leaves the domain are
    skipped. Failures are reported, never raised.
    """
    from . import catalog as C

    rng = np.random.default_rng(0)
    entries = []
    label_gen = f"X{gen}" if isinstance(gen, (int, np.integer)) else str(list(gen))
    for item in solutions:
        fid, cs = item if isinstance(item, tuple) else (item, None)
        fam = C.get_family(fid)
        if fam.equation != "canonical":
            raise ValueError(f"{fam.id} does not solve the canonical equation")
        cs = C.sample_constants(fam.id, rng) if cs is None else C.resolve_constants(fam.id, cs)
        f = C.evaluator(fam.id, None, cs)
        for s in s_values:
            fm = FlowMap(gen, s)
            if grid is None:
                T0, X0 = C.default_grid(fam.id, None, cs, n=16).mesh()
                T, X, _ = fm.point(T0.ravel(), X0.ravel(), 0.0)
            else:
                T, X = (a.ravel() for a in grid.mesh())
                t0, x0 = fm.preimage_tx(T, X)
                keep = np.asarray(C.domain_ok(fam.id, None, cs, t0, x0))
                T, X = T[keep], X[keep]
                if T.size == 0:
                    continue
            rel = canonical_relative_residual(apply_flow(fm, f)(T, X))
            entries.append(InvarianceEntry(str(fam.id), float(s), float(np.max(rel)), int(T.size)))
    return InvarianceReport(label_gen, tuple(entries), tol)


# ---------------------------------------------------------------- optimal system

@dataclass(frozen=True)
class Subalgebra:
    label: str
    coefficients: dict
    constraints: str
    degenerate: bool = False
    table1_row: int | None = None
    sampler: Callable = field(repr=False, default=None, compare=False)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """A coefficient 5-vector with parameters drawn from the printed ranges."""
        return np.asarray(self.sampler(rng), dtype=float)


def _sign(rng):
    return float(rng.choice([-1.0, 1.0]))


def _vec(**kw):
    v = np.zeros(5)
    for key, val in kw.items():
        v[int(key[1:]) - 1] = val
    return v


def _z(rng):
    while True:
        z = rng.uniform(-3, 3)
        if abs(z) > 0.05 and abs(z + 1) > 0.05:
            return z


_OPTIMAL = (
    Subalgebra("<X1>", {1: "1"}, "", table1_row=1, sampler=lambda r: _vec(X1=1)),
    Subalgebra("<X2>", {2: "1"}, "", degenerate=True, sampler=lambda r: _vec(X2=1)),
    Subalgebra("<X3>", {3: "1"}, "", table1_row=2, sampler=lambda r: _vec(X3=1)),
    Subalgebra("<X4>", {4: "1"}, "", degenerate=True, sampler=lambda r: _vec(X4=1)),
    Subalgebra("<X5>", {5: "1"}, "", table1_row=9, sampler=lambda r: _vec(X5=1)),
    Subalgebra("<X1+εX3>", {1: "1", 3: "ε"}, "ε=±1", table1_row=3,
               sampler=lambda r: _vec(X1=1, X3=_sign(r))),
    Subalgebra("<X1+εX4>", {1: "1", 4: "ε"}, "ε=±1", table1_row=4,
               sampler=lambda r: _vec(X1=1, X4=_sign(r))),
    Subalgebra("<X2+εX3>", {2: "1", 3: "ε"}, "ε=±1", table1_row=5,
               sampler=lambda r: _vec(X2=1, X3=_sign(r))),
    Subalgebra("<X2+εX4>", {2: "1", 4: "ε"}, "ε=±1", degenerate=True,
               sampler=lambda r: _vec(X2=1, X4=_sign(r))),
    Subalgebra("<X3+εX4>", {3: "1", 4: "ε"}, "ε=±1", table1_row=6,
               sampler=lambda r: _vec(X3=1, X4=_sign(r))),
    Subalgebra("<X1+y(ε1X3+ε2X4)>", {1: "1", 3: "y*ε1", 4: "y*ε2"}, "ε1=±1, ε2=±1, y>0",
               table1_row=7,
               sampler=lambda r: _vec(X1=1, X3=(y := r.uniform(0.1, 3)) * _sign(r), X4=y * _sign(r))),
    Subalgebra("<X2+sinφ(ε1X3+ε2X4)>", {2: "1", 3: "sinφ*ε1", 4: "sinφ*ε2"},
               "ε1=±1, ε2=±1, 0<φ<π/2", table1_row=8,
               sampler=lambda r: _vec(X2=1, X3=(w := math.sin(r.uniform(0.05, math.pi / 2 - 0.05))) * _sign(r),
                                      X4=w * _sign(r))),
    Subalgebra("<X5+zX1>", {5: "1", 1: "z"}, "z≠0,-1", table1_row=10,
               sampler=lambda r: _vec(X5=1, X1=_z(r))),
    Subalgebra("<X5-X1+εX2>", {5: "1", 1: "-1", 2: "ε"}, "ε=±1", table1_row=11,
               sampler=lambda r: _vec(X5=1, X1=-1, X2=_sign(r))),
)


def optimal_system() -> list[Subalgebra]:
    """The 14 one-dimensional subalgebras; entries with no non-degenerate invariant
    solution are flagged ``degenerate``."""
    return list(_OPTIMAL)
