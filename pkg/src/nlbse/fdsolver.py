"""Method-of-lines finite differences for the canonical equation and the BSE.

Space: 2nd-order central differences on a uniform grid, Dirichlet data at
both ends. Time: classical RK4 with a step bounded by the diffusive,
advective and reactive scales of the linearised operator.

Both equations are written u_t = L(u). The problem is well posed forward in
time where dL/du_xx > 0 and backward (a terminal-value problem) where it is
negative. BSE pricing problems are of the second kind, so ``solve`` marches
in either direction.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import Blowup, CornerMismatch, IllPosed
from .grid import GridSpec
from .model import ModelParams

BLOWUP = 1e12
CORNER_TOL = 1e-10
MIN_STEPS = 16
EQUATIONS = ("canonical", "bse")
DIRECTIONS = ("forward", "backward")


@dataclass(frozen=True)
class FieldState:
    time: float
    values: np.ndarray = field(repr=False)


def _check_equation(equation, params, grid):
    if equation not in EQUATIONS:
        raise ValueError(f"equation must be one of {EQUATIONS}, got {equation!r}")
    if equation == "bse":
        if params is None:
            raise ValueError("the BSE needs model parameters")
        if not grid.x_lo > 0:
            raise ValueError("BSE grids need x_lo > 0")


def _derivs(u, dx):
    ux = (u[2:] - u[:-2]) / (2 * dx)
    uxx = (u[2:] - 2 * u[1:-1] + u[:-2]) / (dx * dx)
    return ux, uxx


def operator(equation: str, params: ModelParams | None, x, u, dx):
    """L(u) on interior nodes."""
    ux, uxx = _derivs(u, dx)
    if equation == "canonical":
        s = ux + uxx
        return -s * s
    xi = x[1:-1]
    a, b, c = params.a, params.b, params.c
    return -(a * xi * xi * uxx + b * xi ** 3 * uxx * uxx + c * (xi * ux - u[1:-1]))


def diffusion(equation: str, params: ModelParams | None, x, ux, uxx):
    """dL/du_xx."""
    if equation == "canonical":
        return -2.0 * (ux + uxx)
    return -(params.a * x * x + 2.0 * params.b * x ** 3 * uxx)


def _advection(equation, params, x, ux, uxx):
    """|dL/du_x|."""
    if equation == "canonical":
        return np.abs(2.0 * (ux + uxx))
    return np.abs(params.c * x) + 0.0 * ux


def _stable_dt(equation, params, x, u, dx, safety):
    ux, uxx = _derivs(u, dx)
    xi = x[1:-1]
    D = float(np.max(np.abs(diffusion(equation, params, xi, ux, uxx))))
    A = float(np.max(_advection(equation, params, xi, ux, uxx)))
    bounds = [math.inf]
    if D > 0:
        bounds.append(safety * dx * dx / (2.0 * D))
    if A > 0:
        bounds.append(safety * dx / A)
    if equation == "bse" and params.c > 0:
        bounds.append(safety / params.c)
    return min(bounds)


def solve(equation: str, params: ModelParams | None, grid: GridSpec,
          initial: Callable, boundary: Callable, times: Sequence[float] | None = None,
          direction: str = "forward") -> list[FieldState]:
    """March the semi-discrete system and return snapshots at ``times``.

    ``initial(x)`` is the data at the starting time of the march (``t0`` when
    forward, ``t1`` when backward); ``boundary(t, side)`` with side in
    {"left", "right"} supplies Dirichlet values.
    """
    _check_equation(equation, params, grid)
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}")
    x = grid.x_nodes()
    dx = grid.dx
    start, end = (grid.t0, grid.t1) if direction == "forward" else (grid.t1, grid.t0)
    sign = 1.0 if direction == "forward" else -1.0
    targets = [end] if times is None else [float(t) for t in times]
    for t in targets:
        if not min(start, end) <= t <= max(start, end):
            raise ValueError(f"snapshot time {t} outside [{grid.t0}, {grid.t1}]")

    u = np.asarray(initial(x), dtype=float).copy()
    if u.shape != x.shape:
        raise ValueError("initial data must give one value per node")
    for idx, side in ((0, "left"), (-1, "right")):
        bval = float(boundary(start, side))
        if abs(u[idx] - bval) > CORNER_TOL * (1.0 + abs(bval)):
            raise CornerMismatch(f"{side} corner: initial {u[idx]!r} vs boundary {bval!r}")

    def with_bc(v, t):
        v = v.copy()
        v[0] = boundary(t, "left")
        v[-1] = boundary(t, "right")
        return v

    def rate(v, t):
        out = np.zeros_like(v)
        out[1:-1] = sign * operator(equation, params, x, with_bc(v, t), dx)
        return out

    dt_cap = abs(end - start) / MIN_STEPS
    order = sorted(range(len(targets)), key=lambda i: sign * targets[i])
    snaps: dict[int, FieldState] = {}
    t = start
    for i in order:
        goal = targets[i]
        while sign * (goal - t) > 1e-14 * max(1.0, abs(goal)):
            h = min(_stable_dt(equation, params, x, u, dx, grid.safety), dt_cap, abs(goal - t))
            s = sign * h
            k1 = rate(u, t)
            k2 = rate(u + 0.5 * h * k1, t + 0.5 * s)
            k3 = rate(u + 0.5 * h * k2, t + 0.5 * s)
            k4 = rate(u + h * k3, t + s)
            u = with_bc(u + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4), t + s)
            t = t + s
            if not np.all(np.isfinite(u)) or np.max(np.abs(u)) > BLOWUP:
                raise Blowup(f"solution diverged at t={t:g}")
        u = with_bc(u, goal)
        snaps[i] = FieldState(goal, u.copy())
        t = goal
    return [snaps[i] for i in range(len(targets))]


# ---------------------------------------------------------------- manufactured solutions

@dataclass(frozen=True)
class ConvergenceResult:
    order: float
    dx: tuple[float, ...]
    errors: tuple[float, ...]
    degenerate: bool
    direction: str


def well_posed_direction(equation, params, fid, consts, grid: GridSpec) -> str:
    """March direction from the sign of dL/du_xx along the exact solution."""
    from . import catalog as C

    T, X = grid.mesh()
    jet = C.evaluate(fid, params, consts, T, X)
    D = diffusion(equation, params, X, jet.u_x, jet.u_xx)
    scale = 1e-12 * (1.0 + float(np.max(np.abs(D))))
    pos, neg = bool(np.any(D > scale)), bool(np.any(D < -scale))
    if pos and neg:
        raise IllPosed(f"dL/du_xx changes sign on the box for {fid}")
    if pos:
        return "forward"
    if neg:
        return "backward"
    return "backward" if equation == "bse" else "forward"


def manufactured_run(equation, params, fid, consts, grid: GridSpec, direction: str | None = None):
    """(numeric, exact, direction) at the end of the march."""
    from . import catalog as C

    fam = C.get_family(fid)
    if fam.equation != equation:
        raise ValueError(f"{fam.id} solves the {fam.equation} equation, not {equation}")
    if not np.all(C.domain_ok(fam.id, params, consts, *grid.mesh())):
        raise ValueError(f"the space-time box leaves the domain of {fam.id}")
    direction = direction or well_posed_direction(equation, params, fid, consts, grid)
    start, end = (grid.t0, grid.t1) if direction == "forward" else (grid.t1, grid.t0)
    x = grid.x_nodes()
    exact = C.value_fn(fam.id, params, consts)
    ends = np.array([grid.x_lo, grid.x_hi])
    memo = {}

    def boundary(t, side):
        if memo.get("t") != t:
            memo["t"], memo["u"] = t, exact(t, ends)
        return float(memo["u"][0 if side == "left" else 1])

    state = solve(equation, params, grid, initial=lambda xs: exact(start, xs),
                  boundary=boundary, direction=direction)[-1]
    return state.values, np.asarray(exact(end, x), dtype=float), direction


def convergence_order(equation, params, fid, consts, grid: GridSpec,
                      ladder: Sequence[int] = (41, 81, 161), direction: str | None = None) -> ConvergenceResult:
    """Least-squares slope of log(max error) against log(dx) over the ladder."""
    from . import catalog as C

    consts = C.resolve_constants(C.get_family(fid).id, consts)
    direction = direction or well_posed_direction(equation, params, fid, consts, grid)
    dxs, errs, scale = [], [], 0.0
    for nx in ladder:
        g = grid.with_nx(int(nx))
        num, ex, _ = manufactured_run(equation, params, fid, consts, g, direction)
        dxs.append(g.dx)
        errs.append(float(np.max(np.abs(num - ex))))
        scale = max(scale, float(np.max(np.abs(ex))))
    with np.errstate(divide="ignore", invalid="ignore"):
        slope = np.polyfit(np.log(dxs), np.log(errs), 1)[0] if min(errs) > 0 else float("nan")
    degenerate = bool(min(errs) <= 1e-10 * (1.0 + scale) or not np.isfinite(slope) or slope > 3.3)
    return ConvergenceResult(float(slope), tuple(dxs), tuple(errs), degenerate, direction)


def write_snapshot_csv(stream, state: FieldState, x, exact=None) -> None:
    out = csv.writer(stream, lineterminator="\n")
    out.writerow(["t", "x", "u_numeric", "u_exact", "abs_error"])
    for i, xv in enumerate(x):
        un = state.values[i]
        if exact is None:
            out.writerow([f"{state.time:.17g}", f"{xv:.17g}", f"{un:.17g}", "", ""])
        else:
            ue = exact[i]
            out.writerow([f"{state.time:.17g}", f"{xv:.17g}", f"{un:.17g}", f"{ue:.17g}", f"{abs(un - ue):.17g}"])
