"""Symmetry reductions of the canonical equation to ODEs, and their numerics.

Each reduced equation of second order is resolved as

    phi'' = -phi' + sigma * sqrt(R(xi, phi, phi'))      (rows 3, 5-10)
    phi'' =  phi' - eps + sigma * sqrt(e^xi phi')        (row 11)

with an explicit branch sigma = +-1. Rows 1, 2 and 4 are linear.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from . import jet as J
from .errors import (
    ConstraintViolation,
    NegativeRadicand,
    RangeExceeded,
    SingularTau,
    StepSizeUnderflow,
    SubstitutionDomain,
)
from .grid import GridSpec
from .model import Jet2, canonical_relative_residual

ROWS = tuple(range(1, 12))
LINEAR_ROWS = (1, 2, 4)
TOL_RANGE = (1e-13, 1e-6)


def _sign(value, name):
    if value not in (1, -1):
        raise ConstraintViolation(f"{name} must be +1 or -1, got {value!r}")
    return int(value)


@dataclass(frozen=True)
class ReducedODE:
    """One reduced equation with its ansatz and similarity variable."""

    row: int
    eps: int = 1
    k: float | None = None

    def __post_init__(self):
        if self.row not in ROWS:
            raise ConstraintViolation(f"row must be 1..11, got {self.row!r}")
        _sign(self.eps, "eps")
        k = self.k
        if self.row in (7, 8, 10):
            if k is None or not math.isfinite(k):
                raise ConstraintViolation(f"row {self.row} needs a finite k")
        if self.row == 7 and k == 0:
            raise ConstraintViolation("row 7 needs k≠0")
        if self.row == 8 and not 0 < abs(k) < 1:
            raise ConstraintViolation("row 8 needs 0<|k|<1")
        if self.row == 10 and k in (0, -1):
            raise ConstraintViolation("row 10 needs k≠0,-1")
        # radicands that are negative for every state
        if self.row == 6 and self.eps == 1:
            raise NegativeRadicand(-1.0, "row 6 has real solutions only for eps=-1")
        if self.row == 8 and k < 0 and self.eps == 1:
            raise NegativeRadicand(1.0 / k - 1.0, "row 8 with k<0 has real solutions only for eps=-1")

    @property
    def is_linear(self) -> bool:
        return self.row in LINEAR_ROWS

    @property
    def time_profile(self) -> bool:
        """True when phi depends on t alone (rows 1 and 4)."""
        return self.row in (1, 4)

    # ---- similarity variable and ansatz

    def similarity(self, t, x):
        r, k = self.row, self.k
        if r in (1, 4):
            return t
        if r == 3:
            return x + self.eps * t
        if r == 7:
            return x + t / k
        if r == 10:
            return x + k * J.log(t)
        if r == 11:
            return x - J.log(t)
        return x

    def shift(self, t) -> float:
        """xi - x at time t, for rows whose similarity variable is x + shift(t)."""
        return float(self.similarity(t, 0.0))

    def ansatz(self, t, x, phi: J.JetValue):
        """u as a jet, given t, x and phi(xi) already composed as jets."""
        r, e, k = self.row, self.eps, self.k
        if r in (1, 2, 3):
            return phi
        if r == 4:
            return phi - e * x
        if r == 5:
            return phi - e * t * J.exp(-x)
        if r in (6, 7):
            return phi + e * t
        if r == 8:
            return phi + (e - J.exp(-x) / k) * t
        if r in (9, 10):
            return phi / t
        return J.exp(-x) * (phi - e * x)

    def profile_of(self, t, x, u):
        """Inverse of the ansatz: phi as a jet from the jet of u."""
        r, e, k = self.row, self.eps, self.k
        if r in (1, 2, 3):
            return u
        if r == 4:
            return u + e * x
        if r == 5:
            return u + e * t * J.exp(-x)
        if r in (6, 7):
            return u - e * t
        if r == 8:
            return u - (e - J.exp(-x) / k) * t
        if r in (9, 10):
            return u * t
        return J.exp(x) * u + e * x

    def jet(self, t, x, phi, dphi, ddphi) -> Jet2:
        """Jet of u at points (t, x) from phi, phi', phi'' at the matching xi."""
        tj, xj = J.t_seed(np.asarray(t, float)), J.x_seed(np.asarray(x, float))
        xi = self.similarity(tj, xj)
        if not J.is_jet(xi):
            xi = J.const(xi)
        ph = J.JetValue(phi, dphi * xi.d_t, dphi * xi.d_x, ddphi * xi.d_x * xi.d_x + dphi * xi.d_xx)
        u = self.ansatz(tj, xj, ph)
        return Jet2(*np.broadcast_arrays(u.v, u.d_t, u.d_x, u.d_xx))

    # ---- right-hand side

    def radicand(self, xi, phi, dphi):
        r, e, k = self.row, self.eps, self.k
        if r == 3:
            return -e * dphi
        if r == 5:
            return e * np.exp(-xi)
        if r == 6:
            return -e + 0.0 * dphi
        if r == 7:
            return -(dphi / k + e)
        if r == 8:
            return np.exp(-xi) / k - e
        if r == 9:
            return phi
        if r == 10:
            return phi - k * dphi
        if r == 11:
            return np.exp(xi) * dphi
        return None

    def rhs(self, sigma: int, xi, phi, dphi, clamp: bool = False):
        """phi''; raises NegativeRadicand unless ``clamp`` (used inside integrator stages)."""
        r = self.row
        if r in (1, 4):
            return 0.0 * dphi
        if r == 2:
            return -dphi
        R = self.radicand(xi, phi, dphi)
        if clamp:
            R = np.maximum(R, 0.0)
        elif np.any(np.asarray(R) < 0):
            raise NegativeRadicand(float(np.min(R)))
        root = sigma * np.sqrt(R)
        if r == 11:
            return dphi - self.eps + root
        return -dphi + root

    def profile_from(self, f, xi, t_ref: float = 1.0):
        """(phi, phi', phi'') on xi implied by an exact solution evaluator f(t, x) -> Jet2.

        The solution is sampled at time t_ref (for rows 1 and 4, xi is the
        time and x = t_ref is used instead; phi'' is then returned as 0, which
        is exact for both rows).
        """
        xi = np.asarray(xi, dtype=float)
        if self.time_profile:
            t, x = xi, np.full_like(xi, t_ref)
        else:
            t, x = np.full_like(xi, t_ref), xi - self.shift(t_ref)
        jf = f(t, x)
        u = J.JetValue(jf.u, jf.u_t, jf.u_x, jf.u_xx)
        prof = self.profile_of(J.t_seed(t), J.x_seed(x), u)
        if self.time_profile:
            return prof.v, prof.d_t, 0.0 * prof.v
        return prof.v, prof.d_x, prof.d_xx

    def branch_of(self, dphi, ddphi) -> int:
        """The sigma whose branch passes through (phi', phi'')."""
        s = ddphi - dphi + self.eps if self.row == 11 else ddphi + dphi
        return 1 if s >= 0 else -1


def reduced_rhs(row: int, eps: int, k, sigma: int, xi, phi, dphi):
    """phi'' of a reduced equation."""
    return ReducedODE(row, eps, k).rhs(_sign(sigma, "sigma"), xi, phi, dphi)


# ---------------------------------------------------------------- integration

@dataclass(frozen=True)
class Trajectory:
    """Samples of an integrated reduced ODE, ordered along the integration."""

    ode: ReducedODE
    sigma: int
    xi: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)
    dphi: np.ndarray = field(repr=False)
    tol: float
    n_steps: int
    n_rhs: int
    halted: bool = False
    halt_reason: str = ""

    @property
    def ddphi(self) -> np.ndarray:
        return self.ode.rhs(self.sigma, self.xi, self.phi, self.dphi, clamp=True)

    @property
    def span(self) -> tuple[float, float]:
        return float(np.min(self.xi)), float(np.max(self.xi))

    def interpolate(self, xi):
        """(phi, phi', phi'') at xi by cubic Hermite interpolation."""
        xi = np.asarray(xi, dtype=float)
        lo, hi = self.span
        slack = 1e-12 * max(1.0, abs(lo), abs(hi))
        if np.any(xi < lo - slack) or np.any(xi > hi + slack):
            raise RangeExceeded(f"xi outside trajectory range [{lo}, {hi}]")
        order = np.argsort(self.xi)
        s, p, dp, ddp = self.xi[order], self.phi[order], self.dphi[order], self.ddphi[order]
        phi = CubicHermiteSpline(s, p, dp)(xi)
        dphi = CubicHermiteSpline(s, dp, ddp)(xi)
        ddphi = self.ode.rhs(self.sigma, xi, phi, dphi, clamp=True)
        return phi, dphi, ddphi


def integrate(ode: ReducedODE, sigma: int, xi0: float, phi0: float, dphi0: float, xi1: float,
              tol: float = 1e-10, max_step: float | None = None) -> Trajectory:
    """Adaptive embedded Runge-Kutta (DOP853) integration from xi0 to xi1.

    Stops early, with ``halted`` set, when the radicand drops below 10*tol.
    """
    sigma = _sign(sigma, "sigma")
    if not TOL_RANGE[0] <= tol <= TOL_RANGE[1]:
        raise ValueError(f"tol must lie in [{TOL_RANGE[0]}, {TOL_RANGE[1]}]")
    if xi1 == xi0:
        raise ValueError("need xi1 != xi0")
    if ode.row == 1 and dphi0 != 0:
        raise ConstraintViolation("row 1 needs phi'=0")
    if ode.row == 4 and dphi0 != -1:
        raise ConstraintViolation("row 4 needs phi'=-1")
    events = None
    if not ode.is_linear:
        R0 = float(ode.radicand(xi0, phi0, dphi0))
        if not R0 > 0:
            raise NegativeRadicand(R0, f"initial radicand must be positive, got {R0!r}")

        def low_radicand(xi, y):
            return ode.radicand(xi, y[0], y[1]) - 10.0 * tol

        low_radicand.terminal = True
        low_radicand.direction = -1
        events = [low_radicand]

    def f(xi, y):
        return [y[1], ode.rhs(sigma, xi, y[0], y[1], clamp=True)]

    sol = solve_ivp(f, (xi0, xi1), [phi0, dphi0], method="DOP853", rtol=tol, atol=tol,
                    max_step=max_step or abs(xi1 - xi0) / 200.0, events=events)
    if sol.status == -1:
        raise StepSizeUnderflow(sol.message)
    halted = sol.status == 1
    return Trajectory(
        ode=ode, sigma=sigma, xi=sol.t, phi=sol.y[0], dphi=sol.y[1], tol=tol,
        n_steps=len(sol.t) - 1, n_rhs=int(sol.nfev), halted=halted,
        halt_reason="radicand below 10*tol" if halted else "",
    )


@dataclass(frozen=True)
class OracleReport:
    trajectory: Trajectory
    sigma: int
    max_gap: float


def oracle_check(ode: ReducedODE, f, xi0: float, xi1: float, tol: float = 1e-10,
                 t_ref: float = 1.0, sigma: int | None = None) -> OracleReport:
    """Integrate from the data of an exact solution f(t, x) -> Jet2 at xi0 and
    compare phi with the profile of f along the trajectory.

    Without ``sigma`` the branch through the initial (phi', phi'') is used.
    """
    p0, dp0, ddp0 = (float(v[0]) for v in ode.profile_from(f, np.array([float(xi0)]), t_ref))
    if sigma is None:
        sigma = ode.branch_of(dp0, ddp0)
    traj = integrate(ode, sigma, xi0, p0, dp0, xi1, tol)
    ref, _, _ = ode.profile_from(f, traj.xi, t_ref)
    return OracleReport(traj, sigma, float(np.max(np.abs(traj.phi - ref))))


# ---------------------------------------------------------------- lift

@dataclass(frozen=True)
class LiftResult:
    t: np.ndarray = field(repr=False)
    x: np.ndarray = field(repr=False)
    u: np.ndarray = field(repr=False)
    max_rel_residual: float
    n_interior: int


def _d1(f, h, axis):
    s = lambda k: np.roll(f, -k, axis=axis)  # noqa: E731
    return (-s(2) + 8 * s(1) - 8 * s(-1) + s(-2)) / (12 * h)


def _d2(f, h, axis):
    s = lambda k: np.roll(f, -k, axis=axis)  # noqa: E731
    return (-s(2) + 16 * s(1) - 30 * f + 16 * s(-1) - s(-2)) / (12 * h * h)


def lift(ode: ReducedODE, traj: Trajectory, grid: GridSpec) -> LiftResult:
    """Sample u on the grid through the ansatz and report the FD residual.

    Derivatives use 4th-order central differences; two layers of boundary
    nodes are excluded in each direction.
    """
    T, X = grid.mesh()
    if grid.n_time < 5 or grid.nx < 5:
        raise ValueError("lift needs at least 5 nodes per direction")
    xi = np.asarray(ode.similarity(T, X), dtype=float) + 0.0 * T
    phi, _, _ = traj.interpolate(xi)
    u = np.asarray(ode.ansatz(T, X, phi), dtype=float)
    dt = (grid.t1 - grid.t0) / (grid.n_time - 1)
    dx = grid.dx
    jet = Jet2(u, _d1(u, dt, 0), _d1(u, dx, 1), _d2(u, dx, 1))
    rel = canonical_relative_residual(jet)[2:-2, 2:-2]
    return LiftResult(T, X, u, float(np.max(rel)), int(rel.size))


# ---------------------------------------------------------------- parametric ODE-11 family

@dataclass(frozen=True)
class ParametricReport:
    case: str
    eps: int
    k: float
    tau: np.ndarray = field(repr=False)
    z: np.ndarray = field(repr=False)
    w: np.ndarray = field(repr=False)
    max_defect: float


def singular_taus(case: str, k: float) -> tuple[float, ...]:
    if case == "a":
        D = math.sqrt(1 + 4 * k * k)
        return (0.0, (1 - D) / 2, (1 + D) / 2)
    if case == "b":
        D = math.sqrt(1 - 4 * k * k)
        return (0.0, (1 - D) / 2, (1 + D) / 2)
    if case == "c":
        return (0.0, 0.5)
    return (0.0,)


def _z_of_tau(case, k, c1, tau):
    if case in ("a", "b"):
        D = math.sqrt(1 + 4 * k * k) if case == "a" else math.sqrt(1 - 4 * k * k)
        p = J.absval(2 * tau - 1 + D) ** (1 - 1 / D)
        q = J.absval(2 * tau - 1 - D) ** (1 + 1 / D)
        return c1 * J.power(p * q, -0.5)
    if case == "c":
        s = 2 * tau - 1
        return c1 / s * J.exp(1 / s)
    E = math.sqrt(4 * k * k - 1)
    return c1 * J.power(tau * tau - tau + k * k, -0.5) * J.exp(-J.atan((2 * tau - 1) / E) / E)


def parametric_family(case: str, k: float, c1: float, tau_range: tuple[float, float],
                      n: int = 200) -> ParametricReport:
    """Parametric solution z(tau), w = tau z(tau) of w' = 1 - eps k^2 z/w."""
    case = str(case).lower()
    if case == "a":
        eps = -1
        ok = k != 0
        need = "k≠0"
    elif case == "b":
        eps, ok, need = 1, 0 < abs(k) < 0.5, "0<|k|<1/2"
    elif case == "c":
        eps, ok, need = 1, abs(abs(k) - 0.5) <= 1e-12, "k=±1/2"
    elif case == "d":
        eps, ok, need = 1, abs(k) > 0.5, "|k|>1/2"
    else:
        raise ValueError(f"case must be one of a, b, c, d, got {case!r}")
    if not ok:
        raise ConstraintViolation(f"case {case} needs {need}, got k={k}")
    if c1 == 0:
        raise ConstraintViolation("c1=0 gives z≡0 (degenerate)")
    lo, hi = sorted(map(float, tau_range))
    if n < 2 or not lo < hi:
        raise ValueError("need a nonempty tau range and n >= 2")
    for s in singular_taus(case, k):
        if lo <= s <= hi:
            raise SingularTau(f"tau range [{lo}, {hi}] touches singular tau={s:g}")
    tau = np.linspace(lo, hi, n)
    z = _z_of_tau(case, k, c1, J.t_seed(tau))
    w = J.t_seed(tau) * z
    slope = w.d_t / z.d_t
    defect = np.abs(slope - (1 - eps * k * k * z.v / w.v))
    return ParametricReport(case, eps, float(k), tau, z.v, w.v, float(np.max(defect)))


# ---------------------------------------------------------------- substitutions

SUBSTITUTION_ROW = {"ode11": 7, "ode12": 9, "ode13": 10, "ode14": 11}


@dataclass(frozen=True)
class SubstitutionReport:
    which: str
    z: np.ndarray = field(repr=False)
    w: np.ndarray = field(repr=False)
    max_defect: float
    n_points: int


def substitution_check(which: str, traj: Trajectory) -> SubstitutionReport:
    """Map a trajectory through a first-order substitution and measure the defect
    of the target ODE. Derivatives along the trajectory come from jets in xi."""
    which = str(which).lower()
    if which not in SUBSTITUTION_ROW:
        raise ValueError(f"unknown substitution {which!r}")
    ode = traj.ode
    if ode.row != SUBSTITUTION_ROW[which]:
        raise ConstraintViolation(f"{which} applies to row {SUBSTITUTION_ROW[which]} trajectories")
    if traj.sigma != 1:
        raise SubstitutionDomain(f"{which} is stated for the sigma=+1 branch")
    y, p, dp, ddp = traj.xi, traj.phi, traj.dphi, traj.ddphi
    Y = J.x_seed(y)
    P = J.JetValue(p, 0.0, dp, ddp)
    DP = J.JetValue(dp, 0.0, ddp, 0.0)
    e, k = ode.eps, ode.k

    if which == "ode11":
        inner = -(e + dp / k)
        if np.any(inner <= 0):
            raise SubstitutionDomain("ode11 needs eps + phi'/k < 0 along the trajectory")
        z = -(1.0 / k) * J.exp(0.5 * Y)
        w = J.exp(0.5 * Y) * J.sqrt(-(e + DP / k))
        target = 1 - e * k * k * z.v / w.v
    elif which == "ode12":
        if np.any(p <= 0) or np.any(dp <= 0):
            raise SubstitutionDomain("ode12 needs phi>0 and phi'>0 along the trajectory")
        z = J.power(P, 1.5) / 6.0
        w = 0.5 * DP
        target = 1 / w.v - np.cbrt(4 / (3 * z.v))
    elif which == "ode13":
        if not (np.all(dp > 0) or np.all(dp < 0)):
            raise SubstitutionDomain("ode13 needs phi'≠0 (phi monotone) along the trajectory")
        z, w = P, DP
        target = np.sqrt(p - k * dp) / dp - 1
    else:
        if np.any(dp <= 0):
            raise SubstitutionDomain("ode14 needs phi'>0 along the trajectory")
        z = 0.5 * Y
        w = J.exp(-0.5 * Y) * J.sqrt(DP)
        target = 1 - e * np.exp(-2 * z.v) / w.v
    slope = w.d_x / z.d_x
    defect = np.abs(slope - target)
    return SubstitutionReport(which, np.asarray(z.v, float), np.asarray(w.v, float),
                              float(np.max(defect)), int(defect.size))


# ---------------------------------------------------------------- export

def write_trajectory_csv(traj: Trajectory, stream, substitution: SubstitutionReport | None = None) -> None:
    header = ["xi", "phi", "dphi", "sigma"]
    if substitution is not None:
        header += ["z", "w"]
    out = csv.writer(stream, lineterminator="\n")
    out.writerow(header)
    for i in range(len(traj.xi)):
        row = [f"{traj.xi[i]:.17g}", f"{traj.phi[i]:.17g}", f"{traj.dphi[i]:.17g}", str(traj.sigma)]
        if substitution is not None:
            row += [f"{substitution.z[i]:.17g}", f"{substitution.w[i]:.17g}"]
        out.writerow(row)
