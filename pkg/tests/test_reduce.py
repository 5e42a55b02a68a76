import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlbse import catalog as C
from nlbse import jet as J
from nlbse import reduce as R
from nlbse.catalog import FamilyConstants as FC
from nlbse.errors import (
    ConstraintViolation,
    NegativeRadicand,
    RangeExceeded,
    SingularTau,
    SubstitutionDomain,
)
from nlbse.grid import GridSpec
from nlbse.model import canonical_relative_residual
from nlbse.reduce import ReducedODE


def test_rhs_examples():
    assert R.reduced_rhs(2, 1, None, 1, 0.7, 3.0, 1.0) == -1.0
    assert R.reduced_rhs(9, 1, None, 1, 0.0, 0.0, 0.0) == 0.0
    assert R.reduced_rhs(3, -1, None, 1, 0.0, 0.0, 1.0) == 0.0
    assert R.reduced_rhs(5, 1, None, -1, 0.0, 0.0, 2.0) == -3.0
    assert R.reduced_rhs(11, 1, None, 1, 0.0, 0.0, 4.0) == 5.0


def test_rhs_negative_radicand_carries_value():
    with pytest.raises(NegativeRadicand) as info:
        R.reduced_rhs(9, 1, None, 1, 0.0, -0.25, 0.0)
    assert info.value.value == -0.25
    with pytest.raises(NegativeRadicand):
        R.reduced_rhs(3, 1, None, 1, 0.0, 0.0, 1.0)


def test_row_constraints():
    for row, k in ((7, 0.0), (8, 1.0), (8, 0.0), (10, 0.0), (10, -1.0), (7, None)):
        with pytest.raises(ConstraintViolation):
            ReducedODE(row, eps=-1, k=k)
    with pytest.raises(ConstraintViolation):
        ReducedODE(12)
    with pytest.raises(ConstraintViolation):
        ReducedODE(3, eps=0)
    with pytest.raises(ConstraintViolation):
        R.reduced_rhs(3, 1, None, 2, 0.0, 0.0, -1.0)


def test_real_solution_guard():
    with pytest.raises(NegativeRadicand):
        ReducedODE(6, eps=1)
    with pytest.raises(NegativeRadicand):
        ReducedODE(8, eps=1, k=-0.5)
    # the printed 0<k<1, eps=1 regime stays admissible on x <= -log k
    ode = ReducedODE(8, eps=1, k=0.5)
    assert ode.radicand(-math.log(0.5) - 0.1, 0.0, 0.0) > 0
    ReducedODE(8, eps=-1, k=-0.5)


def test_ansatz_round_trip():
    rng = np.random.default_rng(0)
    t = np.linspace(0.5, 2, 5)
    x = np.linspace(-1, 1, 5)
    for row in range(1, 12):
        k = {7: 0.4, 8: 0.5, 10: 0.7}.get(row)
        ode = ReducedODE(row, eps=-1, k=k)
        phi, dphi, ddphi = rng.normal(size=(3, 5))
        jet = ode.jet(t, x, phi, dphi, ddphi)
        u = J.JetValue(jet.u, jet.u_t, jet.u_x, jet.u_xx)
        prof = ode.profile_of(J.t_seed(t), J.x_seed(x), u)
        assert np.allclose(prof.v, phi, atol=1e-13)


ORACLES = [
    # (row, eps, k, family, constants)
    (3, 1, None, "T2.3", FC(c1=0, c2=1, eps=1, delta=1)),
    (3, -1, None, "T2.3", FC(c1=0.5, c2=0.8, eps=-1, delta=-1)),
    (5, 1, None, "T2.5", FC(c1=1, c2=0.3, delta=1)),
    (5, 1, None, "T2.5", FC(c1=1, c2=0.3, delta=-1)),
    (6, -1, None, "T2.6", FC(c1=0.2, c2=-0.5, delta=1)),
    (6, -1, None, "T2.6", FC(c1=0.2, c2=-0.5, delta=-1)),
    (7, 1, 0.3, "T2.7", FC(c1=0.1, eps=1, delta=1, k=0.3)),
    (7, -1, -1.5, "T2.7", FC(c1=0.1, eps=-1, delta=-1, k=-1.5)),
    (8, -1, 0.4, "T2.8", FC(c1=0.3, c2=0.2, delta=1, k=0.4)),
    (8, -1, 0.4, "T2.8", FC(c1=0.3, c2=0.2, delta=-1, k=0.4)),
    (8, -1, -0.4, "T2.9", FC(c1=0.3, c2=0.2, delta=1, k=0.4)),
    (8, 1, 0.4, "T2.10", FC(c1=0.3, c2=0.2, delta=-1, k=0.4)),
]


def _window(fam, cs):
    if fam == "T2.9":
        lo = -math.log(cs.k) + 0.2
        return lo, lo + 1.0
    if fam == "T2.10":
        hi = -math.log(cs.k) - 0.2
        return hi - 1.0, hi
    return 0.0, 1.0


@pytest.mark.parametrize("row,eps,k,fam,cs", ORACLES)
def test_oracle_agreement(row, eps, k, fam, cs):
    ode = ReducedODE(row, eps=eps, k=k)
    xi0, xi1 = _window(fam, cs)
    rep = R.oracle_check(ode, C.evaluator(fam, None, cs), xi0, xi1, tol=1e-10)
    assert rep.max_gap <= 1e-8
    assert not rep.trajectory.halted


def test_oracle_row3_to_two():
    ode = ReducedODE(3, eps=1)
    rep = R.oracle_check(ode, C.evaluator("T2.3", None, FC(c1=0, c2=1, eps=1, delta=1)), 0.0, 2.0)
    assert rep.max_gap <= 1e-8


@pytest.mark.parametrize("row,eps,k,fam,cs", [o for o in ORACLES if "delta" in C.get_family(o[3]).uses])
def test_sign_branch_completeness(row, eps, k, fam, cs):
    """Each delta is reproduced by exactly one sigma."""
    ode = ReducedODE(row, eps=eps, k=k)
    xi0, xi1 = _window(fam, cs)
    f = C.evaluator(fam, None, cs)
    gaps = {}
    for sigma in (1, -1):
        rep = R.oracle_check(ode, f, xi0, xi1, tol=1e-10, sigma=sigma)
        gaps[sigma] = rep.max_gap
    assert sum(g <= 1e-8 for g in gaps.values()) == 1, gaps


def test_linear_rows_exact():
    traj = R.integrate(ReducedODE(2), 1, 0.0, 1.0, 0.5, 1.0)
    assert np.max(np.abs(traj.phi - (1.5 - 0.5 * np.exp(-traj.xi)))) <= 1e-9
    with pytest.raises(ConstraintViolation):
        R.integrate(ReducedODE(1), 1, 0.0, 1.0, 0.5, 1.0)
    with pytest.raises(ConstraintViolation):
        R.integrate(ReducedODE(4), 1, 0.0, 1.0, 0.5, 1.0)


def test_row9_existence():
    traj = R.integrate(ReducedODE(9), 1, 0.0, 1.0, 0.0, 1.0)
    assert np.all(np.isfinite(traj.phi)) and not traj.halted
    assert np.all(traj.ode.radicand(traj.xi, traj.phi, traj.dphi) > 0)


def test_integrate_preconditions():
    with pytest.raises(NegativeRadicand):
        R.integrate(ReducedODE(9), 1, 0.0, 0.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        R.integrate(ReducedODE(9), 1, 0.0, 1.0, 0.0, 1.0, tol=1e-3)
    with pytest.raises(ValueError):
        R.integrate(ReducedODE(9), 1, 0.0, 1.0, 0.0, 0.0)


def test_soft_halt_at_radicand_zero():
    # row 9, sigma=-1 from phi=0.1 with a downward slope reaches phi=0
    traj = R.integrate(ReducedODE(9), -1, 0.0, 0.1, -1.0, 5.0)
    assert traj.halted and traj.halt_reason
    assert traj.span[1] < 5.0


@settings(max_examples=15, deadline=None)
@given(st.floats(0.5, 2.0), st.floats(-0.5, 0.5), st.sampled_from([1, -1]))
def test_forward_backward_consistency(phi0, dphi0, sigma):
    ode = ReducedODE(9)
    tol = 1e-11
    fwd = R.integrate(ode, sigma, 0.0, phi0, dphi0, 0.5, tol=tol)
    if fwd.halted:
        return
    back = R.integrate(ode, sigma, fwd.xi[-1], fwd.phi[-1], fwd.dphi[-1], 0.0, tol=tol)
    if back.halted:
        return
    assert abs(back.phi[-1] - phi0) <= 100 * tol * (1 + abs(phi0))
    assert abs(back.dphi[-1] - dphi0) <= 100 * tol * (1 + abs(dphi0))


def test_interpolate_range():
    traj = R.integrate(ReducedODE(9), 1, 0.0, 1.0, 0.0, 1.0)
    phi, dphi, ddphi = traj.interpolate(np.array([0.25, 0.75]))
    assert np.all(np.isfinite(phi))
    with pytest.raises(RangeExceeded):
        traj.interpolate(np.array([1.5]))


# lift

def test_lift_row3():
    ode = ReducedODE(3, eps=1)
    rep = R.oracle_check(ode, C.evaluator("T2.3", None, FC(c1=0, c2=1, eps=1, delta=1)), 0.0, 2.0)
    res = R.lift(ode, rep.trajectory, GridSpec(0.2, 1.4, 30, 0.1, 0.6, nt=30))
    assert res.max_rel_residual <= 1e-6
    assert res.n_interior == 26 * 26


def test_lift_row9():
    ode = ReducedODE(9)
    traj = R.integrate(ode, 1, 0.0, 1.0, 0.0, 1.0, tol=1e-12)
    res = R.lift(ode, traj, GridSpec(0.05, 0.95, 30, 1.0, 2.0, nt=30))
    assert res.max_rel_residual <= 1e-5


def test_lift_row1_exact():
    ode = ReducedODE(1)
    traj = R.integrate(ode, 1, 0.0, 2.0, 0.0, 3.0)
    res = R.lift(ode, traj, GridSpec(-1, 1, 20, 0.5, 2.5, nt=20))
    assert res.max_rel_residual == 0.0


def test_lift_range_exceeded():
    ode = ReducedODE(9)
    traj = R.integrate(ode, 1, 0.0, 1.0, 0.0, 1.0)
    with pytest.raises(RangeExceeded):
        R.lift(ode, traj, GridSpec(0.0, 2.0, 20, 1.0, 2.0, nt=20))


def test_lifted_jet_of_closed_form_is_exact():
    ode = ReducedODE(5, eps=1)
    f = C.evaluator("T2.5", None, FC(c1=1, c2=0.3, delta=1))
    xi = np.linspace(-1, 1, 9)
    phi, dphi, ddphi = ode.profile_from(f, xi)
    t = np.full_like(xi, 1.0)
    assert np.max(canonical_relative_residual(ode.jet(t, xi, phi, dphi, ddphi))) <= 1e-14


# parametric family of the first-order equation attached to row 7

@pytest.mark.parametrize("case,k,rng", [
    ("a", 1.0, (2.0, 5.0)),
    ("a", -0.7, (1.5, 4.0)),
    ("b", 0.3, (1.5, 4.0)),
    ("c", 0.5, (1.2, 3.0)),
    ("c", -0.5, (1.2, 3.0)),
    ("d", 0.9, (0.6, 3.0)),
])
def test_parametric_cases(case, k, rng):
    rep = R.parametric_family(case, k, 1.0, rng, n=200)
    assert rep.max_defect <= 1e-8
    assert rep.z.shape == (200,)
    assert np.allclose(rep.w, rep.tau * rep.z)


def test_parametric_rejections():
    with pytest.raises(ConstraintViolation):
        R.parametric_family("a", 1.0, 0.0, (2, 5))
    with pytest.raises(ConstraintViolation):
        R.parametric_family("b", 0.7, 1.0, (2, 5))
    with pytest.raises(ConstraintViolation):
        R.parametric_family("c", 0.4, 1.0, (2, 5))
    with pytest.raises(ValueError):
        R.parametric_family("e", 0.4, 1.0, (2, 5))
    with pytest.raises(SingularTau):
        R.parametric_family("c", 0.5, 1.0, (0.2, 3.0))
    for s in R.singular_taus("b", 0.3):
        with pytest.raises(SingularTau):
            R.parametric_family("b", 0.3, 1.0, (s - 0.01, s + 0.01))


# substitutions

def test_ode12_on_row9():
    traj = R.integrate(ReducedODE(9), 1, 0.0, 1.0, 0.5, 1.0, tol=1e-11)
    assert R.substitution_check("ode12", traj).max_defect <= 1e-7


def test_ode13_on_row10():
    traj = R.integrate(ReducedODE(10, k=1.0), 1, 0.0, 2.0, 0.5, 1.0, tol=1e-11)
    assert R.substitution_check("ode13", traj).max_defect <= 1e-7


def test_ode14_on_row11():
    traj = R.integrate(ReducedODE(11, eps=1), 1, 0.0, 0.0, 1.0, 1.0, tol=1e-11)
    assert np.all(traj.dphi > 0)
    assert R.substitution_check("ode14", traj).max_defect <= 1e-7


def test_ode11_on_row7():
    ode = ReducedODE(7, eps=1, k=0.3)
    traj = R.integrate(ode, 1, 0.0, 0.0, -1.0, 1.0, tol=1e-11)
    assert R.substitution_check("ode11", traj).max_defect <= 1e-7


def test_substitution_guards():
    traj9 = R.integrate(ReducedODE(9), 1, 0.0, 1.0, 0.5, 1.0)
    with pytest.raises(ConstraintViolation):
        R.substitution_check("ode13", traj9)
    with pytest.raises(ValueError):
        R.substitution_check("ode15", traj9)
    flat = R.integrate(ReducedODE(9), 1, 0.0, 1.0, -0.5, 0.2)
    with pytest.raises(SubstitutionDomain):
        R.substitution_check("ode12", flat)
    lower = R.integrate(ReducedODE(9), -1, 0.0, 1.0, 0.5, 0.2)
    with pytest.raises(SubstitutionDomain):
        R.substitution_check("ode12", lower)


def test_trajectory_csv():
    traj = R.integrate(ReducedODE(9), 1, 0.0, 1.0, 0.5, 0.5)
    sub = R.substitution_check("ode12", traj)
    buf = io.StringIO()
    R.write_trajectory_csv(traj, buf, sub)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "xi,phi,dphi,sigma,z,w"
    assert len(lines) == len(traj.xi) + 1
    first = lines[1].split(",")
    assert float(first[1]) == 1.0 and first[3] == "1"
    again = io.StringIO()
    R.write_trajectory_csv(traj, again, sub)
    assert again.getvalue() == buf.getvalue()
