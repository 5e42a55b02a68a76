import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlbse import catalog as C
from nlbse import jet as J
from nlbse.catalog import FamilyConstants as FC
from nlbse.errors import ConstraintViolation, DomainViolation, EmptyDomain
from nlbse.grid import GridSpec
from nlbse.model import ModelParams, canonical_residual


def jet_tuple(j):
    return tuple(float(np.ravel(c)[0]) for c in j)


def test_counts_and_order():
    fams = C.list_families()
    assert len(fams) == 28
    assert [len(C.list_families(t)) for t in ("T2", "T3", "T4", "EQ6", "EQ7")] == [10, 8, 8, 1, 1]
    assert [str(f.id) for f in fams[:3]] == ["T2.1", "T2.2", "T2.3"]
    assert str(fams[-1].id) == "EQ7"
    assert sum(1 for f in fams if not f.is_template) == 26


def test_eq6_descriptor_is_template():
    (f,) = C.list_families("EQ6")
    assert f.status == "unsolved-template"
    assert set(f.uses) == {"k", "lam"}


def test_family_id_parse():
    assert C.FamilyId.parse("t3.7") == C.FamilyId("T3", 7)
    assert C.FamilyId.parse("eq6") == C.FamilyId("EQ6", 1)
    for bad in ("T3", "T3.x", "T9.1"):
        with pytest.raises(ValueError):
            C.FamilyId.parse(bad)
    with pytest.raises(ValueError):
        C.get_family("T2.11")


def test_evaluate_examples():
    assert jet_tuple(C.evaluate("T2.1", None, FC(c1=5), 0.3, -1.2)) == (5, 0, 0, 0)
    j = C.evaluate("T2.6", None, FC(delta=1), 1.0, 0.0)
    assert jet_tuple(j) == (-1, -1, 1, 0)
    assert canonical_residual(j) == 0
    j = C.evaluate("T2.4", None, FC(eps=1), 2.0, 3.0)
    assert jet_tuple(j) == (-5, -1, -1, 0)
    assert canonical_residual(j) == 0


def test_evaluate_outside_domain():
    with pytest.raises(DomainViolation):
        C.evaluate("T2.9", None, FC(k=0.5), 0.0, 0.0)
    with pytest.raises(DomainViolation):
        C.evaluate("T3.1", ModelParams(2, 1, 0), FC(), 1.0, -1.0)


def test_table_params_checked():
    with pytest.raises(ConstraintViolation):
        C.evaluate("T3.1", ModelParams(2, 1, 1), FC(), 1.0, 1.0)
    with pytest.raises(ConstraintViolation):
        C.evaluate("T4.1", ModelParams(2, 1, 0), FC(), 1.0, 1.0)
    with pytest.raises(ConstraintViolation):
        C.evaluate("T4.1", None, FC(), 1.0, 1.0)


def test_domain_examples():
    assert C.domain_ok("T2.9", None, FC(k=0.5), 0.0, -math.log(0.5))
    assert not C.domain_ok("T4.7", ModelParams(1, 1, 1), FC(k=0.5), 0.0, 1.99)
    assert C.domain_ok("T4.7", ModelParams(1, 1, 1), FC(k=0.5), 0.5, 2.0 * math.exp(0.5) + 1e-12)
    assert not C.domain_ok("T4.7", ModelParams(1, 1, 1), FC(k=0.5), 0.5, 3.29)
    assert C.domain_ok("T2.2", None, FC(), -7.0, 40.0)
    assert not C.domain_ok("T3.2", ModelParams(1, 1, 0), FC(), 0.0, 1.0)


def test_parameter_constraints():
    with pytest.raises(ConstraintViolation):
        C.resolve_constants("T2.7", FC(eps=1, k=0.7))
    with pytest.raises(ConstraintViolation):
        C.resolve_constants("T2.7", FC(eps=-1, k=0.0))
    with pytest.raises(ConstraintViolation):
        C.resolve_constants("T2.8", FC(k=1.0))
    with pytest.raises(ConstraintViolation):
        C.resolve_constants("T3.6", FC(k=0.0))
    with pytest.raises(ConstraintViolation):
        C.resolve_constants("T2.8", FC())
    # the printed bound is nonstrict
    assert C.resolve_constants("T2.7", FC(eps=1, k=0.5)).k == 0.5
    assert C.resolve_constants("T2.7", FC(eps=1, k=-0.5)).k == -0.5


def test_real_solution_guard():
    for fid in ("T2.6", "T2.8", "T2.9"):
        with pytest.raises(ConstraintViolation):
            C.resolve_constants(fid, FC(eps=1, k=0.5))
        assert C.resolve_constants(fid, FC(k=0.5)).eps == -1


def test_residual_scan_examples():
    st5 = C.residual_scan("T2.5", None, FC(c1=1, c2=0, delta=-1), GridSpec(-2, 2, 50, 0.1, 2, nt=50))
    assert st5.max_rel <= 1e-10 and st5.n_evaluated == 2500 and st5.n_excluded == 0
    st4 = C.residual_scan("T3.4", ModelParams(2, 1, 0), FC(c1=1, c2=0, eps=1, delta=1),
                          GridSpec(0.5, 4, 50, 0.1, 1, nt=50))
    assert st4.max_rel <= 1e-9
    assert C.residual_scan("T2.1", None, FC(c1=3), GridSpec(-1, 1, 10, 0, 1, nt=10)).max_abs == 0.0


def test_residual_scan_counts_excluded_and_boundary():
    k = 0.5
    edge = -math.log(k)
    grid = GridSpec(edge - 1, edge + 1, 21, 0.1, 1, nt=5)
    s = C.residual_scan("T2.9", None, FC(c1=0.3, c2=-0.2, k=k), grid)
    assert s.n_excluded == 5 * 10
    # the column sitting on the boundary is a branch point of sqrt(k - e^-x)
    assert s.n_singular == 5
    assert s.n_evaluated == 5 * 10
    assert s.max_rel <= 1e-9


def test_residual_scan_empty():
    with pytest.raises(EmptyDomain):
        C.residual_scan("T2.9", None, FC(k=0.5), GridSpec(-3, -2, 10, 0, 1, nt=4))


def test_values_on_boundary_are_finite():
    k = 0.4
    u = C.value("T2.10", None, FC(c1=1, c2=1, k=k), np.array([0.5]), np.array([-math.log(k)]))
    assert np.all(np.isfinite(u))
    rng = np.random.default_rng(1)
    for fid in ("T3.7", "T3.8"):
        p = C.sample_params(fid, rng)
        u = C.value(fid, p, FC(c1=1, c2=1, k=k), np.array([0.5]), np.array([p.b / k]))
        assert np.all(np.isfinite(u))


@settings(max_examples=25, deadline=None)
@given(st.sampled_from([str(f.id) for f in C.list_families() if not f.is_template]),
       st.integers(0, 2**31))
def test_random_members_are_exact(fid, seed):
    rng = np.random.default_rng(seed)
    params = C.sample_params(fid, rng)
    for signs in C.sign_combinations(fid):
        cs = C.sample_constants(fid, rng, **signs)
        grid = C.default_grid(fid, params, cs, n=12)
        assert C.residual_scan(fid, params, cs, grid).max_rel <= 1e-9


def test_sign_combinations():
    assert len(C.sign_combinations("T2.3")) == 4
    assert len(C.sign_combinations("T2.8")) == 2
    assert C.sign_combinations("T2.2") == [{}]


# specialization chains

def _mesh():
    T, X = GridSpec(-2, 2, 20, 0.1, 2, nt=20).mesh()
    return T, X


@pytest.mark.parametrize("eps", [1, -1])
@pytest.mark.parametrize("delta", [1, -1])
def test_row3_with_c2_zero_is_row4(eps, delta):
    T, X = _mesh()
    u3 = C.value("T2.3", None, FC(c1=0.7, c2=0.0, eps=eps, delta=delta), T, X)
    u4 = C.value("T2.4", None, FC(c1=0.7, eps=eps), T, X)
    assert np.max(np.abs(u3 - u4)) <= 1e-12


@pytest.mark.parametrize("eps", [1, -1])
def test_row3_is_a_wave_template(eps):
    c1, c2, d = 0.4, 0.9, -1
    T, X = _mesh()

    def profile(xi):
        return c1 - eps * xi + 4 * d * c2 * J.exp(-0.5 * xi) + eps * c2 ** 2 * J.exp(-xi)

    tmpl = C.evaluate("EQ6", None, FC(k=1, lam=eps), T, X, profile=profile)
    ref = C.evaluate("T2.3", None, FC(c1=c1, c2=c2, eps=eps, delta=d), T, X)
    assert np.max(np.abs(tmpl.u - ref.u)) <= 1e-12
    assert np.max(np.abs(canonical_residual(tmpl))) <= 1e-12
    # the profile satisfies the template ODE
    xi = J.x_seed(np.linspace(-2, 2, 9))
    ph = profile(xi)
    assert np.max(np.abs(C.wave_profile_residual(1, eps, ph.d_x, ph.d_xx))) <= 1e-12


@pytest.mark.parametrize("eps,k", [(1, 0.3), (1, -0.5), (-1, 1.7), (-1, -0.4)])
@pytest.mark.parametrize("delta", [1, -1])
def test_row7_is_generalized_wave(eps, k, delta):
    T, X = _mesh()
    u7 = C.value("T2.7", None, FC(c1=0.2, eps=eps, delta=delta, k=k), T, X)
    u_eq = C.value("EQ7", None, FC(c1=0.2, c2=eps, delta=delta, k=1, lam=1 / k), T, X)
    assert np.max(np.abs(u7 - u_eq)) <= 1e-12


def test_eq6_needs_profile():
    with pytest.raises(ConstraintViolation):
        C.evaluate("EQ6", None, FC(k=1, lam=1), 0.0, 0.0)


def test_wave_helpers():
    w = C.traveling_wave(2.0, 0.5, lambda xi: xi * xi)
    j = w(np.array([1.0]), np.array([1.0]))
    assert jet_tuple(j) == pytest.approx((6.25, 2.5, 10.0, 8.0))
    g = C.generalized_traveling_wave(1.0, -1.0, 1.0, 1.0, lambda xi: 0.0 * xi)
    assert jet_tuple(g(np.array([2.0]), np.array([0.0])))[:2] == (-1.0, -1.0)
    with pytest.raises(ConstraintViolation):
        C.linear_profile_slope(1.0, 1.0, 1.0, 1)


def _affine_fit(fid, params, k, t, x, target):
    """Least-squares (c1, c2) making family ``fid`` hit ``target`` at (t, x)."""
    base = C.value(fid, params, FC(k=k), t, x)
    cols = [C.value(fid, params, FC(c1=1, k=k), t, x) - base,
            C.value(fid, params, FC(c2=1, k=k), t, x) - base]
    coef, *_ = np.linalg.lstsq(np.stack(cols, axis=1), target - base, rcond=None)
    fitted = C.value(fid, params, FC(c1=coef[0], c2=coef[1], k=k), t, x)
    return coef, float(np.max(np.abs(fitted - target)))


def test_boundary_consistency_t3_rows_7_8():
    params, k = ModelParams(2, 1, 0), 0.6
    t = np.linspace(0.1, 2, 7)
    x = np.full_like(t, params.b / k)
    target = C.value("T3.7", params, FC(c1=0.3, c2=-0.8, k=k), t, x)
    _, gap = _affine_fit("T3.8", params, k, t, x, target)
    assert gap <= 1e-12


def test_boundary_consistency_t2_rows_9_10():
    k = 0.35
    t = np.linspace(0.1, 2, 7)
    x = np.full_like(t, -math.log(k))
    target = C.value("T2.9", None, FC(c1=0.3, c2=-0.8, k=k), t, x)
    _, gap = _affine_fit("T2.10", None, k, t, x, target)
    assert gap <= 1e-12


def test_manifest():
    rows = C.manifest_rows()
    assert rows[0][:4] == ["family_id", "constants_used", "domain_description", "owning_equation"]
    assert len(rows) == 29
    eq6 = C.manifest_rows("EQ6")
    assert len(eq6) == 2 and eq6[1][-1] == "unsolved-template"


# Bobrov forms

def test_bobrov_first_matches_t3_row1():
    grid = GridSpec(0.2, 5, 20, 0.1, 2, nt=20)
    assert C.bobrov_first_vs_t3_row1(2.0, 1.0, 0.0, 0.0, grid) <= 1e-12
    assert C.bobrov_first_vs_t3_row1(1.3, 0.6, 0.4, -1.1, grid) <= 1e-12


def test_bobrov_residuals():
    grid = GridSpec(0.2, 5, 20, 0.1, 2, nt=20)
    assert C.bobrov_form_check("first", C.BobrovParams(2, 1, c3=0.7), grid).max_rel <= 1e-10
    bp = C.BobrovParams(2, 1, c1=0.3, c2=0.1, c3=-1.0, c4=0.5)
    assert bp.K == 0.5
    grid2 = GridSpec(0.05, 3.0, 20, 0.1, 2, nt=20)
    assert C.bobrov_form_check("second", bp, grid2).max_rel <= 1e-9


def test_bobrov_second_guards():
    grid = GridSpec(0.2, 5, 8, 0.1, 2, nt=5)
    with pytest.raises(ConstraintViolation):
        C.bobrov_form_check("second", C.BobrovParams(2, 1, c3=0.0), grid)
    with pytest.raises(DomainViolation):
        C.bobrov_form_check("second", C.BobrovParams(2, 1, c3=1.0, c4=0.0), grid)


def test_cross_check_pushforward_row2():
    cs, gap = C.cross_check_pushforward("T3.1", ModelParams(2, 1, 0), FC(c1=0.5, c2=1.2))
    assert gap <= 1e-9
