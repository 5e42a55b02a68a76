import io

import numpy as np
import pytest

from nlbse import catalog as C
from nlbse import fdsolver as F
from nlbse.catalog import FamilyConstants as FC
from nlbse.errors import Blowup, CornerMismatch, IllPosed
from nlbse.grid import GridSpec
from nlbse.model import Jet2, ModelParams

BSE = ModelParams(2, 1, 1)
ROW5 = FC(c1=1, c2=0, delta=-1)


def test_constant_is_fixed_point():
    grid = GridSpec(-1, 1, 41, 0.0, 1.0)
    states = F.solve("canonical", None, grid, lambda x: 2.0 + 0 * x, lambda t, s: 2.0, times=[0.3, 1.0])
    assert [s.time for s in states] == [0.3, 1.0]
    for s in states:
        assert np.all(s.values == 2.0)


def test_direction_from_diffusion_sign():
    box = GridSpec(-1, 2, 41, 0.1, 0.6)
    assert F.well_posed_direction("canonical", None, "T2.5", ROW5, box) == "backward"
    assert F.well_posed_direction("canonical", None, "T2.5", FC(c1=1, c2=0, delta=1), box) == "forward"
    bse_box = GridSpec(0.5, 3.0, 41, 0.1, 0.2)
    assert F.well_posed_direction("bse", BSE, "T4.3", FC(c1=1, c2=0.5, eps=1), bse_box) == "forward"
    # zero diffusion along T4.1 falls back to the pricing direction
    assert F.well_posed_direction("bse", BSE, "T4.1", FC(c1=1, c2=0.5), bse_box) == "backward"


def test_mixed_diffusion_sign_is_ill_posed(monkeypatch):
    # catalog families keep one sign of u_x + u_xx, so feed a field that flips it
    def fake(fid, params, consts, T, X):
        z = np.zeros_like(X)
        return Jet2(z, z, z, np.sin(3 * X))

    monkeypatch.setattr(C, "evaluate", fake)
    with pytest.raises(IllPosed):
        F.well_posed_direction("canonical", None, "T2.5", ROW5, GridSpec(-1, 2, 41, 0.1, 0.6))


def test_row5_second_order():
    res = F.convergence_order("canonical", None, "T2.5", ROW5, GridSpec(-1, 2, 41, 0.1, 0.6))
    assert res.direction == "backward"
    assert 1.7 <= res.order <= 2.3 and not res.degenerate
    assert res.errors[0] > res.errors[1] > res.errors[2]
    # error scales like dx^2 at nx = 81
    assert res.errors[1] <= 10 * res.dx[1] ** 2


def test_t4_row1_second_order():
    res = F.convergence_order("bse", BSE, "T4.1", FC(c1=1, c2=0.5), GridSpec(0.5, 3.0, 41, 0.1, 0.105))
    assert 1.7 <= res.order <= 2.3
    assert res.errors[1] <= 10 * res.dx[1] ** 2


def test_t4_row3_second_order():
    res = F.convergence_order("bse", BSE, "T4.3", FC(c1=1, c2=0.5, eps=1), GridSpec(0.5, 3.0, 41, 0.1, 0.2))
    assert res.direction == "forward"
    assert 1.7 <= res.order <= 2.3


def test_row2_flagged_degenerate():
    res = F.convergence_order("canonical", None, "T2.2", FC(c1=0.3, c2=0.7), GridSpec(-1, 2, 41, 0.1, 0.6))
    assert res.degenerate


def test_time_step_halving():
    runs = []
    for safety in (0.9, 0.45):
        num, ex, _ = F.manufactured_run("canonical", None, "T2.5", ROW5, GridSpec(-1, 2, 41, 0.1, 0.6, safety=safety))
        runs.append(num)
    assert np.max(np.abs(runs[0] - runs[1])) <= 1e-9


def test_translation_equivariance():
    s = 0.7
    exact = C.value_fn("T2.5", None, ROW5)
    out = []
    for shift in (0.0, s):
        grid = GridSpec(-1 + shift, 2 + shift, 41, 0.1, 0.6)
        ends = (grid.x_lo, grid.x_hi)

        def boundary(t, side, shift=shift, ends=ends):
            return float(exact(t, np.array([ends[0 if side == "left" else 1] - shift]))[0])

        st = F.solve("canonical", None, grid, lambda x, shift=shift: exact(0.6, x - shift), boundary,
                     direction="backward")[-1]
        out.append(st.values)
    assert np.max(np.abs(out[0][1:-1] - out[1][1:-1])) <= 1e-12


def test_corner_mismatch():
    grid = GridSpec(0, 1, 21, 0, 1)
    with pytest.raises(CornerMismatch):
        F.solve("canonical", None, grid, lambda x: 0 * x, lambda t, s: 1.0)


def test_blowup_in_anti_diffusive_regime():
    grid = GridSpec(0, 1, 41, 0, 1)
    with pytest.raises(Blowup):
        F.solve("canonical", None, grid, np.exp, lambda t, s: np.exp(0.0 if s == "left" else 1.0))


def test_argument_checks():
    grid = GridSpec(-1, 1, 21, 0, 1)
    with pytest.raises(ValueError):
        F.solve("heat", None, grid, lambda x: 0 * x, lambda t, s: 0.0)
    with pytest.raises(ValueError):
        F.solve("bse", BSE, grid, lambda x: 0 * x, lambda t, s: 0.0)
    with pytest.raises(ValueError):
        F.solve("bse", None, GridSpec(1, 2, 21, 0, 1), lambda x: 0 * x, lambda t, s: 0.0)
    with pytest.raises(ValueError):
        F.solve("canonical", None, grid, lambda x: 0 * x, lambda t, s: 0.0, times=[2.0])
    with pytest.raises(ValueError):
        F.solve("canonical", None, grid, lambda x: 0 * x, lambda t, s: 0.0, direction="sideways")
    with pytest.raises(ValueError):
        F.manufactured_run("bse", BSE, "T2.5", ROW5, GridSpec(0.5, 2, 21, 0.1, 0.2))
    with pytest.raises(ValueError):
        F.manufactured_run("canonical", None, "T2.9", FC(k=0.5), GridSpec(-1, 2, 21, 0.1, 0.2))


def test_grid_spec():
    with pytest.raises(ValueError):
        GridSpec(0, 1, 7, 0, 1)
    with pytest.raises(ValueError):
        GridSpec(1, 0, 20, 0, 1)
    g = GridSpec(0, 1, 11, 0, 2, nt=5)
    assert g.dx == 0.1 and g.mesh()[0].shape == (5, 11)
    assert g.with_nx(21).dx == 0.05


def test_snapshot_csv():
    grid = GridSpec(-1, 1, 9, 0, 0.5)
    st = F.solve("canonical", None, grid, lambda x: 1.0 + 0 * x, lambda t, s: 1.0)[-1]
    x = grid.x_nodes()
    buf = io.StringIO()
    F.write_snapshot_csv(buf, st, x, exact=np.ones_like(x))
    lines = buf.getvalue().splitlines()
    assert lines[0] == "t,x,u_numeric,u_exact,abs_error"
    assert len(lines) == 10
    assert lines[1] == "0.5,-1,1,1,0"
    bare = io.StringIO()
    F.write_snapshot_csv(bare, st, x)
    assert bare.getvalue().splitlines()[1] == "0.5,-1,1,,"
