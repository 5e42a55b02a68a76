"""Command-line front end: ``nlbse <command> ...``.

Exit codes: 0 ok, 1 tolerance not met, 2 domain or constraint error,
3 symmetry mismatch, 4 negative radicand, 5 blowup.
"""

from __future__ import annotations

import argparse
import configparser
import contextlib
import csv
import math
import sys
from typing import Sequence

import numpy as np

from . import catalog as C
from . import fdsolver as F
from . import reduce as R
from . import symmetry as S
from .errors import Blowup, ConstraintViolation, DomainError, NegativeRadicand, NLBSEError
from .grid import GridSpec
from .model import ModelParams, VolatilityModelKind, canonical_residual, taylor_gap
from .transform import SpacePoint, from_canonical, to_canonical

EXIT_OK, EXIT_TOL, EXIT_DOMAIN, EXIT_SYMMETRY, EXIT_RADICAND, EXIT_BLOWUP = range(6)

# INI section -> keys, each mapped onto the argparse dest of the same name
CONFIG_KEYS = {
    "model": {"a", "b", "c", "kind", "sigma", "S", "uS", "uSS"},
    "family": {"family", "c1", "c2", "eps", "delta", "k", "lam", "row", "sigma_branch"},
    "grid": {"x_lo", "x_hi", "nx", "t0", "t1", "nt", "safety", "ladder", "xi0", "xi1"},
    "tolerances": {"tol", "int_tol", "seed", "out"},
}
INT_KEYS = {"nx", "nt", "row", "seed"}
SIGN_KEYS = {"eps", "delta", "sigma_branch"}
TEXT_KEYS = {"family", "kind", "ladder", "out"}


def parse_sign(text) -> int:
    s = str(text).strip()
    if s in ("1", "+1", "+"):
        return 1
    if s in ("-1", "-"):
        return -1
    raise argparse.ArgumentTypeError(f"sign must be +1 or -1, got {text!r}")


def parse_float_list(text) -> list[float]:
    return [float(v) for v in str(text).split(",") if v.strip()]


def parse_int_list(text) -> list[int]:
    return [int(v) for v in str(text).split(",") if v.strip()]


def load_config(path) -> dict:
    """Flat {dest: value} from an INI file; unknown sections or keys are errors."""
    cp = configparser.ConfigParser()
    cp.optionxform = str
    with open(path, encoding="utf-8") as fh:
        cp.read_file(fh)
    out = {}
    for section in cp.sections():
        if section not in CONFIG_KEYS:
            raise ValueError(f"unknown config section [{section}]")
        for key, raw in cp.items(section):
            if key not in CONFIG_KEYS[section]:
                raise ValueError(f"unknown config key {key!r} in [{section}]")
            if key in TEXT_KEYS:
                out[key] = raw.strip()
            elif key in SIGN_KEYS:
                try:
                    out[key] = parse_sign(raw)
                except argparse.ArgumentTypeError as e:
                    raise ValueError(f"[{section}] {key}: {e}") from None
            elif key in INT_KEYS:
                out[key] = int(raw)
            else:
                out[key] = float(raw)
    return out


# ---------------------------------------------------------------- argument groups

def _global_flags() -> argparse.ArgumentParser:
    g = argparse.ArgumentParser(add_help=False)
    g.add_argument("--tol", type=float, default=argparse.SUPPRESS, help="pass/fail tolerance")
    g.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="RNG seed (default 0)")
    g.add_argument("--out", default=argparse.SUPPRESS, help="write CSV output to this path")
    g.add_argument("--config", default=argparse.SUPPRESS, help="INI configuration file")
    return g


def _model_flags(p):
    p.add_argument("--a", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--c", type=float)


def _family_flags(p):
    p.add_argument("--family")
    p.add_argument("--c1", type=float)
    p.add_argument("--c2", type=float)
    p.add_argument("--eps", type=parse_sign)
    p.add_argument("--delta", type=parse_sign)
    p.add_argument("--k", type=float)
    p.add_argument("--lam", type=float)


def _grid_flags(p):
    for name in ("x-lo", "x-hi", "t0", "t1", "safety"):
        p.add_argument(f"--{name}", type=float)
    p.add_argument("--nx", type=int)
    p.add_argument("--nt", type=int)


def build_parser() -> argparse.ArgumentParser:
    glob = _global_flags()
    parser = argparse.ArgumentParser(prog="nlbse", parents=[glob],
                                     description="Exact solutions and symmetries of a nonlinear Black-Scholes equation")
    sub = parser.add_subparsers(dest="command", required=True)

    cat = sub.add_parser("catalog", parents=[glob], help="list closed-form families")
    cat.add_argument("action", choices=["list"])
    cat.add_argument("--table", choices=list(C.TABLES))

    ver = sub.add_parser("verify", parents=[glob], help="residual scan of one family")
    _family_flags(ver)
    _model_flags(ver)
    _grid_flags(ver)

    tr = sub.add_parser("transform", parents=[glob], help="apply the point transformation")
    tr.add_argument("direction", choices=["forward", "inverse"])
    _model_flags(tr)
    tr.add_argument("--t", type=float, default=0.0)
    tr.add_argument("--x", type=float, default=1.0)
    tr.add_argument("--u", type=float, default=0.0)
    tr.add_argument("--check", action="store_true", help="also report the round-trip error")

    sym = sub.add_parser("symmetry", parents=[glob], help="symmetry algebra workflows")
    sym.add_argument("action", choices=["commutators", "flow", "optimal-system", "certify"])
    sym.add_argument("--gen", default="X1", help="X1..X5 or five comma-separated coefficients")
    sym.add_argument("--s", type=parse_float_list, default=None, help="group parameter(s)")
    _family_flags(sym)
    sym.add_argument("--t", type=float, default=1.0)
    sym.add_argument("--x", type=float, default=0.0)

    red = sub.add_parser("reduce", parents=[glob], help="integrate a reduced ODE")
    red.add_argument("--row", type=int)
    red.add_argument("--eps", type=parse_sign)
    red.add_argument("--k", type=float)
    red.add_argument("--sigma", dest="sigma_branch", type=parse_sign)
    red.add_argument("--phi0", type=float)
    red.add_argument("--dphi0", type=float)
    red.add_argument("--xi0", type=float)
    red.add_argument("--xi1", type=float)
    red.add_argument("--int-tol", type=float)
    red.add_argument("--against-family")
    red.add_argument("--c1", type=float)
    red.add_argument("--c2", type=float)
    red.add_argument("--delta", type=parse_sign)
    red.add_argument("--t-ref", type=float, default=1.0)
    red.add_argument("--check", choices=sorted(R.SUBSTITUTION_ROW))

    fd = sub.add_parser("fd", parents=[glob], help="manufactured-solution convergence study")
    fd.add_argument("--equation", choices=list(F.EQUATIONS), default=None)
    _family_flags(fd)
    _model_flags(fd)
    _grid_flags(fd)
    fd.add_argument("--ladder", default=None)
    fd.add_argument("--direction", choices=list(F.DIRECTIONS))

    tay = sub.add_parser("taylor", parents=[glob], help="gap to the linear volatility expansion")
    tay.add_argument("--kind")
    tay.add_argument("--rho", type=parse_float_list, default=None)
    tay.add_argument("--sigma", type=float)
    tay.add_argument("--S", type=float)
    tay.add_argument("--uS", type=float)
    tay.add_argument("--uSS", type=float)
    return parser


# ---------------------------------------------------------------- helpers

@contextlib.contextmanager
def _output(args):
    path = getattr(args, "out", None)
    if path:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            yield fh
    else:
        yield sys.stdout


def _writer(stream):
    return csv.writer(stream, lineterminator="\n")


def _g(x) -> str:
    return f"{x:.17g}"


def _get(args, name, default=None):
    v = getattr(args, name, None)
    return default if v is None else v


def _constants(args) -> C.FamilyConstants:
    return C.FamilyConstants(
        c1=_get(args, "c1", 0.0), c2=_get(args, "c2", 0.0), eps=getattr(args, "eps", None),
        delta=_get(args, "delta", 1), k=getattr(args, "k", None), lam=getattr(args, "lam", None))


def _params_for(fam: C.Family, args) -> ModelParams | None:
    if fam.equation == "canonical":
        return None
    c_default = 0.0 if fam.id.table == "T3" else 1.0
    return ModelParams(_get(args, "a", 2.0), _get(args, "b", 1.0), _get(args, "c", c_default))


def _grid_from(args, base: GridSpec) -> GridSpec:
    return GridSpec(
        _get(args, "x_lo", base.x_lo), _get(args, "x_hi", base.x_hi), _get(args, "nx", base.nx),
        _get(args, "t0", base.t0), _get(args, "t1", base.t1), _get(args, "nt", base.nt),
        _get(args, "safety", base.safety))


def _parse_gen(text):
    s = str(text).strip().upper()
    if s.startswith("X") and s[1:].isdigit():
        return int(s[1:])
    vals = parse_float_list(text)
    if len(vals) != 5:
        raise ValueError("--gen must be X1..X5 or five coefficients")
    return vals


def _require(args, name):
    if getattr(args, name, None) is None:
        raise ValueError(f"--{name.replace('_', '-')} is required")
    return getattr(args, name)


# ---------------------------------------------------------------- commands

def cmd_catalog(args) -> int:
    with _output(args) as fh:
        _writer(fh).writerows(C.manifest_rows(getattr(args, "table", None)))
    return EXIT_OK


def cmd_verify(args) -> int:
    fam = C.get_family(_require(args, "family"))
    cs = C.resolve_constants(fam.id, _constants(args))
    params = _params_for(fam, args)
    grid = _grid_from(args, C.default_grid(fam.id, params, cs))
    stats = C.residual_scan(fam.id, params, cs, grid)
    tol = _get(args, "tol", 1e-9)
    print(f"family {fam.id}")
    print(f"max_abs {stats.max_abs:.3e}")
    print(f"max_rel {stats.max_rel:.3e}")
    print(f"evaluated {stats.n_evaluated} excluded {stats.n_excluded} singular {stats.n_singular}")
    ok = stats.max_rel <= tol
    print("PASS" if ok else f"FAIL (tol {tol:g})")
    return EXIT_OK if ok else EXIT_TOL


def cmd_transform(args) -> int:
    params = ModelParams(_get(args, "a", 2.0), _get(args, "b", 1.0), _get(args, "c", 0.0))
    p = SpacePoint(args.t, args.x, args.u)
    fwd, back = (to_canonical, from_canonical) if args.direction == "forward" else (from_canonical, to_canonical)
    q = fwd(params, p)
    print(f"{float(q.t):.17g} {float(q.x):.17g} {float(q.u):.17g}")
    if args.check:
        r = back(params, q)
        err = max(abs(a - b) / (1.0 + abs(b)) for a, b in zip(r.as_tuple(), p.as_tuple()))
        tol = _get(args, "tol", 1e-12)
        print(f"round_trip {err:.3e}")
        return EXIT_OK if err <= tol else EXIT_TOL
    return EXIT_OK


def cmd_symmetry(args) -> int:
    if args.action == "commutators":
        table = S.commutator_table()
        with _output(args) as fh:
            w = _writer(fh)
            w.writerow([""] + [X.name for X in S.BASIS])
            for i, X in enumerate(S.BASIS):
                w.writerow([X.name] + [" ".join(f"{v:.17g}" for v in np.round(table[i, j], 15) + 0.0)
                                       for j in range(5)])
        ok = S.table_matches(table)
        if not ok:
            print("commutator table does not match the expected brackets", file=sys.stderr)
        return EXIT_OK if ok else EXIT_SYMMETRY
    if args.action == "optimal-system":
        with _output(args) as fh:
            w = _writer(fh)
            w.writerow(["label", "coefficients", "constraints", "degenerate", "table1_row"])
            for sa in S.optimal_system():
                coeffs = ";".join(f"X{i}:{v}" for i, v in sorted(sa.coefficients.items()))
                w.writerow([sa.label, coeffs, sa.constraints, str(sa.degenerate).lower(),
                            "" if sa.table1_row is None else sa.table1_row])
        return EXIT_OK
    gen = _parse_gen(args.gen)
    fam = C.get_family(_require(args, "family"))
    s_values = args.s if args.s else [0.5]
    if args.action == "flow":
        cs = C.resolve_constants(fam.id, _constants(args))
        f = C.evaluator(fam.id, None, cs)
        print("s,t,x,u,residual")
        for s in s_values:
            jet = S.apply_flow(S.FlowMap(gen, s), f)(np.array([args.t]), np.array([args.x]))
            res = float(np.abs(canonical_residual(jet))[0])
            print(f"{_g(s)},{_g(args.t)},{_g(args.x)},{_g(float(jet.u[0]))},{res:.3e}")
        return EXIT_OK
    rng = np.random.default_rng(_get(args, "seed", 0))
    explicit = any(getattr(args, n, None) is not None for n in ("c1", "c2", "eps", "delta", "k", "lam"))
    cs = _constants(args) if explicit else C.sample_constants(fam.id, rng)
    tol = _get(args, "tol", 1e-8)
    rep = S.invariance_certificate(gen, [(fam.id, cs)], s_values, tol=tol)
    for e in rep.entries:
        print(f"{rep.generator} {e.label} s={e.s:g} max_rel={e.max_rel:.3e} points={e.n_points}")
    print("PASS" if rep.ok else "FAIL")
    return EXIT_OK if rep.ok else EXIT_TOL


def cmd_reduce(args) -> int:
    row = _require(args, "row")
    ode = R.ReducedODE(row, _get(args, "eps", 1), getattr(args, "k", None))
    xi0, xi1 = _get(args, "xi0", 0.0), _get(args, "xi1", 1.0)
    gap = None
    if args.against_family:
        fam = C.get_family(args.against_family)
        cs = C.resolve_constants(fam.id, C.FamilyConstants(
            c1=_get(args, "c1", 0.0), c2=_get(args, "c2", 0.0),
            eps=None if fam.fixed_eps is not None else ode.eps, delta=_get(args, "delta", 1),
            k=_family_k(fam, ode)))
        rep = R.oracle_check(ode, C.evaluator(fam.id, None, cs), xi0, xi1,
                             _get(args, "int_tol", 1e-10), args.t_ref, _get(args, "sigma_branch"))
        traj, sigma, gap = rep.trajectory, rep.sigma, rep.max_gap
    else:
        sigma = _get(args, "sigma_branch", 1)
        traj = R.integrate(ode, sigma, xi0, _get(args, "phi0", 0.0), _get(args, "dphi0", 0.0), xi1,
                           _get(args, "int_tol", 1e-10))
    print(f"row {ode.row} sigma {sigma:+d} steps {traj.n_steps} halted {str(traj.halted).lower()}")
    ok = True
    if gap is not None:
        print(f"max_gap {gap:.3e}")
        ok &= gap <= _get(args, "tol", 1e-8)
    sub = None
    if args.check:
        sub = R.substitution_check(args.check, traj)
        tol = _get(args, "tol", 1e-7)
        print(f"{args.check} max_defect {sub.max_defect:.3e}")
        ok &= sub.max_defect <= tol
    if getattr(args, "out", None):
        with _output(args) as fh:
            R.write_trajectory_csv(traj, fh, sub)
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_TOL


def _family_k(fam: C.Family, ode: R.ReducedODE):
    """k of a closed form from the row's k (the x >= -log k branch flips its sign)."""
    if "k" not in fam.uses:
        return None
    if fam.id == C.FamilyId("T2", 9):
        return -ode.k
    return ode.k


FD_BOXES = {"canonical": GridSpec(-1.0, 2.0, 41, 0.1, 0.6), "bse": GridSpec(0.5, 3.0, 41, 0.1, 0.105)}


def cmd_fd(args) -> int:
    fam = C.get_family(_require(args, "family"))
    equation = args.equation or fam.equation
    cs = C.resolve_constants(fam.id, _constants(args))
    params = _params_for(fam, args)
    grid = _grid_from(args, FD_BOXES[equation])
    ladder = parse_int_list(args.ladder) if args.ladder else [41, 81, 161]
    res = F.convergence_order(equation, params, fam.id, cs, grid, ladder, args.direction)
    with _output(args) as fh:
        w = _writer(fh)
        w.writerow(["nx", "dx", "max_error"])
        for nx, dx, e in zip(ladder, res.dx, res.errors):
            w.writerow([nx, _g(dx), _g(e)])
    print(f"order {res.order:.4f} direction {res.direction} degenerate {str(res.degenerate).lower()}")
    ok = res.degenerate or 1.7 <= res.order <= 2.3
    return EXIT_OK if ok else EXIT_TOL


def cmd_taylor(args) -> int:
    kind = VolatilityModelKind.parse(_get(args, "kind", "reduced-form"))
    rhos = args.rho or [1e-2, 5e-3, 2.5e-3]
    sigma, S0 = _get(args, "sigma", 0.4), _get(args, "S", 1.0)
    uS, uSS = _get(args, "uS", 0.5), _get(args, "uSS", 0.3)
    gaps = [taylor_gap(kind, sigma, r, S0, uS, uSS) for r in rhos]
    ratios = [math.nan] + [g0 / g1 if g1 != 0 else math.nan for g0, g1 in zip(gaps, gaps[1:])]
    with _output(args) as fh:
        w = _writer(fh)
        w.writerow(["rho", "gap", "ratio"])
        for r, g, q in zip(rhos, gaps, ratios):
            w.writerow([_g(r), _g(g), "" if math.isnan(q) else _g(q)])
    if all(g == 0 for g in gaps):
        return EXIT_OK
    if len(gaps) < 2:
        return EXIT_OK
    return EXIT_OK if 3.6 <= ratios[-1] <= 4.4 else EXIT_TOL


COMMANDS = {"catalog": cmd_catalog, "verify": cmd_verify, "transform": cmd_transform,
            "symmetry": cmd_symmetry, "reduce": cmd_reduce, "fd": cmd_fd, "taylor": cmd_taylor}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "config", None):
            for key, val in load_config(args.config).items():
                if getattr(args, key, None) is None:
                    setattr(args, key, val)
        return COMMANDS[args.command](args)
    except NegativeRadicand as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RADICAND
    except Blowup as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BLOWUP
    except (ConstraintViolation, DomainError, NLBSEError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
