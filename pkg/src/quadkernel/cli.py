"""Command-line front end.

Subcommands: eval, classify, scan, profile, nd, galerkin, capacity, evolve,
selftest.  Results go to stdout as a JSON envelope or as CSV (with --out,
to a file); diagnostics and timing go to stderr.  Outputs are
byte-deterministic for identical inputs: node orders and seeds are fixed and
no wall-clock content reaches stdout.

Exit codes: 0 success, 1 selftest failure, 2 validation error,
3 representation/consistency disagreement, 4 evaluation budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time

import numpy as np

from . import acceptance as qa
from . import classify as qc
from . import discrete as qd
from . import evolve as qe
from . import kernel2d as k2
from . import kernelnd as knd
from . import profile as qp
from . import symbols as qs
from .errors import (
    BudgetExceededError,
    DomainError,
    FormDisagreementError,
    TailBoundError,
    WitnessNotFoundError,
)
from .numerics import Tolerance

EXIT_OK = 0
EXIT_SELFTEST = 1
EXIT_VALIDATION = 2
EXIT_CONSISTENCY = 3
EXIT_BUDGET = 4


def _read_config(path: str) -> dict:
    """key=value lines; '#' starts a comment; unknown keys are rejected."""
    known = {"abs_tol", "rel_tol", "max_evaluations"}
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DomainError(f"{path}:{lineno}: expected key=value")
            key, val = (s.strip() for s in line.split("=", 1))
            if key not in known:
                raise DomainError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = val
    return out


def _tolerance(args) -> Tolerance:
    cfg = _read_config(args.config) if getattr(args, "config", None) else {}
    abs_tol = float(args.abs_tol if args.abs_tol is not None
                    else cfg.get("abs_tol", 1e-12))
    rel_tol = float(args.rel_tol if args.rel_tol is not None
                    else cfg.get("rel_tol", 1e-10))
    max_ev = int(args.max_evaluations if args.max_evaluations is not None
                 else cfg.get("max_evaluations", 10_000_000))
    return Tolerance(abs_tol=abs_tol, rel_tol=rel_tol, max_evaluations=max_ev)


def _emit_json(command: str, params: dict, result, error_estimate=None,
               evaluations=None, out_path=None):
    envelope = {
        "command": command,
        "params": params,
        "result": result,
        "error_estimate": error_estimate,
        "meta": {"evaluations": evaluations},
    }
    text = json.dumps(envelope, sort_keys=True)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _emit_csv(header: str, rows, out_path=None):
    lines = [header] + [",".join(str(v) for v in row) for row in rows]
    text = "\n".join(lines) + "\n"
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _add_tol_flags(sub):
    sub.add_argument("--abs-tol", dest="abs_tol", type=float, default=None)
    sub.add_argument("--rel-tol", dest="rel_tol", type=float, default=None)
    sub.add_argument("--max-evaluations", dest="max_evaluations", type=int,
                     default=None)
    sub.add_argument("--config", default=None,
                     help="key=value file overriding tolerance defaults; "
                          "explicit flags win")
    sub.add_argument("--out", default=None, help="write output to this file")


def cmd_eval(args) -> int:
    tol = _tolerance(args)
    p = qs.DiagParams(args.a, args.c, args.d)
    rep = None if args.rep == "auto" else args.rep
    r = k2.eval(p, args.x, args.y, tol, crosscheck=args.crosscheck,
                representation=rep)
    _emit_json("eval",
               {"a": args.a, "c": args.c, "d": args.d, "x": args.x, "y": args.y},
               {"value": r.value, "representation": r.representation},
               error_estimate=r.abs_error_estimate,
               evaluations=r.evaluations, out_path=args.out)
    return EXIT_OK


def cmd_classify(args) -> int:
    tol = _tolerance(args)
    p = qs.DiagParams(args.a, args.c, args.d)
    res = qc.classify_diag(p, tol)
    payload = {"verdict": res.verdict, "threshold_margin": res.threshold_margin}
    err = None
    if res.witness is not None:
        payload["witness"] = {"x": res.witness.x, "y": res.witness.y,
                              "value": res.witness.value}
        err = res.witness.abs_error_estimate
    _emit_json("classify", {"a": args.a, "c": args.c, "d": args.d},
               payload, error_estimate=err, out_path=args.out)
    return EXIT_OK


def cmd_scan(args) -> int:
    tol = _tolerance(args)
    window = tuple(float(v) for v in args.window.split(","))
    res = tuple(int(v) for v in args.res.split(","))
    if len(window) != 4 or len(res) != 2:
        raise DomainError("--window needs x0,x1,y0,y1 and --res needs nx,ny")
    sm = qc.sign_map(args.m, window, res, tol)
    rows = []
    for i, x in enumerate(sm.xs):
        for j, y in enumerate(sm.ys):
            rows.append((repr(float(x)), repr(float(y)), sm.signs[i, j],
                         repr(float(sm.values[i, j])),
                         repr(float(sm.errors[i, j]))))
    _emit_csv("x,y,sign,value,err", rows, args.out)
    return EXIT_OK


def cmd_profile(args) -> int:
    tol = _tolerance(args)
    if not args.alpha_max > 0:
        raise DomainError("--alpha-max must be positive")
    if not 0 < args.step <= 0.1:
        raise DomainError("--step must lie in (0, 0.1]")
    rows = []
    alpha = 0.0
    while alpha <= args.alpha_max + 0.5 * args.step:
        h = qp.h_value(alpha, tol)
        asym = qp.h_asymptotic(alpha) if alpha > 0 else ""
        rows.append((repr(float(alpha)), repr(h),
                     repr(asym) if asym != "" else ""))
        alpha += args.step
    _emit_csv("alpha,H,H_asym", rows, args.out)
    return EXIT_OK


def cmd_nd(args) -> int:
    tol = _tolerance(args)
    alphas = tuple(float(v) for v in args.alphas.split(","))
    p = qs.ProductParams(alphas, args.d)
    payload = {"verdict": knd.classify_nd(p), "A": p.A(), "mu": p.mu()}
    err = None
    if args.face is not None:
        i, j = (int(v) for v in args.face.split(","))
        red = knd.face_reduce(p, i, j)
        payload["face"] = {
            "indices": [i, j],
            "reduced": {"a": red.reduced_params.a, "c": red.reduced_params.c,
                        "d": red.reduced_params.d},
            "prefactor": red.prefactor,
        }
        xi, xj, fval, ferr = knd.face_negative_witness(p, i, j, tol)
        payload["face"]["witness"] = {"x_i": xi, "x_j": xj, "value": fval}
        err = ferr
        if args.abel:
            eps_list = [float(v) for v in args.abel.split(",")]
            abel = knd.abel_face_check(p, xi, xj, eps_list,
                                       Tolerance(abs_tol=1e-11, rel_tol=1e-9))
            payload["abel"] = [{"eps": e, "L": L} for e, L in abel]
    _emit_json("nd", {"alphas": list(alphas), "d": args.d}, payload,
               error_estimate=err, out_path=args.out)
    return EXIT_OK


def cmd_galerkin(args) -> int:
    if args.b is not None and args.b != 0.0:
        params = qs.NonDiagParams(args.a, args.c, args.d, args.b)
    else:
        params = qs.DiagParams(args.a, args.c, args.d)
    g = qd.Grid(args.L, args.h, kind=args.domain)
    form = qd.assemble(params, g)
    sol = qd.solve_riesz(form)
    if args.nonneg:
        if not isinstance(params, qs.DiagParams):
            raise DomainError("--nonneg expects diagonal parameters")
        star_e, plus_e, bound = qd.variance_gap(params, g)
        _emit_json("galerkin",
                   {"a": args.a, "b": args.b or 0.0, "c": args.c, "d": args.d,
                    "L": args.L, "h": args.h},
                   {"E_star": star_e, "E_plus": plus_e,
                    "gap": plus_e - star_e, "lower_bound": bound},
                   out_path=args.out)
        return EXIT_OK
    if args.out:
        rows = [(repr(float(x)), repr(float(y)), repr(float(u)))
                for x, y, u in sol.as_table()]
        _emit_csv("x,y,u", rows, args.out)
        sys.stderr.write(f"energy {sol.energy!r}\n")
    else:
        _emit_json("galerkin",
                   {"a": args.a, "b": args.b or 0.0, "c": args.c, "d": args.d,
                    "L": args.L, "h": args.h},
                   {"energy": sol.energy, "nodes": int(len(sol.u))},
                   out_path=None)
    return EXIT_OK


def cmd_capacity(args) -> int:
    p = qs.DiagParams(args.a, args.c, args.d)
    rows = []
    for k in range(1, args.steps + 1):
        R = 2.0 ** (-k)
        eps = R * math.exp(-k)
        e = qd.cone_cutoff_energy(p, args.slope, eps, R)
        rows.append((repr(R), repr(eps), repr(e)))
    _emit_csv("R,eps,energy", rows, args.out)
    return EXIT_OK


def cmd_evolve(args) -> int:
    p = qs.DiagParams(args.a, args.c, args.d)
    n = args.n
    L = args.L
    x = -L + 2.0 * L / n * np.arange(n)
    if args.data == "exp":
        samples = np.exp(-np.abs(x))
    elif args.data == "gauss":
        samples = np.exp(-x * x)
    else:
        samples = np.cos(math.pi * 4.0 / L * x)
    state = qe.EvolutionState(samples, L)
    steps = max(1, args.steps)
    dt = args.t / steps
    for _ in range(steps):
        state = qe.evolve_step(state, p, dt)
    if args.out:
        rows = [(repr(float(xv)), repr(float(uv)))
                for xv, uv in zip(state.x, state.samples)]
        _emit_csv("x,u", rows, args.out)
    else:
        norms = {str(s): qe.sobolev_norm(state, s) for s in (0, 1, 2)}
        _emit_json("evolve",
                   {"a": args.a, "c": args.c, "d": args.d, "t": args.t,
                    "L": L, "n": n, "data": args.data},
                   {"t": state.t, "sobolev_norms": norms}, out_path=None)
    return EXIT_OK


def cmd_selftest(args) -> int:
    t0 = time.monotonic()
    results = qa.run_all(quick=args.quick)
    width = max(len(r.name) for r in results)
    all_ok = True
    for r in results:
        mark = "PASS" if r.passed else "FAIL"
        all_ok = all_ok and r.passed
        sys.stdout.write(f"[{mark}] {r.number:2d} {r.name:<{width}}  {r.detail}\n")
    sys.stdout.write(f"{'OK' if all_ok else 'FAILED'} "
                     f"({sum(r.passed for r in results)}/{len(results)} criteria)\n")
    sys.stderr.write(f"selftest wall time: {time.monotonic() - t0:.1f}s\n")
    return EXIT_OK if all_ok else EXIT_SELFTEST


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="quadkernel",
        description="Minimizer kernels of the corner-constrained quadratic "
                    "energy on the quadrant: evaluation, threshold "
                    "classification, boundary-layer analysis, discrete "
                    "oracles, and the decaying evolution flow.")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("eval", help="evaluate the 2-D kernel at one point")
    s.add_argument("--a", type=float, required=True)
    s.add_argument("--c", type=float, required=True)
    s.add_argument("--d", type=float, required=True)
    s.add_argument("--x", type=float, required=True)
    s.add_argument("--y", type=float, required=True)
    s.add_argument("--rep", default="auto",
                   choices=("auto",) + k2.REPRESENTATIONS)
    s.add_argument("--crosscheck", action="store_true")
    _add_tol_flags(s)
    s.set_defaults(fn=cmd_eval)

    s = sub.add_parser("classify", help="threshold verdict with witness")
    s.add_argument("--a", type=float, required=True)
    s.add_argument("--c", type=float, required=True)
    s.add_argument("--d", type=float, required=True)
    _add_tol_flags(s)
    s.set_defaults(fn=cmd_classify)

    s = sub.add_parser("scan", help="sign map of the normalized kernel")
    s.add_argument("--m", type=float, required=True)
    s.add_argument("--window", required=True, help="x0,x1,y0,y1")
    s.add_argument("--res", required=True, help="nx,ny")
    _add_tol_flags(s)
    s.set_defaults(fn=cmd_scan)

    s = sub.add_parser("profile", help="table of the layer profile H")
    s.add_argument("--alpha-max", dest="alpha_max", type=float, required=True)
    s.add_argument("--step", type=float, required=True)
    _add_tol_flags(s)
    s.set_defaults(fn=cmd_profile)

    s = sub.add_parser("nd", help="product-type n-dimensional family")
    s.add_argument("--alphas", required=True, help="comma-separated weights")
    s.add_argument("--d", type=float, required=True)
    s.add_argument("--face", default=None, help="i,j face indices")
    s.add_argument("--abel", default=None, help="comma-separated eps list")
    _add_tol_flags(s)
    s.set_defaults(fn=cmd_nd)

    s = sub.add_parser("galerkin", help="discrete constrained minimization")
    s.add_argument("--a", type=float, required=True)
    s.add_argument("--c", type=float, required=True)
    s.add_argument("--d", type=float, required=True)
    s.add_argument("--b", type=float, default=None)
    s.add_argument("--L", type=float, required=True)
    s.add_argument("--h", type=float, required=True)
    s.add_argument("--domain", default="quadrant",
                   choices=("quadrant", "halfplane"))
    s.add_argument("--nonneg", action="store_true",
                   help="also run the nonnegative minimization and report "
                        "the variance gap")
    _add_tol_flags(s)
    s.set_defaults(fn=cmd_galerkin)

    s = sub.add_parser("capacity", help="cone cutoff energy schedule")
    s.add_argument("--a", type=float, required=True)
    s.add_argument("--c", type=float, required=True)
    s.add_argument("--d", type=float, required=True)
    s.add_argument("--slope", type=float, default=1.0)
    s.add_argument("--steps", type=int, default=8)
    _add_tol_flags(s)
    s.set_defaults(fn=cmd_capacity)

    s = sub.add_parser("evolve", help="decaying-branch evolution run")
    s.add_argument("--a", type=float, required=True)
    s.add_argument("--c", type=float, required=True)
    s.add_argument("--d", type=float, required=True)
    s.add_argument("--t", type=float, required=True)
    s.add_argument("--L", type=float, default=40.0)
    s.add_argument("--n", type=int, default=4096)
    s.add_argument("--steps", type=int, default=1)
    s.add_argument("--data", default="exp", choices=("exp", "gauss", "cos"))
    _add_tol_flags(s)
    s.set_defaults(fn=cmd_evolve)

    s = sub.add_parser("selftest", help="run the acceptance suite")
    s.add_argument("--quick", action="store_true",
                   help="skip the x=400 layer point and refinement studies")
    s.set_defaults(fn=cmd_selftest)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage already; normalize other codes
        return EXIT_VALIDATION if exc.code not in (0,) else 0
    try:
        return args.fn(args)
    except (DomainError, ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_VALIDATION
    except (FormDisagreementError,) as exc:
        sys.stderr.write(f"consistency failure: {exc}\n")
        return EXIT_CONSISTENCY
    except (BudgetExceededError, TailBoundError, WitnessNotFoundError) as exc:
        sys.stderr.write(f"budget exhausted: {exc}\n")
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
