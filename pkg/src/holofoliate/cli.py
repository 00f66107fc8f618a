"""Command-line interface.

Exit codes: 0 success, 1 input error, 2 failed certificate.  JSON goes to
stdout (or ``--out``); foliations and continuation paths are written as JSON
lines, one record per leaf or level.  ``--csv`` switches to plot data.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .circle_fourier import BoundaryFunction, DEFAULT_GRID, hilbert_samples, theta_grid
from .disk_solver import (
    SolverConfig,
    boundary_equation_residual,
    certify,
    continue_batch,
    solve_disk,
)
from .errors import CertificateError, HolofoliateError, InputError
from .foliation import (
    build_foliation,
    derivative_bounds,
    leaf_through_point,
)
from .motion_extend import HolomorphicMotionSpec, extend_motion
from .psh_verify import Barrier, hessian_report, laplacian_sign_check, trapping_check
from .torus_model import TorusFamily, TorusFamilySpec, validate_family

GRAMMAR = """\
holofoliate [--grid N] [--tol x] [--out path] [--threads k] [--json | --csv] COMMAND ...

  validate-torus  SPEC
  solve-disk      SPEC --t T [--seed re,im|F] [--anchor re,im]
  continue        SPEC --from T0 --to T1 [--seed re,im|F]
  foliate         SPEC --t T [--leaves M]
  leaf-through    SPEC --point re,im [--leaves M]
  verify-barriers SPEC --eps E [--disks F] [--t T] [--leaves M]
  extend-motion   MOTION --new re,im [--r0 x] [--leaves M]
  self-test
"""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        sys.stderr.write(f"error: {message}\n\n{GRAMMAR}")
        raise SystemExit(1)


def _complex_arg(text):
    try:
        parts = [float(p) for p in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected re,im but got {text!r}") from None
    if len(parts) == 1:
        return complex(parts[0])
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected re,im but got {text!r}")
    return complex(parts[0], parts[1])


def _grid_arg(text):
    n = int(text)
    if n < 16 or n & (n - 1):
        raise argparse.ArgumentTypeError("grid must be a power of two >= 16")
    return n


def _positive(text):
    x = float(text)
    if not x > 0:
        raise argparse.ArgumentTypeError("value must be positive")
    return x


def _leaves(text):
    m = int(text)
    if m < 8:
        raise argparse.ArgumentTypeError("at least 8 leaves are required")
    return m


def _global_flags(parser, defaults):
    d = (lambda v: v) if defaults else (lambda v: argparse.SUPPRESS)
    parser.add_argument("--grid", type=_grid_arg, default=d(DEFAULT_GRID))
    parser.add_argument("--tol", type=_positive, default=d(1e-10))
    parser.add_argument("--out", default=d(None))
    parser.add_argument("--threads", type=int, default=d(None),
                        help="cap for BLAS/OpenMP worker threads")
    fmt = parser.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="fmt", action="store_const", const="json", default=d("json"))
    fmt.add_argument("--csv", dest="fmt", action="store_const", const="csv", default=d("json"))


def build_parser():
    """Global flags are accepted before or after the command name."""
    p = _Parser(prog="holofoliate", description="Holomorphic disks with boundaries on graphical tori.",
                usage=GRAMMAR, allow_abbrev=False)
    _global_flags(p, True)
    common = _Parser(add_help=False, allow_abbrev=False)
    _global_flags(common, False)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True
    _add = sub.add_parser

    def add_parser(name):
        return _add(name, parents=[common], allow_abbrev=False)

    sub.add_parser = add_parser

    s = sub.add_parser("validate-torus")
    s.add_argument("spec")

    s = sub.add_parser("solve-disk")
    s.add_argument("spec")
    s.add_argument("--t", type=_positive, required=True)
    s.add_argument("--seed", help="constant re,im or a BoundaryFunction JSON file")
    s.add_argument("--seed-file")
    s.add_argument("--anchor", type=_complex_arg)

    s = sub.add_parser("continue")
    s.add_argument("spec")
    s.add_argument("--t0", "--from", dest="t0", type=_positive, required=True)
    s.add_argument("--t1", "--to", dest="t1", type=_positive, required=True)
    s.add_argument("--seed", help="constant re,im or a BoundaryFunction JSON file")
    s.add_argument("--seed-file")

    s = sub.add_parser("foliate")
    s.add_argument("spec")
    s.add_argument("--t", type=_positive, default=1.0)
    s.add_argument("--leaves", type=_leaves, default=32)

    s = sub.add_parser("leaf-through")
    s.add_argument("spec")
    s.add_argument("--point", type=_complex_arg, required=True)
    s.add_argument("--leaves", type=_leaves, default=32)

    s = sub.add_parser("verify-barriers")
    s.add_argument("spec")
    s.add_argument("--eps", type=_positive, default=0.01)
    s.add_argument("--disks")
    s.add_argument("--t", type=_positive, default=1.0)
    s.add_argument("--leaves", type=_leaves, default=8)

    s = sub.add_parser("extend-motion")
    s.add_argument("motion")
    s.add_argument("--new", type=_complex_arg, required=True)
    s.add_argument("--r0", type=float)
    s.add_argument("--leaves", type=_leaves, default=16)

    sub.add_parser("self-test")
    return p


# ---------------------------------------------------------------------------


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from None


def _family(path, validate=True):
    return TorusFamily(TorusFamilySpec.from_dict(_load_json(path)), validate=validate)


def _seed(args, t):
    seed_file = args.seed_file
    seed = None
    if args.seed is not None:
        try:
            seed = _complex_arg(args.seed)
        except argparse.ArgumentTypeError:
            seed_file = args.seed
    if seed_file:
        data = _load_json(seed_file)
        g = BoundaryFunction.from_dict(data)
        if g.grid_size != args.grid:
            g = g.resample(args.grid)
        return g.samples
    if seed is None:
        seed = complex(math.sqrt(t))
    return np.full(args.grid, seed, dtype=complex)


def _dumps(obj):
    return json.dumps(obj, sort_keys=True, allow_nan=True)


def _cmd_validate(args):
    fam = _family(args.spec, validate=False)
    report = validate_family(fam)
    return ([report.to_dict()], None, 0 if report.passed else 1)


def _cmd_solve(args, config):
    fam = _family(args.spec)
    disk = solve_disk(fam, args.t, _seed(args, args.t), config, anchor=args.anchor)
    rec = disk.to_dict()
    rec["boundary_equation_residual"] = boundary_equation_residual(fam, disk)
    return [rec], _disk_csv([disk]), 0


def _cmd_continue(args, config):
    fam = _family(args.spec)
    g0 = solve_disk(fam, args.t0, _seed(args, args.t0), config).g
    path = continue_batch(fam, g0[None], args.t0, args.t1, config)
    recs = [dict(disks[0].to_dict(), step=k) for k, (_, disks) in enumerate(path)]
    return recs, _disk_csv([d[0] for _, d in path]), 0


def _cmd_foliate(args, config):
    fam = _family(args.spec)
    fol = build_foliation(fam, args.t, m=args.leaves, config=config, n=args.grid)
    bounds = derivative_bounds(fol) if len(fol.history) > 1 else []
    head = {"record": "foliation", "level": fol.level, "leaves": len(fol.leaves),
            "seed_record": fol.seed_record,
            "derivative_bounds": [b.to_dict() for b in bounds]}
    recs = [head] + [dict(leaf.to_dict(), record="leaf", xi=float(xi))
                     for xi, leaf in zip(fol.xi, fol.leaves)]
    return recs, fol.to_csv(), 0


def _cmd_leaf_through(args, config):
    fam = _family(args.spec)
    t, xi, leaf = leaf_through_point(fam, args.point, config, m=args.leaves, n=args.grid)
    rec = dict(leaf.to_dict(), level=t, xi=xi, point=[args.point.real, args.point.imag])
    return [rec], _disk_csv([leaf]), 0


def _load_disks(path, fam, config):
    data = _load_json(path)
    items = data if isinstance(data, list) else [data]
    out = []
    for item in items:
        if "level" not in item:
            raise InputError("each supplied disk needs a 'level'")
        g = BoundaryFunction.from_dict(item["boundary"] if "boundary" in item else item)
        out.append(certify(fam, float(item["level"]), g.samples, config))
    return out


def _cmd_barriers(args, config):
    fam = _family(args.spec)
    omega = Barrier("omega_eps", eps=args.eps)
    sigma = Barrier("sigma_eps", eps=args.eps)
    if args.disks:
        disks = _load_disks(args.disks, fam, config)
    else:
        disks = build_foliation(fam, args.t, m=args.leaves, config=config, n=args.grid).leaves
    hess = [hessian_report(omega, fam), hessian_report(sigma, fam)]
    lap = [laplacian_sign_check(Barrier("phi"), fam), laplacian_sign_check(Barrier("psi"), fam)]
    traps = [trapping_check(d, b, fam) for d in disks for b in (omega, sigma)]
    ok = (all(h.min_eigen > 0 for h in hess) and all(r.passed for r in lap)
          and all(r.passed for r in traps))
    rec = {"eps": args.eps, "hessian": [h.to_dict() for h in hess],
           "laplacian": [r.to_dict() for r in lap], "trapping": [r.to_dict() for r in traps],
           "passed": ok}
    if not ok:
        rec["hypothesis"] = "plurisubharmonicity and trapping of the barriers"
    return [rec], None, 0 if ok else 2


def _cmd_motion(args, config):
    data = _load_json(args.motion)
    if args.r0 is not None:
        data = dict(data, r0=args.r0)
    spec = HolomorphicMotionSpec.from_dict(data)
    ext = extend_motion(spec, args.new, n=args.grid, m=args.leaves,
                        config=config.with_(max_step=0.25))
    return [ext.to_dict()], ext.to_csv(), 0


def self_test(config=SolverConfig()):
    """Small end-to-end checks; returns a dict of named booleans."""
    out = {}
    th = theta_grid(256)
    out["hilbert"] = bool(np.max(np.abs(hilbert_samples(np.cos(5 * th), "center") - np.sin(5 * th))) < 1e-10)
    fam = TorusFamily.standard()
    rng = np.random.default_rng(0)
    lam = np.exp(1j * th)
    seed = 0.5 + 0.05 * (rng.normal() + 1j * rng.normal()) * lam
    disk = solve_disk(fam, 0.25, seed, config)
    out["standard_torus_constant"] = bool(np.ptp(np.abs(disk.g)) < 1e-9 and np.ptp(disk.g.real) < 1e-9)
    try:
        TorusFamily.from_profile({(0, 0): 1.0, (0, 1): 2.0})
        out["reject_bad_family"] = False
    except InputError:
        out["reject_bad_family"] = True
    try:
        solve_disk(fam, 0.25, 0.5 * lam, config)
        out["reject_winding_seed"] = False
    except CertificateError:
        out["reject_winding_seed"] = True
    fol = build_foliation(fam, 0.5, m=8, config=config, n=64)
    out["foliation"] = bool(all(leaf.trace_residual < 1e-10 for leaf in fol.leaves))
    return out


def _cmd_self_test(args, config):
    res = self_test(config)
    ok = all(res.values())
    return [{"checks": res, "passed": ok}], None, 0 if ok else 2


def _disk_csv(disks):
    lines = ["index,level,theta,re_g,im_g"]
    for k, d in enumerate(disks):
        for th, z in zip(theta_grid(d.g.size), d.g):
            lines.append(f"{k},{d.level!r},{float(th)!r},{float(z.real)!r},{float(z.imag)!r}")
    return "\n".join(lines) + "\n"


COMMANDS = {
    "solve-disk": _cmd_solve,
    "continue": _cmd_continue,
    "foliate": _cmd_foliate,
    "leaf-through": _cmd_leaf_through,
    "verify-barriers": _cmd_barriers,
    "extend-motion": _cmd_motion,
    "self-test": _cmd_self_test,
}


def _emit(text, path):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def run(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None:
        if args.threads < 1:
            parser.error("--threads must be at least 1")
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(args.threads)
    try:
        config = SolverConfig(tol=args.tol)
        if args.command == "validate-torus":
            recs, csv_text, code = _cmd_validate(args)
        else:
            recs, csv_text, code = COMMANDS[args.command](args, config)
    except HolofoliateError as exc:
        code = 1 if isinstance(exc, InputError) else 2
        err = {"error": type(exc).__name__, "hypothesis": exc.hypothesis, "message": str(exc)}
        sys.stderr.write(_dumps(err) + "\n")
        return code
    if args.fmt == "csv" and csv_text is not None:
        _emit(csv_text, args.out)
    else:
        _emit("".join(_dumps(r) + "\n" for r in recs), args.out)
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
