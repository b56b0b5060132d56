"""Command line front end.

Exit status: 0 success, 2 validation failure, 3 certification failure,
64 usage error.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .errors import CertificationError, GeometryError, RegionError

EXIT_OK, EXIT_INVALID, EXIT_CERT, EXIT_USAGE = 0, 2, 3, 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text, count=None):
    vals = [float(x) for x in text.split(",")]
    if count is not None and len(vals) != count:
        raise argparse.ArgumentTypeError(f"expected {count} comma-separated numbers")
    return vals


def _box(text):
    return _floats(text, 4)


def _pair(text):
    return _floats(text, 2)


def _positive(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _positive_int(text):
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--group", default="pants_thin",
                        help="group file, or a bundled name (pants_thin, pants_wide)")
    common.add_argument("--workers", type=_positive_int, default=os.cpu_count() or 1)
    common.add_argument("--out", help="output file (stdout when omitted)")
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--tol", type=_positive, default=None)

    p = _Parser(prog="wavetrace", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("validate", parents=[common], help="check the Schottky condition")

    q = sub.add_parser("geodesics", parents=[common], help="enumerate primitive closed geodesics")
    q.add_argument("--T", type=_positive, required=True)

    q = sub.add_parser("count", parents=[common], help="counting functions and asymptotics")
    q.add_argument("--T", type=_positive, required=True)
    q.add_argument("--fit", action="store_true", help="fit the residual exponent")
    q.add_argument("--step", type=_positive, default=0.25, help="T grid spacing")
    q.add_argument("--y", type=_positive, default=None, help="window width for the smoothed Psi")
    q.add_argument("--x", type=_positive, default=None, help="window position (default e^{T-1})")

    q = sub.add_parser("zeta", parents=[common], help="evaluate Z(s) three ways")
    q.add_argument("--s", type=complex, required=True)
    q.add_argument("--T", type=_positive, default=None, help="spectrum cutoff")
    q.add_argument("--N", type=_positive_int, default=32, help="nodes per disk")

    q = sub.add_parser("delta", parents=[common], help="exponent of convergence")
    q.add_argument("--N", type=_positive_int, default=32)

    q = sub.add_parser("resonances", parents=[common], help="zeros of Z in a box")
    q.add_argument("--box", type=_box, required=True, help="re0,re1,im0,im1")
    q.add_argument("--N", type=_positive_int, default=None)

    q = sub.add_parser("trace-check", parents=[common], help="both sides of the trace formula")
    q.add_argument("--testfn", type=_pair, required=True, help="bump support a,b")
    q.add_argument("--T", type=_positive, default=None, help="spectrum cutoff (default b)")

    q = sub.add_parser("conformal-dk", parents=[common], help="kernel dimensions of P_k")
    q.add_argument("--n", type=_positive_int, required=True)
    q.add_argument("--K", type=int, choices=(-1, 0, 1), required=True)
    q.add_argument("--kmax", type=_positive_int, default=6)
    q.add_argument("--spectrum", help="CSV of eigenvalue,multiplicity (required for K = -1)")
    q.add_argument("--lmax", type=_positive_int, default=40, help="model spectrum size")

    q = sub.add_parser("model-identities", parents=[common], help="harmonic expansion identity")
    q.add_argument("--n", type=_positive_int, required=True)
    q.add_argument("--tmin", type=_positive, default=0.3)
    q.add_argument("--tmax", type=_positive, default=10.0)
    q.add_argument("--points", type=_positive_int, default=200)
    return p


def _emit(args, text: str, suffix: str | None = None):
    if args.out:
        path = Path(args.out)
        if suffix:
            path = path.with_suffix(suffix)
        path.write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n"


def _jsonable(x):
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(type(x))


def _group(args):
    from .groupfile import load_group
    return load_group(args.group)


def cmd_validate(args):
    from .schottky import validate
    rep = validate(_group(args))
    _emit(args, _dumps(rep.to_dict()))
    return EXIT_OK if rep.valid else EXIT_INVALID


def _spectrum(group, T, workers):
    from .schottky import enumerate_primitives
    spec = enumerate_primitives(group, T, workers=workers)
    if spec.complete_below < T:
        raise CertificationError(f"enumeration certified only below {spec.complete_below:.6g}",
                                 spec.complete_below)
    return spec


def cmd_geodesics(args):
    spec = _spectrum(_group(args), args.T, args.workers)
    if args.format == "json":
        _emit(args, _dumps({"cutoff": spec.cutoff, "complete_below": spec.complete_below,
                            "classes": [[c.name, c.length, list(c.angles)] for c in spec]}))
    else:
        _emit(args, spec.to_csv())
    return EXIT_OK


def _delta(group):
    from .zeta import find_delta
    return find_delta(group)


def cmd_count(args):
    from .spectrum import asymptotic_report, beta_exponent, windowed_psi, default_window_width
    from .zeta import find_real_zeros
    group = _group(args)
    spec = _spectrum(group, args.T, args.workers)
    delta = _delta(group)
    n = group.ambient_n
    eig = []
    if group.ambient_n == 1 and delta > n / 2 + 1e-3:
        eig = [a for a in find_real_zeros(group, (n / 2 + 1e-3, min(n, delta + 1e-3)))
               if abs(a - delta) > 1e-6]
    t0 = max(args.step, math.log(2) / min([delta] + eig) * 1.0001)
    grid = np.arange(math.ceil(t0 / args.step) * args.step, args.T + 1e-12, args.step)
    rep = asymptotic_report(spec, delta, eig, grid)
    summary = rep.summary()
    if not args.fit:
        summary["fitted_exponent"] = None
    summary["beta_n"] = beta_exponent(n, delta)
    summary["T"] = args.T
    if args.y is not None:
        x = args.x if args.x is not None else math.exp(args.T - 1)
        summary["window"] = {"x": x, "y": args.y, "psi": windowed_psi(spec, x, args.y)}
    elif args.x is not None:
        x = args.x
        y = default_window_width(n, delta, x)
        summary["window"] = {"x": x, "y": y, "psi": windowed_psi(spec, x, y)}
    if args.format == "json":
        _emit(args, _dumps(summary))
    else:
        _emit(args, rep.to_csv(), None)
        if args.out:
            Path(args.out).with_suffix(".json").write_text(_dumps(summary))
        else:
            sys.stdout.write(_dumps(summary))
    return EXIT_OK


def cmd_zeta(args):
    from .zeta import ZetaEvaluator, family_for, zeta_euler, zeta_logsum
    group = _group(args)
    delta = _delta(group) if group.ambient_n == 1 else None
    s = complex(args.s)
    out = {"s": s, "delta": delta}
    if group.ambient_n == 1:
        out["det"] = family_for(group, args.N).det(s)
    T = args.T
    if T is None:
        margin = s.real - (delta or 0.5)
        T = min(40.0, max(8.0, 20.0 / max(margin, 0.25)))
    spec = _spectrum(group, T, args.workers)
    ev = ZetaEvaluator(spec, delta_estimate=delta, tol=args.tol or 1e-8)
    try:
        out["euler"] = zeta_euler(ev, s)
        out["euler_diagnostics"] = dict(ev.diagnostics)
        out["logsum"] = zeta_logsum(ev, s)
        out["logsum_diagnostics"] = dict(ev.diagnostics)
    except RegionError as exc:
        out["euler"] = None
        out["note"] = str(exc)
    out["T"] = T
    _emit(args, _dumps(out))
    return EXIT_OK


def cmd_delta(args):
    from .zeta import find_delta
    group = _group(args)
    d = find_delta(group, args.N)
    _emit(args, _dumps({"delta": d, "N_per_disk": args.N}))
    return EXIT_OK


def cmd_resonances(args):
    from .zeta import find_resonances
    res = find_resonances(_group(args), tuple(args.box), refine_tol=args.tol or 1e-10,
                          N_per_disk=args.N, workers=args.workers)
    _emit(args, res.to_json() + "\n" if args.format == "json" else res.to_csv())
    return EXIT_OK


def cmd_trace(args):
    from .spectrum import TestFunction
    from .trace import trace_check
    group = _group(args)
    a, b = args.testfn
    phi = TestFunction(a, b)
    T = args.T if args.T is not None else b
    spec = _spectrum(group, T, args.workers)
    rep = trace_check(group, phi, spec, tol=args.tol or 1e-6, workers=args.workers)
    _emit(args, rep.to_json() + "\n")
    return EXIT_OK


def cmd_dk(args):
    from .conformal import BoundarySpectrum, dk_table, dk_table_csv
    if args.spectrum:
        spec = BoundarySpectrum.from_csv(Path(args.spectrum).read_text(), args.n, args.K)
    elif args.K == 1:
        spec = BoundarySpectrum.sphere(args.n, args.lmax)
    elif args.K == 0:
        spec = BoundarySpectrum.flat_torus(args.n, min(args.lmax, 16))
    else:
        raise GeometryError("K = -1 needs a supplied spectrum (--spectrum)")
    rows = dk_table(spec, args.kmax)
    if args.format == "json":
        _emit(args, _dumps([{"k": k, "d_k_dim": d, "d_k_count": c} for k, d, c in rows]))
    else:
        _emit(args, dk_table_csv(rows))
    return EXIT_OK


def cmd_model(args):
    from .trace import model_identity_check
    grid = np.linspace(args.tmin, args.tmax, args.points)
    dev = model_identity_check(args.n, grid)
    _emit(args, _dumps({"n": args.n, "tmin": args.tmin, "tmax": args.tmax, "points": args.points,
                        "max_deviation": dev}))
    return EXIT_OK


COMMANDS = {"validate": cmd_validate, "geodesics": cmd_geodesics, "count": cmd_count,
            "zeta": cmd_zeta, "delta": cmd_delta, "resonances": cmd_resonances,
            "trace-check": cmd_trace, "conformal-dk": cmd_dk, "model-identities": cmd_model}


_NUMERIC_FLAGS = ("--box", "--testfn", "--s")


def _join_negative(argv):
    """Let '--box -1,0,-2,2' through: argparse reads a leading '-' as a new option."""
    out, it = [], iter(argv)
    for a in it:
        if a in _NUMERIC_FLAGS:
            nxt = next(it, None)
            if nxt is not None and nxt.startswith("-") and (nxt[1:2].isdigit() or nxt[1:2] == "."):
                out.append(f"{a}={nxt}")
                continue
            out.append(a)
            if nxt is not None:
                out.append(nxt)
        else:
            out.append(a)
    return out


def run(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_join_negative(argv))
    try:
        return COMMANDS[args.command](args)
    except CertificationError as exc:
        print(f"certification failure: {exc}", file=sys.stderr)
        return EXIT_CERT
    except GeometryError as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except RegionError as exc:
        print(f"certification failure: {exc}", file=sys.stderr)
        return EXIT_CERT


def main(argv=None):
    try:
        code = run(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else EXIT_USAGE
    sys.exit(code)


if __name__ == "__main__":
    main()
