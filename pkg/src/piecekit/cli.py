"""Command-line front end.

Subcommands::

    piecekit fit --target builtin:square-lattice-dos --interval 0,4 \\
        --formulas POLY --parity even --rtol 5e-6 --subtract sing.json \\
        --out dos.json
    piecekit eval --in dos.json --grid -4,4,1000
    piecekit moment --in dos.json --n 0,2
    piecekit hilbert --in dos.json --z 0,1
    piecekit show --in dos.json
    piecekit quad --in dos.json --n 2

Numbers are written in the shortest round-trip decimal form.  Exit codes:
0 ok, 2 usage, 3 computation, 4 I/O.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import re
import sys
from dataclasses import asdict

import numpy as np

from .hilbert import hilbert, moments
from .core import add, constructor_text, deserialize, serialize, unfold
from .dos import square_lattice_dos
from .errors import ConstraintViolation, FitDidNotConverge, NoConvergence, \
    ParseError, PiecekitError
from .fitting import piecewisefit
from .quadrature import integrate

__all__ = ["main", "SampledTarget", "build_parser"]

EXIT_OK, EXIT_USAGE, EXIT_COMPUTE, EXIT_IO = 0, 2, 3, 4

BUILTIN_TARGETS = {"square-lattice-dos": square_lattice_dos}


class UsageError(Exception):
    pass


class SampledTarget:
    """Monotone cubic (PCHIP) interpolant of tabulated ``(x, y)`` samples.

    Args:
        x: strictly increasing abscissae.
        y: finite ordinates.
    """

    def __init__(self, x, y):
        from scipy.interpolate import PchipInterpolator

        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.ndim != 1 or x.shape != y.shape or len(x) < 2:
            raise ValueError("need at least two (x, y) samples")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("samples must be finite")
        if not np.all(np.diff(x) > 0):
            raise ValueError("x must be strictly increasing")
        self.x, self.y = x, y
        self._interp = PchipInterpolator(x, y, extrapolate=False)

    @classmethod
    def from_csv(cls, path):
        xs, ys = [], []
        with open(path, newline="", encoding="utf-8") as fh:
            for lineno, row in enumerate(csv.reader(fh), 1):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                try:
                    x, y = float(row[0]), float(row[1])
                except (ValueError, IndexError):
                    if not xs:
                        continue  # header
                    raise ValueError(f"{path}:{lineno}: expected 'x,y'") from None
                xs.append(x)
                ys.append(y)
        return cls(xs, ys)

    def __call__(self, x):
        return float(self._interp(x))


# -- argument helpers -----------------------------------------------------

def _floats(text, count=None, what="value"):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid {what}: {text!r}") from None
    if count is not None and len(vals) != count:
        raise argparse.ArgumentTypeError(
            f"{what} needs {count} comma-separated numbers, got {text!r}")
    return vals


def _interval(text):
    a, b = _floats(text, 2, "interval")
    if not (np.isfinite(a) and np.isfinite(b) and a < b):
        raise argparse.ArgumentTypeError(f"interval must satisfy A < B: {text!r}")
    return a, b


def _grid(text):
    try:
        a, b, n = text.split(",")
        a, b, n = float(a), float(b), int(n)
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must be A,B,N: {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError("grid needs N >= 1")
    return a, b, n


def _complex(text):
    re, im = _floats(text, 2, "z")
    return complex(re, im)


def _orders(text):
    try:
        ns = [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid moment order: {text!r}") from None
    if any(n < 0 for n in ns):
        raise argparse.ArgumentTypeError("moment orders must be >= 0")
    return ns


def _fmt(v):
    return repr(float(v))


def _points(args):
    pts = []
    if args.grid is not None:
        a, b, n = args.grid
        pts.extend(np.linspace(a, b, n).tolist())
    for group in args.at or ():
        pts.extend(group)
    if not pts:
        raise UsageError("give --grid A,B,N or --at X[,X...]")
    return pts


def _load(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return deserialize(text)
    except (ParseError, ConstraintViolation) as exc:
        raise OSError(f"{path}: {exc}") from None


def _write(path, text):
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from None


def _rows(out, rows):
    w = csv.writer(out, lineterminator="\n")
    for r in rows:
        w.writerow([_fmt(v) if isinstance(v, float) else v for v in r])


# -- subcommands ----------------------------------------------------------

def _target(spec):
    kind, _, value = spec.partition(":")
    if kind == "builtin":
        try:
            return BUILTIN_TARGETS[value]
        except KeyError:
            names = ", ".join(sorted(BUILTIN_TARGETS))
            raise UsageError(f"unknown builtin target {value!r} "
                             f"(available: {names})") from None
    if kind == "csv" and value:
        try:
            return SampledTarget.from_csv(value)
        except OSError as exc:
            raise OSError(f"cannot read {value}: {exc.strerror}") from None
        except ValueError as exc:
            raise OSError(f"{value}: {exc}") from None
    raise UsageError(f"--target must be builtin:NAME or csv:PATH, got {spec!r}")


def cmd_fit(args, out):
    target = _target(args.target)
    if isinstance(target, SampledTarget):
        lo, hi = args.interval
        if lo < target.x[0] or hi > target.x[-1]:
            raise UsageError(f"interval {lo},{hi} exceeds the sampled range "
                             f"[{target.x[0]!r}, {target.x[-1]!r}]")
    sub = _load(args.subtract) if args.subtract else None
    fit_target = target if sub is None else (lambda x: target(x) - sub(x))
    formulas = [s.strip() for s in args.formulas.split(",") if s.strip()]
    if not formulas:
        raise UsageError("--formulas needs at least one formula")
    seed = args.seed
    env = os.environ.get("PIECEKIT_SEED")
    if env is not None:
        try:
            seed = int(env)
        except ValueError:
            raise UsageError(f"PIECEKIT_SEED must be an integer, got {env!r}") from None

    status = EXIT_OK
    try:
        f, report = piecewisefit(fit_target, args.interval, formulas,
                                 rtol=args.rtol, atol=args.atol,
                                 parity=args.parity, seed=seed)
    except FitDidNotConverge as exc:
        f, report, status = exc.partial, exc.report, EXIT_COMPUTE
        print(f"error: {exc}", file=sys.stderr)
    if sub is not None:
        if sub.parity != f.parity:
            f, sub = unfold(f), unfold(sub)
        f = add(f, sub)
    _write(args.out, serialize(f, indent=1) + "\n")
    if args.report:
        _write(args.report, json.dumps(asdict(report), indent=1) + "\n")
    print(report.summary(), file=out)
    return status


def cmd_eval(args, out):
    f = _load(args.input)
    _rows(out, ((x, f(x)) for x in _points(args)))
    return EXIT_OK


def cmd_moment(args, out):
    f = _load(args.input)
    m = moments(f, max(args.n))
    _rows(out, ((n, float(m[n])) for n in args.n))
    return EXIT_OK


def cmd_hilbert(args, out):
    f = _load(args.input)
    if args.real_axis:
        rows = []
        for y in _points(args):
            h = hilbert(f, y)
            rows.append((y, h.real, h.imag))
        _rows(out, rows)
        return EXIT_OK
    if not args.z:
        raise UsageError("give --z RE,IM or --real-axis")
    rows = []
    for z in args.z:
        h = hilbert(f, z)
        rows.append((z.real, z.imag, h.real, h.imag))
    _rows(out, rows)
    return EXIT_OK


def cmd_show(args, out):
    f = _load(args.input)
    print(repr(f), file=out)
    print(constructor_text(f), file=out)
    return EXIT_OK


def _oracle(f, integrand_of):
    """Sum of per-piece quadratures of ``integrand_of(piece)``."""
    total = 0.0
    for p in unfold(f).pieces:
        g = integrand_of(p)
        sing = tuple(not flag for flag in p.included)
        try:
            total += integrate(g, p.interval, rtol=1e-10, singular=sing,
                               vectorized=True).value
        except NoConvergence as exc:
            total += exc.value
    return total


def cmd_quad(args, out):
    f = _load(args.input)
    if args.n is None and not args.z:
        raise UsageError("give --n ORDERS and/or --z RE,IM")
    w = csv.writer(out, lineterminator="\n")
    if args.n is not None:
        m = moments(f, max(args.n))
        for n in args.n:
            ref = _oracle(f, lambda p, n=n: (lambda x: x ** n * p.rule(x)))
            err = abs(m[n] - ref) / abs(ref) if ref else abs(m[n])
            w.writerow(["moment", n, _fmt(m[n]), _fmt(ref), _fmt(err)])
    for z in args.z or ():
        if z.imag == 0:
            raise UsageError("quad needs Im z != 0")
        h = hilbert(f, z)
        ref = _oracle(f, lambda p: (lambda x: p.rule(x) / (z - x)))
        err = abs(h - ref) / abs(ref) if ref else abs(h)
        w.writerow(["hilbert", f"{_fmt(z.real)}{z.imag:+}j",
                    f"{_fmt(h.real)}{h.imag:+}j", f"{_fmt(ref.real)}{ref.imag:+}j",
                    _fmt(err)])
    return EXIT_OK


# -- parser ---------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="piecekit",
        description="Fit, evaluate and transform piecewise functions.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a target and write JSON")
    p.add_argument("--target", required=True,
                   help="builtin:square-lattice-dos or csv:PATH")
    p.add_argument("--interval", required=True, type=_interval, metavar="A,B")
    p.add_argument("--formulas", default="POLY",
                   help="comma-separated candidates, e.g. POLY,LOG@left")
    p.add_argument("--parity", choices=("none", "even", "odd"), default="none")
    p.add_argument("--rtol", type=float, default=1e-8)
    p.add_argument("--atol", type=float, default=0.0)
    p.add_argument("--subtract", metavar="JSON",
                   help="piecewise function removed before and added after")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, metavar="PATH")
    p.add_argument("--report", metavar="PATH", help="also write the report JSON")
    p.set_defaults(func=cmd_fit)

    def points(q):
        q.add_argument("--grid", type=_grid, metavar="A,B,N")
        q.add_argument("--at", type=_floats, action="append", metavar="X[,X...]")

    p = sub.add_parser("eval", help="evaluate on a grid")
    p.add_argument("--in", dest="input", required=True, metavar="PATH")
    points(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("moment", help="analytic moments")
    p.add_argument("--in", dest="input", required=True, metavar="PATH")
    p.add_argument("--n", type=_orders, required=True, metavar="N[,N...]")
    p.set_defaults(func=cmd_moment)

    p = sub.add_parser("hilbert", help="analytic Hilbert transform")
    p.add_argument("--in", dest="input", required=True, metavar="PATH")
    p.add_argument("--z", type=_complex, action="append", metavar="RE,IM")
    p.add_argument("--real-axis", action="store_true",
                   help="evaluate at real points from --grid/--at")
    points(p)
    p.set_defaults(func=cmd_hilbert)

    p = sub.add_parser("show", help="print the constructor text")
    p.add_argument("--in", dest="input", required=True, metavar="PATH")
    p.set_defaults(func=cmd_show)

    p = sub.add_parser("quad", help="compare against adaptive quadrature")
    p.add_argument("--in", dest="input", required=True, metavar="PATH")
    p.add_argument("--n", type=_orders, metavar="N[,N...]")
    p.add_argument("--z", type=_complex, action="append", metavar="RE,IM")
    p.set_defaults(func=cmd_quad)
    return parser


_VALUE_FLAGS = ("--interval", "--grid", "--at", "--z")


def _attach_negative_values(argv):
    """``--grid -4,4,9`` -> ``--grid=-4,4,9`` (argparse reads ``-4,...`` as a flag)."""
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if a in _VALUE_FLAGS and i + 1 < len(argv) \
                and re.match(r"-[\d.]", argv[i + 1]):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def main(argv=None):
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_attach_negative_values(argv))  # exits 2 on bad flags
    try:
        return args.func(args, sys.stdout)
    except BrokenPipeError:
        # reader closed early (e.g. `| head`); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"piecekit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"piecekit: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (PiecekitError, ValueError) as exc:
        # SingularPoint and MissingPrimitive messages name the offending value
        print(f"piecekit: error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
