"""Command-line interface: ``isingzeros <command> [options]``.

Exit codes: 0 success (PASS for ``certify``), 2 parameters out of domain,
1 certificate failure or any other error.
"""

from __future__ import annotations

import argparse
import cmath
import glob
import json
import math
import os
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Sequence

import numpy as np

from . import __version__
from .approx import approx_partition
from .certify import Verdict, certify_nonvanishing
from .dynamics import (CURVE_COLUMNS, CircularInterval, DomainError, critical_b, curve_rows,
                       find_zero_param_in_arc, solve_parabolic)
from .graph import Graph, cayley_tree, load_graph, random_bounded_degree_graph
from .partition import DEFAULT_CAP, ModelParams
from .zeros import zero_atlas

EXIT_OK, EXIT_FAIL, EXIT_DOMAIN = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors are errors (1), not out-of-domain (2)
        self.print_usage(sys.stderr)
        self.exit(EXIT_FAIL, f"{self.prog}: error: {message}\n")


# -- argument helpers -------------------------------------------------------------

def parse_grid(text: str) -> np.ndarray:
    """``lo:hi:n`` -> n evenly spaced values from lo to hi inclusive."""
    try:
        lo, hi, n = text.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like lo:hi:n, got {text!r}")
    if n < 1 or not lo <= hi:
        raise argparse.ArgumentTypeError(f"grid needs n >= 1 and lo <= hi, got {text!r}")
    return np.linspace(lo, hi, n)


def parse_arc(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"arc must look like lo:hi (radians), got {text!r}")
    if not lo < hi:
        raise argparse.ArgumentTypeError(f"arc needs lo < hi, got {text!r}")
    return lo, hi


def resolve_theta(args, d: int, b: float) -> float:
    if args.frac_theta is not None:
        if args.theta is not None:
            raise UsageError("give either --theta or --frac-theta, not both")
        try:
            crit = solve_parabolic(d, b)
        except DomainError as exc:
            raise _OutOfDomain(str(exc))
        return args.frac_theta * crit.bound
    return 0.0 if args.theta is None else args.theta


class _OutOfDomain(Exception):
    pass


def parse_family(spec: str, seed: int) -> list[tuple[str, Graph]]:
    """``cayley:d=2,kmax=8[,kmin=1]``, ``random:n=12,count=30,degree=3`` or a
    glob of graph files."""
    kind, _, rest = spec.partition(":")
    if kind in ("cayley", "random") and rest is not None:
        opts = {}
        for item in filter(None, rest.split(",")):
            key, eq, val = item.partition("=")
            if not eq:
                raise UsageError(f"bad family option {item!r} in {spec!r}")
            opts[key.strip()] = int(val)
        if kind == "cayley":
            d, kmax, kmin = opts.get("d", 2), opts.get("kmax", 4), opts.get("kmin", 1)
            return [(f"cayley_k{k}_d{d}", cayley_tree(k, d).graph) for k in range(kmin, kmax + 1)]
        rng = random.Random(seed)
        n, count, degree = opts.get("n", 10), opts.get("count", 10), opts.get("degree", 3)
        return [(f"random_{i}", random_bounded_degree_graph(rng.randint(1, n), degree, rng)) for i in range(count)]
    paths = sorted(glob.glob(spec))
    if not paths:
        raise UsageError(f"no graph files match {spec!r}")
    return [(os.path.splitext(os.path.basename(p))[0], load_graph(p)) for p in paths]


def _pmap(fn: Callable, items: Sequence, workers: int) -> list:
    """Map in input order, optionally over a process pool."""
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cell(v) -> str:
    return "" if v is None else repr(float(v))


# -- commands ---------------------------------------------------------------------

def _curve_row(job):
    d, b = job
    return curve_rows(d, [b])[0]


def cmd_curves(args) -> int:
    d = args.d
    bs = args.b_grid if args.b_grid is not None else np.array([args.b])
    rows = _pmap(_curve_row, [(d, float(b)) for b in bs], args.workers)
    if args.format == "json":
        text = json.dumps(rows, indent=2) + "\n"
    else:
        lines = [",".join(CURVE_COLUMNS)]
        lines += [",".join(_cell(r[c]) for c in CURVE_COLUMNS) for r in rows]
        text = "\n".join(lines) + "\n"
    _emit(text, args.out)
    for line in curve_report(d, rows):
        print(line, file=sys.stderr)
    return EXIT_OK


def curve_report(d: int, rows: Iterable[dict]) -> list[str]:
    """Endpoint limits of theta_b and the observed order of the two curves."""
    bc = critical_b(d)
    lo = solve_parabolic(d, bc + 1e-6).theta_b
    hi = solve_parabolic(d, 1 - 1e-6).theta_b
    out = [f"theta_b at b_c + 1e-6: {lo:.3e} (tends to 0)",
           f"theta_b at 1 - 1e-6: {hi:.6f} (tends to pi = {math.pi:.6f})"]
    both = [r for r in rows if r["alpha_b"] is not None]
    if both:
        below = sum(r["alpha_b"] < r["theta_b"] for r in both)
        order = ("alpha_b < theta_b" if below == len(both) else
                 "alpha_b > theta_b" if below == 0 else "mixed order")
        out.append(f"order on {len(both)} rows with b > 1: {order}; "
                   f"consistent with alpha_b < theta_b: {'yes' if below == len(both) else 'no'}; "
                   f"consistent with alpha_b as the upper curve: {'yes' if below == 0 else 'no'}")
    return out


def cmd_certify(args) -> int:
    G = load_graph(args.graph)
    try:
        theta = resolve_theta(args, args.d, args.b)
    except _OutOfDomain as exc:
        theta = None
        reason = str(exc)
    if theta is None:
        cert = certify_nonvanishing(G, ModelParams(args.b, 1.0, args.d, args.r), cap=args.cap)
        cert.reason = cert.reason or reason
    else:
        cert = certify_nonvanishing(G, ModelParams(args.b, cmath.exp(1j * theta), args.d, args.r), cap=args.cap)
    _emit(cert.dumps() + "\n", args.out)
    print(f"verdict: {cert.verdict.value}" + (f" ({cert.reason})" if cert.reason else ""), file=sys.stderr)
    return {Verdict.PASS: EXIT_OK, Verdict.OUT_OF_DOMAIN: EXIT_DOMAIN}.get(cert.verdict, EXIT_FAIL)


def cmd_atlas(args) -> int:
    family = parse_family(args.family, args.seed)
    atlas = zero_atlas(family, args.b, bins=args.bins, d=args.d, cap=args.cap, workers=args.workers)
    if args.format == "json":
        text = json.dumps({"b": args.b, "theta_b": atlas.theta_b,
                           "bins": [{"bin_center": float(c), "count": int(k)}
                                    for c, k in zip(atlas.bin_centers, atlas.counts)],
                           "flagged": [[g, [z.real, z.imag]] for g, z in atlas.flagged]}, indent=2) + "\n"
    else:
        text = atlas.histogram_csv()
    _emit(text, args.out)
    if args.roots_out:
        _emit(atlas.roots_csv(), args.roots_out)
    total = int(atlas.counts.sum())
    msg = f"{total} roots from {len(atlas.entries)} graphs"
    if atlas.theta_b is not None:
        msg += f"; theta_b = {atlas.theta_b:.6f}; roots with |arg| < theta_b: {len(atlas.flagged)}"
    print(msg, file=sys.stderr)
    return EXIT_OK


def cmd_zeroparam(args) -> int:
    lo, hi = args.arc
    hit = find_zero_param_in_arc(CircularInterval(lo, hi - lo), args.b, args.d, args.n_max)
    if hit is None:
        report = {"found": False, "arc": [lo, hi], "b": args.b, "d": args.d, "n_max": args.n_max}
    else:
        report = {"found": True, "arc": [lo, hi], "b": args.b, "d": args.d, "n_max": args.n_max,
                  "theta": hit.theta, "xi": [hit.xi.real, hit.xi.imag], "n": hit.n, "residual": hit.residual}
    _emit(json.dumps(report, indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_approx(args) -> int:
    G = load_graph(args.graph)
    try:
        theta = resolve_theta(args, args.d, args.b)
    except _OutOfDomain as exc:
        print(f"out of domain: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    res = approx_partition(G, ModelParams(args.b, cmath.exp(1j * theta), args.d, args.r), args.epsilon,
                           cap=args.cap)
    _emit(res.dumps() + "\n", args.out)
    if res.status != "OK":
        print(f"out of domain: {res.reason}", file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


# -- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="isingzeros", description="Zeros and zero-free regions of Ising partition functions.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, graph=False, xi=False):
        if graph:
            sp.add_argument("graph", help="graph file (.json or edge list)")
        sp.add_argument("--d", type=int, default=2, help="branching parameter; max degree d+1 (default 2)")
        sp.add_argument("--b", type=float, default=0.5, help="edge interaction b (default 0.5)")
        if xi:
            sp.add_argument("--theta", type=float, help="argument of xi in radians (default 0)")
            sp.add_argument("--frac-theta", type=float, help="argument of xi as a fraction of theta_b or alpha_b")
            sp.add_argument("--r", type=float, default=1.0, help="modulus r of the field r*xi (default 1)")
        sp.add_argument("--cap", type=int, default=DEFAULT_CAP, help="brute-force vertex cap (default 24)")
        sp.add_argument("--seed", type=int, default=0, help="seed for randomized families (default 0)")
        sp.add_argument("--workers", type=int, default=1, help="worker processes (default 1)")
        sp.add_argument("--out", help="output path (default stdout)")

    sp = sub.add_parser("curves", help="theta_b and alpha_b over a grid of b")
    common(sp)
    sp.add_argument("--b-grid", type=parse_grid, help="lo:hi:n grid of b values")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.set_defaults(func=cmd_curves)

    sp = sub.add_parser("certify", help="certify Z_G(r xi, b) != 0")
    common(sp, graph=True, xi=True)
    sp.set_defaults(func=cmd_certify)

    sp = sub.add_parser("atlas", help="histogram of zero arguments over a family of graphs")
    sp.add_argument("family", help="cayley:d=2,kmax=8 | random:n=12,count=30,degree=3 | glob of graph files")
    common(sp)
    sp.set_defaults(d=None)
    sp.add_argument("--bins", type=int, default=64)
    sp.add_argument("--roots-out", help="also write every root to this CSV")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.set_defaults(func=cmd_atlas)

    sp = sub.add_parser("zeroparam", help="find xi in an arc whose orbit reaches -1")
    common(sp)
    sp.add_argument("--arc", type=parse_arc, required=True, help="lo:hi range of arg xi in radians")
    sp.add_argument("--n-max", type=int, default=200)
    sp.set_defaults(func=cmd_zeroparam)

    sp = sub.add_parser("approx", help="truncated-series approximation of Z_G")
    common(sp, graph=True, xi=True)
    sp.add_argument("--epsilon", type=float, default=1e-4)
    sp.set_defaults(func=cmd_approx)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"isingzeros: error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except DomainError as exc:
        print(f"out of domain: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (OSError, ValueError, ArithmeticError, RuntimeError) as exc:
        print(f"isingzeros: error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
