"""Command-line front end.

Exit codes: 0 success, 1 a checked estimate or invariant failed, 2 invalid
input.  Data files carry no timestamps, so identical configs give identical
bytes.
"""

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import green, spectrum, verify
from ._validation import check_positive
from .dfuncs import compute_dfunctions
from .errors import SturmGreenError
from .pfss import solve_pfss
from .potential import Forcing, load_forcing, load_potential

log = logging.getLogger("sturm_green")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _write_json(path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_csv(path, header, columns):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([repr(float(v)) for v in row])


def _parse_grid(text):
    """``"a,b,c"`` (explicit nodes) or ``"lo:hi:n"`` (n equispaced nodes)."""
    text = text.strip()
    if not text:
        raise UsageError("grid is empty")
    try:
        if ":" in text:
            lo, hi, n = text.split(":")
            n = int(n)
            if n < 1:
                raise UsageError("grid needs at least one node")
            return np.linspace(float(lo), float(hi), n)
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"cannot parse grid {text!r}: {exc}") from None
    if not vals:
        raise UsageError("grid is empty")
    return np.array(vals)


def _parse_forcing(text):
    try:
        return Forcing.constant(float(text))
    except ValueError:
        pass
    return load_forcing(text)


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _L(args, q):
    return q.domain_hint if args.L is None else check_positive(args.L, "L")


def cmd_solve(args):
    q = load_potential(args.potential)
    f = _parse_forcing(args.f)
    rep = green.solve_bvp(q, f, p=args.p, L=args.L, tol=check_positive(args.tol, "tol"))
    out = _out_dir(args)
    _write_csv(out / "solution.csv", ["x", "y", "y_prime"], [rep.grid, rep.y, rep.y_prime])
    _write_json(out / "report.json", rep.to_dict())
    log.info("residual %.3e, class %s", rep.residual_norm, rep.class_verdict)
    return EXIT_OK if rep.residual_norm <= rep.tol else EXIT_FAIL


def cmd_dfuncs(args):
    q = load_potential(args.potential)
    grid = _parse_grid(args.grid)
    dfn = compute_dfunctions(q, grid, check_positive(args.tol, "tol"))
    dfn.to_csv(_out_dir(args) / "dfuncs.csv")
    return EXIT_OK


def cmd_verify(args):
    q = load_potential(args.potential)
    L = 10.0 if args.L is None else check_positive(args.L, "L")
    if args.n < 10:
        raise UsageError("n must be at least 10")
    scale = args.inject_rho_scale
    if scale is not None:
        check_positive(scale, "inject-rho-scale")
    results = verify.run_inequality_suite(
        q, L=L, n=args.n, tol=check_positive(args.tol, "tol"), seed=args.seed, rho_scale=scale
    )
    (_out_dir(args) / "verify.json").write_text(verify.report_json(results) + "\n")
    failed = [r.check_id for r in results if not r.passed]
    for r in results:
        log.info("%-14s %-6s margin %+.3e", r.check_id, "ok" if r.passed else "FAIL", r.worst_margin)
    if failed:
        print("failed checks: " + ", ".join(failed), file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_spectrum(args):
    q = load_potential(args.potential)
    L = _L(args, q)
    res = spectrum.eigen_truncated(q, L, args.n, args.k)
    diag = spectrum.discreteness_diagnostic(q, k=args.k)
    _write_json(
        _out_dir(args) / "spectrum.json",
        {
            "eigenvalues": [float(e) for e in res.eigenvalues],
            "convergence": [float(c) for c in res.convergence],
            "verdict": diag.verdict,
            "L": float(L),
            "n": int(args.n),
            "method": res.method,
            "diagnostic": diag.to_dict(),
        },
    )
    return EXIT_OK if diag.verdict != "inconsistent" else EXIT_FAIL


def cmd_kernel(args):
    q = load_potential(args.potential)
    grid = _parse_grid(args.grid)
    L = max(_L(args, q), float(np.abs(grid).max()) + 1.0)
    k = green.GreenKernel(solve_pfss(q, L, check_positive(args.tol, "tol")))
    X, T = np.meshgrid(grid, grid, indexing="ij")
    G = green.kernel_eval(k, X.ravel(), T.ravel())
    _write_csv(_out_dir(args) / "kernel.csv", ["x", "t", "G"], [X.ravel(), T.ravel(), G])
    return EXIT_OK


def cmd_pfss(args):
    q = load_potential(args.potential)
    p = solve_pfss(q, _L(args, q), check_positive(args.tol, "tol"))
    p.to_csv(_out_dir(args) / "pfss.csv")
    return EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--potential", required=True, help="potential JSON file")
    common.add_argument("--L", type=float, default=None, help="truncation radius")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="sturm-green", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, tol, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.add_argument("--tol", type=float, default=tol)
        sp.set_defaults(func=fn)
        return sp

    sp = add("solve", cmd_solve, 1e-8, "solve -y'' + q y = f")
    sp.add_argument("--f", default="1", help="forcing JSON file or a constant")
    sp.add_argument("--p", default="2", help="norm index: 1, 2 or inf")

    sp = add("dfuncs", cmd_dfuncs, 1e-12, "d, d1, d2 on a grid")
    sp.add_argument("--grid", default="-10:10:201", help="'a,b,c' or 'lo:hi:n'")

    sp = add("verify", cmd_verify, 1e-10, "run the inequality suite")
    sp.add_argument("--n", type=int, default=500)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--inject-rho-scale", type=float, default=None, help=argparse.SUPPRESS)

    sp = add("spectrum", cmd_spectrum, 1e-10, "lowest Dirichlet eigenvalues")
    sp.add_argument("--n", type=int, default=4000)
    sp.add_argument("--k", type=int, default=5)

    sp = add("kernel", cmd_kernel, 1e-10, "dump G(x, t) on a grid")
    sp.add_argument("--grid", default="-5:5:41")

    add("pfss", cmd_pfss, 1e-10, "dump the log-derivative fields")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(message)s",
    )
    try:
        return args.func(args)
    except (UsageError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SturmGreenError, RuntimeError) as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
