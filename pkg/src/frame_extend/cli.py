"""Command-line entry point: ``frame-extend {approx,spectrum,topology,experiment}``.

Exit codes: 0 success, 2 invalid arguments, 3 solver failure, 4 I/O error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .domain import BUILTIN_DOMAINS, EmptyMaskError, MaskFormatError, builtin_domain, load_mask, mask_domain, rasterize
from .experiments import KINDS, TEST_FUNCTIONS, ExperimentConfig, render_csv, run_experiment
from .expr import ExprError, compile_expr
from .fourier_ops import DenseCapError, FrameOperator
from .grid import GridSpec, build_freq_window
from .solver import PlungeRankError, SolverConfig, error_metrics, solve_algorithm1
from .spectral import singular_profile
from .topology import verify_layer_bound

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _resolve_function(name: str, n_lambda: int):
    if name.startswith("expr:"):
        try:
            return compile_expr(name[5:])
        except ExprError as exc:
            raise UsageError(f"--function: {exc}") from None
    if name not in TEST_FUNCTIONS:
        raise UsageError(f"--function must be one of {sorted(TEST_FUNCTIONS)} or expr:<expression>")
    return TEST_FUNCTIONS[name].bind(n_lambda)


def _mask_size(path: str) -> int:
    with open(path) as fh:
        head = fh.readline().split()
    if len(head) != 3 or head[0] != "MASK" or not head[1].isdigit():
        raise MaskFormatError(f"{path}: missing 'MASK n n' header")
    return int(head[1])


def _build_mask(args, n_lambda: int, default_nr: int):
    n_r = args.nr
    if n_r is None:
        n_r = _mask_size(args.mask) if args.mask else default_nr
    try:
        spec = GridSpec(n_r, n_lambda, 2, args.T)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.mask:
        mask = load_mask(args.mask, spec)
        return mask, mask_domain(mask)
    try:
        domain = builtin_domain(args.domain)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return rasterize(domain, spec), domain


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def cmd_approx(args) -> int:
    if args.nlambda < 1:
        raise UsageError("--nlambda must be positive")
    f = _resolve_function(args.function, args.nlambda)
    mask, domain = _build_mask(args, args.nlambda, 4 * args.nlambda)
    op = FrameOperator(mask)
    x_s, y_s = mask.coords().T
    b = np.asarray(f(x_s, y_s), dtype=complex)
    try:
        cfg = SolverConfig(eps=args.eps, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    x, report = solve_algorithm1(op, b, cfg)
    _, max_err = error_metrics(op, x, f, args.samples, args.seed, domain)

    freqs = build_freq_window(op.spec)
    lines = ["l1,l2,re,im"]
    lines += [f"{l1},{l2},{c.real:.17g},{c.imag:.17g}" for (l1, l2), c in zip(freqs, x)]
    Path(f"{args.out}.coeffs.csv").write_text("\n".join(lines) + "\n")
    info = {
        "domain": args.domain if not args.mask else str(args.mask),
        "function": args.function,
        "n_lambda": op.spec.n_lambda,
        "n_r": op.spec.n_r,
        "T": op.spec.half_width,
        "eps": args.eps,
        "seed": args.seed,
        "N_omega": op.shape[0],
        "N_lambda": op.shape[1],
        "residual": report.residual_norm,
        "max_error": max_err,
        "rank": report.rank_used,
        "sketch_width": report.sketch_width,
        "coefficient_norm": report.coefficient_norm,
        "timings": report.timings,
    }
    Path(f"{args.out}.report.json").write_text(json.dumps(info, indent=2) + "\n")
    print(f"residual={report.residual_norm:.6e} rank={report.rank_used} max_error={max_err:.6e}")
    return EXIT_OK


def cmd_spectrum(args) -> int:
    if args.nlambda < 1:
        raise UsageError("--nlambda must be positive")
    if not 0 < args.eps < 0.5:
        raise UsageError("--eps must lie in (0, 0.5)")
    mask, _ = _build_mask(args, args.nlambda, 4 * args.nlambda)
    prof = singular_profile(FrameOperator(mask), args.eps)
    lines = ["index,sigma"] + [f"{i},{s:.17g}" for i, s in enumerate(prof.sigma, start=1)]
    lines.append(f"# eta={prof.eta}, n_one={prof.n_one}, n_zero={prof.n_zero}, eps={args.eps!r}")
    _write("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_topology(args) -> int:
    mask, _ = _build_mask(args, 1, 64)
    rep = verify_layer_bound(mask)
    lines = ["i,size"] + [f"{i},{s}" for i, s in enumerate(rep.sizes, start=1)]
    lines.append(
        f"# components={rep.components}, holes={rep.holes}, n_boundary={rep.sizes[0]}, "
        f"layer_bound_holds={str(rep.holds).lower()}"
    )
    _write("\n".join(lines) + "\n", args.out)
    if args.out not in (None, "-"):
        print(f"components={rep.components} holes={rep.holes}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    data = {}
    if args.config:
        with open(args.config) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise UsageError(f"--config: {exc}") from None
    if "kind" in data and data["kind"] != args.kind:
        raise UsageError(f"config kind {data['kind']!r} does not match {args.kind!r}")
    data["kind"] = args.kind
    if args.seed is not None:
        data["seed"] = args.seed
    try:
        cfg = ExperimentConfig.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    _write(render_csv(run_experiment(cfg), cfg), args.out or cfg.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="frame-extend", description=__doc__.splitlines()[0], formatter_class=fmt)
    sub = parser.add_subparsers(dest="command", required=True)

    def geometry(p, nr_help):
        g = p.add_mutually_exclusive_group()
        g.add_argument("--domain", default="disk", choices=sorted(BUILTIN_DOMAINS), help="builtin domain")
        g.add_argument("--mask", default=None, help="mask file ('MASK n n' then n rows of 0/1)")
        p.add_argument("--nr", type=int, default=None, help=nr_help)
        p.add_argument("--T", type=float, default=2.0, help="half width of the bounding box")

    p = sub.add_parser("approx", help="Fourier extension approximation with the fast solver", formatter_class=fmt)
    geometry(p, "grid points per dimension (4*nlambda, or the mask size)")
    p.add_argument("--nlambda", type=int, default=9, help="frequencies per dimension")
    p.add_argument("--eps", type=float, default=1e-14, help="singular value cutoff")
    p.add_argument("--seed", type=int, default=0, help="seed of the sketch and of the error samples")
    p.add_argument("--function", default="exp_xy", help="builtin function name or expr:<expression in x, y>")
    p.add_argument("--samples", type=int, default=10_000, help="random interior points for the max error")
    p.add_argument("--out", required=True, help="output prefix for .coeffs.csv and .report.json")
    p.set_defaults(run=cmd_approx)

    p = sub.add_parser("spectrum", help="singular values of the collocation matrix", formatter_class=fmt)
    geometry(p, "grid points per dimension (4*nlambda, or the mask size)")
    p.add_argument("--nlambda", type=int, default=9, help="frequencies per dimension")
    p.add_argument("--eps", type=float, default=1e-14, help="plunge region threshold")
    p.add_argument("--out", default=None, help="CSV path (stdout if omitted)")
    p.set_defaults(run=cmd_spectrum)

    p = sub.add_parser("topology", help="distance layers, components and holes of a mask", formatter_class=fmt)
    geometry(p, "grid points per dimension (64, or the mask size)")
    p.add_argument("--out", default=None, help="CSV path (stdout if omitted)")
    p.set_defaults(run=cmd_topology)

    p = sub.add_parser("experiment", help="run a numerical study and emit CSV", formatter_class=fmt)
    p.add_argument("kind", choices=KINDS, help="study to run")
    p.add_argument("--config", default=None, help="JSON file with ExperimentConfig fields")
    p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    p.add_argument("--out", default=None, help="CSV path (config output or stdout if omitted)")
    p.set_defaults(run=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.run(args)
    except (UsageError, EmptyMaskError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PlungeRankError, DenseCapError, np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (OSError, MaskFormatError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
