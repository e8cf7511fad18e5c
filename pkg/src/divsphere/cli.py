"""Command-line front end.

Subcommands: ``sweep`` (shape-parameter study to CSV), ``interp`` (single
fit, evaluated field written as a sample file), ``nodes`` (generate a
quasi-uniform node file), ``verify`` (internal consistency checks).

Exit codes: 0 success, 1 usage error, 2 numerical failure (every sweep row
failed, or a verify check failed), 3 I/O error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import geom
from .direct import TangentFieldSamples, eval_direct, fit_direct, stream_direct
from .harness import (
    ParseError,
    builtin_target,
    read_nodes,
    read_samples,
    relative_max_error,
    run_sweep,
    samples_from_target,
    stream_error,
    write_nodes,
    write_report,
    write_samples,
)
from .kernels import KERNELS, KernelConfig
from .rbfqr import build_stable_basis, eval_qr, fit_qr, stream_qr


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parse_eps(spec):
    """Comma list, or geometric range lo:hi:count."""
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise UsageError(f"bad --eps range {spec!r}; expected lo:hi:count")
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
        if lo <= 0 or hi <= 0 or count < 1:
            raise UsageError("--eps range endpoints must be positive, count >= 1")
        if count == 1:
            return [lo]
        return list(np.geomspace(lo, hi, count))
    try:
        return [float(tok) for tok in spec.split(",") if tok]
    except ValueError:
        raise UsageError(f"bad --eps list {spec!r}") from None


def _add_common(p, with_target=True):
    p.add_argument("--kernel", choices=KERNELS, default="mq")
    p.add_argument("--eps", default="1.0", help="comma list or geometric range lo:hi:count")
    p.add_argument("--nodes", help="node file (x y z per line)")
    p.add_argument("--hammersley", type=int, help="generate this many quasi-uniform nodes")
    p.add_argument("--eval", dest="eval_spec", default="hammersley4n",
                   help="hammersley4n or grid:<nlat>x<nlon>")
    p.add_argument("--tol", type=float, default=1e-16, help="expansion truncation tolerance")
    p.add_argument("--mu-max", type=int, default=300, help="truncation degree cap")
    p.add_argument("--method", choices=("direct", "qr", "both"), default="both")
    if with_target:
        p.add_argument("--target", choices=("paper-gaussians", "vsh-lowdegree"))
        p.add_argument("--samples", help="sample file (x y z ux uy uz per line)")
        p.add_argument("--literal-typo", action="store_true",
                       help="use the verbatim published form of the last stream-function bump")


def _build_parser():
    ap = _Parser(prog="divsphere", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="compare solvers across shape parameters")
    _add_common(p)
    p.add_argument("--out", required=True, help="CSV report path")

    p = sub.add_parser("interp", help="fit once and write the evaluated field")
    _add_common(p)
    p.add_argument("--out", required=True, help="output sample file")

    p = sub.add_parser("nodes", help="write a quasi-uniform node file")
    p.add_argument("--hammersley", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("verify", help="run internal consistency checks")
    _add_common(p)
    return ap


def _load_nodes(args):
    if args.nodes and args.hammersley:
        raise UsageError("give either --nodes or --hammersley, not both")
    if args.nodes:
        return read_nodes(args.nodes), f"file:{args.nodes}"
    if args.hammersley:
        return geom.hammersley_nodes(args.hammersley), "hammersley"
    raise UsageError("one of --nodes or --hammersley is required")


def _load_data(args, nodes):
    """Returns (samples, target-or-None)."""
    if args.samples and args.target:
        raise UsageError("give either --target or --samples, not both")
    if args.samples:
        return read_samples(args.samples), None
    name = args.target or "paper-gaussians"
    target = builtin_target(name, literal_typo=args.literal_typo)
    return samples_from_target(nodes, target), target


def _eval_points(spec, n):
    if spec == "hammersley4n":
        return geom.hammersley_nodes(4 * n)
    if spec.startswith("grid:"):
        try:
            nlat, nlon = spec[5:].split("x")
            return geom.latlon_grid(int(nlat), int(nlon))
        except ValueError:
            raise UsageError(f"bad --eval grid spec {spec!r}") from None
    raise UsageError(f"unknown --eval spec {spec!r}")


def _methods(args):
    return ("direct", "qr") if args.method == "both" else (args.method,)


def _cmd_sweep(args):
    nodes, source = _load_nodes(args)
    samples, target = _load_data(args, nodes)
    if target is None:
        raise UsageError("sweep needs an analytic --target to measure errors against")
    if args.samples:
        nodes = samples.nodes
    eval_pts = _eval_points(args.eval_spec, nodes.shape[0])
    report = run_sweep(args.kernel, _parse_eps(args.eps), nodes, target,
                       eval_pts=eval_pts, methods=_methods(args),
                       tol=args.tol, mu_max=args.mu_max, node_source=source)
    write_report(args.out, report)
    ok = [r for r in report.rows
          if r.status_direct == "ok" or r.status_qr == "ok"]
    for r in report.rows:
        print(f"eps={r.epsilon:<12g} direct={r.status_direct:<14s} qr={r.status_qr}")
    print(f"wrote {args.out} ({len(report.rows)} rows, {len(ok)} with at least one solve)")
    return 0 if ok else 2


def _fit_one(args, cfg, samples, nodes):
    if args.method == "direct":
        interp = fit_direct(cfg, samples)
        return (lambda p: eval_direct(interp, p)), (lambda p: stream_direct(interp, p)), interp.residual
    basis = build_stable_basis(cfg, nodes, tol=args.tol, mu_max=args.mu_max)
    interp = fit_qr(basis, samples)
    return (lambda p: eval_qr(interp, p)), (lambda p: stream_qr(interp, p)), interp.residual


def _cmd_interp(args):
    eps_list = _parse_eps(args.eps)
    if len(eps_list) != 1:
        raise UsageError("interp takes exactly one --eps value")
    if args.method == "both":
        args.method = "qr"
    nodes, _ = _load_nodes(args)
    samples, target = _load_data(args, nodes)
    nodes = samples.nodes
    cfg = KernelConfig(args.kernel, eps_list[0])
    evaluate, stream, residual = _fit_one(args, cfg, samples, nodes)
    eval_pts = _eval_points(args.eval_spec, nodes.shape[0])
    write_samples(args.out, eval_pts, evaluate(eval_pts))
    print(f"fit {args.kernel} eps={eps_list[0]:g} method={args.method}: "
          f"node residual {residual:.3e}")
    if target is not None:
        print(f"field error  {relative_max_error(evaluate, target.field, eval_pts):.6e}")
        print(f"stream error {stream_error(stream, target.stream, eval_pts):.6e}")
    print(f"wrote {args.out} ({eval_pts.shape[0]} points)")
    return 0


def _cmd_nodes(args):
    write_nodes(args.out, geom.hammersley_nodes(args.hammersley))
    print(f"wrote {args.out} ({args.hammersley} nodes)")
    return 0


def _cmd_verify(args):
    eps_list = _parse_eps(args.eps)
    nodes, _ = _load_nodes(args)
    samples, target = _load_data(args, nodes)
    nodes = samples.nodes
    eval_pts = _eval_points(args.eval_spec, nodes.shape[0])
    rng = np.random.default_rng(0)
    probe = rng.normal(size=(20, 3))
    probe /= np.linalg.norm(probe, axis=1)[:, None]

    failures = 0

    def check(name, ok, detail=""):
        nonlocal failures
        print(f"{'PASS' if ok else 'FAIL'}  {name}{'  ' + detail if detail else ''}")
        failures += 0 if ok else 1

    for eps in eps_list:
        cfg = KernelConfig(args.kernel, eps)
        results = {}
        for method in _methods(args):
            probe_args = argparse.Namespace(**vars(args))
            probe_args.method = method
            try:
                evaluate, stream, residual = _fit_one(probe_args, cfg, samples, nodes)
            except Exception as exc:
                check(f"eps={eps:g} {method} fit", False, f"{type(exc).__name__}: {exc}")
                continue
            results[method] = evaluate
            scale = np.max(np.abs(samples.comps))
            check(f"eps={eps:g} {method} node residual", residual <= 1e-8 * max(scale, 1e-300),
                  f"residual={residual:.2e}")
            vals = evaluate(probe)
            tang = np.max(np.abs(np.sum(probe * vals, axis=1)))
            check(f"eps={eps:g} {method} tangency", tang < 1e-10, f"max={tang:.2e}")
            # stream consistency: rotated surface gradient reproduces field
            h = 1e-4
            worst = 0.0
            for p in probe[:5]:
                fr = geom.tangent_frame(p)
                pa = np.cos(h) * p + np.sin(h) * fr.a
                ma = np.cos(h) * p - np.sin(h) * fr.a
                pb = np.cos(h) * p + np.sin(h) * fr.b
                mb = np.cos(h) * p - np.sin(h) * fr.b
                da = (stream(pa / np.linalg.norm(pa)) - stream(ma / np.linalg.norm(ma))) / (2 * h)
                db = (stream(pb / np.linalg.norm(pb)) - stream(mb / np.linalg.norm(mb))) / (2 * h)
                lpsi = -da * fr.b + db * fr.a
                worst = max(worst, float(np.linalg.norm(lpsi - evaluate(p))))
            ref = float(np.max(np.linalg.norm(evaluate(probe), axis=1)))
            check(f"eps={eps:g} {method} stream gradient", worst <= 1e-4 * max(ref, 1e-300),
                  f"max dev={worst:.2e}")
        if len(results) == 2:
            d = np.max(np.linalg.norm(results["direct"](eval_pts) - results["qr"](eval_pts), axis=1))
            scale = np.max(np.linalg.norm(results["direct"](eval_pts), axis=1))
            check(f"eps={eps:g} direct/qr agreement", d <= 1e-6 * max(scale, 1e-300),
                  f"max diff={d:.2e}")
    return 0 if failures == 0 else 2


def main(argv=None):
    ap = _build_parser()
    try:
        args = ap.parse_args(argv)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "interp":
            return _cmd_interp(args)
        if args.command == "nodes":
            return _cmd_nodes(args)
        return _cmd_verify(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ParseError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
