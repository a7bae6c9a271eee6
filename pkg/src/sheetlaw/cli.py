"""Command-line front end.

Machine-readable output (CSV/JSON) goes to ``--out`` or stdout; the human
summary goes to stderr.  Exit status: 0 success, 1 verification failure,
2 usage error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

from . import __version__
from . import closed_form as cf
from . import cumulants as cu
from . import fields
from . import spectral as sp
from . import verify as vf
from .kernels import CenteringKind, CovKernel, ProcessKind
from .report import reports_to_json

_CLOSED = {
    ProcessKind.BRIDGE_B: cf.TransformId.PROP5_B,
    ProcessKind.TIED_DOWN_B0: cf.TransformId.PROP5_B0,
    ProcessKind.KIEFER1: cf.TransformId.PROP5_K,
    ProcessKind.KIEFER2: cf.TransformId.PROP5_K,
}


def _floats(text: str) -> tuple:
    try:
        vals = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}")
    if not vals or not all(math.isfinite(v) for v in vals):
        raise argparse.ArgumentTypeError("list must be nonempty and finite")
    return vals


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _emit(text: str, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _note(msg: str):
    print(msg, file=sys.stderr)


def _default_n(kind: ProcessKind, n):
    return n if n is not None else (512 if kind.dim == 1 else 32)


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sheetlaw", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    kinds = [k.value for k in ProcessKind]
    cents = [c.value for c in CenteringKind]

    s = sub.add_parser("simulate", help="sample a sheet or derived field on the grid")
    s.add_argument("--process", default="sheet", choices=[k.value for k in fields.PROCESS_CODE])
    s.add_argument("--n", type=_positive, default=32)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--index", type=int, default=0)
    s.add_argument("--projection", choices=[q.value for q in fields.ProjectionKind])
    s.add_argument("--centering", default="none", choices=cents, help="centering for the reported functional")
    s.add_argument("--out")

    s = sub.add_parser("spectrum", help="eigenvalues of a covariance operator")
    s.add_argument("--process", required=True, choices=kinds)
    s.add_argument("--centering", default="none", choices=cents)
    s.add_argument("--n", type=_positive)
    s.add_argument("--source", default="grid", choices=["grid", "analytic"])
    s.add_argument("--count", type=_positive, default=2000, help="analytic terms")
    s.add_argument("--format", default="csv", choices=["csv", "json"])
    s.add_argument("--out")

    s = sub.add_parser("laplace", help="E exp(-u^2/2 * int X^2) over a u-grid")
    s.add_argument("--process", choices=kinds)
    s.add_argument("--transform", choices=[t.value for t in cf.TransformId])
    s.add_argument("--centering", default="none", choices=cents)
    s.add_argument("--u", type=_floats, required=True)
    s.add_argument("--source", default="auto", choices=["auto", "closed", "grid"])
    s.add_argument("--n", type=_positive)
    s.add_argument("--out")

    s = sub.add_parser("cumulants", help="discrete stochastic Fubini check")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--which", type=int, choices=[1, 2, 3, 4])
    g.add_argument("--random", action="store_true")
    s.add_argument("--n", type=_positive, default=8)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--m-max", type=int, default=6)
    s.add_argument("--out")

    for name, hlp in (("verify", "check one identity"), ("suite", "check every identity")):
        s = sub.add_parser(name, help=hlp)
        if name == "verify":
            s.add_argument("--identity", required=True, choices=[i.value for i in vf.CATALOG])
            s.add_argument("--channel", default="all", choices=["all", *vf.CHANNEL_ORDER])
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--n", type=_positive, default=32)
        s.add_argument("--samples", type=_positive, default=20000)
        s.add_argument("--alpha", type=float, default=0.01)
        s.add_argument("--u-grid", type=_floats, default=(0.5, 1.0, 2.0, 4.0))
        s.add_argument("--n-spectral", type=_positive, default=64)
        s.add_argument("--n-1d", type=_positive, default=512)
        s.add_argument("--n-b", type=_positive, default=96)
        s.add_argument("--cutoff", type=_positive, default=2000)
        s.add_argument("--workers", type=_positive)
        s.add_argument("--out")
    return p


def _cmd_simulate(a, parser):
    kind = ProcessKind(a.process)
    if a.n < 2 or (a.projection and a.n % 2):
        parser.error("--n must be >= 2 (and even with --projection)")
    f = fields.sample_sheet(a.n, a.seed, a.index)
    if kind is not ProcessKind.SHEET:
        f = fields.derive(f, kind)
    if a.projection:
        f = fields.project(f, a.projection)
    _emit(fields.field_to_csv(f), a.out)
    _note(f"{kind.value} n={a.n} seed={a.seed} functional({a.centering})="
          f"{fields.quad_functional(f, a.centering):.10g}")
    return 0


def _cmd_spectrum(a, parser):
    kind = ProcessKind(a.process)
    if a.source == "analytic":
        try:
            s = sp.analytic_spectrum(kind, a.count)
        except ValueError as exc:
            parser.error(str(exc))
    else:
        try:
            kernel = CovKernel(kind, a.centering)
        except ValueError as exc:
            parser.error(str(exc))
        n = _default_n(kind, a.n)
        if n < 2:
            parser.error("--n must be >= 2")
        s = sp.grid_spectrum(kernel, n)
    _emit(s.to_json() + "\n" if a.format == "json" else s.to_csv(), a.out)
    _note(f"{s.source}: {len(s)} eigenvalues, top {s.eigs[0]:.10g}, trace {s.trace:.10g}")
    return 0


def _cmd_laplace(a, parser):
    if bool(a.process) == bool(a.transform):
        parser.error("give exactly one of --process or --transform")
    if a.transform:
        fn, label = (lambda u: cf.transform(a.transform, u)), a.transform
    else:
        kind = ProcessKind(a.process)
        cent = CenteringKind(a.centering)
        closed = _CLOSED.get(kind) if cent is CenteringKind.NONE else None
        if a.source == "closed" and closed is None:
            parser.error(f"no closed form for {kind.value}/{cent.value}")
        if closed is not None and a.source != "grid":
            fn, label = (lambda u: cf.prop5_laplace(closed, u)), closed.value
        else:
            try:
                kernel = CovKernel(kind, cent)
            except ValueError as exc:
                parser.error(str(exc))
            n = _default_n(kind, a.n)
            s = sp.grid_spectrum(kernel, n)
            fn, label = (lambda u: sp.laplace_from_spectrum(s, u)), s.source
    values = [(u, fn(u)) for u in a.u]
    if len(values) == 1:
        _emit(f"{values[0][1]!r}\n", a.out)
    else:
        lines = [f"# source={label},version={__version__}", "u,value"]
        lines += [f"{u!r},{v!r}" for u, v in values]
        _emit("\n".join(lines) + "\n", a.out)
    _note(f"laplace via {label} at {len(values)} point(s)")
    return 0


def _cmd_cumulants(a, parser):
    if a.m_max < 2:
        parser.error("--m-max must be >= 2")
    if a.which:
        phi, label = cu.corollary2_kernel(a.which, a.n), f"corollary2_phi{a.which}"
    else:
        phi, label = cu.random_kernel4(a.n, a.seed), "random"
    rep = cu.fubini_check(phi, a.m_max)
    rep.seed = a.seed
    rep.details["kernel"] = label
    _emit(cu.report_json(rep) + "\n", a.out)
    _note(f"fubini check ({label}, n={a.n}): max relative trace gap {rep.statistic:.3e} -> {rep.status}")
    return 0 if rep.passed else 1


def _config(a, parser) -> vf.VerifyConfig:
    try:
        return vf.VerifyConfig(n=a.n, samples=a.samples, u_grid=a.u_grid, alpha=a.alpha, seed=a.seed,
                               n_spectral=a.n_spectral, n_1d=a.n_1d, n_b=a.n_b, cutoff=a.cutoff)
    except ValueError as exc:
        parser.error(str(exc))


def _summarise(reports):
    for r in reports:
        tag = r.status if r.expect_pass else f"{r.status} (expected fail)"
        _note(f"{r.identity:16s} {r.channel:12s} {tag:24s} stat={r.statistic:.4g} thr={r.threshold:.4g}")
    bad = [r for r in reports if not r.ok]
    _note(f"{len(reports) - len(bad)}/{len(reports)} checks as expected")
    return 0 if not bad else 1


def _cmd_verify(a, parser):
    cfg = _config(a, parser)
    ident = vf.IdentityId(a.identity)
    channels = vf.supported_channels(ident) if a.channel == "all" else (a.channel,)
    if a.channel != "all" and a.channel not in vf.supported_channels(ident):
        parser.error(f"{ident.value} has no {a.channel} channel")
    reports = [vf.run_one(ident, ch, cfg) for ch in channels]
    _emit(reports_to_json(reports) + "\n", a.out)
    return _summarise(reports)


def _cmd_suite(a, parser):
    cfg = _config(a, parser)
    reports = vf.run_suite(cfg, workers=a.workers)
    _emit(reports_to_json(reports) + "\n", a.out)
    return _summarise(reports)


_COMMANDS = {"simulate": _cmd_simulate, "spectrum": _cmd_spectrum, "laplace": _cmd_laplace,
             "cumulants": _cmd_cumulants, "verify": _cmd_verify, "suite": _cmd_suite}


def run(argv=None) -> int:
    parser = _build_parser()
    a = parser.parse_args(argv)
    return _COMMANDS[a.command](a, parser)


def main(argv=None):
    try:
        code = run(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 2
    sys.exit(code)


if __name__ == "__main__":  # pragma: no cover
    main()
