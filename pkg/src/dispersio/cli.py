"""Command line front end.

Subcommands: analyze (structural checks, JSON report), stability-scan
(propagator norms over frequency, CSV + verdict), solve (linear or
Picard time integration, energy trace CSV), paracheck (self-test of the
band calculus, JSON).  Exit codes: 0 all checks passed, 2 a structural
finding (failed check, ill-posed verdict, suspected blow-up, defect
slope violation), 1 bad input (unreadable file, malformed document,
bad flags).  CSV and JSON outputs are byte-deterministic; figures are
rendered next to the delimited output unless --no-figures is given.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import evolution, paradiff, report, specio, stability, symbols


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors, which collides with the exit code
    # reserved for structural findings; remap to 1
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _load(arg):
    try:
        return specio.resolve(arg)
    except (OSError, specio.SpecFormatError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        raise SystemExit(1)


def _check_dict(rep):
    return {
        "passed": rep.passed,
        "diag_max": rep.diag_max,
        "max_ratio": rep.max_ratio,
        "worst": rep.worst,
        "refinement": rep.refinement,
        "notes": rep.notes,
    }


def _sample_xis(dim, radii=(0.5, 1.0, 2.0, 4.0)):
    xis = []
    for r in radii:
        xi = np.zeros(dim)
        xi[0] = r
        xis.append(xi)
    if dim >= 2:
        xis.append(np.full(dim, 2.0 / np.sqrt(dim)))
    return xis


def _analyze_ode_pair(pair, flags, out):
    rep = stability.ode_sum_stability(pair.a, pair.b)
    doc = {
        "kind": "ode_pair",
        "system_sha256": report.system_hash(pair),
        "system_name": pair.name,
        "flags": flags,
        "max_re_a": rep.max_re_a,
        "max_re_b": rep.max_re_b,
        "max_re_sum": rep.max_re_sum,
        "turing": rep.turing,
        "conclusion": ("each factor decays alone but the sum grows: "
                       "coupling-driven instability"
                       if rep.turing else
                       "no coupling-driven instability in the pair"),
        "passed": True,
    }
    text = report.canonical_json(doc)
    sys.stdout.write(text)
    if out:
        report.write_json(doc, out)
    return 0


def cmd_analyze(args):
    spec = _load(args.system)
    flags = {"system": args.system, "out": args.out}
    if isinstance(spec, specio.OdePair):
        return _analyze_ode_pair(spec, flags, args.out)

    doc = dict(report.report_header(spec, flags))
    doc["dimension"] = spec.dim
    doc["components"] = spec.ncomp

    eig = []
    for xi in _sample_xis(spec.dim):
        es = symbols.eigenstructure(spec.dispersion, xi)
        eig.append({"xi": list(xi), "eigenvalues": list(es.eigenvalues),
                    "multiplicities": list(es.multiplicities)})
    doc["eigenstructure"] = eig

    checks = {}
    coupling = symbols.check_coupling_divisibility(spec)
    checks["coupling_divisibility"] = _check_dict(coupling)
    conj = None
    if spec.conjugate_coupling is not None:
        conj = symbols.check_conjugate_divisibility(spec)
        checks["conjugate_divisibility"] = _check_dict(conj)
    doc["checks"] = checks

    samples = []
    for xi in _sample_xis(spec.dim, radii=(1.0, 2.0)):
        es = symbols.eigenstructure(spec.dispersion, xi)
        try:
            v = symbols.conjugator(es, spec.coupling.at(xi))
        except symbols.DegenerateGapError as exc:
            samples.append({"xi": list(xi), "error": str(exc)})
            continue
        rem = symbols.conjugation_remainder(es, spec.coupling.at(xi), v)
        samples.append({"xi": list(xi),
                        "v": [[list(map(float, (z.real, z.imag)))
                               for z in row] for row in v],
                        "remainder_herm_defect":
                            float(symbols.herm_defect(rem))})
    doc["conjugator_samples"] = samples

    passed = bool(coupling) and (conj is None or bool(conj))
    doc["passed"] = passed
    if passed:
        doc["conclusion"] = (
            "dispersion compensates the coupling: skew parts divide across "
            "spectral gaps, so a bounded symmetrizer exists and the L2 "
            "evolution stays uniformly bounded in frequency")
    else:
        bad = ("coupling_divisibility" if not coupling
               else "conjugate_divisibility")
        doc["conclusion"] = (
            f"{bad} fails: a coupling block survives against a closing or "
            "vanishing spectral gap; exponential growth in frequency is "
            "expected (ill-posed linearization)")

    sys.stdout.write(report.canonical_json(doc))
    if args.out:
        report.write_json(doc, args.out)
    return 0 if passed else 2


def cmd_scan(args):
    spec = _load(args.system)
    if isinstance(spec, specio.OdePair):
        sys.stderr.write("error: stability-scan needs a dispersive system, "
                         "not an ode_pair\n")
        return 1
    t_values = tuple(args.t) if args.t else (1.0,)
    flags = {"system": args.system, "xi_max": args.xi_max,
             "t": list(t_values), "out": args.out,
             "figures": not args.no_figures, "threads": args.threads}
    rep = stability.stability_scan(spec, xi_max=args.xi_max,
                                   t_values=t_values, threads=args.threads)
    report.write_scan_csv(rep, spec.dim, args.out, spec, flags)
    if not args.no_figures:
        report.render_scan_figure(rep, _fig_path(args.out))
    block = rep.verdict_block()
    sys.stdout.write("verdict: %s (sup_norm=%s, plateau_change=%s, "
                     "growth_slope=%s)\n" % (
                         rep.verdict, report.fmt_float(rep.sup_norm),
                         report.fmt_float(rep.plateau_change),
                         report.fmt_float(rep.growth_slope)))
    sys.stdout.write(f"wrote {args.out}\n")
    return 2 if block["verdict"] == "exponentially-ill-posed" else 0


def _fig_path(out):
    stem, _ = os.path.splitext(out)
    return stem + ".png"


def cmd_solve(args):
    spec = _load(args.system)
    if isinstance(spec, specio.OdePair):
        sys.stderr.write("error: solve needs a dispersive system, not an "
                         "ode_pair\n")
        return 1
    n = args.n or spec.grid_points
    h = evolution.initial_field(spec, n=n, seed=args.seed)
    flags = {"system": args.system, "tmax": args.tmax, "dt": args.dt,
             "eps": args.eps, "scheme": args.scheme, "mode": args.mode,
             "n": n, "seed": args.seed, "trace": args.trace,
             "figures": not args.no_figures}
    try:
        if args.mode == "picard":
            res = evolution.picard_solve(spec, h, args.tmax, args.dt,
                                         eps=args.eps, n=n)
            status = res.status
            extra = {"iterations": res.iterations,
                     "diffs": res.diffs, "tmax_used": res.tmax_used,
                     "halvings": res.halvings}
            failed = status != "converged"
        else:
            res = evolution.solve_linear(spec, None, h, args.tmax, args.dt,
                                         eps=args.eps, n=n)
            status = res.status
            extra = {}
            failed = status == "ill_posed_suspected"
    except evolution.CflError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    block = dict(report.report_header(spec, flags), status=status,
                 **{k: v for k, v in res.info.items()}, **extra)
    report.write_trace_csv(res.trace, args.trace, block)
    if not args.no_figures:
        report.render_trace_figure(res.trace, _fig_path(args.trace))
    sys.stdout.write(f"status: {status}\n")
    for key in ("fitted_C", "growth_rate"):
        if res.info.get(key) is not None:
            sys.stdout.write(f"{key}: {report.fmt_float(res.info[key])}\n")
    sys.stdout.write(f"wrote {args.trace}\n")
    return 2 if failed else 0


def cmd_paracheck(args):
    rep = paradiff.paracheck_report(n=args.grid, d=args.dim,
                                    trials=args.trials, seed=args.seed)
    flags = {"grid": args.grid, "dim": args.dim, "trials": args.trials,
             "seed": args.seed, "out": args.out,
             "figures": not args.no_figures}
    rep["flags"] = flags
    bad = []
    for label, entry in rep["defect_slopes"].items():
        if entry["slope"] > entry["naive_order"] - 0.8:
            bad.append(label)
    for key in ("reconstruction_rel_err", "multiplier_rel_err"):
        if rep[key] > 1e-12:
            bad.append(key)
    rep["violations"] = bad
    rep["passed"] = not bad
    report.write_json(rep, args.out)
    if not args.no_figures:
        report.render_paracheck_figure(rep, _fig_path(args.out))
    for label, entry in rep["defect_slopes"].items():
        sys.stdout.write(
            "slope[%s] = %.3f (naive %.1f)\n"
            % (label, entry["slope"], entry["naive_order"]))
    sys.stdout.write("paracheck: %s\n" % ("PASS" if not bad else
                                          "FAIL " + ",".join(bad)))
    sys.stdout.write(f"wrote {args.out}\n")
    return 0 if not bad else 2


def build_parser():
    p = _Parser(prog="dispersio",
                description="stability analysis for first-order systems "
                            "coupled to nonscalar dispersion")
    sub = p.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analyze", help="structural checks, JSON report")
    pa.add_argument("system", help="path to a system JSON or a bundled name")
    pa.add_argument("--out", default=None, help="also write the JSON here")
    pa.set_defaults(func=cmd_analyze)

    ps = sub.add_parser("stability-scan",
                        help="propagator norms over frequency")
    ps.add_argument("system")
    ps.add_argument("--xi-max", type=float, default=128.0)
    ps.add_argument("--t", type=float, action="append", default=None,
                    help="evaluation time (repeatable; default 1.0)")
    ps.add_argument("--out", default="scan.csv")
    ps.add_argument("--threads", type=int, default=None,
                    help="worker threads (default: DISPERSIO_THREADS or 1)")
    ps.add_argument("--no-figures", action="store_true")
    ps.set_defaults(func=cmd_scan)

    pv = sub.add_parser("solve", help="integrate in time, write energy trace")
    pv.add_argument("system")
    pv.add_argument("--tmax", type=float, required=True)
    pv.add_argument("--dt", type=float, required=True)
    pv.add_argument("--eps", type=float, default=0.0,
                    help="mollifier strength (0 disables)")
    pv.add_argument("--scheme", choices=["strang"], default="strang")
    pv.add_argument("--mode", choices=["linear", "picard"], default="linear")
    pv.add_argument("--trace", default="trace.csv")
    pv.add_argument("--n", type=int, default=None,
                    help="grid points per axis (default: from the document)")
    pv.add_argument("--seed", type=int, default=0)
    pv.add_argument("--no-figures", action="store_true")
    pv.set_defaults(func=cmd_solve)

    pc = sub.add_parser("paracheck", help="self-test of the band calculus")
    pc.add_argument("--grid", type=int, default=256)
    pc.add_argument("--dim", type=int, default=1)
    pc.add_argument("--trials", type=int, default=25)
    pc.add_argument("--seed", type=int, default=0)
    pc.add_argument("--out", default="paracheck.json")
    pc.add_argument("--no-figures", action="store_true")
    pc.set_defaults(func=cmd_paracheck)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except specio.SpecFormatError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except symbols.StructuralError as exc:
        sys.stderr.write(f"structural finding: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
