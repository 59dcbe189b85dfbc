"""Command-line entry point (``gupsim``).

Exit codes: 0 when every comparison passes, 2 when comparisons ran but at
least one missed its tolerance, 1 on any execution error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import dispersion as disp
from . import gkg
from . import harness
from . import packet as pk
from .config import default_config_dict, load_config
from .errors import GupsimError, NegativeRadicand

log = logging.getLogger("gupsim")

EXIT_OK, EXIT_ERROR, EXIT_FAILED = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _emit(text: str, out: str | None) -> None:
    if out:
        harness.write_outputs({Path(out).name: text}, Path(out).parent)
    else:
        sys.stdout.write(text)


def cmd_dispersion_sample(args) -> int:
    model = disp.DispersionModel(args.alpha_prime, args.l_p, args.c, args.hbar)
    rows = []
    for k in np.linspace(args.k_min, args.k_max, args.n):
        k = float(k)
        try:
            if args.first_order:
                vals = (disp.omega_first_order(k, model), disp.group_velocity_first_order(k, model),
                        disp.gvd_beta_first_order(k, model))
            else:
                vals = (disp.omega_exact(k, model), disp.group_velocity_exact(k, model),
                        disp.gvd_beta_exact(k, model))
        except disp.DispersionSingularity:
            vals = (None, None, None)
        rows.append((k, *vals, disp.effective_planck(k, model)))
    _emit(harness.csv_text(["k", "omega", "v_g", "beta", "hbar_eff"], rows), args.out)
    return EXIT_OK


def cmd_packet_analytic(args) -> int:
    model = disp.DispersionModel(args.alpha_prime, args.l_p, args.c, args.hbar)
    spec = pk.GaussianPacketSpec(args.alpha, args.k0)
    w0 = pk.initial_width(spec)
    rows = []
    for t in np.linspace(0.0, args.t_max, args.n_t):
        t = float(t)
        w = pk.gup_width_exact(t, spec, model)
        try:
            lit = pk.gup_width_paper_first_order(t, spec, model).width
        except NegativeRadicand:
            lit = None
        rows.append((t, w, w / w0, lit))
    _emit(harness.csv_text(["t", "width_exact", "width_ratio", "width_paper_eq17"], rows),
          args.out)
    return EXIT_OK


def _finish(report: harness.ComparisonReport, out_dir) -> int:
    harness.write_outputs(report.outputs, out_dir)
    for c in report.comparisons:
        log.info("%s %s deviation=%.3g tolerance=%.3g", "PASS" if c.passed else "FAIL",
                 c.name, c.deviation, c.tolerance)
    return EXIT_OK if report.passed else EXIT_FAILED


def cmd_evolve(args) -> int:
    cfg = load_config(args.config)
    report = harness.run_experiment(cfg, emit_fields=args.emit_fields or None)
    return _finish(report, args.out or cfg.output.dir)


def cmd_gkg_run(args) -> int:
    cfg = load_config(args.config)
    report = harness.run_gkg(cfg, emit_fields=args.emit_fields or None)
    return _finish(report, args.out or cfg.output.dir)


def cmd_gkg_opcheck(args) -> int:
    result = gkg.opcheck(args.beta_prime, args.k, hbar=args.hbar)
    print(json.dumps(result))
    return EXIT_OK


def cmd_scan(args) -> int:
    cfg = load_config(args.config)
    reports, summary = harness.scan(cfg, args.parameter, args.values, workers=args.workers)
    outputs = {"scan_summary.csv": summary}
    for i, rep in enumerate(reports):
        outputs[f"scan_{i:03d}.json"] = rep.to_json()
    harness.write_outputs(outputs, args.out or cfg.output.dir)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAILED


def cmd_report(args) -> int:
    cfg = load_config(args.config)
    reports = [harness.run_experiment(cfg)]
    if cfg.gkg.enabled:
        reports.append(harness.run_gkg(cfg))
    outputs = harness.emit_dispersion_curves(cfg)
    for rep in reports:
        outputs.update(rep.outputs)
    combined = {
        "experiment_id": cfg.id,
        "pass": all(r.passed for r in reports),
        "reports": [r.to_dict() for r in reports],
        "config": cfg.to_dict(),
    }
    outputs["summary.json"] = json.dumps(harness._jsonable(combined), indent=2) + "\n"
    harness.write_outputs(outputs, args.out or cfg.output.dir)
    print(json.dumps({"experiment_id": cfg.id, "pass": combined["pass"]}))
    return EXIT_OK if combined["pass"] else EXIT_FAILED


def _model_args(p):
    p.add_argument("--alpha-prime", type=float, default=0.0)
    p.add_argument("--l-p", type=float, default=1.0)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--hbar", type=float, default=1.0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gupsim", description="GUP dispersion and wave-packet laboratory")
    parser.add_argument("--print-config", action="store_true",
                        help="print the default experiment config (JSON) and exit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    d = sub.add_parser("dispersion", help="tabulate dispersion quantities")
    dsub = d.add_subparsers(dest="action", required=True, parser_class=_Parser)
    ds = dsub.add_parser("sample")
    _model_args(ds)
    ds.add_argument("--k-min", type=float, required=True)
    ds.add_argument("--k-max", type=float, required=True)
    ds.add_argument("--n", type=int, required=True)
    ds.add_argument("--first-order", action="store_true")
    ds.add_argument("--out")
    ds.set_defaults(func=cmd_dispersion_sample)

    pa = sub.add_parser("packet", help="closed-form packet widths")
    psub = pa.add_subparsers(dest="action", required=True, parser_class=_Parser)
    an = psub.add_parser("analytic")
    _model_args(an)
    an.add_argument("--alpha", type=float, required=True)
    an.add_argument("--k0", type=float, required=True)
    an.add_argument("--t-max", type=float, required=True)
    an.add_argument("--n-t", type=int, required=True)
    an.add_argument("--out")
    an.set_defaults(func=cmd_packet_analytic)

    ev = sub.add_parser("evolve", help="Fourier-synthesis evolution from a config")
    ev.add_argument("--config", required=True)
    ev.add_argument("--emit-fields", action="store_true")
    ev.add_argument("--out")
    ev.set_defaults(func=cmd_evolve)

    g = sub.add_parser("gkg", help="generalized Klein-Gordon solver")
    gsub = g.add_subparsers(dest="action", required=True, parser_class=_Parser)
    gr = gsub.add_parser("run")
    gr.add_argument("--config", required=True)
    gr.add_argument("--emit-fields", action="store_true")
    gr.add_argument("--out")
    gr.set_defaults(func=cmd_gkg_run)
    go = gsub.add_parser("opcheck")
    go.add_argument("--beta-prime", type=float, required=True)
    go.add_argument("--k", type=float, required=True)
    go.add_argument("--hbar", type=float, default=1.0)
    go.set_defaults(func=cmd_gkg_opcheck)

    sc = sub.add_parser("scan", help="run one experiment per parameter value")
    sc.add_argument("--config", required=True)
    sc.add_argument("--parameter", required=True, choices=harness.SCAN_PARAMETERS)
    sc.add_argument("--values", type=float, nargs="*", default=[])
    sc.add_argument("--workers", type=int)
    sc.add_argument("--out")
    sc.set_defaults(func=cmd_scan)

    rp = sub.add_parser("report", help="experiment + curves (+ GKG) with a summary")
    rp.add_argument("--config", required=True)
    rp.add_argument("--out")
    rp.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help or a usage error
        return exc.code if isinstance(exc.code, int) else EXIT_ERROR
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.print_config:
        print(json.dumps(default_config_dict(), indent=2))
        return EXIT_OK
    if not getattr(args, "func", None):
        parser.print_help(sys.stderr)
        return EXIT_ERROR
    try:
        return args.func(args)
    except (GupsimError, OSError, ValueError) as exc:
        print(f"gupsim: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
