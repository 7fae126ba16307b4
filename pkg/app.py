"""
csf-harnack command line.

    python app.py derive [--show-remainder] [--params a,b,c] [--graph]
    python app.py search [--count N]
    python app.py simulate circle:R=1,N=256 --t-end 0.4
    python app.py verify out/circle_trace.csv --epsilon 0.01
    python app.py plot out/circle_trace.csv [--field kappa]

Global flags (before the subcommand): --out DIR, --seed N,
--format {csv,json-lines}, --config FILE, -v.
Exit codes: 0 ok, 1 verification / derivation failure, 2 invalid input,
3 stability refusal.
"""

import argparse
import logging
import sys
from pathlib import Path

import pandas as pd

import config
import curve_io
import derivation_engine
import diffpoly_engine
import flow_engine
import harnack_engine
import plot_engine
import summary_engine
import utils
import verify_engine

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INVALID = 2
EXIT_STABILITY = 3

INPUT_ERRORS = (
    utils.FormatError,
    flow_engine.GeometryError,
    flow_engine.ConfigError,
    harnack_engine.ParameterError,
    diffpoly_engine.DiffPolyError,
    verify_engine.DomainError,
)

EXTENSIONS = {"csv": ".csv", "json-lines": ".jsonl"}


# --- Argument parsing ---

def build_parser():
    parser = argparse.ArgumentParser(
        prog="csf-harnack",
        description="Harnack quantity search and curve shortening flow verification.")
    parser.add_argument("--out", default=config.DEFAULT_OUT_DIR, help="output directory (created if absent)")
    parser.add_argument("--seed", type=int, default=None, help="seed for randomized sweeps")
    parser.add_argument("--format", choices=curve_io.FORMATS, default="csv", dest="fmt")
    parser.add_argument("--config", default=None, help="YAML file with simulate/verify/search/plot sections")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("derive", help="recompute the derivation step by step")
    p.add_argument("--show-remainder", action="store_true", help="print the heat remainder of the general ansatz")
    p.add_argument("--params", default=None, help="check one choice 'a,b,c' instead")
    p.add_argument("--alpha", default=None, help="alpha of phi = alpha/t + beta/s^2 (with --params)")
    p.add_argument("--beta", default="0", help="beta of phi (with --params)")
    p.add_argument("--graph", action="store_true", help="write the step graph as DOT source")
    p.add_argument("--epsilon", default="1/100", help="exact epsilon for the final check")

    p = sub.add_parser("search", help="random sweep over (a, b, c, alpha, beta)")
    p.add_argument("--count", type=int, default=None)

    p = sub.add_parser("simulate", help="flow a closed convex curve")
    p.add_argument("source", help="generator spec (circle:R=1,N=256) or JSON curve file")
    p.add_argument("--t-end", type=float, default=None)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--n-points", type=int, default=None)
    p.add_argument("--resample-every", type=int, default=None)
    p.add_argument("--snapshot-every", type=int, default=None)
    p.add_argument("--kappa-max", type=float, default=None)
    p.add_argument("--scheme", choices=flow_engine.SCHEMES, default=None)
    p.add_argument("--fixed-dt", action="store_true", help="do not cap dt by the stability limit")

    p = sub.add_parser("verify", help="evaluate the Harnack quantity on a trace")
    p.add_argument("trace")
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--tolerance", type=float, default=None)

    p = sub.add_parser("plot", help="SVG plots of a trace")
    p.add_argument("trace")
    p.add_argument("--field", choices=plot_engine.FIELDS, default=None)
    p.add_argument("--epsilon", type=float, default=None)
    return parser


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write(df, out, stem, fmt):
    return curve_io.write_frame(df, out / f"{stem}{EXTENSIONS[fmt]}", fmt)


# --- Subcommands ---

def cmd_derive(args, settings):
    if args.show_remainder:
        print(diffpoly_engine.serialize(harnack_engine.symbolic_remainder()))
        return EXIT_OK

    if args.params:
        params = harnack_engine.AnsatzParams.from_string(args.params)
        qf = harnack_engine.critical_substitute(harnack_engine.general_remainder(params), params)
        abc_report = harnack_engine.derive_conditions(qf, params)
        print(abc_report.to_frame().to_string(index=False))
        phi_report = None
        if args.alpha is not None:
            phi = harnack_engine.PhiAnsatz(args.alpha, args.beta)
            phi_report = harnack_engine.phi_conditions(params, phi)
            print(phi_report.to_frame().to_string(index=False))
        print(summary_engine.generate_conditions_summary(params, abc_report, phi_report))
        feasible = abc_report.feasible and (phi_report is None or phi_report.feasible)
        return EXIT_OK if feasible else EXIT_FAIL

    report, G, verdicts = derivation_engine.run_derivation(harnack_engine.to_exact(args.epsilon))
    for row in report.itertuples():
        print(f"[{row.verdict}] {row.step}. {row.title}")
        print(f"    expected: {row.expected}")
        print(f"    computed: {row.computed}")
    print(summary_engine.generate_derivation_summary(report))
    _write(report, _out_dir(args), "derivation", args.fmt)
    if args.graph:
        path = _out_dir(args) / "derivation.dot"
        path.write_text(derivation_engine.to_dot(G, verdicts), encoding="utf-8")
        log.info("Wrote %s", path)
    return EXIT_OK if (report["verdict"] == derivation_engine.PASS).all() else EXIT_FAIL


def cmd_search(args, settings):
    values = config.merge(settings["search"], count=args.count, seed=args.seed)
    seed = int(values.get("seed", config.DEFAULT_SEED))
    count = int(values.get("count", config.DEFAULT_SEARCH_COUNT))
    results = harnack_engine.search(seed=seed, count=count)
    _write(results, _out_dir(args), "search", args.fmt)
    feasible = results[results["feasible"]]
    print(f"{len(feasible)} of {len(results)} samples feasible (seed {seed}).")
    if not feasible.empty:
        print(feasible[["a", "b", "c", "alpha", "beta"]].to_string(index=False))
    return EXIT_OK


def cmd_simulate(args, settings):
    flow_config = config.flow_config(
        settings["simulate"],
        dt=args.dt, t_end=args.t_end, n_points=args.n_points, resample_every=args.resample_every,
        snapshot_every=args.snapshot_every, kappa_max=args.kappa_max, scheme=args.scheme,
        adaptive=False if args.fixed_dt else None)
    curve = curve_io.load_curve(args.source)
    trace = flow_engine.run(curve, flow_config)

    out = _out_dir(args)
    _write(trace.to_frame(), out, f"{trace.name}_trace", args.fmt)
    summary = trace.summary()
    _write(pd.DataFrame([summary]), out, f"{trace.name}_summary", args.fmt)
    _write(trace.diagnostics(), out, f"{trace.name}_diagnostics", args.fmt)
    print(summary_engine.generate_flow_summary(summary))
    for violation in trace.violations:
        print(f"  violation: {violation}")
    return EXIT_OK if not trace.violations else EXIT_FAIL


def cmd_verify(args, settings):
    values = config.merge(settings["verify"], epsilon=args.epsilon, tolerance=args.tolerance)
    params = verify_engine.HarnackParams(float(values.get("epsilon", config.DEFAULT_EPSILON)))
    tolerance = float(values.get("tolerance", config.VERIFY_TOLERANCE))

    trace = curve_io.read_trace(args.trace)
    diagnostics = verify_engine.evaluate_h(trace, params)
    out = _out_dir(args)
    stem = Path(args.trace).stem
    _write(diagnostics.table, out, f"{stem}_harnack", args.fmt)
    record = diagnostics.summary()
    _write(pd.DataFrame([record]), out, f"{stem}_harnack_summary", args.fmt)
    print(summary_engine.generate_verification_summary(record, tolerance, config.TIME_GAP_TOLERANCE))
    if record["spatial_gap"] > config.SPATIAL_GAP_TOLERANCE:
        print(f"FAIL: spatial equivalence gap {record['spatial_gap']:.3g} above {config.SPATIAL_GAP_TOLERANCE:g}")
        return EXIT_FAIL
    return EXIT_OK if diagnostics.passed(tolerance) else EXIT_FAIL


def cmd_plot(args, settings):
    values = config.merge(settings["plot"], field=args.field)
    verify_values = config.merge(settings["verify"], epsilon=args.epsilon)
    params = verify_engine.HarnackParams(float(verify_values.get("epsilon", config.DEFAULT_EPSILON)))

    trace = curve_io.read_trace(args.trace)
    out = _out_dir(args)
    stem = Path(args.trace).stem
    plot_engine.plot_overlay(trace, out / f"{stem}_overlay.svg")
    diagnostics = verify_engine.evaluate_h(trace, params)
    plot_engine.plot_min_h(diagnostics, out / f"{stem}_min_h.svg")
    field = values.get("field")
    if field:
        plot_engine.plot_field(trace, out / f"{stem}_{field}.svg", field, diagnostics)
    print(f"Plots written to {out}")
    return EXIT_OK


COMMANDS = {
    "derive": cmd_derive,
    "search": cmd_search,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "plot": cmd_plot,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = [logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    try:
        settings = config.load_config(args.config) if args.config else {s: {} for s in config.CONFIG_SECTIONS}
        return COMMANDS[args.command](args, settings)
    except flow_engine.StabilityError as e:
        print(f"Stability refusal: {e} (use dt <= {e.required_dt:.6g})", file=sys.stderr)
        return EXIT_STABILITY
    except INPUT_ERRORS as e:
        print(f"Invalid input: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
