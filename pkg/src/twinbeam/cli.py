"""Command-line entry point: ``twinbeam {simulate,analyze,theory,sweep,validate}``.

Exit codes: 0 success, 2 usage error, 3 domain error, 4 I/O or format
error, 5 validation failure.
"""

from __future__ import annotations

import argparse
import math
import sys

from twinbeam import formats
from twinbeam.analysis import self_consistent_report
from twinbeam.errors import DomainError, FormatError
from twinbeam.montecarlo import SeedSpec, sample_run
from twinbeam.sweep import (
    DEFAULT_VALIDATION_GRID,
    OBJECTIVES,
    SweepSpec,
    find_optimum,
    run_sweep,
    validate,
)
from twinbeam.theory import (
    conditional_fano_formula,
    exact_conditional_fano,
    exact_nrf,
    heralding_probability,
    nrf_formula,
    photon_posterior,
)
from twinbeam.photon_stats import dist_stats

EXIT_OK = 0
EXIT_DOMAIN = 3
EXIT_IO = 4
EXIT_VALIDATION = 5


def _load_config(args) -> formats.RunConfig:
    config = formats.RunConfig()
    if args.config:
        formats.read_config(args.config, config)
    for item in args.set or ():
        if "=" not in item:
            raise FormatError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        formats.apply_setting(config, key, value, where="--set: ")
    return config


def _emit(text: str, path) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def cmd_simulate(args) -> int:
    config = _load_config(args)
    params = config.params()
    records = sample_run(params, config.shots, SeedSpec(config.seed, args.workers))
    _emit(formats.format_records(records), args.out)
    return EXIT_OK


def cmd_analyze(args) -> int:
    config = _load_config(args)
    records = formats.read_records(args.records)
    report = self_consistent_report(records, conditioning=config.m2,
                                    min_samples=config.min_samples,
                                    nrf_variant=config.nrf_variant,
                                    eps=config.eps, seed=config.seed)
    _emit(formats.format_report(report), args.out)
    if args.table:
        _emit(formats.format_conditional_table(report), args.table)
    return EXIT_OK


def cmd_theory(args) -> int:
    config = _load_config(args)
    p = config.params()
    lines = [
        f"N = {formats.fmt_float(p.N)}",
        f"mu = {formats.fmt_float(p.mu)}",
        f"eta1 = {formats.fmt_float(p.eta1)}",
        f"eta2 = {formats.fmt_float(p.eta2)}",
        f"M1 = {formats.fmt_float(p.M1)}",
        f"M2 = {formats.fmt_float(p.M2)}",
    ]
    if p.eta1 != p.eta2:
        lines.append(f"eta_closed_form = {formats.fmt_float(p.eta)}  # sqrt(eta1*eta2)")
    if p.N > 0 and p.eta1 + p.eta2 > 0:
        lines.append(f"nrf_exact = {formats.fmt_float(exact_nrf(p, config.eps))}")
        for variant in ("difference", "product"):
            value = nrf_formula(p.M1, p.M2, p.eta, p.mu, variant)
            lines.append(f"nrf_formula_{variant} = {formats.fmt_float(value)}")
    for k in config.m2:
        herald = heralding_probability(p, k, config.eps)
        lines.append(f"heralding_m2_{k} = {formats.fmt_float(herald)}")
        lines.append(f"fano_formula_m2_{k} = "
                     f"{formats.fmt_float(conditional_fano_formula(p.M, p.mu, p.eta, k))}")
        if herald > 10 * config.eps:
            lines.append(f"fano_exact_m2_{k} = "
                         f"{formats.fmt_float(exact_conditional_fano(p, k, config.eps))}")
            photon_fano = dist_stats(photon_posterior(p, k, config.eps)).fano
            lines.append(f"photon_fano_m2_{k} = {formats.fmt_float(photon_fano)}")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = _load_config(args)
    axis = args.axis or config.axis
    if axis is None:
        raise DomainError("sweep needs an axis (--axis or 'axis' in the config)")
    grid = formats.parse_grid(args.grid) if args.grid else config.grid
    if grid is None:
        raise DomainError("sweep needs a grid (--grid or 'grid' in the config)")
    objectives = (tuple(args.objectives.split(",")) if args.objectives
                  else config.objectives or ("conditional_fano_exact",
                                             "conditional_fano_formula", "heralding"))
    fixed = config.fixed_values()
    if axis == "M":
        fixed.pop("N", None)
    spec = SweepSpec(axis, grid, fixed, conditioning=config.m2,
                     objectives=objectives, eps=config.eps)
    rows = run_sweep(spec, workers=args.workers)
    _emit(formats.format_sweep(rows, axis, spec.objectives), args.out)
    if args.optimum:
        name, _, direction = args.optimum.partition(":")
        best = find_optimum(rows, name, direction or "min")
        value = best.heralding if name == "heralding" else best.values[name]
        print(f"optimum {name} ({direction or 'min'}): {axis}={formats.fmt_float(best.axis_value)} "
              f"m2={best.m2} value={formats.fmt_float(value)}", file=sys.stderr)
    return EXIT_OK


def _float_list(text):
    return [float(t) for t in text.split(",") if t.strip()]


def cmd_validate(args) -> int:
    config = _load_config(args)
    if any(v is not None for v in (args.M, args.mu, args.eta, args.m2)):
        Ms = _float_list(args.M) if args.M else [0.5, 1.0, 2.0, 3.2]
        mus = _float_list(args.mu) if args.mu else [2.0, 10.0, 100.0]
        etas = _float_list(args.eta) if args.eta else [0.15]
        m2s = [int(v) for v in _float_list(args.m2)] if args.m2 else [1, 2]
        grid = [(M, mu, eta, k) for M in Ms for mu in mus for eta in etas for k in m2s]
    else:
        grid = list(DEFAULT_VALIDATION_GRID)
    report = validate(grid, shots=config.shots, seed=config.seed, mc=not args.no_mc,
                      min_samples=config.min_samples, eps=config.eps, workers=args.workers)
    _emit(formats.format_validation(report), args.out)
    worst = max((r["fano_deviation"] for r in report.rows
                 if math.isfinite(r["fano_deviation"])), default=math.nan)
    print(f"validated {len(report.rows)} points; closed-form Fano max deviation "
          f"{formats.fmt_float(worst)} (reported only); {len(report.failures)} failing checks",
          file=sys.stderr)
    return EXIT_VALIDATION if report.failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twinbeam",
        description="Twin-beam photon statistics: simulate, analyze, theory, sweep, validate.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, workers=False):
        p.add_argument("-c", "--config", help="key = value config file")
        p.add_argument("-s", "--set", action="append", metavar="KEY=VALUE",
                       help="override a config key (repeatable)")
        p.add_argument("-o", "--out", help="output file (default: stdout)")
        if workers:
            p.add_argument("-j", "--workers", type=int, default=1)

    p = sub.add_parser("simulate", help="sample pulse records to CSV")
    common(p, workers=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="self-consistent analysis of a records CSV")
    common(p)
    p.add_argument("records", help="records CSV (shot,m1,m2)")
    p.add_argument("--table", help="write the conditional-state table CSV here")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("theory", help="closed forms and exact model at one point")
    common(p)
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("sweep", help="evaluate objectives along one parameter axis")
    common(p, workers=True)
    p.add_argument("--axis", choices=("M", "mu", "eta", "m2"))
    p.add_argument("--grid", help="'a,b,c' or 'start:stop:num'")
    p.add_argument("--objectives", help=f"comma list from {', '.join(OBJECTIVES)}")
    p.add_argument("--optimum", metavar="OBJECTIVE[:min|max]",
                   help="report the extremal row on stderr")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="closed forms and Monte Carlo versus the exact model")
    common(p, workers=True)
    p.add_argument("--M", help="comma list of detected means")
    p.add_argument("--mu", help="comma list of mode counts")
    p.add_argument("--eta", help="comma list of efficiencies")
    p.add_argument("--m2", help="comma list of conditioning values")
    p.add_argument("--no-mc", action="store_true", help="skip the Monte Carlo checks")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FormatError as exc:
        print(f"twinbeam: {exc}", file=sys.stderr)
        return EXIT_IO
    except DomainError as exc:
        print(f"twinbeam: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"twinbeam: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
