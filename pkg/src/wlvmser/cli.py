"""Command-line interface.

Subcommands:

* ``simulate``    build virtual parts, run SER tests + margin sweeps,
                  write a measurement CSV
* ``ser-test``    one accelerated SER test on one block
* ``sweep``       one margin/hold/read sweep on one block
* ``calibrate``   measurement CSV -> weighted line fit (JSON)
* ``predict``     fit JSON + margins -> predicted SER
* ``paper-repro`` re-fit the bundled reference dataset and check the
                  result against its published regression values
* ``report``      full report bundle (fit, predictions, plot series)

All randomized subcommands accept ``--seed`` and are reproducible.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import io as wio
from .calibration import WEIGHT_MODES, predict_ser
from .errors import ConfigurationError, DegenerateFitError, IngestError, SamplingTimeError
from .pipeline import (LinearSerLaw, build_report_bundle, calibrate_datasets,
                       simulate_parts)
from .protocols import run_hold_sweep, run_read_sweep, run_ser_test, run_wlvm_sweep, word_line_voltage_margin
from .radiation import AlphaSource
from .refdata import (CELL_TYPE_ORDER, PAPER_MATCHING_WEIGHT_MODE,
                      PUBLISHED_FIT, REPRO_WINDOWS, SIMULATED_VWL_MIN_MV,
                      load_reference_dataset)
from .sram import VariationModel, sample_array


def _load_model(path: str | None) -> VariationModel:
    return VariationModel.from_json(path) if path else VariationModel.default()


def _load_datasets(source: str, geom_unc: float):
    if source == "bundled":
        return wio.ingest_measurements_csv(
            Path(__file__).parent / "data" / "reference_measurements.csv", geom_unc)
    return wio.ingest_measurements_csv(source, geom_unc)


def _print_fit(fit, indent: str = "  "):
    print(f"{indent}m        = {fit.m:.4f} +- {fit.sigma_m:.4f}  uSEU/(bit*s*V)")
    print(f"{indent}b        = {fit.b:+.4f} +- {fit.sigma_b:.4f}  uSEU/(bit*s)")
    print(f"{indent}chi2     = {fit.chi2:.3f}  (nu = {fit.nu}, chi2_red = {fit.chi2_red:.3f})")
    print(f"{indent}R2       = {fit.r2:.4f}")
    print(f"{indent}points   = {fit.n_points}, weights = {fit.weight_mode}")


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------

def _cmd_simulate(args) -> int:
    model = _load_model(args.model)
    law = LinearSerLaw(args.law_m, args.law_b)
    datasets = simulate_parts(
        model=model, law=law, n_parts=args.parts,
        cell_types=args.types.split(","), duration=args.duration, ts=args.ts,
        delta_v=args.delta_v, seed=args.seed, v_dd=args.vdd,
        geom_spread=args.geom_spread, pattern=args.pattern)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = wio.emit_measurements_csv(datasets, out_dir / "measurements.csv")
    print(f"simulated {len(datasets)} parts x {len(datasets[0].cell_types())} blocks")
    for ds in datasets:
        for cell_type in ds.cell_types():
            meas = ds.ser[cell_type]
            sweep = ds.sweeps[cell_type]
            print(f"  part {ds.part_id} {cell_type}: ser = {meas.ser:.3f} "
                  f"(n_tot = {meas.n_tot}), mu = {sweep.mu:.1f} mV, "
                  f"sigma = {sweep.sigma:.1f} mV")
    if args.emit_logs:
        for ds in datasets:
            for cell_type in ds.cell_types():
                wio.write_ser_log(ds.ser[cell_type],
                                  out_dir / f"ser_log_{ds.part_id}_{cell_type}.csv")
                wio.write_sweep_log(ds.sweeps[cell_type],
                                    out_dir / f"sweep_log_{ds.part_id}_{cell_type}.csv")
    print(f"wrote {csv_path}")
    return 0


def _cmd_ser_test(args) -> int:
    model = _load_model(args.model)
    array = sample_array(args.cell_type, model, seed=args.seed,
                         true_seu_rate=args.rate, v_dd=args.vdd)
    source = AlphaSource(rate_per_bit=args.rate, geom_factor=args.geom_factor)
    meas = run_ser_test(array, source, args.ts, args.duration,
                        seed=args.seed + 1, pattern=args.pattern)
    print(f"part {meas.part_id} {meas.cell_type}: "
          f"ser = {meas.ser:.4f} uSEU/(bit*s), n_tot = {meas.n_tot}, "
          f"windows = {meas.n_windows} x {meas.ts:.0f} s, "
          f"rel_stat = {meas.rel_stat_unc:.4f}")
    if args.out:
        wio.write_ser_log(meas, args.out)
        print(f"wrote {args.out}")
    return 0


def _cmd_sweep(args) -> int:
    model = _load_model(args.model)
    array = sample_array(args.cell_type, model, part_offset=args.part_offset,
                         seed=args.seed, v_dd=args.vdd)
    runner = {"wlvm": run_wlvm_sweep, "hold": run_hold_sweep,
              "read": run_read_sweep}[args.kind]
    result = runner(array, args.delta_v)
    print(f"{result.swept_quantity} sweep, {result.n_cells} cells, "
          f"delta_v = {result.delta_v} mV:")
    print(f"  mu = {result.mu:.2f} mV, sigma = {result.sigma:.2f} mV, "
          f"se_mean = {result.se_mean:.3f} mV")
    if args.kind == "wlvm":
        margin = word_line_voltage_margin(array.v_dd, result.mu)
        print(f"  margin = {margin:.2f} mV at v_dd = {array.v_dd} mV")
    if args.out:
        wio.write_sweep_log(result, args.out)
        print(f"wrote {args.out}")
    return 0


def _cmd_calibrate(args) -> int:
    datasets = _load_datasets(args.input, args.geom_unc)
    fit = calibrate_datasets(datasets, args.weight_mode)
    n_pairs = sum(len(ds.pairs()) for ds in datasets)
    print(f"calibrated {n_pairs} (margin, SER) pairs from {len(datasets)} parts:")
    _print_fit(fit)
    if args.out:
        wio.write_fit_json(fit, args.out)
        print(f"wrote {args.out}")
    return 0


def _cmd_predict(args) -> int:
    fit = wio.read_fit_json(args.fit)
    rows = []
    if args.v_wlvm is not None:
        rows.append(("-", "-", args.v_wlvm))
    if args.margins:
        for ds in wio.ingest_measurements_csv(args.margins):
            for cell_type, sweep in sorted(ds.sweeps.items()):
                margin_v = word_line_voltage_margin(ds.v_dd, sweep.mu) / 1000.0
                rows.append((ds.part_id, cell_type, margin_v))
    if not rows:
        print("predict: need --v-wlvm and/or --margins", file=sys.stderr)
        return 2
    print("part cell_type  v_wlvm_V  ser_pred  sigma")
    predictions = []
    for part_id, cell_type, margin_v in rows:
        pred = predict_ser(fit, margin_v)
        flag = "  (below physical floor)" if pred.below_physical_floor else ""
        print(f"{part_id:>4} {cell_type:>9}  {margin_v:8.4f}  {pred.ser:8.4f}  "
              f"{pred.sigma:.4f}{flag}")
        predictions.append(wio.PredictionRow(part_id, cell_type, margin_v, pred))
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        wio.write_predictions_csv(predictions, out_dir / "predictions.csv")
        print(f"wrote {out_dir / 'predictions.csv'}")
    return 0


def _in_window(value, lo, hi) -> bool:
    return lo <= value <= hi


def _cmd_paper_repro(args) -> int:
    datasets = load_reference_dataset()
    part1 = datasets[0]
    print("margins at nominal supply, simulated thresholds vs part 1 measurements:")
    print("  type   simulated (mV)   measured (mV)")
    for cell_type in CELL_TYPE_ORDER:
        simulated = part1.v_dd - SIMULATED_VWL_MIN_MV[cell_type]
        measured = word_line_voltage_margin(part1.v_dd, part1.sweeps[cell_type].mu)
        print(f"  {cell_type:<4} {simulated:>11} {measured:>15.0f}")
    print()
    print("weighted line fits of the bundled reference dataset "
          f"({sum(len(d.pairs()) for d in datasets)} points):")
    fits = {}
    for mode in WEIGHT_MODES:
        fits[mode] = calibrate_datasets(datasets, mode)
        f = fits[mode]
        print(f"  {mode:<10}  m = {f.m:.4f} +- {f.sigma_m:.4f}   "
              f"b = {f.b:+.4f} +- {f.sigma_b:.4f}   chi2 = {f.chi2:7.2f}   "
              f"chi2_red = {f.chi2_red:.3f}   R2 = {f.r2:.4f}")
    pub = PUBLISHED_FIT
    print(f"  published   m = {pub['m']:.4f} +- {pub['sigma_m']:.4f}   "
          f"b = {pub['b']:+.4f} +- {pub['sigma_b']:.4f}   "
          f"chi2 = {pub['chi2']:7.2f}   chi2_red = {pub['chi2_red']:.3f}   "
          f"R2 = {pub['r2']:.4f}")

    mode = args.weight_mode or PAPER_MATCHING_WEIGHT_MODE
    fit = fits[mode]
    print(f"\nchecks ({mode} weights):")
    checks = [
        ("m", fit.m, REPRO_WINDOWS["m"]),
        ("b", fit.b, REPRO_WINDOWS["b"]),
        ("nu", fit.nu, REPRO_WINDOWS["nu"]),
        ("chi2_red", fit.chi2_red, REPRO_WINDOWS["chi2_red"]),
        ("R2", fit.r2, REPRO_WINDOWS["r2"]),
    ]
    all_ok = True
    for name, value, (lo, hi) in checks:
        ok = _in_window(value, lo, hi)
        all_ok &= ok
        target = f"[{lo:g}, {hi:g}]" if hi != float("inf") else f">= {lo:g}"
        delta = value - pub[name.lower()]
        print(f"  {name:<8} = {value:8.4f}  target {target:<16} "
              f"delta vs published = {delta:+.4f}  {'PASS' if ok else 'FAIL'}")
    print(f"\noverall: {'PASS' if all_ok else 'FAIL'}")
    if args.out:
        wio.write_fit_json(fit, args.out)
        print(f"wrote {args.out}")
    return 0 if all_ok else 1


def _cmd_report(args) -> int:
    if args.simulate:
        model = _load_model(args.model)
        datasets = simulate_parts(model=model, seed=args.seed)
    else:
        datasets = _load_datasets(args.input, args.geom_unc)
    bundle = build_report_bundle(datasets, args.weight_mode)
    manifest = wio.emit_report(bundle, args.out)
    print(f"fit ({bundle.fit.weight_mode} weights):")
    _print_fit(bundle.fit)
    print(f"report written to {args.out}:")
    for name in manifest:
        print(f"  {name}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wlvmser",
        description="Virtual SRAM test chip: estimate alpha-SER from "
                    "word-line voltage-margin measurements.")
    sub = parser.add_subparsers(dest="command", metavar="command")

    def add_model(p):
        p.add_argument("--model", default=None,
                       help="variation-model JSON (default: bundled)")

    p = sub.add_parser("simulate", help="simulate parts and measure them")
    add_model(p)
    p.add_argument("--parts", type=int, default=5)
    p.add_argument("--types", default=",".join(CELL_TYPE_ORDER))
    p.add_argument("--law-m", type=float, default=4.32,
                   help="ground-truth slope, uSEU/(bit*s*V)")
    p.add_argument("--law-b", type=float, default=-0.25,
                   help="ground-truth intercept, uSEU/(bit*s)")
    p.add_argument("--duration", type=float, default=432_000.0,
                   help="irradiation time per block, s")
    p.add_argument("--ts", type=float, default=1800.0, help="sampling period, s")
    p.add_argument("--delta-v", type=int, default=10, help="sweep step, mV")
    p.add_argument("--vdd", type=int, default=None, help="supply, mV")
    p.add_argument("--geom-spread", type=float, default=0.03)
    p.add_argument("--pattern", default="zeros",
                   choices=["zeros", "ones", "checkerboard", "random"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--emit-logs", action="store_true")
    p.add_argument("--out", default="out")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("ser-test", help="one accelerated SER test")
    add_model(p)
    p.add_argument("--cell-type", default="SS", choices=list(CELL_TYPE_ORDER))
    p.add_argument("--rate", type=float, default=1.46,
                   help="true upset rate, uSEU/(bit*s)")
    p.add_argument("--ts", type=float, default=1800.0)
    p.add_argument("--duration", type=float, default=432_000.0)
    p.add_argument("--geom-factor", type=float, default=1.0)
    p.add_argument("--vdd", type=int, default=None)
    p.add_argument("--pattern", default="zeros",
                   choices=["zeros", "ones", "checkerboard", "random"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="window log CSV")
    p.set_defaults(func=_cmd_ser_test)

    p = sub.add_parser("sweep", help="one voltage sweep")
    add_model(p)
    p.add_argument("--kind", default="wlvm", choices=["wlvm", "hold", "read"])
    p.add_argument("--cell-type", default="SS", choices=list(CELL_TYPE_ORDER))
    p.add_argument("--delta-v", type=int, default=10)
    p.add_argument("--part-offset", type=float, default=0.0,
                   help="part-level mean shift, mV")
    p.add_argument("--vdd", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="sweep log CSV")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("calibrate", help="fit a measurement CSV")
    p.add_argument("--input", default="bundled",
                   help="measurement CSV path, or 'bundled'")
    p.add_argument("--weight-mode", default="combined", choices=list(WEIGHT_MODES))
    p.add_argument("--geom-unc", type=float, default=0.03)
    p.add_argument("--out", default=None, help="fit JSON path")
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("predict", help="predict SER from margins")
    p.add_argument("--fit", required=True, help="fit JSON path")
    p.add_argument("--v-wlvm", type=float, default=None,
                   help="single margin value, volts")
    p.add_argument("--margins", default=None,
                   help="measurement CSV with margin rows")
    p.add_argument("--out", default=None, help="directory for predictions.csv")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("paper-repro",
                       help="reproduce the published reference regression")
    p.add_argument("--weight-mode", default=None, choices=list(WEIGHT_MODES),
                   help=f"mode to check (default: {PAPER_MATCHING_WEIGHT_MODE})")
    p.add_argument("--out", default=None, help="fit JSON path")
    p.set_defaults(func=_cmd_paper_repro)

    p = sub.add_parser("report", help="emit fit + predictions + plot data")
    add_model(p)
    p.add_argument("--input", default="bundled")
    p.add_argument("--simulate", action="store_true",
                   help="build the report from a fresh simulation instead")
    p.add_argument("--weight-mode", default="combined", choices=list(WEIGHT_MODES))
    p.add_argument("--geom-unc", type=float, default=0.03)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="report")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "func", None):
        parser.print_usage(sys.stderr)
        return 2
    try:
        return args.func(args)
    except (ConfigurationError, DegenerateFitError, IngestError,
            SamplingTimeError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
