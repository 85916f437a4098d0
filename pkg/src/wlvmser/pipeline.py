"""End-to-end orchestration: virtual parts, measurements, reports.

``simulate_parts`` builds a batch of virtual parts from a variation model
and a ground-truth rate law, runs the accelerated SER test and the margin
sweep on every block, and returns the same per-part datasets an ingested
measurement file would produce.  The ground-truth law maps each block's
true mean margin to its upset rate, which makes the whole chain testable:
calibrating the simulated measurements must recover the law.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .calibration import (CalibrationFit, build_weighted_points, predict_ser,
                          weighted_linfit)
from .io import (PartDataset, PredictionRow, ReportBundle, ScatterPoint)
from .protocols import (run_hold_sweep, run_read_sweep, run_ser_test,
                        run_wlvm_sweep, word_line_voltage_margin)
from .radiation import AlphaSource
from .refdata import CELL_TYPE_ORDER
from .sram import VariationModel, sample_array


@dataclass(frozen=True)
class LinearSerLaw:
    """Ground-truth upset-rate law: rate = m * margin + b, clamped at 0.

    Margin in volts, rate in µSEU per bit-second.  Defaults reproduce the
    published regression of the bundled reference dataset.
    """

    m: float = 4.32
    b: float = -0.25

    def rate(self, margin_v: float) -> float:
        return max(self.m * margin_v + self.b, 0.0)


def simulate_parts(
    model: VariationModel | None = None,
    law: LinearSerLaw | None = None,
    n_parts: int = 5,
    cell_types=CELL_TYPE_ORDER,
    duration: float = 432_000.0,
    ts: float = 1800.0,
    delta_v: int = 10,
    seed=0,
    v_dd: int | None = None,
    geom_spread: float = 0.03,
    rel_geom_unc: float = 0.03,
    pattern: str = "zeros",
    rows: int = 64,
    cols: int = 64,
) -> list[PartDataset]:
    """Simulate ``n_parts`` virtual parts and measure each block.

    Per part, one Gaussian offset (sigma ``model.sigma_part``) shifts all
    threshold means and one flux factor is drawn uniformly within
    ``+-geom_spread``.  Per block the ground-truth rate is the law applied
    to the part's true mean margin at ``v_dd``.  Deterministic under a
    fixed seed.
    """
    model = model if model is not None else VariationModel.default()
    law = law if law is not None else LinearSerLaw()
    v_dd = int(v_dd) if v_dd is not None else model.v_dd_nominal
    root = np.random.SeedSequence(seed)
    part_seqs = root.spawn(n_parts)

    datasets = []
    for p, part_seq in enumerate(part_seqs):
        part_id = str(p + 1)
        prng = np.random.default_rng(part_seq)
        offset = prng.normal(0.0, model.sigma_part)
        geom = 1.0 + prng.uniform(-geom_spread, geom_spread)
        ds = PartDataset(part_id=part_id, v_dd=v_dd)
        block_seqs = part_seq.spawn(2 * len(cell_types))
        for i, cell_type in enumerate(cell_types):
            tv = model.for_type(cell_type)
            margin_v = (v_dd - (tv.mu_vwlmin + offset)) / 1000.0
            rate = law.rate(margin_v)
            array = sample_array(
                cell_type, model, part_offset=offset, seed=block_seqs[2 * i],
                rows=rows, cols=cols, true_seu_rate=rate, part_id=part_id,
                v_dd=v_dd)
            source = AlphaSource(rate_per_bit=rate, geom_factor=geom,
                                 rel_geom_unc=rel_geom_unc)
            ds.ser[cell_type] = run_ser_test(
                array, source, ts, duration, seed=block_seqs[2 * i + 1],
                pattern=pattern)
            ds.sweeps[cell_type] = run_wlvm_sweep(array, delta_v)
        datasets.append(ds)
    return datasets


def simulate_supply_sweeps(
    model: VariationModel | None = None,
    cell_types=CELL_TYPE_ORDER,
    kind: str = "hold",
    delta_v: int = 10,
    seed=0,
    rows: int = 64,
    cols: int = 64,
):
    """Control-experiment supply sweeps (hold or read) for one part."""
    model = model if model is not None else VariationModel.default()
    runner = {"hold": run_hold_sweep, "read": run_read_sweep}.get(kind)
    if runner is None:
        raise ValueError(f"kind must be 'hold' or 'read', got {kind!r}")
    seqs = np.random.SeedSequence(seed).spawn(len(cell_types))
    results = []
    for cell_type, seq in zip(cell_types, seqs):
        array = sample_array(cell_type, model, seed=seq, rows=rows, cols=cols,
                             part_id="1")
        results.append(runner(array, delta_v))
    return results


def calibrate_datasets(datasets, weight_mode: str = "combined") -> CalibrationFit:
    """Fit over all parts, honoring each dataset's own supply voltage."""
    points = []
    for ds in datasets:
        points.extend(build_weighted_points(ds.pairs(), ds.v_dd, weight_mode))
    fit = weighted_linfit(points)
    return replace(fit, weight_mode=weight_mode)


def build_report_bundle(datasets, weight_mode: str = "combined") -> ReportBundle:
    """Calibrate the datasets and assemble every plottable series."""
    fit = calibrate_datasets(datasets, weight_mode)
    bundle = ReportBundle(fit=fit)

    quantity_tag = {"word_line": "wlvm", "vdd_hold": "vdd_hold",
                    "vdd_read": "vdd_read"}
    for ds in datasets:
        for cell_type in ds.cell_types():
            sweep = ds.sweeps.get(cell_type)
            meas = ds.ser.get(cell_type)
            if sweep is not None:
                margin_v = word_line_voltage_margin(ds.v_dd, sweep.mu) / 1000.0
                bundle.predictions.append(PredictionRow(
                    ds.part_id, cell_type, margin_v, predict_ser(fit, margin_v)))
                if sweep.histogram:
                    key = (quantity_tag[sweep.swept_quantity], ds.part_id, cell_type)
                    bundle.histograms[key] = dict(sweep.histogram)
            if meas is not None and sweep is not None:
                margin_v = word_line_voltage_margin(ds.v_dd, sweep.mu) / 1000.0
                [pt] = build_weighted_points([(meas, sweep)], ds.v_dd, weight_mode)
                bundle.scatter.append(ScatterPoint(
                    ds.part_id, cell_type, pt.x, pt.y, pt.sigma_y,
                    fit.m * pt.x + fit.b))
            if meas is not None and meas.window_counts is not None:
                series = []
                cumulative = 0
                for i, n_i in enumerate(meas.window_counts):
                    cumulative += int(n_i)
                    series.append((i, i * meas.ts, cumulative))
                bundle.cumulative[(ds.part_id, cell_type)] = series
    return bundle
