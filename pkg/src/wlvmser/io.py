"""Dataset ingestion and report emission.

Measurement files use a long CSV schema, one quantity per row:

    part_id,cell_type,quantity,value

with ``quantity`` one of ``ser_uSEU_per_bit_s``, ``rel_stat_unc``,
``v_mewlvm_mV``, ``sigma_wlvm_mV`` or ``vdd_mV`` (the supply row carries
an empty cell_type since it belongs to the whole part).  The long format
survives partial datasets: parts awaiting prediction carry margin rows
only.

Reports are plot-ready text files: the fit as JSON, predictions as CSV
and scatter/histogram/cumulative series as TSV.  Serialization is
deterministic so reruns over identical inputs are byte-identical.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .calibration import CalibrationFit, Prediction
from .errors import IngestError
from .protocols import SerMeasurement, SweepResult
from .refdata import CELL_TYPE_ORDER, CELL_TYPES

QUANTITY_SER = "ser_uSEU_per_bit_s"
QUANTITY_REL_STAT = "rel_stat_unc"
QUANTITY_MARGIN_MU = "v_mewlvm_mV"
QUANTITY_MARGIN_SIGMA = "sigma_wlvm_mV"
QUANTITY_VDD = "vdd_mV"

QUANTITIES = (QUANTITY_SER, QUANTITY_REL_STAT, QUANTITY_MARGIN_MU,
              QUANTITY_MARGIN_SIGMA, QUANTITY_VDD)

_HEADER = ["part_id", "cell_type", "quantity", "value"]

DEFAULT_VDD_MV = 1200
DEFAULT_GEOM_UNC = 0.03


@dataclass
class PartDataset:
    """Measurements of one part, keyed by cell type.

    Either record may be missing for a type; calibration uses only the
    types carrying both the SER measurement and the margin sweep.
    """

    part_id: str
    v_dd: int = DEFAULT_VDD_MV
    ser: dict[str, SerMeasurement] = field(default_factory=dict)
    sweeps: dict[str, SweepResult] = field(default_factory=dict)

    def cell_types(self) -> list[str]:
        """Types present in either record, canonical order first."""
        present = set(self.ser) | set(self.sweeps)
        ordered = [t for t in CELL_TYPE_ORDER if t in present]
        ordered += sorted(present - set(CELL_TYPE_ORDER))
        return ordered

    def pairs(self) -> list[tuple[SerMeasurement, SweepResult]]:
        """(SER, sweep) pairs for the types measured both ways."""
        return [(self.ser[t], self.sweeps[t]) for t in self.cell_types()
                if t in self.ser and t in self.sweeps]


# ---------------------------------------------------------------------------
# measurement CSV
# ---------------------------------------------------------------------------

def ingest_measurements_csv(path, rel_geom_unc: float = DEFAULT_GEOM_UNC) -> list[PartDataset]:
    """Parse a measurement file into per-part datasets.

    Malformed rows are rejected with their line number.  Duplicate
    (part, type, quantity) keys are errors.
    """
    path = Path(path)
    raw: dict[str, dict] = {}
    order: list[str] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError(f"{path}: empty file, expected header {_HEADER}")
        if [h.strip() for h in header] != _HEADER:
            raise IngestError(f"{path}: header {header} does not match {_HEADER}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not f.strip() for f in row):
                continue
            if len(row) != 4:
                raise IngestError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
            part_id, cell_type, quantity, value = (f.strip() for f in row)
            if not part_id:
                raise IngestError(f"{path}:{lineno}: missing part_id")
            if quantity not in QUANTITIES:
                raise IngestError(f"{path}:{lineno}: unknown quantity {quantity!r}")
            if quantity == QUANTITY_VDD:
                if cell_type:
                    raise IngestError(
                        f"{path}:{lineno}: vdd_mV rows must leave cell_type empty")
            elif cell_type not in CELL_TYPES:
                raise IngestError(f"{path}:{lineno}: unknown cell type {cell_type!r}")
            try:
                num = float(value)
            except ValueError:
                raise IngestError(f"{path}:{lineno}: non-numeric value {value!r}")
            if part_id not in raw:
                raw[part_id] = {"vdd": None, "types": {}}
                order.append(part_id)
            bucket = raw[part_id]
            if quantity == QUANTITY_VDD:
                if bucket["vdd"] is not None:
                    raise IngestError(f"{path}:{lineno}: duplicate vdd_mV for part {part_id}")
                bucket["vdd"] = num
            else:
                per_type = bucket["types"].setdefault(cell_type, {})
                if quantity in per_type:
                    raise IngestError(
                        f"{path}:{lineno}: duplicate {quantity} for part "
                        f"{part_id} type {cell_type}")
                per_type[quantity] = num

    datasets = []
    for part_id in order:
        bucket = raw[part_id]
        v_dd = int(bucket["vdd"]) if bucket["vdd"] is not None else DEFAULT_VDD_MV
        ds = PartDataset(part_id=part_id, v_dd=v_dd)
        for cell_type, vals in bucket["types"].items():
            has_ser = QUANTITY_SER in vals
            has_rel = QUANTITY_REL_STAT in vals
            if has_ser != has_rel:
                raise IngestError(
                    f"{path}: part {part_id} type {cell_type}: "
                    f"{QUANTITY_SER} and {QUANTITY_REL_STAT} must come together")
            if has_ser:
                ds.ser[cell_type] = SerMeasurement.summary(
                    part_id, cell_type, vals[QUANTITY_SER],
                    vals[QUANTITY_REL_STAT], rel_geom_unc)
            if QUANTITY_MARGIN_MU in vals:
                ds.sweeps[cell_type] = SweepResult.summary(
                    part_id, cell_type, vals[QUANTITY_MARGIN_MU],
                    vals.get(QUANTITY_MARGIN_SIGMA, math.nan),
                    v_nominal=v_dd)
            elif QUANTITY_MARGIN_SIGMA in vals:
                raise IngestError(
                    f"{path}: part {part_id} type {cell_type}: "
                    f"{QUANTITY_MARGIN_SIGMA} without {QUANTITY_MARGIN_MU}")
        datasets.append(ds)
    return datasets


def _fmt(value: float) -> str:
    """Shortest exact decimal form; integers lose the trailing .0"""
    if float(value).is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value))


def emit_measurements_csv(datasets, path) -> Path:
    """Write datasets back out in the ingestion schema (round-trip safe)."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_HEADER)
        for ds in datasets:
            for cell_type in ds.cell_types():
                meas = ds.ser.get(cell_type)
                if meas is not None:
                    writer.writerow([ds.part_id, cell_type, QUANTITY_SER, _fmt(meas.ser)])
                    writer.writerow([ds.part_id, cell_type, QUANTITY_REL_STAT,
                                     _fmt(meas.rel_stat_unc)])
                sweep = ds.sweeps.get(cell_type)
                if sweep is not None:
                    writer.writerow([ds.part_id, cell_type, QUANTITY_MARGIN_MU,
                                     _fmt(sweep.mu)])
                    if not math.isnan(sweep.sigma):
                        writer.writerow([ds.part_id, cell_type, QUANTITY_MARGIN_SIGMA,
                                         _fmt(sweep.sigma)])
            writer.writerow([ds.part_id, "", QUANTITY_VDD, _fmt(ds.v_dd)])
    return path


# ---------------------------------------------------------------------------
# fit JSON, protocol logs
# ---------------------------------------------------------------------------

def write_fit_json(fit: CalibrationFit, path) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(fit.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def read_fit_json(path) -> CalibrationFit:
    with open(path, "r", encoding="utf-8") as fh:
        return CalibrationFit.from_dict(json.load(fh))


def write_ser_log(meas: SerMeasurement, path) -> Path:
    """Window-by-window SEU log of one SER test."""
    if meas.window_counts is None:
        raise ValueError("summary-only measurement has no window history")
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["window_index", "t_start_s", "n_i", "cumulative"])
        cumulative = 0
        for i, n_i in enumerate(meas.window_counts):
            cumulative += int(n_i)
            writer.writerow([i, _fmt(i * meas.ts), int(n_i), cumulative])
    return path


def write_sweep_log(result: SweepResult, path) -> Path:
    """Step-by-step failure log of one voltage sweep."""
    if result.histogram is None:
        raise ValueError("summary-only sweep has no step history")
    path = Path(path)
    lowest = min(result.histogram)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "v_mV", "new_failures", "cumulative_failures"])
        cumulative = 0
        step = 0
        v = result.v_nominal
        while v > lowest:
            step += 1
            v = max(result.v_nominal - result.delta_v * step, 0)
            new = result.histogram.get(v, 0)
            cumulative += new
            writer.writerow([step, v, new, cumulative])
    return path


def write_event_log(events, path) -> Path:
    """Raw upset events for replay/debug."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_s", "cell_index"])
        for t, c in zip(events.times, events.cells):
            writer.writerow([repr(float(t)), int(c)])
    return path


# ---------------------------------------------------------------------------
# report bundle
# ---------------------------------------------------------------------------

@dataclass
class ScatterPoint:
    part_id: str
    cell_type: str
    x: float
    y: float
    sigma_y: float
    y_fit: float


@dataclass
class PredictionRow:
    part_id: str
    cell_type: str
    v_wlvm_v: float
    prediction: Prediction


@dataclass
class ReportBundle:
    """Everything one report run produces, ready for serialization."""

    fit: CalibrationFit
    predictions: list[PredictionRow] = field(default_factory=list)
    scatter: list[ScatterPoint] = field(default_factory=list)
    histograms: dict[tuple[str, str, str], dict[int, int]] = field(default_factory=dict)
    cumulative: dict[tuple[str, str], list[tuple[int, float, int]]] = field(default_factory=dict)


def write_predictions_csv(predictions, path) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["part_id", "cell_type", "v_wlvm_V",
                         "ser_uSEU_per_bit_s", "sigma_uSEU_per_bit_s",
                         "below_floor"])
        for row in predictions:
            writer.writerow([row.part_id, row.cell_type, _fmt(row.v_wlvm_v),
                             _fmt(row.prediction.ser), _fmt(row.prediction.sigma),
                             int(row.prediction.below_physical_floor)])
    return path


def emit_report(bundle: ReportBundle, out_dir) -> list[str]:
    """Write the report files; returns the manifest (sorted file names)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = []

    write_fit_json(bundle.fit, out / "fit.json")
    manifest.append("fit.json")

    write_predictions_csv(bundle.predictions, out / "predictions.csv")
    manifest.append("predictions.csv")

    with open(out / "scatter_fit.tsv", "w", encoding="utf-8") as fh:
        fh.write("part_id\tcell_type\tx_V\ty\tsigma_y\ty_fit\n")
        for p in bundle.scatter:
            fh.write(f"{p.part_id}\t{p.cell_type}\t{_fmt(p.x)}\t{_fmt(p.y)}"
                     f"\t{_fmt(p.sigma_y)}\t{_fmt(p.y_fit)}\n")
    manifest.append("scatter_fit.tsv")

    for (quantity, part_id, cell_type), hist in sorted(bundle.histograms.items()):
        name = f"hist_{quantity}_{part_id}_{cell_type}.tsv"
        with open(out / name, "w", encoding="utf-8") as fh:
            fh.write("v_mV\tcount\n")
            for v in sorted(hist):
                fh.write(f"{v}\t{hist[v]}\n")
        manifest.append(name)

    for (part_id, cell_type), series in sorted(bundle.cumulative.items()):
        name = f"cumulative_seu_{part_id}_{cell_type}.tsv"
        with open(out / name, "w", encoding="utf-8") as fh:
            fh.write("window_index\tt_start_s\tcumulative\n")
            for idx, t_start, cum in series:
                fh.write(f"{idx}\t{_fmt(t_start)}\t{cum}\n")
        manifest.append(name)

    return sorted(manifest)
