"""Executors for the measurement procedures of the virtual test chip.

Four procedures are implemented:

* accelerated SER test — write a known pattern, then repeatedly wait one
  sampling period, read the whole memory and count the cells whose state
  changed since the previous read;
* word-line margin sweep — write at nominal, rewrite the opposite value
  at a word-line voltage lowered step by step, and register each cell at
  the first voltage where the write no longer takes;
* hold sweep / read sweep — the same descending-voltage loop applied to
  the core supply during retention or read.

Sweeps record a per-cell threshold estimate as the first failing voltage
plus half a step (midpoint correction), which removes the quantization
bias of the voltage grid.

The SER test counts observed flips: a cell hit an even number of times
within one sampling period reads back unchanged and those upsets are
missed, exactly as on the bench.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigurationError, ProtocolError, SamplingTimeError
from .radiation import AlphaSource, generate_events, undetected_fraction
from .sram import MemoryArray

TS_GRID_S = 60


@dataclass
class SerMeasurement:
    """Outcome of one accelerated SER test (or an ingested summary).

    ``ser`` is in µSEU per bit-second.  Protocol-produced records carry
    the full window history; records ingested from a measurement file are
    summary-only (``window_counts`` is None).
    """

    part_id: str
    cell_type: str
    ser: float
    rel_stat_unc: float
    rel_geom_unc: float
    ts: float | None = None
    window_counts: np.ndarray | None = None
    n_windows: int = 0
    n_tot: int = 0
    t_exp: float = 0.0
    n_bits: int = 0

    @classmethod
    def from_windows(cls, part_id, cell_type, ts, window_counts, n_bits,
                     rel_geom_unc) -> "SerMeasurement":
        counts = np.asarray(window_counts, dtype=np.int64)
        n_windows = counts.size
        n_tot = int(counts.sum())
        t_exp = n_windows * ts
        ser = 1e6 * n_tot / (t_exp * n_bits)
        rel_stat = 1.0 / math.sqrt(n_tot) if n_tot > 0 else math.inf
        return cls(
            part_id=str(part_id),
            cell_type=str(cell_type),
            ser=ser,
            rel_stat_unc=rel_stat,
            rel_geom_unc=float(rel_geom_unc),
            ts=float(ts),
            window_counts=counts,
            n_windows=n_windows,
            n_tot=n_tot,
            t_exp=float(t_exp),
            n_bits=int(n_bits),
        )

    @classmethod
    def summary(cls, part_id, cell_type, ser, rel_stat_unc,
                rel_geom_unc=0.03) -> "SerMeasurement":
        """Summary-only record as ingested from a measurement file."""
        return cls(
            part_id=str(part_id),
            cell_type=str(cell_type),
            ser=float(ser),
            rel_stat_unc=float(rel_stat_unc),
            rel_geom_unc=float(rel_geom_unc),
        )


@dataclass
class SweepResult:
    """Per-cell thresholds recovered by one descending-voltage sweep."""

    part_id: str
    cell_type: str
    swept_quantity: str
    delta_v: int
    mu: float
    sigma: float
    se_mean: float
    n_cells: int
    v_nominal: int
    per_cell_threshold: np.ndarray | None = None
    histogram: dict[int, int] | None = None

    @classmethod
    def from_registration(cls, part_id, cell_type, quantity, delta_v, fail_v,
                          v_nominal) -> "SweepResult":
        per_cell = fail_v + delta_v / 2.0
        voltages, counts = np.unique(fail_v, return_counts=True)
        hist = {int(v): int(c) for v, c in zip(voltages, counts)}
        mu = float(per_cell.mean())
        sigma = float(per_cell.std(ddof=1)) if per_cell.size > 1 else 0.0
        return cls(
            part_id=str(part_id),
            cell_type=str(cell_type),
            swept_quantity=quantity,
            delta_v=int(delta_v),
            mu=mu,
            sigma=sigma,
            se_mean=sigma / math.sqrt(per_cell.size),
            n_cells=int(per_cell.size),
            v_nominal=int(v_nominal),
            per_cell_threshold=per_cell,
            histogram=hist,
        )

    @classmethod
    def summary(cls, part_id, cell_type, mu, sigma=float("nan"),
                quantity="word_line", delta_v=10, n_cells=4096,
                v_nominal=1200) -> "SweepResult":
        """Summary-only record as ingested from a measurement file."""
        return cls(
            part_id=str(part_id),
            cell_type=str(cell_type),
            swept_quantity=quantity,
            delta_v=int(delta_v),
            mu=float(mu),
            sigma=float(sigma),
            se_mean=float(sigma) / math.sqrt(n_cells),
            n_cells=int(n_cells),
            v_nominal=int(v_nominal),
        )


def make_pattern(kind: str, rows: int, cols: int, seed=0) -> np.ndarray:
    """Background data pattern written before a test."""
    n = rows * cols
    if kind == "zeros":
        return np.zeros(n, dtype=np.uint8)
    if kind == "ones":
        return np.ones(n, dtype=np.uint8)
    if kind == "checkerboard":
        idx = np.arange(n)
        return (((idx // cols) + (idx % cols)) & 1).astype(np.uint8)
    if kind == "random":
        return np.random.default_rng(seed).integers(0, 2, n, dtype=np.uint8)
    raise ConfigurationError(f"unknown pattern {kind!r}")


def word_line_voltage_margin(v_dd, v_mewlvm):
    """Margin between the supply and the mean effective write voltage.

    Higher margin means the population can be written at lower word-line
    voltages, i.e. weaker cells.
    """
    if not 0 <= v_mewlvm <= v_dd:
        raise ValueError(f"v_mewlvm={v_mewlvm} outside [0, {v_dd}]")
    return v_dd - v_mewlvm


def run_ser_test(array: MemoryArray, source: AlphaSource, ts: float,
                 duration: float, seed=0, pattern: str = "zeros") -> SerMeasurement:
    """Accelerated SER test: irradiate and read every ``ts`` seconds.

    The whole memory is written to a known pattern and verified, then per
    sampling window the injected upsets are applied and the read-back is
    compared against the previous window's read-back.  Window reads happen
    at nominal supply and are non-destructive; irradiation continues
    through them (reads are instantaneous in simulation time).
    """
    if ts <= 0:
        raise ConfigurationError("ts must be positive")
    if duration < ts:
        raise ConfigurationError("duration must cover at least one sampling period")
    n_windows = int(duration // ts)
    t_exp = n_windows * ts

    pat = make_pattern(pattern, array.rows, array.cols, seed)
    ok = array.write_all(pat)
    bits, read_failed = array.read_all()
    if not ok.all() or read_failed.any() or not np.array_equal(bits, pat):
        n_bad = int((~ok).sum() + read_failed.sum())
        raise ProtocolError(
            f"initial write/verify failed for {n_bad} cells at "
            f"v_dd={array.v_dd} mV; the part is not operable at this supply")

    events = generate_events(array, source, t_exp, seed)
    windows = np.minimum((events.times / ts).astype(np.int64), n_windows - 1)
    counts, parity = kernels.window_observed_flips(
        windows, events.cells, n_windows, array.n_cells)
    array.state ^= parity

    return SerMeasurement.from_windows(
        part_id=array.part_id,
        cell_type=array.cell_type.name,
        ts=ts,
        window_counts=counts,
        n_bits=array.n_cells,
        rel_geom_unc=source.rel_geom_unc,
    )


def choose_sampling_time(probe_rate: float, n_bits: int, error_budget: float,
                         ts_cap: float):
    """Largest sampling period on a 60 s grid whose multi-flip masking
    stays within ``error_budget``, capped at ``ts_cap``.

    ``probe_rate`` is the memory-wide upset rate (events per second)
    estimated from a short probe run.
    """
    if error_budget <= 0:
        raise ValueError("error_budget must be positive")
    if n_bits <= 0:
        raise ValueError("n_bits must be positive")
    if ts_cap <= 0:
        raise ValueError("ts_cap must be positive")
    if probe_rate < 0:
        raise ValueError("probe_rate must be >= 0")
    if probe_rate == 0:
        return ts_cap
    lam = probe_rate / n_bits
    k_cap = max(1, math.ceil(ts_cap / TS_GRID_S))
    if undetected_fraction(lam, TS_GRID_S * k_cap) <= error_budget:
        # the budget-satisfying range extends past the cap
        return ts_cap
    if undetected_fraction(lam, TS_GRID_S) > error_budget:
        raise SamplingTimeError(
            f"no sampling period >= {TS_GRID_S} s keeps masking below "
            f"{error_budget:g} at {probe_rate:g} events/s")
    lo, hi = 1, k_cap  # f(60*lo) <= budget < f(60*hi)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if undetected_fraction(lam, TS_GRID_S * mid) <= error_budget:
            lo = mid
        else:
            hi = mid
    return min(ts_cap, TS_GRID_S * lo)


def _check_sweep_args(array: MemoryArray, delta_v: int):
    if not 0 < delta_v <= array.v_dd:
        raise ConfigurationError(f"delta_v={delta_v} outside (0, {array.v_dd}]")


def run_wlvm_sweep(array: MemoryArray, delta_v: int = 10, seed=0) -> SweepResult:
    """Word-line margin sweep over one block.

    Each iteration writes the array at nominal, lowers the word-line
    supply by one more step, writes the opposite value and reads back at
    nominal; cells are registered at the first voltage whose write did not
    take.  The loop ends once every cell has failed, which is guaranteed
    because the grid is clamped at 0 and all write thresholds are positive.

    ``seed`` is accepted for interface uniformity; the sweep is fully
    determined by the array since the modeled write threshold is
    polarity-independent.
    """
    _check_sweep_args(array, delta_v)
    fail_v = kernels.sweep_registration(array.v_wl_min, array.v_dd, delta_v)
    return SweepResult.from_registration(
        array.part_id, array.cell_type.name, "word_line", delta_v, fail_v,
        array.v_dd)


def run_hold_sweep(array: MemoryArray, delta_v: int = 10, seed=0) -> SweepResult:
    """Retention sweep: lower the core supply and register bit corruption.

    A cell collapses to a fixed preferred state below its hold threshold,
    so a single written polarity could never expose half the population.
    The sweep therefore runs twice with opposite background values and
    registers each cell at its first observed corruption over both runs.
    """
    _check_sweep_args(array, delta_v)
    n = array.n_cells
    fail_v = np.full(n, -1, dtype=np.int64)
    for written in (0, 1):
        background = np.full(n, written, dtype=np.uint8)
        can_corrupt = array.preferred_state != written
        step = 0
        while True:
            step += 1
            v = max(array.v_dd - delta_v * step, 0)
            array.write_all(background)
            array.apply_hold_voltage(v)
            bits, _ = array.read_all()
            newly = (bits != written) & (fail_v < 0)
            fail_v[newly] = v
            if v == 0 or not (can_corrupt & (fail_v < 0)).any():
                break
    return SweepResult.from_registration(
        array.part_id, array.cell_type.name, "vdd_hold", delta_v, fail_v,
        array.v_dd)


def run_read_sweep(array: MemoryArray, delta_v: int = 10, seed=0) -> SweepResult:
    """Read-voltage sweep: lower the core supply during reads only.

    The word line stays at nominal; cells are registered at the first
    supply voltage producing a read failure.  Reads are non-destructive so
    a single polarity covers every cell.
    """
    _check_sweep_args(array, delta_v)
    n = array.n_cells
    pattern = np.zeros(n, dtype=np.uint8)
    fail_v = np.full(n, -1, dtype=np.int64)
    array.write_all(pattern)
    _, failed = array.read_all()
    if failed.any():
        raise ProtocolError("read failures at nominal supply before sweeping")
    step = 0
    while (fail_v < 0).any():
        step += 1
        v = max(array.v_dd - delta_v * step, 0)
        array.write_all(pattern)
        _, failed = array.read_all(v)
        newly = failed & (fail_v < 0)
        fail_v[newly] = v
        if v == 0:
            break
    return SweepResult.from_registration(
        array.part_id, array.cell_type.name, "vdd_read", delta_v, fail_v,
        array.v_dd)
