"""Homogeneous Poisson model of alpha-induced upsets.

Upset instants form a Poisson process.  Events are generated with
exponential inter-arrival times at the aggregate array rate and assigned
to cells proportionally to their individual rates, which is exact for a
superposition of independent homogeneous processes.  The per-cell rate is

    lambda_c = true_seu_rate * geom_factor * 1e-6   [per second]

with ``true_seu_rate`` in µSEU per bit-second and ``geom_factor`` the
dimensionless source-positioning flux factor of the part.

The flux is spatially uniform over the block; angular and energy
dependence, charge collection and multi-cell upsets are out of scope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from .errors import ConfigurationError
from .sram import MemoryArray


@dataclass(frozen=True)
class AlphaSource:
    """Alpha source seen by one part.

    ``rate_per_bit`` is the baseline upset rate (µSEU per bit-second) used
    when building arrays without an explicit ground-truth law; event
    generation itself always reads the per-cell rates stored in the array.
    ``geom_factor`` scales the flux for source-to-sample positioning and
    ``rel_geom_unc`` is the matching systematic uncertainty carried into
    measurements.
    """

    rate_per_bit: float = 0.0
    geom_factor: float = 1.0
    rel_geom_unc: float = 0.03

    def __post_init__(self):
        if self.rate_per_bit < 0:
            raise ConfigurationError("rate_per_bit must be >= 0")
        if not 0.9 <= self.geom_factor <= 1.1:
            raise ConfigurationError("geom_factor must lie in [0.9, 1.1]")
        if self.rel_geom_unc < 0:
            raise ConfigurationError("rel_geom_unc must be >= 0")


class SeuEvent(NamedTuple):
    time: float
    cell: int


@dataclass
class EventLog:
    """Time-ordered upset events for one array."""

    times: np.ndarray
    cells: np.ndarray
    n_cells: int
    duration: float

    def __len__(self) -> int:
        return self.times.size

    def __iter__(self) -> Iterator[SeuEvent]:
        for t, c in zip(self.times, self.cells):
            yield SeuEvent(float(t), int(c))


def cell_rates(array: MemoryArray, source: AlphaSource) -> np.ndarray:
    """Per-cell upset rates in events per second."""
    return array.true_seu_rate * (source.geom_factor * 1e-6)


def expected_event_count(array: MemoryArray, source: AlphaSource, duration: float) -> float:
    """Mean number of events the source produces over ``duration`` seconds."""
    return float(cell_rates(array, source).sum() * duration)


def _arrival_times(rng, lam_total, duration):
    """Exponential inter-arrival draw until the horizon is crossed."""
    mean_gap = 1.0 / lam_total
    expect = lam_total * duration
    chunk = max(int(expect + 10.0 * math.sqrt(expect)) + 16, 64)
    pieces = []
    t = 0.0
    while True:
        gaps = rng.exponential(mean_gap, chunk)
        times = t + np.cumsum(gaps)
        inside = times[times < duration]
        pieces.append(inside)
        if inside.size < times.size:
            break
        t = float(times[-1])
        chunk = max(chunk // 4, 64)
    return np.concatenate(pieces)


def generate_events(array: MemoryArray, source: AlphaSource, duration: float, seed=0) -> EventLog:
    """Draw the upset events hitting ``array`` over ``duration`` seconds.

    Deterministic for a fixed seed.  Events come out sorted by time.
    """
    if duration <= 0:
        raise ConfigurationError("duration must be positive")
    rates = cell_rates(array, source)
    lam_total = float(rates.sum())
    rng = np.random.default_rng(seed)
    if lam_total <= 0.0:
        empty = np.empty(0)
        return EventLog(empty, empty.astype(np.int64), array.n_cells, duration)
    times = _arrival_times(rng, lam_total, duration)
    k = times.size
    if np.all(rates == rates[0]):
        cells = rng.integers(0, array.n_cells, k, dtype=np.int64)
    else:
        cells = rng.choice(array.n_cells, size=k, p=rates / lam_total).astype(np.int64)
    return EventLog(times, cells, array.n_cells, duration)


def inject_window(array: MemoryArray, events: EventLog, t0: float, t1: float) -> int:
    """Apply every event with ``t0 <= time < t1`` as a bit flip.

    Returns the number of events applied, which can exceed the number of
    observably changed cells when a cell is hit more than once.
    """
    if not t0 < t1:
        raise ValueError("need t0 < t1")
    i0 = int(np.searchsorted(events.times, t0, side="left"))
    i1 = int(np.searchsorted(events.times, t1, side="left"))
    hit = events.cells[i0:i1]
    if hit.size:
        parity = np.bincount(hit, minlength=array.n_cells).astype(np.uint8) & 1
        array.state ^= parity
    return i1 - i0


def undetected_fraction(lambda_cell: float, ts: float) -> float:
    """Expected fraction of upsets masked by even multi-flips per window.

    A cell hit k times within one sampling period shows at most one
    observable change, so ``k - (k mod 2)`` upsets go unseen.  For Poisson
    flips at rate ``lambda_cell`` over a window ``ts`` the masked fraction
    is ``1 - (1 - exp(-2*lam*ts)) / (2*lam*ts)``, continuously extended to
    0 at ``lam*ts -> 0``.
    """
    if lambda_cell < 0:
        raise ValueError("lambda_cell must be >= 0")
    if ts <= 0:
        raise ValueError("ts must be positive")
    x = 2.0 * lambda_cell * ts
    if x == 0.0:
        return 0.0
    return float(1.0 + math.expm1(-x) / x)
