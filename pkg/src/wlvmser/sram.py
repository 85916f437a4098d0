"""Behavioral model of the virtual test chip's memory blocks.

A block is a grid of six-transistor cells. Each cell carries three sampled
electrical thresholds, all in integer millivolts:

* ``v_wl_min`` — minimum word-line voltage for a successful write,
* ``v_dd_min_hold`` — minimum core supply at which the stored bit survives,
* ``v_dd_min_read`` — minimum core supply for a successful read.

Thresholds are drawn per cell from Gaussian distributions whose means and
spreads depend on the cell's transistor sizing; a common per-part offset
shifts all means of one die together.  Out-of-range draws are rejected and
redrawn rather than clamped so the threshold histograms carry no boundary
spikes.

No transistor-level electrics are modeled: the sizing ratios are metadata
and the sizing-to-robustness link enters only through the per-type
distribution parameters.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import ConfigurationError

DEFAULT_VDD_MV = 1200
DEFAULT_ROWS = 64
DEFAULT_COLS = 64

_MAX_REDRAWS = 1000


class CellParams(NamedTuple):
    """Electrical parameters of a single cell (thresholds in mV)."""

    v_wl_min: int
    v_dd_min_hold: int
    v_dd_min_read: int
    preferred_state: int
    true_seu_rate: float


@dataclass(frozen=True)
class CellType:
    """Transistor-sizing configuration of a 6T cell.

    ``r_n`` and ``r_p`` scale the nMOS/pMOS widths relative to the minimum
    device; both must be >= 1 so diffusion regions stay straight.
    """

    name: str
    r_n: float
    r_p: float

    def __post_init__(self):
        if self.r_n < 1 or self.r_p < 1:
            raise ConfigurationError(
                f"cell type {self.name!r}: sizing ratios must be >= 1"
            )


@dataclass(frozen=True)
class TypeVariation:
    """Threshold distribution parameters for one cell type (all in mV)."""

    mu_vwlmin: float
    sigma_vwlmin: float
    mu_hold: float
    sigma_hold: float
    mu_read: float
    sigma_read: float

    def __post_init__(self):
        for label in ("vwlmin", "hold", "read"):
            if getattr(self, f"sigma_{label}") < 0:
                raise ConfigurationError(f"sigma_{label} must be >= 0")


@dataclass
class VariationModel:
    """Per-type threshold distributions plus the part-level common offset.

    ``sigma_part`` is the standard deviation of a Gaussian offset added to
    every mean of one part: the distributions of a die shift together while
    their spreads stay put.
    """

    types: dict[str, TypeVariation]
    sigma_part: float = 8.0
    v_dd_nominal: int = DEFAULT_VDD_MV

    def __post_init__(self):
        if self.sigma_part < 0:
            raise ConfigurationError("sigma_part must be >= 0")
        if self.v_dd_nominal <= 0:
            raise ConfigurationError("v_dd_nominal must be positive")
        for name, tv in self.types.items():
            for label in ("vwlmin", "hold", "read"):
                mu = getattr(tv, f"mu_{label}")
                if not 0 < mu <= self.v_dd_nominal:
                    raise ConfigurationError(
                        f"{name}: mu_{label}={mu} outside (0, {self.v_dd_nominal}]"
                    )

    def for_type(self, name: str) -> TypeVariation:
        try:
            return self.types[name]
        except KeyError:
            raise ConfigurationError(f"no variation parameters for cell type {name!r}")

    @classmethod
    def from_dict(cls, raw: dict) -> "VariationModel":
        types = {}
        for name, p in raw["cell_types"].items():
            types[name] = TypeVariation(
                mu_vwlmin=float(p["mu_vwlmin_mV"]),
                sigma_vwlmin=float(p["sigma_vwlmin_mV"]),
                mu_hold=float(p["mu_hold_mV"]),
                sigma_hold=float(p["sigma_hold_mV"]),
                mu_read=float(p["mu_read_mV"]),
                sigma_read=float(p["sigma_read_mV"]),
            )
        return cls(
            types=types,
            sigma_part=float(raw.get("sigma_part_mV", 8.0)),
            v_dd_nominal=int(raw.get("v_dd_nominal_mV", DEFAULT_VDD_MV)),
        )

    @classmethod
    def from_json(cls, path) -> "VariationModel":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    @classmethod
    def default(cls) -> "VariationModel":
        """Bundled model transcribed from the reference measurements."""
        bundled = Path(__file__).parent / "data" / "variation_model.json"
        return cls.from_json(bundled)


@dataclass
class MemoryArray:
    """One memory block: per-cell thresholds plus the stored bits.

    Cell addressing is flat (row-major); the row/column split is carried
    only as geometry metadata since no protocol depends on it.
    """

    part_id: str
    cell_type: CellType
    rows: int
    cols: int
    v_wl_min: np.ndarray
    v_dd_min_hold: np.ndarray
    v_dd_min_read: np.ndarray
    preferred_state: np.ndarray
    true_seu_rate: np.ndarray
    state: np.ndarray = field(repr=False)
    v_dd: int = DEFAULT_VDD_MV

    def __post_init__(self):
        n = self.rows * self.cols
        for name in ("v_wl_min", "v_dd_min_hold", "v_dd_min_read",
                     "preferred_state", "true_seu_rate", "state"):
            if getattr(self, name).shape != (n,):
                raise ConfigurationError(f"{name} must have {n} entries")
        if np.any(self.true_seu_rate < 0):
            raise ConfigurationError("true_seu_rate must be >= 0")

    @property
    def n_cells(self) -> int:
        return self.rows * self.cols

    def _check_index(self, index: int):
        if not 0 <= index < self.n_cells:
            raise IndexError(f"cell index {index} outside [0, {self.n_cells})")

    def cell_params(self, index: int) -> CellParams:
        """Sampled parameters of one cell (arrays hold the block-level view)."""
        self._check_index(index)
        return CellParams(
            v_wl_min=int(self.v_wl_min[index]),
            v_dd_min_hold=int(self.v_dd_min_hold[index]),
            v_dd_min_read=int(self.v_dd_min_read[index]),
            preferred_state=int(self.preferred_state[index]),
            true_seu_rate=float(self.true_seu_rate[index]),
        )

    def write_cell(self, index: int, value: int, v_wl: int) -> bool:
        """Attempt a write at word-line voltage ``v_wl``; True on success.

        The write takes iff ``v_wl >= v_wl_min`` of the cell (success at
        exactly the threshold); otherwise the stored bit is untouched.
        """
        self._check_index(index)
        if not 0 <= v_wl <= self.v_dd:
            raise ValueError(f"v_wl={v_wl} outside [0, {self.v_dd}]")
        if v_wl >= self.v_wl_min[index]:
            self.state[index] = 1 if value else 0
            return True
        return False

    def read_cell(self, index: int, v_dd: int | None = None):
        """Stored bit, or None when the supply is below the cell's read
        threshold.  Reads are non-destructive."""
        self._check_index(index)
        v = self.v_dd if v_dd is None else v_dd
        if v >= self.v_dd_min_read[index]:
            return int(self.state[index])
        return None

    def apply_hold_voltage(self, v_dd: int) -> int:
        """Drop the core supply to ``v_dd``; cells whose hold threshold is
        exceeded collapse to their preferred state.  Returns the number of
        stored bits that actually changed."""
        if not 0 <= v_dd <= self.v_dd:
            raise ValueError(f"v_dd={v_dd} outside [0, {self.v_dd}]")
        at_risk = self.v_dd_min_hold > v_dd
        changed = int(np.count_nonzero(at_risk & (self.state != self.preferred_state)))
        self.state[at_risk] = self.preferred_state[at_risk]
        return changed

    def flip_cell(self, index: int):
        """Invert one stored bit (upset injection hook)."""
        self._check_index(index)
        self.state[index] ^= 1

    # array-wide variants used by the measurement protocols

    def write_all(self, values: np.ndarray, v_wl: int | None = None) -> np.ndarray:
        """Write a full pattern; returns the per-cell success mask."""
        v = self.v_dd if v_wl is None else v_wl
        ok = v >= self.v_wl_min
        self.state[ok] = values[ok]
        return ok

    def read_all(self, v_dd: int | None = None):
        """Read every cell; returns ``(bits, read_failed)`` arrays."""
        v = self.v_dd if v_dd is None else v_dd
        failed = v < self.v_dd_min_read
        return self.state.copy(), failed


def _sample_thresholds(rng, mu, sigma, n, v_dd_nominal):
    """Integer-mV Gaussian draws, redrawn until inside (0, v_dd_nominal]."""
    if sigma < 0:
        raise ConfigurationError("sigma must be >= 0")
    out = np.rint(rng.normal(mu, sigma, n)).astype(np.int64)
    for _ in range(_MAX_REDRAWS):
        bad = (out < 1) | (out > v_dd_nominal)
        n_bad = int(bad.sum())
        if n_bad == 0:
            return out
        out[bad] = np.rint(rng.normal(mu, sigma, n_bad)).astype(np.int64)
    raise ConfigurationError(
        f"threshold sampling did not converge for mu={mu}, sigma={sigma}"
    )


def sample_array(
    cell_type: CellType | str,
    model: VariationModel,
    part_offset: float = 0.0,
    seed=0,
    rows: int = DEFAULT_ROWS,
    cols: int = DEFAULT_COLS,
    true_seu_rate: float = 0.0,
    part_id: str = "0",
    v_dd: int | None = None,
) -> MemoryArray:
    """Build a block with per-cell thresholds drawn from the model.

    ``part_offset`` (mV) shifts all three means of this part.  The draw is
    deterministic for a fixed seed: thresholds are sampled in the order
    write, hold, read, then the preferred states.  ``true_seu_rate``
    (µSEU per bit-second) is the ground-truth upset rate handed to the
    radiation simulator; it may be a scalar or a per-cell array.
    """
    if rows <= 0 or cols <= 0:
        raise ConfigurationError("geometry must be positive")
    if isinstance(cell_type, str):
        from .refdata import CELL_TYPES
        cell_type = CELL_TYPES[cell_type]
    tv = model.for_type(cell_type.name)
    n = rows * cols
    rng = np.random.default_rng(seed)
    vnom = model.v_dd_nominal
    v_wl_min = _sample_thresholds(rng, tv.mu_vwlmin + part_offset, tv.sigma_vwlmin, n, vnom)
    v_hold = _sample_thresholds(rng, tv.mu_hold + part_offset, tv.sigma_hold, n, vnom)
    v_read = _sample_thresholds(rng, tv.mu_read + part_offset, tv.sigma_read, n, vnom)
    preferred = rng.integers(0, 2, n, dtype=np.uint8)
    rate = np.broadcast_to(np.asarray(true_seu_rate, dtype=np.float64), (n,)).copy()
    return MemoryArray(
        part_id=str(part_id),
        cell_type=cell_type,
        rows=rows,
        cols=cols,
        v_wl_min=v_wl_min,
        v_dd_min_hold=v_hold,
        v_dd_min_read=v_read,
        preferred_state=preferred,
        true_seu_rate=rate,
        state=np.zeros(n, dtype=np.uint8),
        v_dd=int(v_dd if v_dd is not None else vnom),
    )
