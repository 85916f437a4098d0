"""Poisson event generation, injection, and the multi-flip masking model."""

import csv
import math

import numpy as np
import pytest
from scipy import stats

from wlvmser.errors import ConfigurationError
from wlvmser.io import write_event_log
from wlvmser.radiation import (AlphaSource, expected_event_count,
                               generate_events, inject_window,
                               undetected_fraction)
from wlvmser.sram import sample_array


def _uniform_rate_array(model, rate, seed=0, rows=64, cols=64):
    return sample_array("SS", model, seed=seed, rows=rows, cols=cols,
                        true_seu_rate=rate)


def test_zero_rate_generates_nothing(ss_model):
    array = _uniform_rate_array(ss_model, 0.0)
    events = generate_events(array, AlphaSource(), 1000.0, seed=1)
    assert len(events) == 0


def test_event_count_near_reference_conditions(ss_model):
    # 1.46 uSEU/(bit*s) over 4096 bits for 120 h -> about 2583 events
    array = _uniform_rate_array(ss_model, 1.46)
    events = generate_events(array, AlphaSource(rate_per_bit=1.46), 432_000.0, seed=3)
    expected = 1.46e-6 * 4096 * 432_000
    assert abs(len(events) - expected) < 4 * math.sqrt(expected)
    assert np.all(np.diff(events.times) >= 0)
    assert events.times.min() >= 0 and events.times.max() < 432_000.0
    assert events.cells.min() >= 0 and events.cells.max() < 4096


def test_mean_count_over_seeds_matches_poisson(ss_model):
    array = _uniform_rate_array(ss_model, 2.0, rows=16, cols=16)
    source = AlphaSource()
    duration = 1.0e6
    expected = expected_event_count(array, source, duration)
    counts = [len(generate_events(array, source, duration, seed=s))
              for s in range(100)]
    assert abs(np.mean(counts) - expected) < 4 * math.sqrt(expected)
    # dispersion sanity: variance of a Poisson count equals its mean
    assert 0.5 * expected < np.var(counts) < 2.0 * expected


def test_interarrival_times_exponential(ss_model):
    # single-cell array so the per-cell process is directly observable
    array = _uniform_rate_array(ss_model, 1.0e6, rows=1, cols=1)
    lam = 1.0  # events per second
    passed = 0
    n_seeds = 40
    for seed in range(n_seeds):
        events = generate_events(array, AlphaSource(), 400.0, seed=seed)
        gaps = np.diff(events.times)
        p = stats.kstest(gaps, "expon", args=(0, 1 / lam)).pvalue
        passed += p > 0.01
    assert passed >= 38  # >= 95% of seeds


def test_window_counts_poisson_dispersion(ss_model):
    array = _uniform_rate_array(ss_model, 1.46)
    events = generate_events(array, AlphaSource(), 432_000.0, seed=8)
    counts, _ = np.histogram(events.times, bins=200, range=(0, 432_000.0))
    n = counts.size
    dispersion = (n - 1) * counts.var(ddof=1) / counts.mean()
    lo = stats.chi2.ppf(0.005, n - 1)
    hi = stats.chi2.ppf(0.995, n - 1)
    assert lo < dispersion < hi


def test_geom_factor_scales_expected_count_linearly(ss_model):
    array = _uniform_rate_array(ss_model, 1.0, rows=32, cols=32)
    duration = 2.0e6
    low = AlphaSource(geom_factor=0.9)
    high = AlphaSource(geom_factor=1.08)
    assert expected_event_count(array, high, duration) == pytest.approx(
        1.2 * expected_event_count(array, low, duration))
    mean_low = np.mean([len(generate_events(array, low, duration, seed=s))
                        for s in range(40)])
    mean_high = np.mean([len(generate_events(array, high, duration, seed=s + 100))
                         for s in range(40)])
    assert mean_high / mean_low == pytest.approx(1.2, rel=0.03)


def test_weighted_cell_assignment_follows_rates(ss_model):
    array = sample_array("SS", ss_model, seed=0, rows=1, cols=2)
    array.true_seu_rate[:] = [1.0, 3.0]
    events = generate_events(array, AlphaSource(), 5.0e6, seed=5)
    share = np.mean(events.cells == 1)
    assert share == pytest.approx(0.75, abs=0.02)


def test_alpha_source_validation():
    with pytest.raises(ConfigurationError):
        AlphaSource(rate_per_bit=-1.0)
    with pytest.raises(ConfigurationError):
        AlphaSource(geom_factor=1.2)


# --- injection --------------------------------------------------------------

def test_inject_empty_window(ss_model):
    array = _uniform_rate_array(ss_model, 1.0, rows=4, cols=4)
    events = generate_events(array, AlphaSource(), 1.0e5, seed=2)
    before = array.state.copy()
    assert inject_window(array, events, 1.0e5, 2.0e5) == 0
    assert np.array_equal(array.state, before)


def test_double_hit_cancels(ss_model):
    array = sample_array("SS", ss_model, seed=0, rows=1, cols=4)
    from wlvmser.radiation import EventLog
    events = EventLog(times=np.array([1.0, 2.0]), cells=np.array([3, 3]),
                      n_cells=4, duration=10.0)
    before = array.state.copy()
    applied = inject_window(array, events, 0.0, 10.0)
    assert applied == 2
    assert np.array_equal(array.state, before)


def test_disjoint_windows_apply_every_event_once(ss_model):
    array = _uniform_rate_array(ss_model, 2.0, rows=8, cols=8)
    events = generate_events(array, AlphaSource(), 4.0e5, seed=13)
    parity = np.bincount(events.cells, minlength=array.n_cells).astype(np.uint8) & 1
    before = array.state.copy()
    total = 0
    edges = np.linspace(0, 4.0e5, 9)
    for t0, t1 in zip(edges[:-1], edges[1:]):
        total += inject_window(array, events, t0, t1)
    assert total == len(events)
    assert np.array_equal(array.state, before ^ parity)


def test_inject_window_requires_ordered_bounds(ss_model):
    array = _uniform_rate_array(ss_model, 1.0, rows=2, cols=2)
    events = generate_events(array, AlphaSource(), 100.0, seed=0)
    with pytest.raises(ValueError):
        inject_window(array, events, 5.0, 5.0)


# --- masking model ----------------------------------------------------------

def test_undetected_fraction_limit_and_example():
    assert undetected_fraction(0.0, 1800.0) == 0.0
    # about one event per minute spread over 20480 bits, read every 30 min
    lam_cell = (1 / 60) / 20480
    f = undetected_fraction(lam_cell, 1800.0)
    assert f == pytest.approx(1.46e-3, rel=0.01)
    assert f < 0.01


def test_undetected_fraction_monotone_and_bounded():
    xs = np.logspace(-6, 3, 60)
    values = [undetected_fraction(x, 1.0) for x in xs]
    assert all(0 <= v < 1 for v in values)
    assert all(b > a for a, b in zip(values, values[1:]))


def test_undetected_fraction_validation():
    with pytest.raises(ValueError):
        undetected_fraction(-1.0, 10.0)
    with pytest.raises(ValueError):
        undetected_fraction(1.0, 0.0)


def test_masked_fraction_monte_carlo_small():
    from wlvmser.kernels import masked_upsets_mc
    lam_ts = 5e-3
    masked, total = masked_upsets_mc(lam_ts, 2_000_000, seed=77)
    f = undetected_fraction(lam_ts, 1.0)
    assert abs(masked / total - f) <= 3 * math.sqrt(f * (1 - f) / total)


# --- event log --------------------------------------------------------------

def test_event_log_iterates_as_events(ss_model):
    array = _uniform_rate_array(ss_model, 1.0, rows=4, cols=4)
    events = generate_events(array, AlphaSource(), 2.0e5, seed=6)
    assert len(events) > 0
    first = next(iter(events))
    assert first.time == events.times[0]
    assert first.cell == events.cells[0]


def test_event_log_roundtrip(ss_model, tmp_path):
    array = _uniform_rate_array(ss_model, 1.0, rows=4, cols=4)
    events = generate_events(array, AlphaSource(), 5.0e5, seed=4)
    path = write_event_log(events, tmp_path / "events.csv")
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == len(events)
    times = np.array([float(r["time_s"]) for r in rows])
    cells = np.array([int(r["cell_index"]) for r in rows])
    assert np.array_equal(times, events.times)
    assert np.array_equal(cells, events.cells)
