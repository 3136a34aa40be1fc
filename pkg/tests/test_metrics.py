import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cpsol.metrics import (InsufficientData, MetricsTracker, MissingOptimum, RunReport,
                           SequencingError, aggregate, describe, offline_error, read_trace, record,
                           trace_csv)


def test_record_and_sequencing():
    t = record(MetricsTracker(), 1, 5.0)
    assert len(t) == 1
    with pytest.raises(SequencingError):
        record(t, 1, 4.0)
    with pytest.raises(SequencingError):
        t.extend([3, 2], [1.0, 1.0])


def test_offline_error_examples():
    t = MetricsTracker()
    for i in range(10):
        t.record(i + 1, 2.0)
    assert offline_error(t, "raw") == 2.0

    t = MetricsTracker()
    t.record(1, 4.0)
    t.record(2, 2.0)
    assert offline_error(t, "raw") == 3.0

    t = MetricsTracker(maximize=True)
    for i in range(5):
        t.record(i + 1, 48.0, 50.0)
    assert offline_error(t, "gap") == 2.0


def test_gap_needs_optima():
    t = MetricsTracker()
    t.record(1, 3.0)
    assert t.errors() is None
    with pytest.raises(MissingOptimum):
        offline_error(t, "gap")
    with pytest.raises(InsufficientData):
        offline_error(MetricsTracker(), "raw")


def test_aggregate_examples():
    assert aggregate([2, 2, 2, 2]) == (2.0, 0.0)
    mean, se = aggregate([1, 3])
    assert mean == 2.0 and se == pytest.approx(1.0)
    with pytest.raises(InsufficientData):
        aggregate([1.0])


def test_describe_reports_sd_and_se():
    mean, sd, se = describe([1.0, 2.0, 3.0, 4.0])
    assert mean == 2.5
    assert sd == pytest.approx(np.std([1, 2, 3, 4], ddof=1))
    assert se == pytest.approx(sd / 2)


@given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=40), st.randoms())
def test_aggregate_permutation_invariant(values, rnd):
    shuffled = values[:]
    rnd.shuffle(shuffled)
    assert aggregate(values) == aggregate(shuffled)


def test_trace_csv_format():
    text = trace_csv(np.array([1, 2]), np.array([3.0, 1 / 3]), np.array([np.nan, np.nan]), False)
    assert text == "eval,best_fitness,current_error\n1,3.000000,\n2,0.333333,\n"
    text = trace_csv(np.array([7]), np.array([48.25]), np.array([50.0]), True)
    assert text == "eval,best_fitness,current_error\n7,48.250000,1.750000\n"


@given(st.lists(st.floats(-1e4, 1e4), min_size=1, max_size=60),
       st.lists(st.floats(0, 100), min_size=60, max_size=60))
def test_offline_error_equals_csv_recomputation(best, optima):
    t = MetricsTracker(maximize=True)
    t.extend(np.arange(1, len(best) + 1), best, optima[: len(best)])
    rows = read_trace(t.to_csv())
    raw = math.fsum(r[1] for r in rows) / len(rows)
    gap = math.fsum(r[2] for r in rows) / len(rows)
    assert raw == t.offline_error("raw")
    assert gap == t.offline_error("gap")


@given(st.lists(st.floats(0, 1e3), min_size=2, max_size=50))
def test_gap_non_negative_when_optimum_bounds(best):
    t = MetricsTracker(maximize=True)
    t.extend(np.arange(1, len(best) + 1), best, [1e3] * len(best))
    assert t.offline_error("gap") >= 0


def test_prefix_raw_error_non_increasing_for_monotone_best():
    best = np.sort(np.random.default_rng(0).uniform(0, 10, 200))[::-1]
    t = MetricsTracker()
    prev = math.inf
    for i, b in enumerate(best, 1):
        t.record(i, b)
        oe = t.offline_error()
        assert oe <= prev + 1e-12
        prev = oe


def test_run_report_needs_evaluations():
    with pytest.raises(ValueError):
        RunReport(seed=0, offline_error_raw=0.0, offline_error_gap=None, best_final=0.0,
                  evals_total=0, changes_detected=0)
