import numpy as np
import pytest

from dcflex.model import DataCenterSpec, TimeGrid
from dcflex.preprocess import baseline_profile, discretize, zero_queue
from dcflex.synth import generate_synthetic_trace

SPEC = DataCenterSpec(total_resources=100.0)
GRID = TimeGrid(15, 960)


def full_span_profile(trace):
    table = discretize(zero_queue(trace), GRID)
    span = TimeGrid(15, int(table.complete_step.max()))
    return baseline_profile(table, SPEC, span)


def test_ai_like_utilization_band():
    base = full_span_profile(generate_synthetic_trace("ai_like", 20, 1, GRID, SPEC))
    assert 0.7 <= base.mean_util <= 0.9


def test_general_like_is_burstier():
    ai = full_span_profile(generate_synthetic_trace("ai_like", 20, 1, GRID, SPEC))
    general = full_span_profile(generate_synthetic_trace("general_like", 20, 1, GRID, SPEC))
    assert general.std_util > ai.std_util
    assert general.mean_util < ai.mean_util


def test_deterministic_per_seed():
    a = generate_synthetic_trace("ai_like", 10, 4, GRID, SPEC)
    b = generate_synthetic_trace("ai_like", 10, 4, GRID, SPEC)
    assert a.ids == b.ids
    assert np.array_equal(a.start, b.start)
    assert np.array_equal(a.end, b.end)
    assert np.array_equal(a.resources, b.resources)
    c = generate_synthetic_trace("ai_like", 10, 5, GRID, SPEC)
    assert not (len(a) == len(c) and np.array_equal(a.start, c.start))


def test_zero_queue_and_capacity():
    trace = generate_synthetic_trace("general_like", 12, 0, GRID, SPEC)
    assert np.array_equal(trace.submit, trace.start)
    # admission plus rounding margin keeps the discretized baseline feasible
    full_span_profile(trace)


def test_validation():
    with pytest.raises(ValueError, match="profile"):
        generate_synthetic_trace("hpc_like", 20, 0, GRID, SPEC)
    with pytest.raises(ValueError, match="10 days"):
        generate_synthetic_trace("ai_like", 5, 0, GRID, SPEC)
