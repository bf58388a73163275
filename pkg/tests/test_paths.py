import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ctinfo.exceptions import DomainError, ValidationError
from ctinfo.paths import (INFINITE, EventPath, InfoTrace, IntensityTrace, SamplePath, StatePath,
                          TimeWindow, align_traces, reconstruct_cumulative, time_since_last_event,
                          verify_trace_consistency)


def test_window_ordering_enforced():
    TimeWindow(0.0, 1.0, tau=-1.0)
    with pytest.raises(ValidationError):
        TimeWindow(1.0, 1.0)
    with pytest.raises(ValidationError):
        TimeWindow(0.0, 1.0, tau=0.5)
    with pytest.raises(ValidationError):
        TimeWindow(0.0, math.inf)


def test_time_since_last_event_examples():
    p = EventPath(TimeWindow(0.0, 5.0), [1.0, 3.0])
    assert time_since_last_event(p, 3.5) == pytest.approx(0.5)
    assert time_since_last_event(p, 3.0) == 0.0
    assert time_since_last_event(EventPath(TimeWindow(0.0, 5.0), []), 2.0) == INFINITE
    with pytest.raises(DomainError):
        time_since_last_event(p, 6.0)


def test_event_path_rejects_bad_sequences():
    w = TimeWindow(0.0, 10.0)
    with pytest.raises(ValidationError):
        EventPath(w, [1.0, 1.0])
    with pytest.raises(ValidationError):
        EventPath(w, [2.0, 1.0])
    with pytest.raises(ValidationError):
        EventPath(w, [11.0])
    p = EventPath(TimeWindow(0.0, 10.0, tau=-2.0), [-1.0, 4.0])
    assert list(p.in_observation()) == [4.0]
    with pytest.raises(ValueError):
        p.events[0] = 0.0


@given(st.lists(st.floats(0.0, 100.0, allow_nan=False), max_size=50))
def test_event_path_accepts_exactly_strictly_increasing(times):
    w = TimeWindow(0.0, 100.0)
    strictly = all(b > a for a, b in zip(times, times[1:]))
    if strictly:
        assert np.all(np.diff(EventPath(w, times).events) > 0)
    else:
        with pytest.raises(ValidationError):
            EventPath(w, times)


def test_state_path_left_limits():
    sp = StatePath(TimeWindow(0.0, 3.0), "A", [(1.0, "B"), (2.0, "A")])
    assert sp.state_at(1.0) == "B"
    assert sp.state_at(1.0, left=True) == "A"
    assert sp.state_at(2.5) == "A"
    with pytest.raises(ValidationError):
        StatePath(TimeWindow(0.0, 3.0), "A", [(1.0, "A")])


def test_sample_path_length_check():
    w = TimeWindow(0.0, 1.0)
    sp = SamplePath(w, 0.25, np.zeros(5), np.ones(5))
    assert np.allclose(sp.times, [0, 0.25, 0.5, 0.75, 1.0])
    with pytest.raises(ValidationError):
        SamplePath(w, 0.25, np.zeros(4), np.zeros(4))


def test_intensity_trace_jumps_and_integral():
    tr = IntensityTrace([0.0, 1.0, 1.0, 2.0], [1.0, 1.0, 3.0, 3.0])
    assert tr.left_limit(1.0) == 1.0
    assert tr.right_limit(1.0) == 3.0
    assert tr(0.5) == 1.0
    assert list(tr.jump_times()) == [1.0]
    assert tr.integral() == pytest.approx(4.0)
    assert tr.integral(0.5, 1.5) == pytest.approx(0.5 + 1.5)
    assert tr.time_average() == pytest.approx(2.0)
    with pytest.raises(ValidationError):
        IntensityTrace([0.0, 1.0], [1.0, -1.0])


def test_align_traces_keeps_both_jumps():
    a = IntensityTrace([0.0, 1.0, 1.0, 2.0], [1.0, 1.0, 0.0, 0.0])
    b = IntensityTrace([0.0, 2.0], [0.0, 2.0])
    t, (va, vb) = align_traces([a, b], force_pairs=np.array([0.5]))
    assert np.sum(t == 1.0) == 2 and np.sum(t == 0.5) == 2
    i = np.flatnonzero(t == 1.0)
    assert va[i[0]] == 1.0 and va[i[1]] == 0.0
    assert vb[i[0]] == vb[i[1]] == pytest.approx(1.0)


def _trace(times, jt, jm, rm):
    times = np.asarray(times, float)
    rm = np.asarray(rm, float)
    z = np.zeros_like(times)
    jt, jm = np.asarray(jt, float), np.asarray(jm, float)
    cm = reconstruct_cumulative(times, rm, jt, jm)
    return InfoTrace(times, cm, z, jt, jm, np.zeros_like(jm), rm, z)


def test_verify_trace_consistency_examples():
    zero = InfoTrace(np.linspace(0, 1, 5), *(np.zeros(5),) * 2, np.zeros(0), np.zeros(0), np.zeros(0),
                     np.zeros(5), np.zeros(5))
    assert verify_trace_consistency(zero)
    tr = _trace([0.0, 1.0, 1.0, 2.0], [1.0], [math.log(2)], [0, 0, 0, 0])
    assert tr.cumulative_M[-1] == pytest.approx(math.log(2))
    assert tr.cumulative_M[1] == 0.0 and tr.cumulative_M[2] == pytest.approx(math.log(2))
    assert verify_trace_consistency(tr)
    tol = 1e-6
    bad = InfoTrace(tr.times, tr.cumulative_M + 10 * tol * (1 + np.abs(tr.cumulative_M)), tr.cumulative_T,
                    tr.jump_times, tr.jump_M, tr.jump_T, tr.rate_M, tr.rate_T)
    assert not verify_trace_consistency(bad, tol)


def test_info_trace_value_at_interpolates_rate():
    tr = _trace([0.0, 2.0], [], [], [1.0, 1.0])
    assert tr.value_at(1.5) == pytest.approx(1.5)
    assert tr.total_M == pytest.approx(2.0)
