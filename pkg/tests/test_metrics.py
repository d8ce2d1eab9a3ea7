import numpy as np
import pytest

from ctql.metrics import CONTAINMENT_MARGIN_S, is_success, settling_time


def trace(segments, dt=0.01):
    """Piecewise-constant radial trace from (duration, radius) pairs, plus the end sample."""
    out = []
    for dur, r in segments:
        out += [r] * round(dur / dt)
    out.append(segments[-1][1])
    return np.array(out)


def test_always_inside():
    assert settling_time(np.full(101, 1.0), 5.0, 100.0) == 0.0


def test_never_inside():
    assert settling_time(np.full(101, 9.0), 5.0, 100.0) is None


def test_last_exit():
    r = trace([(40, 20.0), (10, 2.0), (5, 8.0), (45, 1.0)])
    assert settling_time(r, 5.0, 100.0) == pytest.approx(55.0)


def test_boundary_counts_as_outside():
    r = np.array([5.0, 4.0, 4.0])
    assert settling_time(r, 5.0, 2.0) == 1.0


def test_multi_agent_uses_the_slowest():
    a = trace([(30, 9.0), (70, 1.0)])
    b = trace([(60, 9.0), (40, 1.0)])
    assert settling_time(np.column_stack([a, b]), 5.0, 100.0) == pytest.approx(60.0)


def test_ending_outside_is_none():
    assert settling_time(trace([(99, 1.0), (1, 7.0)]), 5.0, 100.0) is None


def test_success_margin():
    assert CONTAINMENT_MARGIN_S == 5.0
    assert is_success(95.0, 100.0)
    assert not is_success(95.5, 100.0)
    assert not is_success(None, 100.0)
    assert is_success(0.0, 100.0)
