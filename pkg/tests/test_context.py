import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from didkit.context import ContextFeatures, ContextTracker
from didkit.errors import OutOfOrderTimestamp

V = b"\x0a\0\0\x09"
S = 1_000_000


def rescan(history, src, dst, now_us, n, window_ms):
    """Reference: recount the whole history for one query."""
    bucket = history[-n:] if n else []
    recent = [h for h in history if h[2] > now_us - window_ms * 1000]
    gap = 0.0 if not history else (now_us - history[-1][2]) / 1000.0
    return ContextFeatures(
        gap,
        sum(h[0] == src for h in bucket), sum(h[0] == src for h in recent),
        sum(h[1] == dst for h in bucket), sum(h[1] == dst for h in recent))


def test_first_flow_is_all_zero():
    assert ContextTracker().observe_flow(b"a", b"b", 123) == ContextFeatures()


def test_worked_example_bucket_and_window():
    # expected values from the rescan oracle: 3 prior flows to V at 0,1,2 s
    tr = ContextTracker(bucket=4, window_ms=10_000)
    for k in range(3):
        tr.observe_flow(bytes([1, 0, 0, k]), V, k * S)
    f = tr.observe_flow(b"\x01\0\0\x09", V, 3 * S)
    assert (f.dst_count_bucket, f.dst_count_time, f.gap_ms) == (3, 3, 1000.0)

    tr = ContextTracker(bucket=4, window_ms=10_000)
    for k in range(3):
        tr.observe_flow(bytes([1, 0, 0, k]), V, k * S)
    f = tr.observe_flow(b"\x01\0\0\x09", V, 13 * S)
    assert (f.dst_count_bucket, f.dst_count_time) == (3, 0)


def test_out_of_order_start():
    tr = ContextTracker()
    tr.observe_flow(b"a", b"b", 10)
    with pytest.raises(OutOfOrderTimestamp):
        tr.observe_flow(b"a", b"b", 9)


def random_stream(rng, n, n_hosts=8):
    t = np.cumsum(rng.integers(0, 3000, n) * 1000)
    src = rng.integers(0, n_hosts, n)
    dst = rng.integers(0, n_hosts, n)
    return [(bytes([10, 1, 0, s]), bytes([10, 0, 0, d]), int(ti)) for s, d, ti in zip(src, dst, t)]


@pytest.mark.parametrize("seed", range(3))
def test_equals_rescan_oracle(seed):
    rng = np.random.default_rng(seed)
    n_, T = int(rng.integers(1, 65)), int(rng.integers(1, 60_001))
    stream = random_stream(rng, 1500)
    tr = ContextTracker(n_, T)
    hist = []
    for s, d, t in stream:
        assert tr.observe_flow(s, d, t) == rescan(hist, s, d, t, n_, T)
        hist.append((s, d, t))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3), st.integers(0, 5000)),
                max_size=200),
       st.integers(1, 64))
def test_unbounded_window_dominates_bucket(items, n):
    tr = ContextTracker(n, math.inf)
    t = 0
    prev_t = None
    for s, d, dt in items:
        t += dt
        f = tr.observe_flow(bytes([s]), bytes([d]), t)
        assert f.src_count_time >= f.src_count_bucket
        assert f.dst_count_time >= f.dst_count_bucket
        assert 0 <= f.src_count_bucket <= n and 0 <= f.dst_count_bucket <= n
        assert f.gap_ms == (0.0 if prev_t is None else (t - prev_t) / 1000.0)
        prev_t = t
