"""Inter-flow context: gap to the previous flow start plus address repetition
counts over a fixed-size bucket and a fixed-time window of earlier starts."""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass

from .errors import OutOfOrderTimestamp

DEFAULT_BUCKET = 1000
DEFAULT_WINDOW_MS = 60_000


@dataclass(frozen=True)
class ContextFeatures:
    gap_ms: float = 0.0
    src_count_bucket: int = 0
    src_count_time: int = 0
    dst_count_bucket: int = 0
    dst_count_time: int = 0

    def as_tuple(self) -> tuple[float, int, int, int, int]:
        return (self.gap_ms, self.src_count_bucket, self.src_count_time,
                self.dst_count_bucket, self.dst_count_time)


class ContextTracker:
    """Counts over strictly preceding flow starts; O(1) amortised per flow."""

    def __init__(self, bucket: int = DEFAULT_BUCKET, window_ms: float = DEFAULT_WINDOW_MS):
        if bucket < 1 or window_ms <= 0:
            raise ValueError("bucket must be >= 1 and window_ms > 0")
        self.bucket = bucket
        self.window_us = window_ms * 1000
        self._bucket: deque[tuple[bytes, bytes]] = deque()
        self._window: deque[tuple[int, bytes, bytes]] = deque()
        self._b_src: Counter = Counter()
        self._b_dst: Counter = Counter()
        self._t_src: Counter = Counter()
        self._t_dst: Counter = Counter()
        self._last: int | None = None

    def observe_flow(self, initiator_ip: bytes, responder_ip: bytes,
                     start_time_us: int) -> ContextFeatures:
        if self._last is not None and start_time_us < self._last:
            raise OutOfOrderTimestamp(
                f"flow start {start_time_us} us precedes previous start {self._last} us")
        gap_ms = 0.0 if self._last is None else (start_time_us - self._last) / 1000.0

        horizon = start_time_us - self.window_us
        while self._window and self._window[0][0] <= horizon:
            _, s, d = self._window.popleft()
            _dec(self._t_src, s)
            _dec(self._t_dst, d)

        feats = ContextFeatures(
            gap_ms,
            self._b_src[initiator_ip],
            self._t_src[initiator_ip],
            self._b_dst[responder_ip],
            self._t_dst[responder_ip],
        )

        self._bucket.append((initiator_ip, responder_ip))
        self._b_src[initiator_ip] += 1
        self._b_dst[responder_ip] += 1
        if len(self._bucket) > self.bucket:
            s, d = self._bucket.popleft()
            _dec(self._b_src, s)
            _dec(self._b_dst, d)
        self._window.append((start_time_us, initiator_ip, responder_ip))
        self._t_src[initiator_ip] += 1
        self._t_dst[responder_ip] += 1
        self._last = start_time_us
        return feats


def _dec(counter: Counter, key) -> None:
    counter[key] -= 1
    if counter[key] == 0:
        del counter[key]
