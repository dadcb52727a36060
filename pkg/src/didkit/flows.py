"""Bidirectional flow reassembly with FIN/RST and timeout termination."""

from __future__ import annotations

import ipaddress
from collections import OrderedDict
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

from .errors import OutOfOrderTimestamp
from .pcap import DecodedPacket, Protocol

FLOW_TIMEOUT_US = 1_200_000 * 1000

Endpoint = tuple[bytes, int]


class Termination(str, Enum):
    FIN = "Fin"
    TIMEOUT = "Timeout"
    CAPTURE_END = "CaptureEnd"


@dataclass(frozen=True, order=True)
class FlowKey:
    endpoint_a: Endpoint
    endpoint_b: Endpoint
    protocol: Protocol

    def __str__(self) -> str:
        def ep(e: Endpoint) -> str:
            return f"{ipaddress.IPv4Address(e[0])}:{e[1]}"
        return f"{self.protocol.name} {ep(self.endpoint_a)}-{ep(self.endpoint_b)}"


def flow_key(packet: DecodedPacket) -> FlowKey:
    src = (packet.src_ip, packet.src_port)
    dst = (packet.dst_ip, packet.dst_port)
    a, b = (src, dst) if src <= dst else (dst, src)
    return FlowKey(a, b, packet.protocol)


@dataclass
class FlowRecord:
    key: FlowKey
    initiator: Endpoint
    start_time_us: int
    seq: int
    packets: list[DecodedPacket] = field(default_factory=list)
    end_time_us: int = 0
    termination: Termination | None = None

    @property
    def responder(self) -> Endpoint:
        a, b = self.key.endpoint_a, self.key.endpoint_b
        return b if self.initiator == a else a

    @property
    def flow_id(self) -> str:
        ini, resp = self.initiator, self.responder
        return (f"{self.key.protocol.name} {ipaddress.IPv4Address(ini[0])}:{ini[1]}>"
                f"{ipaddress.IPv4Address(resp[0])}:{resp[1]}@{self.start_time_us}")


class FlowTable:
    """Live flows keyed by canonical 5-tuple.

    Flows are kept in start order, so the timeout sweep only ever inspects
    the oldest entries.
    """

    def __init__(self, timeout_us: int = FLOW_TIMEOUT_US, max_live_flows: int | None = None):
        self.timeout_us = timeout_us
        self.max_live_flows = max_live_flows
        self._live: OrderedDict[FlowKey, FlowRecord] = OrderedDict()
        self._last_ts: int | None = None
        self._next_seq = 0
        self.start_events: list[tuple[int, int]] = []

    def __len__(self) -> int:
        return len(self._live)

    def _close(self, key: FlowKey, reason: Termination) -> FlowRecord:
        flow = self._live.pop(key)
        flow.termination = reason
        return flow

    def ingest(self, packet: DecodedPacket) -> list[FlowRecord]:
        ts = packet.timestamp_us
        if self._last_ts is not None and ts < self._last_ts:
            raise OutOfOrderTimestamp(f"packet at {ts} us follows packet at {self._last_ts} us")
        self._last_ts = ts

        closed = []
        while self._live:
            oldest_key, oldest = next(iter(self._live.items()))
            if ts - oldest.start_time_us <= self.timeout_us:
                break
            closed.append(self._close(oldest_key, Termination.TIMEOUT))

        key = flow_key(packet)
        flow = self._live.get(key)
        if flow is None:
            if self.max_live_flows is not None and len(self._live) >= self.max_live_flows:
                closed.append(self._close(next(iter(self._live)), Termination.TIMEOUT))
            flow = FlowRecord(key, (packet.src_ip, packet.src_port), ts, self._next_seq)
            self._next_seq += 1
            self._live[key] = flow
            self.start_events.append((ts, flow.seq))
        flow.packets.append(packet)
        flow.end_time_us = ts
        if packet.is_fin or packet.is_rst:
            closed.append(self._close(key, Termination.FIN))
        return closed

    def flush(self) -> list[FlowRecord]:
        out = [self._close(k, Termination.CAPTURE_END) for k in list(self._live)]
        return out


def assemble_flows(packets: Iterable[DecodedPacket], **table_kw) -> list[FlowRecord]:
    """Reassemble a whole packet stream; result is in flow-start order."""
    table = FlowTable(**table_kw)
    flows = []
    for pkt in packets:
        flows.extend(table.ingest(pkt))
    flows.extend(table.flush())
    flows.sort(key=lambda f: f.seq)
    return flows
