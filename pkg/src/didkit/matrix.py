"""Enriched normalized flow matrix.

Row 0 holds the five context features, rows 1..P hold one packet each:
column 0 is the scaled inter-arrival gap, columns 1..B the masked bytes of
the IP datagram divided by 255.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .context import DEFAULT_BUCKET, ContextFeatures
from .errors import EmptyFlow
from .flows import FLOW_TIMEOUT_US, FlowRecord
from .pcap import DecodedPacket, Protocol

UDP_PAD = 12  # 8-byte UDP header padded to the 20-byte minimum TCP header


@dataclass(frozen=True)
class MatrixConfig:
    max_packets: int = 100
    max_bytes: int = 200
    gap_scale_ms: float = FLOW_TIMEOUT_US / 1000
    # denominators for [gap, src_bucket, src_time, dst_bucket, dst_time]
    ctx_scales: tuple[float, float, float, float, float] = field(
        default=(FLOW_TIMEOUT_US / 1000, DEFAULT_BUCKET, DEFAULT_BUCKET,
                 DEFAULT_BUCKET, DEFAULT_BUCKET))
    use_context: bool = True

    def __post_init__(self):
        if self.max_packets < 1:
            raise ValueError("max_packets must be >= 1")
        if self.max_bytes < 20:
            raise ValueError("max_bytes must be >= 20 to cover the masked header fields")
        if self.gap_scale_ms <= 0 or len(self.ctx_scales) != 5 or min(self.ctx_scales) <= 0:
            raise ValueError("scales must be positive; ctx_scales needs five entries")
        object.__setattr__(self, "ctx_scales", tuple(float(s) for s in self.ctx_scales))

    @classmethod
    def for_context(cls, bucket: int = DEFAULT_BUCKET, **kw) -> "MatrixConfig":
        """Config whose count scales equal the context bucket size."""
        gap = kw.get("gap_scale_ms", FLOW_TIMEOUT_US / 1000)
        return cls(ctx_scales=(gap, bucket, bucket, bucket, bucket), **kw)

    @property
    def shape(self) -> tuple[int, int]:
        return (1 + self.max_packets, 1 + self.max_bytes)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ctx_scales"] = list(self.ctx_scales)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "MatrixConfig":
        d = dict(d)
        d["ctx_scales"] = tuple(d["ctx_scales"])
        return cls(**d)


@dataclass
class FlowMatrix:
    values: np.ndarray
    label: int | None = None
    flow_id: str = ""


def mask_packet(packet: DecodedPacket) -> bytes:
    buf = bytearray(packet.ip_and_payload)
    lay = packet.header_layout
    buf[lay.ip_cksum:lay.ip_cksum + 2] = b"\0\0"
    buf[lay.src_ip:lay.src_ip + 4] = b"\0\0\0\0"
    buf[lay.dst_ip:lay.dst_ip + 4] = b"\0\0\0\0"
    # checksum may sit past the captured end on truncated frames
    end = min(lay.l4_cksum + 2, len(buf))
    buf[lay.l4_cksum:end] = bytes(max(0, end - lay.l4_cksum))
    if packet.protocol == Protocol.UDP:
        at = packet.transport_offset + 8
        buf[at:at] = bytes(UDP_PAD)
    return bytes(buf)


def _scaled(x: float, scale: float) -> float:
    return min(x / scale, 1.0)


def build_matrix(flow: FlowRecord, ctx: ContextFeatures | None, cfg: MatrixConfig,
                 label: int | None = None) -> FlowMatrix:
    if not flow.packets:
        raise EmptyFlow(f"flow {flow.flow_id} has no packets")
    P, B = cfg.max_packets, cfg.max_bytes
    out = np.zeros((1 + P, 1 + B), dtype=np.float32)
    if ctx is not None and cfg.use_context:
        out[0, :5] = [_scaled(v, s) for v, s in zip(ctx.as_tuple(), cfg.ctx_scales)]
    prev = None
    for i, pkt in enumerate(flow.packets[:P], start=1):
        dt_ms = 0.0 if prev is None else (pkt.timestamp_us - prev) / 1000.0
        prev = pkt.timestamp_us
        out[i, 0] = _scaled(dt_ms, cfg.gap_scale_ms)
        raw = mask_packet(pkt)[:B]
        out[i, 1:1 + len(raw)] = np.frombuffer(raw, dtype=np.uint8) / 255.0
    return FlowMatrix(out, label, flow.flow_id)
