"""Classic pcap reading and Ethernet/IPv4/TCP/UDP decoding.

Only the classic (non-ng) format is handled, in both byte orders and in both
microsecond and nanosecond flavours.  Frames that cannot be turned into an
IPv4 TCP/UDP packet are skipped and counted, never raised.
"""

from __future__ import annotations

import struct
from collections import Counter
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import BinaryIO, Iterator

from .errors import TruncatedHeader, TruncatedRecord, UnknownMagic, UnsupportedLinkType

MAGIC_US = 0xA1B2C3D4
MAGIC_NS = 0xA1B23C4D
LINKTYPE_ETHERNET = 1

GLOBAL_HEADER_LEN = 24
RECORD_HEADER_LEN = 16
ETH_HEADER_LEN = 14

ETHERTYPE_IPV4 = 0x0800
ETHERTYPE_VLAN = 0x8100

TCP_FIN = 0x01
TCP_SYN = 0x02
TCP_RST = 0x04
TCP_PSH = 0x08
TCP_ACK = 0x10


class Protocol(IntEnum):
    TCP = 6
    UDP = 17


@dataclass(frozen=True)
class RawFrame:
    timestamp_us: int
    captured_bytes: bytes
    original_length: int


@dataclass(frozen=True)
class HeaderLayout:
    ip_cksum: int
    src_ip: int
    dst_ip: int
    l4_cksum: int


@dataclass(frozen=True)
class DecodedPacket:
    timestamp_us: int
    src_ip: bytes
    dst_ip: bytes
    src_port: int
    dst_port: int
    protocol: Protocol
    tcp_flags: int
    ip_and_payload: bytes
    header_layout: HeaderLayout
    transport_offset: int
    ip_total_length: int
    original_length: int = 0

    @property
    def is_fin(self) -> bool:
        return self.protocol == Protocol.TCP and bool(self.tcp_flags & TCP_FIN)

    @property
    def is_rst(self) -> bool:
        return self.protocol == Protocol.TCP and bool(self.tcp_flags & TCP_RST)


class CaptureReader:
    """Sequential reader over one classic pcap file (single consumer)."""

    def __init__(self, stream: BinaryIO, name: str = "<stream>"):
        self._f = stream
        self.name = name
        header = stream.read(GLOBAL_HEADER_LEN)
        if len(header) < GLOBAL_HEADER_LEN:
            raise TruncatedHeader(f"{name}: pcap global header needs 24 bytes, got {len(header)}")
        magic_be = struct.unpack(">I", header[:4])[0]
        magic_le = struct.unpack("<I", header[:4])[0]
        if magic_be in (MAGIC_US, MAGIC_NS):
            self.endian, magic = ">", magic_be
        elif magic_le in (MAGIC_US, MAGIC_NS):
            self.endian, magic = "<", magic_le
        else:
            raise UnknownMagic(f"{name}: unknown pcap magic {header[:4].hex()}")
        self.nanosecond = magic == MAGIC_NS
        (self.version_major, self.version_minor, self.thiszone, self.sigfigs,
         self.snaplen, self.linktype) = struct.unpack(self.endian + "HHiIII", header[4:])
        if self.linktype != LINKTYPE_ETHERNET:
            raise UnsupportedLinkType(f"{name}: link type {self.linktype} (only Ethernet=1)")
        self._rec = struct.Struct(self.endian + "IIII")
        self.records_read = 0

    def next_frame(self) -> RawFrame | None:
        hdr = self._f.read(RECORD_HEADER_LEN)
        if not hdr:
            return None
        if len(hdr) < RECORD_HEADER_LEN:
            raise TruncatedRecord(
                f"{self.name}: record {self.records_read} header has {len(hdr)} of 16 bytes")
        ts_sec, ts_sub, incl_len, orig_len = self._rec.unpack(hdr)
        body = self._f.read(incl_len)
        if len(body) < incl_len:
            raise TruncatedRecord(
                f"{self.name}: record {self.records_read} declares {incl_len} bytes, "
                f"only {len(body)} remain")
        sub_us = ts_sub // 1000 if self.nanosecond else ts_sub
        self.records_read += 1
        return RawFrame(ts_sec * 1_000_000 + sub_us, body, orig_len)

    def __iter__(self) -> Iterator[RawFrame]:
        while (frame := self.next_frame()) is not None:
            yield frame

    def close(self) -> None:
        self._f.close()

    def __enter__(self) -> "CaptureReader":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def open_capture(path: str | Path) -> CaptureReader:
    path = Path(path)
    f = open(path, "rb")
    try:
        return CaptureReader(f, str(path))
    except Exception:
        f.close()
        raise


@dataclass
class DecodeStats:
    """Per-reason skip counters; ``decoded + sum(skipped) == frames``."""

    frames: int = 0
    decoded: int = 0
    skipped: Counter = field(default_factory=Counter)

    def total_skipped(self) -> int:
        return sum(self.skipped.values())


def decode_packet(frame: RawFrame, stats: DecodeStats | None = None) -> DecodedPacket | None:
    if stats is not None:
        stats.frames += 1
    reason, pkt = _decode(frame)
    if stats is not None:
        if pkt is None:
            stats.skipped[reason] += 1
        else:
            stats.decoded += 1
    return pkt


def _decode(frame: RawFrame) -> tuple[str, DecodedPacket | None]:
    data = frame.captured_bytes
    if len(data) < ETH_HEADER_LEN:
        return "short-ethernet", None
    ethertype = int.from_bytes(data[12:14], "big")
    off = ETH_HEADER_LEN
    if ethertype == ETHERTYPE_VLAN:
        if len(data) < off + 4:
            return "short-ethernet", None
        ethertype = int.from_bytes(data[off + 2:off + 4], "big")
        off += 4
    if ethertype != ETHERTYPE_IPV4:
        return "non-ipv4", None
    ip = data[off:]
    if len(ip) < 20:
        return "short-ip", None
    if ip[0] >> 4 != 4:
        return "non-ipv4", None
    ihl = (ip[0] & 0x0F) * 4
    if ihl < 20 or len(ip) < ihl:
        return "short-ip", None
    total_length = int.from_bytes(ip[2:4], "big")
    frag = int.from_bytes(ip[6:8], "big")
    if frag & 0x2000 or frag & 0x1FFF:
        return "fragment", None
    proto = ip[9]
    if proto == Protocol.TCP:
        if len(ip) < ihl + 20:
            return "short-transport", None
        doff = (ip[ihl + 12] >> 4) * 4
        if doff < 20 or len(ip) < ihl + doff:
            return "short-transport", None
        flags = ip[ihl + 13]
        l4_cksum = ihl + 16
        protocol = Protocol.TCP
    elif proto == Protocol.UDP:
        if len(ip) < ihl + 8:
            return "short-transport", None
        flags = 0
        l4_cksum = ihl + 6
        protocol = Protocol.UDP
    else:
        return "non-tcp-udp", None
    src_port = int.from_bytes(ip[ihl:ihl + 2], "big")
    dst_port = int.from_bytes(ip[ihl + 2:ihl + 4], "big")
    return "", DecodedPacket(
        timestamp_us=frame.timestamp_us,
        src_ip=bytes(ip[12:16]),
        dst_ip=bytes(ip[16:20]),
        src_port=src_port,
        dst_port=dst_port,
        protocol=protocol,
        tcp_flags=flags,
        ip_and_payload=bytes(ip),
        header_layout=HeaderLayout(10, 12, 16, l4_cksum),
        transport_offset=ihl,
        ip_total_length=total_length,
        original_length=frame.original_length,
    )


def read_packets(path: str | Path, stats: DecodeStats | None = None) -> Iterator[DecodedPacket]:
    """Yield every decodable packet of a capture in file order."""
    with open_capture(path) as reader:
        for frame in reader:
            pkt = decode_packet(frame, stats)
            if pkt is not None:
                yield pkt


class PcapWriter:
    """Little-endian microsecond classic pcap writer."""

    def __init__(self, stream: BinaryIO, snaplen: int = 65535):
        self._f = stream
        self.snaplen = snaplen
        stream.write(struct.pack("<IHHiIII", MAGIC_US, 2, 4, 0, 0, snaplen, LINKTYPE_ETHERNET))

    def write(self, timestamp_us: int, frame: bytes, original_length: int | None = None) -> None:
        sec, usec = divmod(timestamp_us, 1_000_000)
        orig = len(frame) if original_length is None else original_length
        self._f.write(struct.pack("<IIII", sec, usec, len(frame), orig))
        self._f.write(frame)
