import struct

import pytest

from didkit.pcap import DecodedPacket, RawFrame, decode_packet

ETH = bytes(12) + b"\x08\x00"


def ipv4(proto, src, dst, l4, total_length=None, frag=0x4000, ihl_words=5):
    opts = bytes(4 * (ihl_words - 5))
    tl = 4 * ihl_words + len(l4) if total_length is None else total_length
    hdr = struct.pack(">BBHHHBBH4s4s", 0x40 | ihl_words, 0, tl, 1, frag, 64, proto,
                      0xBEEF, bytes(src), bytes(dst))
    return hdr + opts + l4


def tcp_seg(sport, dport, flags=0x10, payload=b"", doff_words=5, cksum=0xCAFE):
    opts = bytes(4 * (doff_words - 5))
    return struct.pack(">HHIIBBHHH", sport, dport, 1, 2, doff_words << 4, flags, 1024,
                       cksum, 0) + opts + payload


def udp_dgram(sport, dport, payload=b"", cksum=0xCAFE):
    return struct.pack(">HHHH", sport, dport, 8 + len(payload), cksum) + payload


def make_tcp(ts, src, sport, dst, dport, flags=0x10, payload=b"") -> DecodedPacket:
    frame = ETH + ipv4(6, src, dst, tcp_seg(sport, dport, flags, payload))
    return decode_packet(RawFrame(ts, frame, len(frame)))


def make_udp(ts, src, sport, dst, dport, payload=b"") -> DecodedPacket:
    frame = ETH + ipv4(17, src, dst, udp_dgram(sport, dport, payload))
    return decode_packet(RawFrame(ts, frame, len(frame)))


@pytest.fixture
def ip():
    return lambda s: bytes(int(x) for x in s.split("."))
