"""Reference flow-matrix computation straight from raw Ethernet frames.

Deliberately shares no code with the package: header offsets are re-derived
from the hex dump, and cells are filled one at a time in Python floats.
"""


import numpy as np

from conftest import ETH, ipv4, tcp_seg, udp_dgram


def oracle_matrix(frames, ctx, P, B, gap_scale_ms, ctx_scales):
    """frames: list of (timestamp_us, frame_hex). ctx: 5 raw context values."""
    rows = [[0.0] * (1 + B) for _ in range(1 + P)]
    for j in range(5):
        rows[0][j] = min(ctx[j] / ctx_scales[j], 1.0)
    prev = None
    for i, (ts, hexdump) in enumerate(frames[:P], start=1):
        raw = bytearray.fromhex(hexdump)
        pos = 12
        etype = raw[pos] * 256 + raw[pos + 1]
        pos += 2
        if etype == 0x8100:
            etype = raw[pos + 2] * 256 + raw[pos + 3]
            pos += 4
        ip = raw[pos:]
        ihl = (ip[0] % 16) * 4
        proto = ip[9]
        for k in (10, 11, 12, 13, 14, 15, 16, 17, 18, 19):
            ip[k] = 0
        if proto == 6:
            ck = ihl + 16
        else:
            ck = ihl + 6
        for k in (ck, ck + 1):
            if k < len(ip):
                ip[k] = 0
        if proto == 17:
            ip = ip[:ihl + 8] + bytearray(12) + ip[ihl + 8:]
        gap = 0.0 if prev is None else (ts - prev) / 1000.0
        prev = ts
        rows[i][0] = min(gap / gap_scale_ms, 1.0)
        for j in range(min(B, len(ip))):
            rows[i][1 + j] = ip[j] / 255.0
    return np.array(rows, dtype=np.float32)


def handcrafted_flows():
    """Twenty small flows: (name, [(ts_us, frame_bytes, original_length)], ctx)."""
    a, b = bytes([10, 0, 0, 1]), bytes([192, 168, 7, 200])
    flows = []

    def tcp(sport, dport, flags, payload=b"", doff=5, src=a, dst=b, ihl=5):
        return ETH + ipv4(6, src, dst, tcp_seg(sport, dport, flags, payload, doff), ihl_words=ihl)

    def udp(sport, dport, payload=b"", src=a, dst=b):
        return ETH + ipv4(17, src, dst, udp_dgram(sport, dport, payload))

    def whole(ts, fr):
        return (ts, fr, len(fr))

    flows.append(("tcp-single", [whole(0, tcp(5000, 80, 0x02))], (0, 0, 0, 0, 0)))
    flows.append(("tcp-handshake", [whole(0, tcp(5000, 80, 0x02)),
                                    whole(1500, tcp(80, 5000, 0x12, src=b, dst=a)),
                                    whole(2900, tcp(5000, 80, 0x10))], (12.5, 1, 2, 3, 4)))
    flows.append(("tcp-payload", [whole(10, tcp(5000, 80, 0x18, b"GET / HTTP/1.1\r\n" * 3))],
                  (1000.0, 0, 0, 7, 7)))
    flows.append(("tcp-options", [whole(0, tcp(1, 2, 0x18, b"\xff" * 30, doff=8))],
                  (0, 5, 0, 0, 0)))
    flows.append(("ip-options", [whole(0, tcp(1, 2, 0x18, b"\x80" * 9, ihl=7))], (0, 0, 0, 0, 0)))
    flows.append(("udp-empty", [whole(0, udp(53, 4444))], (0, 0, 0, 0, 0)))
    flows.append(("udp-payload", [whole(0, udp(53, 4444, bytes(range(1, 50)))),
                                  whole(700, udp(4444, 53, b"\xfe" * 90, src=b, dst=a))],
                  (5.0, 2, 2, 2, 2)))
    flows.append(("udp-long", [whole(0, udp(53, 4444, bytes(range(256)) * 2))], (0, 0, 0, 0, 0)))
    big = tcp(5000, 443, 0x18, bytes(range(256)) * 5)
    flows.append(("truncated-capture", [(0, big[:120], len(big)),
                                        (333, big[:60], len(big))], (0, 0, 0, 0, 0)))
    flows.append(("truncated-after-header", [(0, big[:14 + 20 + 20], len(big))],
                  (0, 0, 0, 0, 0)))
    flows.append(("more-than-P", [whole(k * 1000, tcp(7, 8, 0x10, bytes([k]) * 10))
                                  for k in range(9)], (0, 0, 0, 0, 0)))
    flows.append(("timeout-gap-clamped", [whole(0, tcp(7, 8, 0x10)),
                                          whole(1_100_000_000, tcp(7, 8, 0x10))], (0, 0, 0, 0, 0)))
    flows.append(("ctx-clamped", [whole(0, tcp(7, 8, 0x10))], (5e9, 5000, 5000, 5000, 5000)))
    flows.append(("all-ff", [whole(0, tcp(0xFFFF, 0xFFFF, 0xFF, b"\xff" * 300))], (0, 0, 0, 0, 0)))
    flows.append(("byte-128", [whole(0, tcp(1, 2, 0x10, b"\x80" * 40))], (0, 0, 0, 0, 0)))
    flows.append(("sub-ms-gaps", [whole(k * 7, tcp(1, 2, 0x10, b"z")) for k in range(4)],
                  (0.25, 0, 1, 0, 1)))
    flows.append(("reverse-first", [whole(0, tcp(80, 5000, 0x12, b"hi", src=b, dst=a)),
                                    whole(1, tcp(5000, 80, 0x10))], (0, 0, 0, 0, 0)))
    flows.append(("udp-truncated", [(0, udp(9, 9, b"q" * 100)[:50], 142)], (0, 0, 0, 0, 0)))
    flows.append(("mixed-sizes", [whole(0, tcp(1, 2, 0x18, b"a" * 5)),
                                  whole(2, tcp(2, 1, 0x18, b"b" * 500, src=b, dst=a)),
                                  whole(5, tcp(1, 2, 0x11))], (3.0, 1, 1, 1, 1)))
    flows.append(("vlan", [whole(0, ETH[:12] + b"\x81\x00\x00\x07\x08\x00" +
                                 ipv4(6, a, b, tcp_seg(3, 4, 0x18, b"vlan!")))], (0, 0, 0, 0, 0)))
    assert len(flows) == 20
    return flows
