import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from didkit.context import ContextFeatures
from didkit.errors import EmptyFlow
from didkit.flows import assemble_flows
from didkit.matrix import MatrixConfig, build_matrix, mask_packet
from didkit.pcap import RawFrame, decode_packet

from conftest import ETH, ipv4, make_tcp, make_udp, tcp_seg
from matrix_oracle import handcrafted_flows, oracle_matrix

A, B = bytes([10, 0, 0, 1]), bytes([10, 0, 0, 2])


def one_flow(packets):
    (flow,) = assemble_flows(packets)
    return flow


def test_mask_zeroes_addresses_and_checksums_only():
    p = make_tcp(0, A, 5000, B, 80, payload=b"abc")
    out = mask_packet(p)
    assert out[12:16] == bytes(4) and out[16:20] == bytes(4)
    assert out[10:12] == bytes(2) and out[36:38] == bytes(2)
    keep = [i for i in range(len(out)) if i not in (10, 11, *range(12, 20), 36, 37)]
    assert all(out[i] == p.ip_and_payload[i] for i in keep)


def test_mask_pads_udp_header_to_20_bytes():
    p = make_udp(0, A, 53, B, 99)
    assert len(p.ip_and_payload) == 28
    out = mask_packet(p)
    assert len(out) == 40 and out[28:40] == bytes(12)
    p2 = make_udp(0, A, 53, B, 99, b"xyz")
    assert mask_packet(p2)[40:] == b"xyz"


def test_mask_is_identity_on_zeroed_fields():
    frame = ETH + ipv4(6, bytes(4), bytes(4), tcp_seg(1, 2, cksum=0))
    frame = frame[:24] + b"\0\0" + frame[26:]
    p = decode_packet(RawFrame(0, frame, len(frame)))
    assert mask_packet(p) == p.ip_and_payload


def test_all_ff_packet_gives_ones_outside_mask():
    ip = bytearray(b"\xff" * 40)
    ip[0], ip[6:8], ip[9], ip[32] = 0x45, b"\0\0", 6, 0x5F  # parseable header
    p = decode_packet(RawFrame(0, ETH + bytes(ip), 54))
    m = build_matrix(one_flow([p]), ContextFeatures(), MatrixConfig()).values
    assert not m[0].any() and m[1, 0] == 0
    masked = {10, 11, *range(12, 20), 36, 37}
    fixed = {0: 0x45, 6: 0, 7: 0, 9: 6, 32: 0x5F}
    for j in range(40):
        want = 0.0 if j in masked else np.float32(fixed.get(j, 255) / 255)
        assert m[1, 1 + j] == want
    assert not m[1, 41:].any() and not m[2:].any()


def test_byte_128_cell():
    p = make_tcp(0, A, 1, B, 2, payload=b"\x80")
    m = build_matrix(one_flow([p]), None, MatrixConfig()).values
    assert m[1, 41] == np.float32(128 / 255)
    assert abs(float(m[1, 41]) - 0.501961) < 1e-6


def test_packets_beyond_p_dropped():
    pk = [make_tcp(i * 1000, A, 1, B, 2, payload=bytes([i % 256])) for i in range(150)]
    m = build_matrix(one_flow(pk), None, MatrixConfig(max_packets=100)).values
    assert m.shape == (101, 201)
    assert m[100, 41] == np.float32(99 / 255)
    assert m[1:, 0][1:].max() > 0


def test_empty_flow_raises():
    flow = one_flow([make_tcp(0, A, 1, B, 2)])
    flow.packets = []
    with pytest.raises(EmptyFlow):
        build_matrix(flow, None, MatrixConfig())


def test_config_validation():
    with pytest.raises(ValueError):
        MatrixConfig(max_bytes=19)
    with pytest.raises(ValueError):
        MatrixConfig(max_packets=0)


@pytest.mark.parametrize("name,frames,ctx", handcrafted_flows(), ids=lambda v: v if isinstance(v, str) else "")
def test_handcrafted_flow_equals_oracle(name, frames, ctx):
    cfg = MatrixConfig(max_packets=6, max_bytes=64, gap_scale_ms=1000.0,
                       ctx_scales=(100.0, 10, 10, 10, 10))
    pk = [decode_packet(RawFrame(ts, fr, orig)) for ts, fr, orig in frames]
    got = build_matrix(one_flow(pk), ContextFeatures(*ctx), cfg).values
    want = oracle_matrix([(ts, fr.hex()) for ts, fr, _ in frames], ctx, 6, 64, 1000.0,
                         (100.0, 10, 10, 10, 10))
    assert np.array_equal(got, want)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.binary(max_size=300), st.integers(0, 10**9), st.booleans()),
                min_size=1, max_size=8),
       st.tuples(st.floats(0, 1e12), *[st.integers(0, 10**6)] * 4))
def test_range_and_shape_on_arbitrary_content(items, ctx):
    t = 0
    pk = []
    for payload, dt, udp in items:
        t += dt
        pk.append((make_udp if udp else make_tcp)(t, A, 1, B, 2, payload=payload))
    cfg = MatrixConfig(max_packets=5, max_bytes=80)
    for flow in assemble_flows(pk):
        m = build_matrix(flow, ContextFeatures(*ctx), cfg).values
        assert m.shape == (6, 81) and m.dtype == np.float32
        assert m.min() >= 0.0 and m.max() <= 1.0
        assert not m[0, 5:].any()


@settings(max_examples=50, deadline=None)
@given(st.binary(min_size=4, max_size=4), st.binary(min_size=4, max_size=4), st.binary(max_size=100), st.booleans())
def test_addresses_and_checksums_are_invisible(ip1, ip2, payload, udp):
    make = make_udp if udp else make_tcp
    p1 = make(0, ip1, 7, ip2, 9, payload=payload)
    p2 = make(0, ip2, 7, ip1, 9, payload=payload)
    raw = bytearray(p2.ip_and_payload)
    lay = p2.header_layout
    raw[lay.ip_cksum:lay.ip_cksum + 2] = b"\x12\x34"
    raw[lay.l4_cksum:lay.l4_cksum + 2] = b"\x56\x78"
    p2 = decode_packet(RawFrame(0, ETH + bytes(raw), len(raw) + 14))
    cfg = MatrixConfig(max_packets=2, max_bytes=120)
    m1 = build_matrix(one_flow([p1]), None, cfg).values
    m2 = build_matrix(one_flow([p2]), None, cfg).values
    assert np.array_equal(m1, m2)
