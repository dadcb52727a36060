"""Deterministic labelled pcap scenarios.

Benign traffic is request/response TCP (handshake, turns, FIN) and UDP
exchanges with printable-ASCII payloads.  Three attack profiles are
available:

* ``pattern``: a benign-looking TCP flow whose first request carries a
  fixed byte motif at a random offset, so only content separates it;
* ``flood``: bursts of benign-looking flows all aimed at one responder IP;
* ``scan``: one initiator sweeping responder ports with SYN probes that are
  answered with RST.

Endpoint pools are shared between classes unless ``disjoint_pools`` is set,
so addresses carry no label information by default.
"""

from __future__ import annotations

import ipaddress
import struct
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset.labels import AddrMatch, LabelManifest, LabelRule
from .pcap import TCP_ACK, TCP_FIN, TCP_PSH, TCP_RST, TCP_SYN, PcapWriter, Protocol

PROFILE_CLASSES = {"pattern": (1, "web-attack"), "scan": (3, "port-scan"), "flood": (4, "dos-ddos")}
ASCII = bytes(range(0x20, 0x7F))
DEFAULT_MOTIF = b"\x90" * 8 + bytes(range(0xE0, 0xF0))
MSS = 1460
_ETH = bytes.fromhex("020000000002" "020000000001") + b"\x08\x00"


@dataclass
class ScenarioConfig:
    seed: int = 0
    n_benign: int = 100
    n_attack: int = 100
    attack_profiles: tuple[str, ...] = ("pattern",)
    client_pool: int = 64
    server_pool: int = 16
    disjoint_pools: bool = False
    udp_fraction: float = 0.2
    tcp_ports: tuple[int, ...] = (80, 443, 8080, 22, 25)
    udp_ports: tuple[int, ...] = (53, 123)
    payload_alphabet: bytes = ASCII
    request_len: tuple[int, int] = (160, 600)
    response_len: tuple[int, int] = (64, 3000)
    turns: tuple[int, int] = (1, 3)
    mean_flow_gap_ms: float = 200.0
    packet_gap_ms: tuple[float, float] = (0.1, 20.0)
    motif: bytes = DEFAULT_MOTIF
    motif_max_offset: int = 100
    flood_burst: int = 50
    flood_burst_ms: float = 1000.0
    flood_victim: str | None = None
    scan_burst: int = 50
    scan_probe_gap_ms: float = 5.0

    def __post_init__(self):
        if self.n_benign < 0 or self.n_attack < 0:
            raise ValueError("flow counts must be non-negative")
        for p in self.attack_profiles:
            if p not in PROFILE_CLASSES:
                raise ValueError(f"unknown attack profile {p!r}")
        if set(self.motif) & set(self.payload_alphabet):
            raise ValueError("motif bytes must not occur in the benign alphabet")
        if self.request_len[0] < self.motif_max_offset + len(self.motif):
            raise ValueError("minimum request length must fit the motif at its largest offset")
        if max(self.request_len[1], self.response_len[1]) > 65000:
            raise ValueError("payload lengths must stay below 65000 bytes")


@dataclass
class _Flow:
    class_id: int
    class_name: str
    proto: Protocol
    client: tuple[bytes, int]
    server: tuple[bytes, int]
    start_us: int
    packets: list[tuple[int, bytes]] = field(default_factory=list)  # (ts, frame)


class _Builder:
    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.rng = np.random.default_rng(cfg.seed)
        self.clients = [ipaddress.IPv4Address("10.1.0.1") + i for i in range(cfg.client_pool)]
        self.servers = [ipaddress.IPv4Address("10.0.0.1") + i for i in range(cfg.server_pool)]
        self.attack_clients = [ipaddress.IPv4Address("10.3.0.1") + i for i in range(cfg.client_pool)]
        self.attack_servers = [ipaddress.IPv4Address("10.2.0.1") + i for i in range(cfg.server_pool)]
        self.next_port: dict[bytes, int] = {}

    def _ephemeral(self, ip: bytes) -> int:
        if ip not in self.next_port:
            self.next_port[ip] = 1024 + int(self.rng.integers(0, 20000))
        port = self.next_port[ip]
        self.next_port[ip] = 1024 + (port - 1024 + 1) % (65536 - 1024)
        return port

    def pick_client(self, attack: bool) -> bytes:
        pool = self.attack_clients if attack and self.cfg.disjoint_pools else self.clients
        return pool[int(self.rng.integers(len(pool)))].packed

    def pick_server(self, attack: bool) -> bytes:
        pool = self.attack_servers if attack and self.cfg.disjoint_pools else self.servers
        return pool[int(self.rng.integers(len(pool)))].packed

    def payload(self, lo: int, hi: int) -> bytearray:
        n = int(self.rng.integers(lo, hi + 1))
        alpha = np.frombuffer(self.cfg.payload_alphabet, dtype=np.uint8)
        return bytearray(alpha[self.rng.integers(0, len(alpha), n)].tobytes())

    def gap_us(self) -> int:
        lo, hi = self.cfg.packet_gap_ms
        return int(round(self.rng.uniform(lo, hi) * 1000))

    # frame construction -------------------------------------------------
    def _ip(self, proto: Protocol, src: bytes, dst: bytes, l4: bytes) -> bytes:
        ident = int(self.rng.integers(0, 65536))
        hdr = struct.pack(">BBHHHBBH4s4s", 0x45, 0, 20 + len(l4), ident, 0x4000, 64,
                          int(proto), 0, src, dst)
        return _ETH + hdr + l4

    def tcp(self, src, dst, seq, ack, flags, payload=b"") -> bytes:
        l4 = struct.pack(">HHIIBBHHH", src[1], dst[1], seq & 0xFFFFFFFF, ack & 0xFFFFFFFF,
                         5 << 4, flags, 64240, 0, 0) + bytes(payload)
        return self._ip(Protocol.TCP, src[0], dst[0], l4)

    def udp(self, src, dst, payload) -> bytes:
        l4 = struct.pack(">HHHH", src[1], dst[1], 8 + len(payload), 0) + bytes(payload)
        return self._ip(Protocol.UDP, src[0], dst[0], l4)

    # flow bodies ----------------------------------------------------------
    def normal_flow(self, flow: _Flow, motif: bool = False) -> None:
        cfg = self.cfg
        c, s = flow.client, flow.server
        t = flow.start_us
        n_turns = int(self.rng.integers(cfg.turns[0], cfg.turns[1] + 1))
        if flow.proto == Protocol.UDP:
            for turn in range(n_turns):
                req = self.payload(*cfg.request_len)[:1400]
                if motif and turn == 0:
                    off = int(self.rng.integers(0, cfg.motif_max_offset + 1))
                    req[off:off + len(cfg.motif)] = cfg.motif
                flow.packets.append((t, self.udp(c, s, req)))
                t += self.gap_us()
                flow.packets.append((t, self.udp(s, c, self.payload(*cfg.response_len)[:1400])))
                t += self.gap_us()
            return
        cs = int(self.rng.integers(0, 2**32))
        ss = int(self.rng.integers(0, 2**32))
        pk = flow.packets
        pk.append((t, self.tcp(c, s, cs, 0, TCP_SYN)))
        t += self.gap_us()
        pk.append((t, self.tcp(s, c, ss, cs + 1, TCP_SYN | TCP_ACK)))
        t += self.gap_us()
        cs += 1
        ss += 1
        pk.append((t, self.tcp(c, s, cs, ss, TCP_ACK)))
        for turn in range(n_turns):
            t += self.gap_us()
            req = self.payload(*cfg.request_len)
            if motif and turn == 0:
                off = int(self.rng.integers(0, cfg.motif_max_offset + 1))
                req[off:off + len(cfg.motif)] = cfg.motif
            for seg in _segments(req):
                pk.append((t, self.tcp(c, s, cs, ss, TCP_PSH | TCP_ACK, seg)))
                cs += len(seg)
                t += self.gap_us()
            resp = self.payload(*cfg.response_len)
            for seg in _segments(resp):
                pk.append((t, self.tcp(s, c, ss, cs, TCP_PSH | TCP_ACK, seg)))
                ss += len(seg)
                t += self.gap_us()
            pk.append((t, self.tcp(c, s, cs, ss, TCP_ACK)))
        t += self.gap_us()
        pk.append((t, self.tcp(c, s, cs, ss, TCP_FIN | TCP_ACK)))

    def new_flow(self, class_id, class_name, start_us, attack, server_ip=None,
                 client_ip=None, proto=None, server_port=None) -> _Flow:
        cfg = self.cfg
        if proto is None:
            proto = Protocol.UDP if self.rng.random() < cfg.udp_fraction else Protocol.TCP
        if server_port is None:
            ports = cfg.udp_ports if proto == Protocol.UDP else cfg.tcp_ports
            server_port = ports[int(self.rng.integers(len(ports)))]
        cip = client_ip if client_ip is not None else self.pick_client(attack)
        sip = server_ip if server_ip is not None else self.pick_server(attack)
        return _Flow(class_id, class_name, proto, (cip, self._ephemeral(cip)),
                     (sip, server_port), start_us)


def _segments(data: bytes) -> list[bytes]:
    return [bytes(data[i:i + MSS]) for i in range(0, len(data), MSS)] or [b""]


def build_flows(cfg: ScenarioConfig) -> list[_Flow]:
    b = _Builder(cfg)
    rng = b.rng
    profiles = cfg.attack_profiles
    per_profile = Counter(profiles[i % len(profiles)] for i in range(cfg.n_attack))
    n_spread = cfg.n_benign + per_profile["pattern"]
    duration_us = int(max(n_spread, cfg.n_attack, 1) * cfg.mean_flow_gap_ms * 1000)

    # (start, kind, extra) events; sorted before packets are generated
    events: list[tuple[int, int, str, object]] = []
    for k in range(cfg.n_benign):
        events.append((int(rng.integers(0, duration_us)), len(events), "benign", None))
    for k in range(per_profile["pattern"]):
        events.append((int(rng.integers(0, duration_us)), len(events), "pattern", None))
    remaining = per_profile["flood"]
    while remaining:
        size = min(cfg.flood_burst, remaining)
        remaining -= size
        t0 = int(rng.integers(0, duration_us))
        victim = (ipaddress.IPv4Address(cfg.flood_victim).packed if cfg.flood_victim
                  else b.pick_server(True))
        offs = np.sort(rng.integers(0, int(cfg.flood_burst_ms * 1000), size))
        for o in offs:
            events.append((t0 + int(o), len(events), "flood", victim))
    remaining = per_profile["scan"]
    while remaining:
        size = min(cfg.scan_burst, remaining)
        remaining -= size
        t0 = int(rng.integers(0, duration_us))
        scanner, victim = b.pick_client(True), b.pick_server(True)
        first = int(rng.integers(1, 65536 - size))
        for j in range(size):
            t = t0 + int(round(j * cfg.scan_probe_gap_ms * 1000))
            events.append((t, len(events), "scan", (scanner, victim, first + j)))
    events.sort()

    flows = []
    for start, _, kind, extra in events:
        if kind == "benign":
            f = b.new_flow(0, "benign", start, attack=False)
            b.normal_flow(f)
        elif kind == "pattern":
            cid, name = PROFILE_CLASSES["pattern"]
            f = b.new_flow(cid, name, start, attack=True)
            b.normal_flow(f, motif=True)
        elif kind == "flood":
            cid, name = PROFILE_CLASSES["flood"]
            f = b.new_flow(cid, name, start, attack=True, server_ip=extra)
            b.normal_flow(f)
        else:
            cid, name = PROFILE_CLASSES["scan"]
            scanner, victim, port = extra
            f = b.new_flow(cid, name, start, attack=True, client_ip=scanner,
                           server_ip=victim, proto=Protocol.TCP, server_port=port)
            seq = int(rng.integers(0, 2**32))
            f.packets.append((start, b.tcp(f.client, f.server, seq, 0, TCP_SYN)))
            f.packets.append((start + b.gap_us(),
                              b.tcp(f.server, f.client, 0, seq + 1, TCP_RST | TCP_ACK)))
        flows.append(f)
    return flows


def manifest_for(flows: list[_Flow]) -> LabelManifest:
    m = LabelManifest()
    for f in flows:
        src = AddrMatch(ipaddress.IPv4Network(ipaddress.IPv4Address(f.client[0])), f.client[1])
        dst = AddrMatch(ipaddress.IPv4Network(ipaddress.IPv4Address(f.server[0])), f.server[1])
        m.rules.append(LabelRule(f.class_id, f.class_name, f.proto.name, src, dst,
                                 f.start_us, f.start_us))
        m.class_names.setdefault(f.class_id, f.class_name)
    return m


def generate(cfg: ScenarioConfig, pcap_out: str | Path, manifest_out: str | Path | None = None,
             header_comment: str | None = None) -> dict:
    """Write the capture (and optionally its label manifest); return summary counts."""
    flows = build_flows(cfg)
    frames = [(ts, fi, pi, fr) for fi, f in enumerate(flows) for pi, (ts, fr) in enumerate(f.packets)]
    frames.sort(key=lambda r: r[:3])
    with open(pcap_out, "wb") as fh:
        w = PcapWriter(fh)
        for ts, _, _, fr in frames:
            w.write(ts, fr)
    if manifest_out is not None:
        text = manifest_for(flows).to_text()
        if header_comment:
            text = "".join(f"# {line}\n" for line in header_comment.splitlines()) + text
        Path(manifest_out).write_text(text)
    per_class = Counter(f.class_name for f in flows)
    return {"flows": len(flows), "packets": len(frames),
            "bytes": sum(len(fr) for *_, fr in frames),
            "per_class": dict(sorted(per_class.items())),
            "duration_us": (frames[-1][0] - frames[0][0]) if frames else 0}
