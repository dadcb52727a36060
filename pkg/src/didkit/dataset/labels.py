"""Rule-based flow labelling.

Manifest text format, one directive per line (``#`` starts a comment)::

    default 0 benign
    3 dos TCP *:* 10.0.0.9/32:80 [1000000..2000000]

Rule fields are ``class_id class_name proto src dst [t0..t1]`` where ``src``
matches the flow initiator and ``dst`` the responder, each written
``cidr:port`` with ``*`` as a wildcard for either part, and the optional time
range bounds the flow start in microseconds (inclusive).  The first matching
rule wins.
"""

from __future__ import annotations

import ipaddress
import re
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ManifestError
from ..flows import FlowRecord

_TIME_RE = re.compile(r"^\[(\*|\d+)\.\.(\*|\d+)\]$")


@dataclass(frozen=True)
class AddrMatch:
    network: ipaddress.IPv4Network | None
    port: int | None

    def matches(self, ip: bytes, port: int) -> bool:
        if self.port is not None and port != self.port:
            return False
        if self.network is None:
            return True
        return ipaddress.IPv4Address(ip) in self.network

    @classmethod
    def parse(cls, text: str) -> "AddrMatch":
        host, sep, port = text.rpartition(":")
        if not sep:
            host, port = text, "*"
        net = None if host in ("*", "") else ipaddress.IPv4Network(host, strict=False)
        return cls(net, None if port == "*" else int(port))

    def exact(self) -> tuple[bytes, int] | None:
        if self.network is None or self.port is None or self.network.prefixlen != 32:
            return None
        return (self.network.network_address.packed, self.port)

    def __str__(self) -> str:
        host = "*" if self.network is None else str(self.network)
        return f"{host}:{'*' if self.port is None else self.port}"


@dataclass(frozen=True)
class LabelRule:
    class_id: int
    class_name: str
    proto: str | None
    src: AddrMatch
    dst: AddrMatch
    t0: int | None = None
    t1: int | None = None

    def matches(self, flow: FlowRecord) -> bool:
        if self.proto is not None and flow.key.protocol.name != self.proto:
            return False
        if self.t0 is not None and flow.start_time_us < self.t0:
            return False
        if self.t1 is not None and flow.start_time_us > self.t1:
            return False
        ini, resp = flow.initiator, flow.responder
        return self.src.matches(*ini) and self.dst.matches(*resp)

    def to_line(self) -> str:
        line = (f"{self.class_id} {self.class_name} {self.proto or '*'} {self.src} {self.dst}")
        if self.t0 is not None or self.t1 is not None:
            a = "*" if self.t0 is None else self.t0
            b = "*" if self.t1 is None else self.t1
            line += f" [{a}..{b}]"
        return line


@dataclass
class LabelManifest:
    rules: list[LabelRule] = field(default_factory=list)
    default_class: int = 0
    class_names: dict[int, str] = field(default_factory=lambda: {0: "benign"})

    def __post_init__(self):
        self._index: dict | None = None

    def _build_index(self):
        exact: dict[tuple, int] = {}
        general: list[tuple[int, LabelRule]] = []
        for i, r in enumerate(self.rules):
            s, d = r.src.exact(), r.dst.exact()
            if r.proto is not None and s and d and r.t0 is not None and r.t0 == r.t1:
                exact.setdefault((r.proto, s, d, r.t0), i)
            else:
                general.append((i, r))
        self._index = (exact, general)

    def classify(self, flow: FlowRecord) -> int:
        if self._index is None:
            self._build_index()
        exact, general = self._index
        best = exact.get((flow.key.protocol.name, flow.initiator, flow.responder,
                          flow.start_time_us), len(self.rules))
        for i, rule in general:
            if i >= best:
                break
            if rule.matches(flow):
                return rule.class_id
        return self.rules[best].class_id if best < len(self.rules) else self.default_class

    def to_text(self) -> str:
        lines = [f"default {self.default_class} {self.class_names.get(self.default_class, 'benign')}"]
        lines += [r.to_line() for r in self.rules]
        return "\n".join(lines) + "\n"


def label_flows(flows: list[FlowRecord], manifest: LabelManifest) -> list[tuple[FlowRecord, int]]:
    return [(f, manifest.classify(f)) for f in flows]


def parse_manifest(text: str) -> LabelManifest:
    m = LabelManifest()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "default":
                m.default_class = int(parts[1])
                if len(parts) > 2:
                    m.class_names[m.default_class] = parts[2]
                continue
            if len(parts) not in (5, 6):
                raise ValueError(f"expected 5 or 6 fields, got {len(parts)}")
            cid, name, proto = int(parts[0]), parts[1], parts[2].upper()
            if proto not in ("*", "TCP", "UDP"):
                raise ValueError(f"bad protocol {parts[2]!r}")
            t0 = t1 = None
            if len(parts) == 6:
                tm = _TIME_RE.match(parts[5])
                if not tm:
                    raise ValueError(f"bad time range {parts[5]!r}")
                t0 = None if tm[1] == "*" else int(tm[1])
                t1 = None if tm[2] == "*" else int(tm[2])
            rule = LabelRule(cid, name, None if proto == "*" else proto,
                             AddrMatch.parse(parts[3]), AddrMatch.parse(parts[4]), t0, t1)
        except (ValueError, IndexError) as exc:
            raise ManifestError(f"manifest line {lineno}: {exc}") from None
        m.rules.append(rule)
        m.class_names.setdefault(cid, name)
    return m


def load_manifest(path: str | Path) -> LabelManifest:
    return parse_manifest(Path(path).read_text())
