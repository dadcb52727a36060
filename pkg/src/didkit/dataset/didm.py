"""DIDM matrix dataset files.

Layout (little-endian)::

    "DIDM" | version u16 = 1 | flags u16 | P u32 | B u32 | count u64
    [flags & 1] metadata: u32 length + UTF-8 JSON
    per record: u16 id length + flow id bytes | class u16 |
                (1+P)(1+B) float32 row-major
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import BadMagic, CorruptRecord, VersionMismatch
from ..matrix import FlowMatrix

MAGIC = b"DIDM"
VERSION = 1
FLAG_METADATA = 1
NO_LABEL = 0xFFFF

_HEADER = struct.Struct("<4sHHIIQ")


@dataclass
class MatrixDataset:
    values: np.ndarray                       # (n, 1+P, 1+B) float32
    labels: np.ndarray                       # (n,) int64, -1 = unlabelled
    flow_ids: list[str]
    metadata: dict = field(default_factory=dict)
    offsets: list[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def max_packets(self) -> int:
        return self.values.shape[1] - 1

    @property
    def max_bytes(self) -> int:
        return self.values.shape[2] - 1

    def subset(self, idx) -> "MatrixDataset":
        idx = np.asarray(idx, dtype=np.int64)
        return MatrixDataset(self.values[idx], self.labels[idx],
                             [self.flow_ids[i] for i in idx], dict(self.metadata))

    def records(self) -> list[FlowMatrix]:
        return [FlowMatrix(v, None if lab < 0 else int(lab), fid)
                for v, lab, fid in zip(self.values, self.labels, self.flow_ids)]

    @classmethod
    def from_records(cls, records: Sequence[FlowMatrix], metadata: dict | None = None,
                     shape: tuple[int, int] | None = None) -> "MatrixDataset":
        if records:
            values = np.stack([r.values.astype(np.float32, copy=False) for r in records])
        elif shape is not None:
            values = np.zeros((0, *shape), dtype=np.float32)
        else:
            raise ValueError("empty record list needs an explicit shape")
        labels = np.array([-1 if r.label is None else r.label for r in records], dtype=np.int64)
        return cls(values, labels, [r.flow_id for r in records], dict(metadata or {}))


def write_matrices(path: str | Path, data: MatrixDataset) -> None:
    n, rows, cols = data.values.shape
    meta = json.dumps(data.metadata, sort_keys=True).encode() if data.metadata else b""
    flags = FLAG_METADATA if meta else 0
    values = np.ascontiguousarray(data.values, dtype="<f4")
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, VERSION, flags, rows - 1, cols - 1, n))
        if meta:
            f.write(struct.pack("<I", len(meta)))
            f.write(meta)
        for i in range(n):
            fid = data.flow_ids[i].encode()
            lab = int(data.labels[i])
            f.write(struct.pack("<H", len(fid)))
            f.write(fid)
            f.write(struct.pack("<H", NO_LABEL if lab < 0 else lab))
            f.write(values[i].tobytes())


def read_matrices(path: str | Path) -> MatrixDataset:
    buf = Path(path).read_bytes()
    if len(buf) < 4 or buf[:4] != MAGIC:
        raise BadMagic(f"{path}: not a DIDM file (magic {buf[:4]!r})")
    if len(buf) < _HEADER.size:
        raise CorruptRecord(f"{path}: header truncated")
    _, version, flags, P, B, n = _HEADER.unpack_from(buf)
    if version != VERSION:
        raise VersionMismatch(f"{path}: DIDM version {version}, expected {VERSION}")
    pos = _HEADER.size
    metadata = {}
    if flags & FLAG_METADATA:
        if pos + 4 > len(buf):
            raise CorruptRecord(f"{path}: metadata block truncated")
        (mlen,) = struct.unpack_from("<I", buf, pos)
        pos += 4
        if pos + mlen > len(buf):
            raise CorruptRecord(f"{path}: metadata block truncated")
        try:
            metadata = json.loads(buf[pos:pos + mlen])
        except ValueError as exc:
            raise CorruptRecord(f"{path}: metadata is not valid JSON ({exc})") from None
        pos += mlen
    cells = (1 + P) * (1 + B)
    if n * (4 + 4 * cells) > len(buf) - pos:
        raise CorruptRecord(f"{path}: header claims {n} records of {4 * cells} value bytes, "
                            f"only {len(buf) - pos} bytes follow")
    values = np.empty((n, 1 + P, 1 + B), dtype=np.float32)
    labels = np.empty(n, dtype=np.int64)
    ids, offsets = [], []
    for i in range(n):
        offsets.append(pos)
        if pos + 2 > len(buf):
            raise CorruptRecord(f"{path}: record {i} truncated")
        (ilen,) = struct.unpack_from("<H", buf, pos)
        pos += 2
        end = pos + ilen + 2 + 4 * cells
        if end > len(buf):
            raise CorruptRecord(f"{path}: record {i} truncated ({len(buf) - pos} of "
                                f"{end - pos} bytes)")
        try:
            ids.append(buf[pos:pos + ilen].decode())
        except UnicodeDecodeError:
            raise CorruptRecord(f"{path}: record {i} flow id is not UTF-8") from None
        pos += ilen
        (lab,) = struct.unpack_from("<H", buf, pos)
        labels[i] = -1 if lab == NO_LABEL else lab
        pos += 2
        values[i] = np.frombuffer(buf, dtype="<f4", count=cells, offset=pos).reshape(1 + P, 1 + B)
        pos += 4 * cells
    if pos != len(buf):
        raise CorruptRecord(f"{path}: {len(buf) - pos} trailing bytes after record {n - 1}")
    return MatrixDataset(values, labels, ids, metadata, offsets)
