"""DIDC checkpoint files.

Layout (little-endian)::

    "DIDC" | version u16 | u32 length + JSON header
    u32 tensor count, then per tensor:
        u16 name length + name | u8 ndim | u32 dims... | float32 data
    u64 Adam step | u32 length + JSON generator state

The JSON header carries the model config and free-form metadata (matrix
config, run config, tool version).  Adam moments are stored as tensors
named ``adam.m/<param>`` and ``adam.v/<param>``.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import BadMagic, CorruptRecord, VersionMismatch
from .adam import Adam
from .model import Model, ModelConfig

MAGIC = b"DIDC"
VERSION = 1


@dataclass
class Checkpoint:
    config: ModelConfig
    params: dict[str, np.ndarray]
    adam_m: dict[str, np.ndarray] = field(default_factory=dict)
    adam_v: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0
    rng_state: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    @classmethod
    def capture(cls, model: Model, opt: Adam | None = None,
                rng: np.random.Generator | None = None, metadata: dict | None = None):
        copy = lambda d: {k: v.copy() for k, v in d.items()}
        return cls(model.config, copy(model.params),
                   copy(opt.m) if opt else {}, copy(opt.v) if opt else {},
                   opt.t if opt else 0,
                   rng.bit_generator.state if rng is not None else {},
                   dict(metadata or {}))

    def model(self) -> Model:
        return Model(self.config, {k: v.copy() for k, v in self.params.items()})

    def optimizer(self) -> Adam:
        c = self.config
        opt = Adam(c.lr, c.beta1, c.beta2, c.eps)
        opt.m = {k: v.copy() for k, v in self.adam_m.items()}
        opt.v = {k: v.copy() for k, v in self.adam_v.items()}
        opt.t = self.step
        return opt

    def rng(self) -> np.random.Generator:
        rng = np.random.default_rng()
        if self.rng_state:
            rng.bit_generator.state = self.rng_state
        return rng


def _put_tensor(out: list, name: str, arr: np.ndarray) -> None:
    nb = name.encode()
    out.append(struct.pack("<H", len(nb)) + nb + struct.pack("<B", arr.ndim))
    out.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
    out.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def save_checkpoint(path: str | Path, ckpt: Checkpoint) -> None:
    header = json.dumps({"config": ckpt.config.to_dict(), "metadata": ckpt.metadata},
                        sort_keys=True).encode()
    tensors = list(ckpt.params.items())
    tensors += [(f"adam.m/{k}", v) for k, v in ckpt.adam_m.items()]
    tensors += [(f"adam.v/{k}", v) for k, v in ckpt.adam_v.items()]
    out = [MAGIC, struct.pack("<HI", VERSION, len(header)), header,
           struct.pack("<I", len(tensors))]
    for name, arr in tensors:
        _put_tensor(out, name, arr)
    rng = json.dumps(ckpt.rng_state, sort_keys=True).encode()
    out.append(struct.pack("<QI", ckpt.step, len(rng)))
    out.append(rng)
    Path(path).write_bytes(b"".join(out))


def load_checkpoint(path: str | Path) -> Checkpoint:
    buf = Path(path).read_bytes()
    if buf[:4] != MAGIC:
        raise BadMagic(f"{path}: not a DIDC checkpoint")
    try:
        version, hlen = struct.unpack_from("<HI", buf, 4)
        if version != VERSION:
            raise VersionMismatch(f"{path}: checkpoint version {version}, expected {VERSION}")
        pos = 10
        header = json.loads(buf[pos:pos + hlen])
        pos += hlen
        (count,) = struct.unpack_from("<I", buf, pos)
        pos += 4
        tensors = {}
        for _ in range(count):
            (nlen,) = struct.unpack_from("<H", buf, pos)
            pos += 2
            name = buf[pos:pos + nlen].decode()
            pos += nlen
            (ndim,) = struct.unpack_from("<B", buf, pos)
            pos += 1
            shape = struct.unpack_from(f"<{ndim}I", buf, pos)
            pos += 4 * ndim
            size = int(np.prod(shape, dtype=np.int64))
            if pos + 4 * size > len(buf):
                raise CorruptRecord(f"{path}: tensor {name} truncated")
            tensors[name] = np.frombuffer(buf, "<f4", size, pos).reshape(shape).astype(np.float32)
            pos += 4 * size
        step, rlen = struct.unpack_from("<QI", buf, pos)
        pos += 12
        rng_state = json.loads(buf[pos:pos + rlen]) if rlen else {}
    except (struct.error, ValueError, UnicodeDecodeError) as exc:
        raise CorruptRecord(f"{path}: malformed checkpoint ({exc})") from None
    params = {k: v for k, v in tensors.items() if not k.startswith("adam.")}
    m = {k[len("adam.m/"):]: v for k, v in tensors.items() if k.startswith("adam.m/")}
    v = {k[len("adam.v/"):]: v for k, v in tensors.items() if k.startswith("adam.v/")}
    return Checkpoint(ModelConfig.from_dict(header["config"]), params, m, v, step,
                      rng_state, header.get("metadata", {}))
