"""Single flat run configuration shared by every CLI command.

Config files are ``key = value`` lines; ``#`` starts a comment.  Keys may use
dashes or underscores.  Command-line flags override file values.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .matrix import MatrixConfig


@dataclass
class RunConfig:
    seed: int | None = None
    ctx_bucket: int = 1000
    ctx_window_ms: float = 60_000.0
    max_packets: int = 100
    max_bytes: int = 200
    gap_scale_ms: float = 1_200_000.0
    ctx_scales: tuple[float, ...] | None = None
    max_live_flows: int | None = None
    classes: str = "binary"
    split: tuple[float, float, float] = (0.64, 0.16, 0.20)
    kfold: int | None = None
    variant: str = "lstm-1b"
    epochs: int = 30
    batch_size: int = 32
    lr: float = 0.001
    dropout: float = 0.2
    patience: int = 10
    clip_norm: float = 1.0
    threshold: float = 0.5

    def matrix_config(self, use_context: bool = True) -> MatrixConfig:
        scales = self.ctx_scales or (self.gap_scale_ms,) + (float(self.ctx_bucket),) * 4
        return MatrixConfig(self.max_packets, self.max_bytes, self.gap_scale_ms,
                            tuple(scales), use_context)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("ctx_scales", "split"):
            if d[k] is not None:
                d[k] = list(d[k])
        return d

    def update(self, values: dict) -> None:
        known = {f.name: f for f in fields(self)}
        for key, raw in values.items():
            name = key.replace("-", "_")
            if name not in known:
                raise ValueError(f"unknown config key {key!r}")
            if raw is None:
                continue
            setattr(self, name, _coerce(name, raw))


def _coerce(name: str, raw):
    if not isinstance(raw, str):
        return tuple(raw) if isinstance(raw, list) else raw
    raw = raw.strip()
    if name in ("ctx_scales", "split"):
        return tuple(float(v) for v in raw.split(","))
    if name in ("classes", "variant"):
        return raw
    if raw.lower() in ("none", ""):
        return None
    if name in ("seed", "ctx_bucket", "max_packets", "max_bytes", "max_live_flows",
                "kfold", "epochs", "batch_size", "patience"):
        return int(raw)
    return float(raw)


def load_config(path: str | Path) -> dict:
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        values[key.strip()] = value.strip()
    return values
