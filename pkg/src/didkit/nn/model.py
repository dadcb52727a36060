"""Stacked-LSTM classifier with a ReLU/dropout dense head and softmax output."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import DimensionMismatch, LabelOutOfRange, NaNLoss
from .lstm import LstmCache, LstmLayerParams, lstm_backward, lstm_forward

FC_A = [2500, 1250, 512, 256, 64, 16]
FC_B = [64, 16]
VARIANTS = {
    "lstm-1a": ([50], FC_A),
    "lstm-1b": ([50], FC_B),
    "lstm-2a": ([100, 50], FC_A),
    "lstm-2b": ([100, 50], FC_B),
}


def normalize_variant(name: str) -> str:
    v = name.lower().replace("_", "-")
    if not v.startswith("lstm-"):
        v = "lstm-" + v
    if v not in VARIANTS:
        raise ValueError(f"unknown variant {name!r}; choose from {sorted(VARIANTS)}")
    return v


@dataclass
class ModelConfig:
    variant: str = "lstm-1b"
    input_dim: int = 201
    seq_len: int = 101
    n_classes: int = 2
    lstm_units: list[int] = field(default_factory=list)
    fc_units: list[int] = field(default_factory=list)
    dropout_rate: float = 0.2
    seed: int = 0
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 32
    epochs: int = 30
    patience: int = 10
    clip_norm: float = 1.0

    def __post_init__(self):
        self.variant = normalize_variant(self.variant)
        lstm, fc = VARIANTS[self.variant]
        if not self.lstm_units:
            self.lstm_units = list(lstm)
        if not self.fc_units:
            self.fc_units = list(fc)
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must lie in [0, 1)")
        if self.n_classes < 2:
            raise ValueError("n_classes must be >= 2")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)


def glorot(rng: np.random.Generator, fan_out: int, fan_in: int, dtype) -> np.ndarray:
    lim = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-lim, lim, size=(fan_out, fan_in)).astype(dtype)


class Model:
    """Parameters live in ``self.params`` (name -> array) in a fixed order."""

    def __init__(self, config: ModelConfig, params: dict[str, np.ndarray]):
        self.config = config
        self.params = params

    @property
    def dtype(self):
        return next(iter(self.params.values())).dtype

    @property
    def n_lstm(self) -> int:
        return len(self.config.lstm_units)

    @property
    def dense_names(self) -> list[str]:
        return [f"fc{k}" for k in range(len(self.config.fc_units))] + ["out"]

    def lstm_params(self, k: int) -> LstmLayerParams:
        p = self.params
        return LstmLayerParams(p[f"lstm{k}.W"], p[f"lstm{k}.U"], p[f"lstm{k}.b"])

    def astype(self, dtype) -> "Model":
        return Model(self.config, {k: v.astype(dtype) for k, v in self.params.items()})

    def forward(self, x: np.ndarray, train: bool = False,
                rng: np.random.Generator | None = None, return_cache: bool = False):
        """Class probabilities for a batch (N, T, D) or a single matrix (T, D)."""
        single = x.ndim == 2
        if single:
            x = x[None]
        cfg = self.config
        if x.ndim != 3 or x.shape[2] != cfg.input_dim:
            raise DimensionMismatch(
                f"model expects (N, T, {cfg.input_dim}) input, got {x.shape}")
        x = x.astype(self.dtype, copy=False)
        lstm_caches: list[LstmCache] = []
        seq = x
        for k in range(self.n_lstm):
            seq, cache = lstm_forward(self.lstm_params(k), seq)
            lstm_caches.append(cache)
        a = seq[:, -1]
        keep = 1.0 - cfg.dropout_rate
        dense_inputs, masks = [], []
        names = self.dense_names
        for name in names[:-1]:
            dense_inputs.append(a)
            z = a @ self.params[f"{name}.W"].T + self.params[f"{name}.b"]
            a = np.maximum(z, 0)
            if train and cfg.dropout_rate > 0:
                if rng is None:
                    raise ValueError("train mode needs an rng for dropout")
                m = (rng.random(a.shape) < keep).astype(a.dtype) / a.dtype.type(keep)
                a = a * m
                masks.append(m)
            else:
                masks.append(None)
        dense_inputs.append(a)
        logits = a @ self.params["out.W"].T + self.params["out.b"]
        shifted = logits - logits.max(axis=1, keepdims=True)
        e = np.exp(shifted)
        probs = e / e.sum(axis=1, keepdims=True)
        if return_cache:
            return probs, (lstm_caches, dense_inputs, masks, shifted, seq.shape)
        return probs[0] if single else probs

    def loss_and_grads(self, x: np.ndarray, labels: np.ndarray,
                       rng: np.random.Generator | None = None,
                       train: bool = True) -> tuple[float, dict[str, np.ndarray]]:
        """Mean cross-entropy over the batch and its gradient for every parameter."""
        labels = np.asarray(labels, dtype=np.int64)
        if labels.min(initial=0) < 0 or labels.max(initial=0) >= self.config.n_classes:
            raise LabelOutOfRange(f"labels must lie in [0, {self.config.n_classes})")
        probs, (lstm_caches, dense_inputs, masks, shifted, seq_shape) = self.forward(
            x, train=train, rng=rng, return_cache=True)
        N = len(labels)
        rows = np.arange(N)
        log_p = shifted[rows, labels] - np.log(np.exp(shifted).sum(axis=1))
        loss = -log_p.mean()
        if not np.isfinite(loss):
            raise NaNLoss(f"non-finite loss {loss!r} (max |logit| {np.abs(shifted).max()})")

        grads: dict[str, np.ndarray] = {}
        d = probs.copy()
        d[rows, labels] -= 1.0
        d /= N
        names = self.dense_names
        for j in reversed(range(len(names))):
            name = names[j]
            a_in = dense_inputs[j]
            grads[f"{name}.W"] = d.T @ a_in
            grads[f"{name}.b"] = d.sum(axis=0)
            d = d @ self.params[f"{name}.W"]
            if j > 0:
                m = masks[j - 1]
                if m is not None:
                    d = d * m
                # a_in is the post-ReLU (and post-dropout) activation of layer j-1
                d = d * (a_in > 0)
        dh = np.zeros(seq_shape, dtype=self.dtype)
        dh[:, -1] = d
        for k in reversed(range(self.n_lstm)):
            dh, g = lstm_backward(self.lstm_params(k), lstm_caches[k], dh)
            for part in ("W", "U", "b"):
                grads[f"lstm{k}.{part}"] = g[part]
        for name, g in grads.items():
            if not np.all(np.isfinite(g)):
                raise NaNLoss(f"non-finite gradient in {name}")
        return float(loss), {k: grads[k] for k in self.params}

    def predict_proba(self, x: np.ndarray, batch_size: int = 256) -> np.ndarray:
        out = [self.forward(x[s:s + batch_size]) for s in range(0, len(x), batch_size)]
        if not out:
            return np.zeros((0, self.config.n_classes), dtype=self.dtype)
        return np.concatenate(out)


def init_model(config: ModelConfig, seed: int | None = None, dtype=np.float32) -> Model:
    """Glorot-uniform weights, zero biases, forget-gate bias 1."""
    rng = np.random.default_rng(config.seed if seed is None else seed)
    params: dict[str, np.ndarray] = {}
    d_in = config.input_dim
    for k, H in enumerate(config.lstm_units):
        params[f"lstm{k}.W"] = np.concatenate([glorot(rng, H, d_in, dtype) for _ in range(4)])
        params[f"lstm{k}.U"] = np.concatenate([glorot(rng, H, H, dtype) for _ in range(4)])
        b = np.zeros(4 * H, dtype=dtype)
        b[H:2 * H] = 1.0
        params[f"lstm{k}.b"] = b
        d_in = H
    widths = list(config.fc_units) + [config.n_classes]
    names = [f"fc{k}" for k in range(len(config.fc_units))] + ["out"]
    for name, w in zip(names, widths):
        params[f"{name}.W"] = glorot(rng, w, d_in, dtype)
        params[f"{name}.b"] = np.zeros(w, dtype=dtype)
        d_in = w
    return Model(config, params)
