"""Batched LSTM layer with full backpropagation through time.

Gate blocks are stacked in the order input, forget, cell, output, so
``W`` is (4H, D), ``U`` is (4H, H) and ``b`` is (4H,).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatch

GATES = ("input", "forget", "cell", "output")


def sigmoid(x: np.ndarray) -> np.ndarray:
    # tanh form is overflow-free and keeps the input dtype
    return 0.5 * (1.0 + np.tanh(0.5 * x))


@dataclass
class LstmLayerParams:
    W: np.ndarray
    U: np.ndarray
    b: np.ndarray

    @property
    def input_dim(self) -> int:
        return self.W.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.U.shape[1]

    def gate(self, name: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Views of (W, U, b) for one gate."""
        k, H = GATES.index(name), self.hidden_dim
        s = slice(k * H, (k + 1) * H)
        return self.W[s], self.U[s], self.b[s]


@dataclass
class LstmCache:
    x: np.ndarray       # (N, T, D)
    h: np.ndarray       # (N, T+1, H), h[:, 0] = 0
    c: np.ndarray       # (N, T+1, H)
    gates: np.ndarray   # (N, T, 4H) post-activation
    tanh_c: np.ndarray  # (N, T, H)


def lstm_forward(params: LstmLayerParams, x: np.ndarray) -> tuple[np.ndarray, LstmCache]:
    """Run the layer over ``x`` of shape (N, T, D); returns h_1..h_T as (N, T, H)."""
    W, U, b = params.W, params.U, params.b
    if x.ndim != 3 or x.shape[2] != W.shape[1]:
        raise DimensionMismatch(f"LSTM expects (N, T, {W.shape[1]}) input, got {x.shape}")
    N, T, _ = x.shape
    H = U.shape[1]
    dt = W.dtype
    h = np.zeros((N, T + 1, H), dtype=dt)
    c = np.zeros((N, T + 1, H), dtype=dt)
    gates = np.empty((N, T, 4 * H), dtype=dt)
    tanh_c = np.empty((N, T, H), dtype=dt)
    if T:
        xw = (x.reshape(N * T, -1) @ W.T).reshape(N, T, 4 * H) + b
    for t in range(T):
        z = xw[:, t] + h[:, t] @ U.T
        i = sigmoid(z[:, :H])
        f = sigmoid(z[:, H:2 * H])
        g = np.tanh(z[:, 2 * H:3 * H])
        o = sigmoid(z[:, 3 * H:])
        c[:, t + 1] = f * c[:, t] + i * g
        tanh_c[:, t] = np.tanh(c[:, t + 1])
        h[:, t + 1] = o * tanh_c[:, t]
        gates[:, t, :H], gates[:, t, H:2 * H] = i, f
        gates[:, t, 2 * H:3 * H], gates[:, t, 3 * H:] = g, o
    return h[:, 1:], LstmCache(x, h, c, gates, tanh_c)


def lstm_backward(params: LstmLayerParams, cache: LstmCache,
                  dh_seq: np.ndarray) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    """Gradients given dL/dh_t for every step; returns (dx, {"W", "U", "b"})."""
    W, U = params.W, params.U
    N, T, H = dh_seq.shape
    dW = np.zeros_like(W)
    dU = np.zeros_like(U)
    db = np.zeros_like(params.b)
    dx = np.zeros_like(cache.x)
    dh_next = np.zeros((N, H), dtype=W.dtype)
    dc_next = np.zeros((N, H), dtype=W.dtype)
    dz = np.empty((N, 4 * H), dtype=W.dtype)
    for t in reversed(range(T)):
        gt = cache.gates[:, t]
        i, f, g, o = gt[:, :H], gt[:, H:2 * H], gt[:, 2 * H:3 * H], gt[:, 3 * H:]
        tc = cache.tanh_c[:, t]
        dh = dh_seq[:, t] + dh_next
        dc = dc_next + dh * o * (1.0 - tc * tc)
        dz[:, :H] = dc * g * i * (1.0 - i)
        dz[:, H:2 * H] = dc * cache.c[:, t] * f * (1.0 - f)
        dz[:, 2 * H:3 * H] = dc * i * (1.0 - g * g)
        dz[:, 3 * H:] = dh * tc * o * (1.0 - o)
        dW += dz.T @ cache.x[:, t]
        dU += dz.T @ cache.h[:, t]
        db += dz.sum(axis=0)
        dx[:, t] = dz @ W
        dh_next = dz @ U
        dc_next = dc * f
    return dx, {"W": dW, "U": dU, "b": db}
