"""Mini-batch training with best-validation checkpointing and early stopping."""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass, field

import numpy as np

from .adam import Adam
from .checkpoint import Checkpoint
from .model import Model

log = logging.getLogger(__name__)


@dataclass
class TrainResult:
    checkpoint: Checkpoint
    history: list[tuple[int, float, float]] = field(default_factory=list)
    best_epoch: int = 0
    steps: int = 0

    def history_csv(self) -> str:
        buf = io.StringIO()
        buf.write("epoch,train_loss,val_loss\n")
        for epoch, tr, va in self.history:
            buf.write(f"{epoch},{tr!r},{va!r}\n")
        return buf.getvalue()


def clip_by_global_norm(grads: dict[str, np.ndarray], max_norm: float) -> float:
    """Rescale ``grads`` in place so their joint L2 norm is at most ``max_norm``."""
    norm = float(np.sqrt(sum(float(np.sum(g.astype(np.float64) ** 2)) for g in grads.values())))
    if norm > max_norm:
        scale = max_norm / norm
        for g in grads.values():
            g *= g.dtype.type(scale)
    return norm


def evaluate_loss(model: Model, x: np.ndarray, y: np.ndarray, batch_size: int = 256) -> float:
    """Mean cross-entropy in inference mode."""
    total = 0.0
    for s in range(0, len(y), batch_size):
        p = model.forward(x[s:s + batch_size])
        pl = p[np.arange(len(p)), y[s:s + batch_size]].astype(np.float64)
        total += float(-np.log(np.maximum(pl, 1e-30)).sum())
    return total / max(len(y), 1)


def train(model: Model, x_train: np.ndarray, y_train: np.ndarray,
          x_val: np.ndarray | None = None, y_val: np.ndarray | None = None,
          epochs: int | None = None, metadata: dict | None = None) -> TrainResult:
    """Train ``model`` in place; on return it holds the best-validation weights."""
    cfg = model.config
    if len(y_train) == 0:
        raise ValueError("empty training set")
    if x_val is None or len(y_val) == 0:
        x_val, y_val = x_train, y_train
    y_train = np.asarray(y_train, dtype=np.int64)
    y_val = np.asarray(y_val, dtype=np.int64)
    epochs = cfg.epochs if epochs is None else epochs
    rng = np.random.default_rng((cfg.seed, 1))
    opt = Adam(cfg.lr, cfg.beta1, cfg.beta2, cfg.eps)

    result = TrainResult(Checkpoint.capture(model, opt, rng, metadata))
    best = np.inf
    since_best = 0
    for epoch in range(1, epochs + 1):
        order = rng.permutation(len(y_train))
        losses = []
        for s in range(0, len(order), cfg.batch_size):
            idx = order[s:s + cfg.batch_size]
            loss, grads = model.loss_and_grads(x_train[idx], y_train[idx], rng=rng)
            if cfg.clip_norm > 0:
                clip_by_global_norm(grads, cfg.clip_norm)
            opt.step(model.params, grads)
            result.steps += 1
            losses.append(loss * len(idx))
        train_loss = float(sum(losses) / len(order))
        val_loss = evaluate_loss(model, x_val, y_val)
        result.history.append((epoch, train_loss, val_loss))
        log.info("epoch %d train_loss %.5f val_loss %.5f", epoch, train_loss, val_loss)
        if val_loss < best:
            best = val_loss
            since_best = 0
            result.best_epoch = epoch
            result.checkpoint = Checkpoint.capture(model, opt, rng, metadata)
        else:
            since_best += 1
            if cfg.patience and since_best >= cfg.patience:
                log.info("early stop after %d epochs without improvement", since_best)
                break
    model.params = {k: v.copy() for k, v in result.checkpoint.params.items()}
    return result
