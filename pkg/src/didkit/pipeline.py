"""pcap -> flows -> context features -> labelled matrices."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .context import ContextFeatures, ContextTracker
from .dataset.didm import MatrixDataset
from .dataset.labels import LabelManifest
from .flows import FLOW_TIMEOUT_US, FlowRecord, assemble_flows
from .matrix import MatrixConfig, build_matrix
from .pcap import DecodeStats, read_packets


@dataclass
class Extraction:
    flows: list[FlowRecord]
    contexts: list[ContextFeatures]
    stats: DecodeStats = field(default_factory=DecodeStats)


def extract(pcap: str | Path, ctx_bucket: int = 1000, ctx_window_ms: float = 60_000,
            max_live_flows: int | None = None,
            timeout_us: int = FLOW_TIMEOUT_US) -> Extraction:
    """Reassemble flows and compute their context features in start order."""
    stats = DecodeStats()
    flows = assemble_flows(read_packets(pcap, stats), timeout_us=timeout_us,
                           max_live_flows=max_live_flows)
    tracker = ContextTracker(ctx_bucket, ctx_window_ms)
    contexts = [tracker.observe_flow(f.initiator[0], f.responder[0], f.start_time_us)
                for f in flows]
    return Extraction(flows, contexts, stats)


def featurize(pcap: str | Path, manifest: LabelManifest | None, cfg: MatrixConfig,
              ctx_bucket: int = 1000, ctx_window_ms: float = 60_000,
              max_live_flows: int | None = None, metadata: dict | None = None
              ) -> tuple[MatrixDataset, Extraction]:
    ex = extract(pcap, ctx_bucket, ctx_window_ms, max_live_flows)
    records = []
    for flow, ctx in zip(ex.flows, ex.contexts):
        label = manifest.classify(flow) if manifest is not None else None
        records.append(build_matrix(flow, ctx, cfg, label))
    meta = {"matrix": cfg.to_dict(), "ctx_bucket": ctx_bucket, "ctx_window_ms": ctx_window_ms}
    if manifest is not None:
        meta["class_names"] = {str(k): v for k, v in sorted(manifest.class_names.items())}
    meta.update(metadata or {})
    return MatrixDataset.from_records(records, meta, shape=cfg.shape), ex


def zero_context(data: MatrixDataset) -> MatrixDataset:
    """Copy with the context row cleared (the basic, unenriched matrix)."""
    values = data.values.copy()
    values[:, 0, :] = 0
    meta = dict(data.metadata)
    if "matrix" in meta:
        meta["matrix"] = dict(meta["matrix"], use_context=False)
    return MatrixDataset(values, data.labels.copy(), list(data.flow_ids), meta)


def binary_labels(labels: np.ndarray) -> np.ndarray:
    return (np.asarray(labels) != 0).astype(np.int64)
