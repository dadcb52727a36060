"""
Why the context row matters for floods
======================================

Flood flows look exactly like benign ones from the inside.  What gives them
away is how many recent flows went to the same victim, which only the
context row records.  Train twice on the same split, once with the row
cleared, and compare.
"""

# %%
import tempfile
from pathlib import Path

from didkit.dataset import load_manifest, split
from didkit.matrix import MatrixConfig
from didkit.metrics import confusion, metrics
from didkit.nn import ModelConfig, init_model, train
from didkit.pipeline import binary_labels, featurize, zero_context
from didkit.synthgen import ScenarioConfig, generate

work = Path(tempfile.mkdtemp())
generate(ScenarioConfig(seed=7, n_benign=1000, n_attack=1000, attack_profiles=("flood",)),
         work / "c.pcap", work / "l.txt")

# %%
# A short bucket and window suit the one-second bursts.
cfg = MatrixConfig.for_context(50, max_packets=20, max_bytes=200)
data, ex = featurize(work / "c.pcap", load_manifest(work / "l.txt"), cfg,
                     ctx_bucket=50, ctx_window_ms=1000)
y = binary_labels(data.labels)
for lab in (0, 1):
    dst_counts = [c.dst_count_time for c, v in zip(ex.contexts, y) if v == lab]
    print("class", lab, "mean dst count in window:", sum(dst_counts) / len(dst_counts))

# %%
parts = split(y, seed=1)


def fit(d):
    tr, va, te = parts
    m = init_model(ModelConfig("lstm-1b", input_dim=201, seq_len=21, seed=1, epochs=30))
    train(m, d.values[tr], y[tr], d.values[va], y[va])
    return metrics(confusion(y[te], m.predict_proba(d.values[te]).argmax(1), 2))


print("enriched:", fit(data))
print("context zeroed:", fit(zero_context(data)))
