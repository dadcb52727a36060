import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from didkit.dataset import (MatrixDataset, balance, kfold, label_flows, parse_manifest,
                            read_matrices, split, write_matrices)
from didkit.errors import (BadMagic, CorruptRecord, ManifestError, SingleClassDataset,
                           TooFewRecords, VersionMismatch)
from didkit.flows import assemble_flows

from conftest import make_tcp, make_udp

A, B, V = b"\x0a\0\0\1", b"\x0a\0\0\2", b"\x0a\0\0\x09"


def flow(pk):
    (f,) = assemble_flows(pk)
    return f


MANIFEST = """
# sample manifest
default 0 benign
4 dos TCP *:* 10.0.0.9/32:80 [1000..2000]
1 web TCP 10.0.0.0/24:* *:80
3 scan * *:* *:*  # catch-all, never reached for TCP port 80 above
"""


def test_rules_first_match_wins():
    m = parse_manifest(MANIFEST)
    assert m.classify(flow([make_tcp(1500, A, 4000, V, 80)])) == 4
    assert m.classify(flow([make_tcp(2001, A, 4000, V, 80)])) == 1
    assert m.classify(flow([make_udp(0, A, 4000, V, 53)])) == 3
    assert m.class_names == {0: "benign", 4: "dos", 1: "web", 3: "scan"}


def test_initiator_side_is_src():
    m = parse_manifest("1 web TCP 10.0.0.1/32:* *:80\n")
    assert m.classify(flow([make_tcp(0, A, 4000, B, 80)])) == 1
    # same 5-tuple, but the server spoke first: B:80 initiates
    assert m.classify(flow([make_tcp(0, B, 80, A, 4000)])) == 0


def test_unmatched_falls_back_to_default():
    m = parse_manifest("default 2 other\n1 web TCP *:* *:443\n")
    got = label_flows([flow([make_tcp(0, A, 1, B, 80)])], m)
    assert [lab for _, lab in got] == [2]


@pytest.mark.parametrize("bad", ["1 x TCP *:* *:* [5..", "x web TCP *:* *:*",
                                 "1 web ICMP *:* *:*", "1 web TCP 10.0.0.300:* *:*",
                                 "1 web TCP *:*"])
def test_manifest_errors_name_the_line(bad):
    with pytest.raises(ManifestError, match="line 2"):
        parse_manifest("default 0 benign\n" + bad)


def test_manifest_text_round_trip():
    m = parse_manifest(MANIFEST)
    again = parse_manifest(m.to_text())
    assert again.rules == m.rules and again.default_class == m.default_class


def test_exact_rule_index_respects_order():
    text = "1 a TCP *:* *:80\n2 b TCP 10.0.0.1/32:4000 10.0.0.2/32:80 [7..7]\n"
    assert parse_manifest(text).classify(flow([make_tcp(7, A, 4000, B, 80)])) == 1
    text = "2 b TCP 10.0.0.1/32:4000 10.0.0.2/32:80 [7..7]\n1 a TCP *:* *:80\n"
    assert parse_manifest(text).classify(flow([make_tcp(7, A, 4000, B, 80)])) == 2


def test_binary_balance_keeps_every_attack():
    labels = np.array([0] * 10_000 + [3] * 60 + [4] * 40)
    idx = balance(labels, "binary", seed=5)
    kept = labels[idx]
    assert (kept == 0).sum() == 100 and (kept != 0).sum() == 100
    assert np.array_equal(idx, np.sort(idx))
    assert np.array_equal(idx, balance(labels, "binary", seed=5))
    assert not np.array_equal(idx, balance(labels, "binary", seed=6))


def test_binary_balance_with_benign_minority_keeps_all(caplog):
    labels = np.array([0] * 5 + [1] * 20)
    idx = balance(labels, "binary", seed=0)
    assert len(idx) == 25
    assert "benign" in caplog.text


def test_multiclass_balance_to_smallest_class():
    labels = np.array([0] * 50 + [1] * 80 + [2] * 120)
    kept = labels[balance(labels, "multiclass", seed=1)]
    assert np.bincount(kept).tolist() == [50, 50, 50]


def test_single_class_refused():
    with pytest.raises(SingleClassDataset):
        balance([0, 0, 0], "binary")
    with pytest.raises(SingleClassDataset):
        balance([2, 2], "multiclass")


def test_split_sizes_100_records():
    labels = np.array([0] * 50 + [1] * 50)
    tr, va, te = split(labels, seed=3)
    assert (len(tr), len(va), len(te)) == (64, 16, 20)
    assert sorted(np.concatenate([tr, va, te])) == list(range(100))
    for part, n in ((tr, 32), (va, 8), (te, 10)):
        assert (labels[part] == 1).sum() == n


def test_split_rejects_bad_fractions():
    with pytest.raises(ValueError):
        split([0, 1], (0.5, 0.5, 0.5))


def test_kfold_ten_records_gives_singletons():
    folds = kfold(np.zeros(10, dtype=int), k=10, seed=0)
    assert sorted(folds) == list(range(10))


def test_kfold_stratified_fifty_fifty():
    labels = np.array([0] * 50 + [1] * 50)
    folds = kfold(labels, k=10, seed=9)
    for f in range(10):
        assert np.bincount(labels[folds == f], minlength=2).tolist() == [5, 5]


def test_kfold_uneven_sizes_within_one():
    labels = np.array([0] * 37 + [1] * 14 + [2] * 11)
    sizes = np.bincount(kfold(labels, k=10, seed=2), minlength=10)
    assert sizes.max() - sizes.min() <= 1


def test_kfold_too_few_records():
    with pytest.raises(TooFewRecords):
        kfold([0] * 20 + [1] * 3, k=10)


def _dataset(n, P=3, B=25, seed=0, meta=None):
    rng = np.random.default_rng(seed)
    values = rng.random((n, 1 + P, 1 + B), dtype=np.float32)
    labels = rng.integers(-1, 7, n)
    ids = [f"TCP 10.0.0.{i % 250}:{i}>10.0.0.9:80@{i * 7}" for i in range(n)]
    return MatrixDataset(values, labels, ids, meta or {})


def test_didm_round_trip(tmp_path):
    data = _dataset(17, meta={"seed": 4, "matrix": {"max_packets": 3}})
    write_matrices(tmp_path / "d.didm", data)
    back = read_matrices(tmp_path / "d.didm")
    assert np.array_equal(back.values, data.values) and back.values.dtype == np.float32
    assert back.labels.tolist() == data.labels.tolist()
    assert back.flow_ids == data.flow_ids and back.metadata == data.metadata
    assert (back.max_packets, back.max_bytes) == (3, 25)
    assert back.records()[0].label == (None if data.labels[0] < 0 else data.labels[0])


def test_didm_empty_file(tmp_path):
    data = MatrixDataset.from_records([], shape=(4, 21))
    write_matrices(tmp_path / "e.didm", data)
    back = read_matrices(tmp_path / "e.didm")
    assert len(back) == 0 and back.values.shape == (0, 4, 21)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 6), st.integers(1, 5), st.integers(20, 40), st.integers(0, 2**32 - 1))
def test_didm_round_trip_property(n, P, B, seed):
    import tempfile, os
    data = _dataset(n, P, B, seed)
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "x.didm")
        write_matrices(path, data)
        back = read_matrices(path)
    assert np.array_equal(back.values, data.values)
    assert back.labels.tolist() == data.labels.tolist() and back.flow_ids == data.flow_ids


def test_didm_bad_magic(tmp_path):
    (tmp_path / "x").write_bytes(b"NOPE" + bytes(30))
    with pytest.raises(BadMagic):
        read_matrices(tmp_path / "x")


def test_didm_version_mismatch(tmp_path):
    (tmp_path / "x").write_bytes(struct.pack("<4sHHIIQ", b"DIDM", 2, 0, 1, 20, 0))
    with pytest.raises(VersionMismatch):
        read_matrices(tmp_path / "x")


def test_didm_truncation_names_the_record(tmp_path):
    data = _dataset(3)
    write_matrices(tmp_path / "d.didm", data)
    blob = (tmp_path / "d.didm").read_bytes()
    (tmp_path / "t.didm").write_bytes(blob[:-5])
    with pytest.raises(CorruptRecord, match="record 2"):
        read_matrices(tmp_path / "t.didm")
    (tmp_path / "t.didm").write_bytes(blob + b"\0")
    with pytest.raises(CorruptRecord, match="trailing"):
        read_matrices(tmp_path / "t.didm")


def test_didm_huge_count_is_rejected_without_allocating(tmp_path):
    (tmp_path / "x").write_bytes(struct.pack("<4sHHIIQ", b"DIDM", 1, 0, 100, 200, 2**60))
    with pytest.raises(CorruptRecord):
        read_matrices(tmp_path / "x")
