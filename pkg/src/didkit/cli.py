"""``didkit`` command line: file-based pipeline stages.

Exit codes: 0 success, 1 runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from collections import Counter
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, load_config
from .dataset import (MatrixDataset, balance, kfold, load_manifest, read_matrices, split,
                      write_matrices)
from .errors import ConfigMismatch, DidError
from .matrix import MatrixConfig, build_matrix
from .metrics import DEFAULT_CLASS_NAMES, confusion, report_csv, report_json
from .nn import ModelConfig, init_model, load_checkpoint, save_checkpoint, train
from .pipeline import binary_labels, extract, featurize
from .synthgen import ScenarioConfig, generate

log = logging.getLogger("didkit")

RANDOMIZED = {"synth", "balance", "split", "train"}
REFERENCE_INFER_MS = 7.0


class UsageError(Exception):
    pass


def _provenance(command: str, cfg: RunConfig) -> dict:
    return {"tool": "didkit", "version": __version__, "command": command,
            "run_config": cfg.to_dict()}


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("run config (override --config)")
    g.add_argument("--config", help="flat key=value config file")
    g.add_argument("--seed", type=int)
    g.add_argument("--ctx-bucket", type=int)
    g.add_argument("--ctx-window-ms", type=float)
    g.add_argument("--max-packets", type=int)
    g.add_argument("--max-bytes", type=int)
    g.add_argument("--max-live-flows", type=int)
    g.add_argument("--variant", choices=["lstm-1a", "lstm-1b", "lstm-2a", "lstm-2b",
                                         "1a", "1b", "2a", "2b"])
    g.add_argument("--classes", choices=["binary", "multi"])
    g.add_argument("--epochs", type=int)
    g.add_argument("--batch-size", type=int)
    g.add_argument("--lr", type=float)
    g.add_argument("--clip-norm", type=float)
    g.add_argument("--patience", type=int)
    g.add_argument("--threshold", type=float)


_RUN_KEYS = ["seed", "ctx_bucket", "ctx_window_ms", "max_packets", "max_bytes",
             "max_live_flows", "variant", "classes", "epochs", "batch_size", "lr",
             "clip_norm", "patience", "threshold"]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="didkit", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"didkit {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a labelled synthetic capture")
    p.add_argument("--benign", type=int, default=100)
    p.add_argument("--attack", type=int, default=100)
    p.add_argument("--profile", default="pattern",
                   help="comma list of attack profiles: pattern, flood, scan")
    p.add_argument("--flood-victim")
    p.add_argument("--flood-burst", type=int, default=50)
    p.add_argument("--disjoint-pools", action="store_true")
    p.add_argument("-o", "--out", required=True)
    p.add_argument("-m", "--manifest", required=True)
    _add_run_flags(p)

    p = sub.add_parser("extract", help="reassemble flows and print a summary")
    p.add_argument("pcap")
    p.add_argument("-o", "--out", help="write the summary JSON here")
    _add_run_flags(p)

    p = sub.add_parser("featurize", help="pcap -> DIDM matrices")
    p.add_argument("pcap")
    p.add_argument("-l", "--labels", help="label manifest")
    p.add_argument("--no-context", action="store_true", help="leave the context row zero")
    p.add_argument("-o", "--out", required=True)
    _add_run_flags(p)

    p = sub.add_parser("balance", help="subsample classes to equal size")
    p.add_argument("data")
    p.add_argument("-o", "--out", required=True)
    _add_run_flags(p)

    p = sub.add_parser("split", help="stratified train/val/test split or k folds")
    p.add_argument("data")
    p.add_argument("-o", "--out", help="output prefix (default: input minus .didm)")
    p.add_argument("--kfold", type=int, help="write fold assignments instead of splits")
    _add_run_flags(p)

    p = sub.add_parser("train", help="train an LSTM variant")
    p.add_argument("data")
    p.add_argument("--val", help="validation DIDM (default: sibling .val.didm if present)")
    p.add_argument("-o", "--out", help="checkpoint path (default: model.didc)")
    p.add_argument("--history", help="history CSV path (default: <out>.history.csv)")
    _add_run_flags(p)

    p = sub.add_parser("eval", help="metrics for a checkpoint on a DIDM file")
    p.add_argument("checkpoint")
    p.add_argument("data")
    p.add_argument("-o", "--out", help="metrics JSON path (default: stdout)")
    p.add_argument("--csv", help="also write a flat CSV")
    _add_run_flags(p)

    p = sub.add_parser("predict", help="per-flow labels and probabilities")
    p.add_argument("checkpoint")
    p.add_argument("data")
    p.add_argument("-o", "--out", help="CSV path (default: stdout)")
    _add_run_flags(p)

    p = sub.add_parser("bench", help="per-flow featurize and inference latency")
    p.add_argument("pcap")
    p.add_argument("checkpoint")
    p.add_argument("--limit", type=int, default=500, help="flows to time for inference")
    p.add_argument("-o", "--out", help="report JSON path (default: stdout)")
    _add_run_flags(p)
    return ap


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        cfg.update(load_config(args.config))
    cfg.update({k: getattr(args, k, None) for k in _RUN_KEYS})
    if getattr(args, "kfold", None):
        cfg.kfold = args.kfold
    return cfg


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _labels_for(data: MatrixDataset, classes: str) -> np.ndarray:
    return binary_labels(data.labels) if classes == "binary" else data.labels


def _check_labelled(data: MatrixDataset, path: str) -> None:
    if np.any(data.labels < 0):
        raise DidError(f"{path}: records without labels; featurize with --labels")


def _check_matrix(ckpt, data: MatrixDataset, path: str) -> None:
    c = ckpt.config
    if (c.seq_len, c.input_dim) != data.values.shape[1:]:
        raise ConfigMismatch(
            f"{path}: matrices are {data.values.shape[1:]} but the checkpoint expects "
            f"{(c.seq_len, c.input_dim)}")
    want, have = ckpt.metadata.get("matrix"), data.metadata.get("matrix")
    if want and have and MatrixConfig.from_dict(want) != MatrixConfig.from_dict(have):
        raise ConfigMismatch(f"{path}: matrix config {have} differs from checkpoint's {want}")


# commands ----------------------------------------------------------------------

def cmd_synth(args, cfg):
    scen = ScenarioConfig(seed=cfg.seed, n_benign=args.benign, n_attack=args.attack,
                          attack_profiles=tuple(p.strip() for p in args.profile.split(",")),
                          flood_victim=args.flood_victim, flood_burst=args.flood_burst,
                          disjoint_pools=args.disjoint_pools)
    comment = json.dumps({**_provenance("synth", cfg), "scenario": {
        "benign": args.benign, "attack": args.attack, "profile": args.profile,
        "flood_victim": args.flood_victim, "flood_burst": args.flood_burst,
        "disjoint_pools": args.disjoint_pools}}, sort_keys=True)
    summary = generate(scen, args.out, args.manifest, header_comment=comment)
    print(_json(summary), end="")


def cmd_extract(args, cfg):
    ex = extract(args.pcap, cfg.ctx_bucket, cfg.ctx_window_ms, cfg.max_live_flows)
    doc = {
        "frames": ex.stats.frames,
        "decoded": ex.stats.decoded,
        "skipped": dict(sorted(ex.stats.skipped.items())),
        "flows": len(ex.flows),
        "packets_in_flows": sum(len(f.packets) for f in ex.flows),
        "terminations": dict(sorted(Counter(f.termination.value for f in ex.flows).items())),
        "protocols": dict(sorted(Counter(f.key.protocol.name for f in ex.flows).items())),
    }
    _emit(_json(doc), args.out)


def cmd_featurize(args, cfg):
    if not Path(args.pcap).is_file():
        raise DidError(f"capture not found: {args.pcap}")
    manifest = load_manifest(args.labels) if args.labels else None
    mcfg = cfg.matrix_config(use_context=not args.no_context)
    data, ex = featurize(args.pcap, manifest, mcfg, cfg.ctx_bucket, cfg.ctx_window_ms,
                         cfg.max_live_flows, metadata=_provenance("featurize", cfg))
    write_matrices(args.out, data)
    counts = Counter(int(v) for v in data.labels)
    print(_json({"records": len(data), "per_class": {str(k): v for k, v in sorted(counts.items())},
                 "skipped_frames": ex.stats.total_skipped()}), end="")


def cmd_balance(args, cfg):
    data = read_matrices(args.data)
    _check_labelled(data, args.data)
    idx = balance(data.labels, "binary" if cfg.classes == "binary" else "multiclass", cfg.seed)
    out = data.subset(idx)
    out.metadata["balance"] = _provenance("balance", cfg)
    write_matrices(args.out, out)
    counts = Counter(int(v) for v in out.labels)
    print(_json({"records": len(out), "per_class": {str(k): v for k, v in sorted(counts.items())}}),
          end="")


def cmd_split(args, cfg):
    data = read_matrices(args.data)
    _check_labelled(data, args.data)
    prefix = args.out or str(Path(args.data).with_suffix(""))
    y = _labels_for(data, cfg.classes)
    if cfg.kfold:
        folds = kfold(y, cfg.kfold, cfg.seed)
        lines = [f"{i} {int(f)}" for i, f in enumerate(folds)]
        Path(prefix + ".folds.txt").write_text("\n".join(lines) + "\n")
        print(_json({"folds": np.bincount(folds, minlength=cfg.kfold).tolist()}), end="")
        return
    parts = split(y, cfg.split, cfg.seed)
    assign = np.empty(len(y), dtype=object)
    sizes = {}
    for name, idx in zip(("train", "val", "test"), parts):
        assign[idx] = name
        sub = data.subset(idx)
        sub.metadata["split"] = {**_provenance("split", cfg), "part": name}
        write_matrices(f"{prefix}.{name}.didm", sub)
        sizes[name] = len(idx)
    Path(prefix + ".split.txt").write_text("".join(f"{i} {a}\n" for i, a in enumerate(assign)))
    print(_json(sizes), end="")


def cmd_train(args, cfg):
    data = read_matrices(args.data)
    _check_labelled(data, args.data)
    val_path = args.val
    if val_path is None and args.data.endswith(".train.didm"):
        sibling = args.data[: -len(".train.didm")] + ".val.didm"
        if Path(sibling).is_file():
            val_path = sibling
    val = read_matrices(val_path) if val_path else None
    y = _labels_for(data, cfg.classes)
    n_classes = 2 if cfg.classes == "binary" else max(len(DEFAULT_CLASS_NAMES), int(y.max()) + 1)
    mc = ModelConfig(cfg.variant, input_dim=data.values.shape[2], seq_len=data.values.shape[1],
                     n_classes=n_classes, dropout_rate=cfg.dropout, seed=cfg.seed, lr=cfg.lr,
                     batch_size=cfg.batch_size, epochs=cfg.epochs, patience=cfg.patience,
                     clip_norm=cfg.clip_norm)
    model = init_model(mc)
    meta = {**_provenance("train", cfg), "matrix": data.metadata.get("matrix"),
            "classes": cfg.classes, "class_names": data.metadata.get("class_names")}
    xv, yv = (val.values, _labels_for(val, cfg.classes)) if val is not None else (None, None)
    result = train(model, data.values, y, xv, yv, metadata=meta)
    out = args.out or "model.didc"
    save_checkpoint(out, result.checkpoint)
    Path(args.history or out + ".history.csv").write_text(result.history_csv())
    print(_json({"checkpoint": out, "best_epoch": result.best_epoch, "steps": result.steps,
                 "epochs_run": len(result.history)}), end="")


def _predict(ckpt, data: MatrixDataset, threshold: float) -> tuple[np.ndarray, np.ndarray]:
    model = ckpt.model()
    probs = model.predict_proba(data.values)
    if ckpt.config.n_classes == 2:
        pred = (probs[:, 1] > threshold).astype(np.int64)
    else:
        pred = probs.argmax(axis=1)
    return probs, pred


def cmd_eval(args, cfg):
    ckpt = load_checkpoint(args.checkpoint)
    data = read_matrices(args.data)
    _check_labelled(data, args.data)
    _check_matrix(ckpt, data, args.data)
    _, pred = _predict(ckpt, data, cfg.threshold)
    n = ckpt.config.n_classes
    truth = binary_labels(data.labels) if n == 2 else data.labels
    names = None
    if n > 2 and ckpt.metadata.get("class_names"):
        cn = ckpt.metadata["class_names"]
        names = [cn.get(str(i), DEFAULT_CLASS_NAMES[i] if i < len(DEFAULT_CLASS_NAMES)
                        else f"class-{i}") for i in range(n)]
    doc = report_json(confusion(truth, pred, n), names,
                      extra={"provenance": _provenance("eval", cfg), "records": len(data),
                             "threshold": cfg.threshold})
    _emit(_json(doc), args.out)
    if args.csv:
        Path(args.csv).write_text(report_csv(doc))


def cmd_predict(args, cfg):
    ckpt = load_checkpoint(args.checkpoint)
    data = read_matrices(args.data)
    _check_matrix(ckpt, data, args.data)
    probs, pred = _predict(ckpt, data, cfg.threshold)
    head = "flow_id,pred," + ",".join(f"p{k}" for k in range(probs.shape[1]))
    lines = [head] + [f"{fid},{int(p)}," + ",".join(f"{v:.6f}" for v in row)
                      for fid, p, row in zip(data.flow_ids, pred, probs)]
    _emit("\n".join(lines) + "\n", args.out)


def cmd_bench(args, cfg):
    ckpt = load_checkpoint(args.checkpoint)
    mcfg = (MatrixConfig.from_dict(ckpt.metadata["matrix"]) if ckpt.metadata.get("matrix")
            else cfg.matrix_config())
    t0 = time.perf_counter()
    ex = extract(args.pcap, cfg.ctx_bucket, cfg.ctx_window_ms, cfg.max_live_flows)
    parse_s = time.perf_counter() - t0
    n = len(ex.flows)
    if n == 0:
        raise DidError(f"{args.pcap}: no flows")
    share = parse_s / n
    feat_ms, mats = [], []
    for flow, ctx in zip(ex.flows, ex.contexts):
        t = time.perf_counter()
        mats.append(build_matrix(flow, ctx, mcfg).values)
        feat_ms.append((time.perf_counter() - t + share) * 1000)
    model = ckpt.model()
    infer_ms = []
    for m in mats[: args.limit]:
        t = time.perf_counter()
        model.forward(m)
        infer_ms.append((time.perf_counter() - t) * 1000)
    stat = lambda xs: {"mean_ms": float(np.mean(xs)), "median_ms": float(np.median(xs)),
                       "n": len(xs)}
    doc = {"flows": n, "featurize_per_flow": stat(feat_ms), "inference_per_flow": stat(infer_ms),
           "reference_inference_ms": REFERENCE_INFER_MS, "variant": ckpt.config.variant,
           "matrix_shape": list(mcfg.shape)}
    _emit(_json(doc), args.out)


COMMANDS = {"synth": cmd_synth, "extract": cmd_extract, "featurize": cmd_featurize,
            "balance": cmd_balance, "split": cmd_split, "train": cmd_train, "eval": cmd_eval,
            "predict": cmd_predict, "bench": cmd_bench}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        if args.command in RANDOMIZED and cfg.seed is None:
            raise UsageError(f"{args.command} requires --seed")
    except (UsageError, ValueError, OSError) as exc:
        print(f"didkit {args.command}: {exc}", file=sys.stderr)
        return 2
    try:
        COMMANDS[args.command](args, cfg)
    except (DidError, OSError, ValueError) as exc:
        print(f"didkit {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
