from .didm import MatrixDataset, read_matrices, write_matrices
from .labels import LabelManifest, LabelRule, label_flows, load_manifest, parse_manifest
from .sampling import SPLIT_FRACTIONS, balance, kfold, split

__all__ = [
    "MatrixDataset", "read_matrices", "write_matrices",
    "LabelManifest", "LabelRule", "label_flows", "load_manifest", "parse_manifest",
    "SPLIT_FRACTIONS", "balance", "kfold", "split",
]
