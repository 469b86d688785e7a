"""
Synthetic pseudo-radiographs, PNG IO and anomaly-map export.
"""

from .dataset import MANIFEST_FILE, SplitData, build_dataset, load_manifest, load_split
from .image_io import read_image, read_mask, write_image, write_mask
from .maps import export_map, normalize_map, read_sidecar, write_sidecar
from .synth import LabeledSample, generate_normal, inject_anomaly, mean_pairwise_correlation

__all__ = [
    "LabeledSample",
    "MANIFEST_FILE",
    "SplitData",
    "build_dataset",
    "export_map",
    "generate_normal",
    "inject_anomaly",
    "load_manifest",
    "load_split",
    "mean_pairwise_correlation",
    "normalize_map",
    "read_image",
    "read_mask",
    "read_sidecar",
    "write_image",
    "write_mask",
    "write_sidecar",
]
