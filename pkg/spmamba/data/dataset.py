"""
Synthetic dataset layout and manifest.

    <root>/train/normal_XXXXX.png
    <root>/test/normal_XXXXX.png
    <root>/test/abnormal_XXXXX.png
    <root>/test/masks/abnormal_XXXXX.png
    <root>/manifest.jsonl      header line, then one entry per image
"""

import json
import os
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from pydantic import ValidationError

from shared.config import SynthSettings
from shared.errors import DatasetError, ImageFormatError
from shared.logging_config import get_logger
from shared.models import DatasetManifestHeader, ManifestEntry, Split

from .image_io import read_image, read_mask, write_image, write_mask
from .synth import generate_normal, inject_anomaly

logger = get_logger(__name__)

MANIFEST_FILE = "manifest.jsonl"


@dataclass
class SplitData:
    """Images of one split, in manifest order."""
    images: np.ndarray  # (N, H, W)
    labels: np.ndarray  # (N,)
    masks: List[Optional[np.ndarray]]
    entries: List[ManifestEntry]


def build_dataset(
    settings: SynthSettings,
    root: str,
    seed: int,
    n_train: int,
    n_test_normal: int,
    n_test_abnormal: int,
) -> str:
    """
    Generate every image, mask and the manifest under ``root``.

    Sample indices are global: train normals take ``0..n_train-1``, test
    normals follow, then abnormals. Returns the manifest path.
    """
    for name, count in (("n_train", n_train), ("n_test_normal", n_test_normal), ("n_test_abnormal", n_test_abnormal)):
        if count < 1:
            raise DatasetError(f"{name} must be >= 1, got {count}")

    entries: List[ManifestEntry] = []
    index = 0
    try:
        for i in range(n_train):
            rel = f"train/normal_{i:05d}.png"
            write_image(os.path.join(root, rel), generate_normal(settings, seed, index).image)
            entries.append(ManifestEntry(split=Split.TRAIN, path=rel, label=0, seed=seed, index=index))
            index += 1

        for i in range(n_test_normal):
            rel = f"test/normal_{i:05d}.png"
            write_image(os.path.join(root, rel), generate_normal(settings, seed, index).image)
            entries.append(ManifestEntry(split=Split.TEST, path=rel, label=0, seed=seed, index=index))
            index += 1

        for i in range(n_test_abnormal):
            sample = inject_anomaly(generate_normal(settings, seed, index), settings, seed, index)
            rel = f"test/abnormal_{i:05d}.png"
            mask_rel = f"test/masks/abnormal_{i:05d}.png"
            write_image(os.path.join(root, rel), sample.image)
            write_mask(os.path.join(root, mask_rel), sample.mask)
            entries.append(
                ManifestEntry(split=Split.TEST, path=rel, label=1, mask_path=mask_rel, seed=seed, index=index)
            )
            index += 1

        header = DatasetManifestHeader(
            seed=seed,
            image_size=settings.image_size,
            counts={"train": n_train, "test_normal": n_test_normal, "test_abnormal": n_test_abnormal},
            synth=json.loads(settings.model_dump_json()),
        )
        manifest = os.path.join(root, MANIFEST_FILE)
        with open(manifest, "w") as f:
            f.write(header.model_dump_json() + "\n")
            for entry in entries:
                f.write(entry.model_dump_json() + "\n")
    except (OSError, ImageFormatError) as e:
        raise DatasetError(f"failed to write dataset under {root}: {e}") from e

    logger.info("Dataset written", root=root, images=len(entries), masks=n_test_abnormal)
    return manifest


def load_manifest(path: str) -> Tuple[DatasetManifestHeader, List[ManifestEntry]]:
    if not os.path.isfile(path):
        raise DatasetError(f"manifest not found: {path}")
    with open(path) as f:
        lines = [line for line in f if line.strip()]
    if not lines:
        raise DatasetError(f"{path}: empty manifest")
    try:
        header = DatasetManifestHeader.model_validate_json(lines[0])
        entries = [ManifestEntry.model_validate_json(line) for line in lines[1:]]
    except ValidationError as e:
        raise DatasetError(f"{path}: malformed manifest: {e.errors()[0].get('msg')}") from e
    return header, entries


def load_split(manifest: str, split: Split, size: Optional[int] = None) -> SplitData:
    """Read all images (and masks) of ``split``; optionally resize to ``size``."""
    _, entries = load_manifest(manifest)
    root = os.path.dirname(os.path.abspath(manifest))
    selected = [e for e in entries if e.split == split]
    if not selected:
        raise DatasetError(f"{manifest}: split '{split.value}' is empty")

    images, masks = [], []
    for entry in selected:
        images.append(read_image(os.path.join(root, entry.path), size))
        masks.append(read_mask(os.path.join(root, entry.mask_path), size) if entry.mask_path else None)

    shapes = {img.shape for img in images}
    if len(shapes) != 1:
        raise DatasetError(f"{manifest}: images of split '{split.value}' have mixed shapes {sorted(shapes)}")
    return SplitData(
        images=np.stack(images),
        labels=np.array([e.label for e in selected], dtype=np.int64),
        masks=masks,
        entries=selected,
    )
