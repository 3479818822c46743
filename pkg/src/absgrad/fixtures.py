"""Deterministic desk-scale fixtures: the two-class blob dataset and the
trained tiny CNN that classifies it.

Each 16x16 image holds one bright Gaussian blob whose quadrant determines
the class (upper-left = 0, lower-right = 1), a fainter distractor blob in
the opposite quadrant, and mild background noise, all derived from a
per-index generator so the dataset is reproducible byte for byte. The
ground-truth mask is the bright blob's half-peak support.

The packaged copy under ``absgrad/data`` was produced by
``tools/make_fixtures.py``; the CNN weights checked in next to it reach
100% train accuracy. Regenerating with the same seeds reproduces both.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import numpy as np
from PIL import Image

from .arrayio import load_tensors, save_tensors
from .tinycnn import TinyCnnModel, TinyConvNet, train_network

SIDE = 16
NUM_IMAGES = 64
DATASET_SEED = 7
NETWORK_SEED = 11
DISTRACTOR_AMPLITUDE = 0.5
WEIGHTS_FILENAME = "tiny_cnn.f32"

__all__ = [
    "DATASET_SEED",
    "NUM_IMAGES",
    "SIDE",
    "blob_manifest_path",
    "blob_sample",
    "data_dir",
    "load_tiny_cnn",
    "train_fixture_network",
    "write_blob_dataset",
]


def _blob(cy: float, cx: float, sigma: float) -> np.ndarray:
    ys = np.arange(SIDE, dtype=np.float64)[:, None]
    xs = np.arange(SIDE, dtype=np.float64)[None, :]
    return np.exp(-(((ys - cy) ** 2) + ((xs - cx) ** 2)) / (2.0 * sigma * sigma))


_CLASS_BOXES = {0: (3.0, 6.0), 1: (9.5, 12.5)}


def blob_sample(index: int, seed: int = DATASET_SEED) -> tuple[np.ndarray, np.ndarray, int]:
    """(image, ground-truth mask, class index) for one dataset entry.

    Image values are quantized to 8 bits to match the PNG round trip.
    """
    label = index % 2
    rng = np.random.default_rng([seed, index])
    lo, hi = _CLASS_BOXES[label]
    cy, cx = rng.uniform(lo, hi, size=2)
    sigma = rng.uniform(1.5, 2.2)
    dlo, dhi = _CLASS_BOXES[1 - label]
    dcy, dcx = rng.uniform(dlo, dhi, size=2)
    dsigma = rng.uniform(1.5, 2.2)
    main = _blob(cy, cx, sigma)
    image = main + DISTRACTOR_AMPLITUDE * _blob(dcy, dcx, dsigma)
    image = image + rng.normal(0.0, 0.03, size=(SIDE, SIDE))
    image = np.clip(image, 0.0, 1.0)
    image = np.rint(image * 255.0) / 255.0
    mask = main >= 0.5
    return image, mask, label


def write_blob_dataset(root, count: int = NUM_IMAGES, seed: int = DATASET_SEED) -> Path:
    """Write images, masks and a manifest under root; returns the manifest path."""
    root = Path(root)
    (root / "img").mkdir(parents=True, exist_ok=True)
    (root / "mask").mkdir(parents=True, exist_ok=True)
    entries = []
    for i in range(count):
        image, mask, label = blob_sample(i, seed)
        name = f"blob_{i:03d}"
        Image.fromarray(np.rint(image * 255.0).astype(np.uint8), mode="L").save(
            root / "img" / f"{name}.png"
        )
        Image.fromarray(np.where(mask, 255, 0).astype(np.uint8), mode="L").save(
            root / "mask" / f"{name}.png"
        )
        entries.append(
            {
                "id": name,
                "image": f"img/{name}.png",
                "mask": f"mask/{name}.png",
                "class_index": label,
            }
        )
    manifest = {"preprocess": {"value_range": [0.0, 1.0]}, "entries": entries}
    path = root / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def data_dir() -> Path:
    return Path(resources.files("absgrad") / "data")


def blob_manifest_path() -> Path:
    return data_dir() / "blobs" / "manifest.json"


def train_fixture_network(
    count: int = NUM_IMAGES,
    dataset_seed: int = DATASET_SEED,
    network_seed: int = NETWORK_SEED,
    epochs: int = 300,
) -> tuple[TinyConvNet, float]:
    """Train the fixture CNN on the blob dataset; returns (net, train accuracy)."""
    samples = [blob_sample(i, dataset_seed) for i in range(count)]
    images = np.array([s[0] for s in samples])[:, None, :, :]
    labels = np.array([s[2] for s in samples])
    net = TinyConvNet.init_random(in_channels=1, side=SIDE, num_classes=2, seed=network_seed)
    accuracy = train_network(net, images, labels, epochs=epochs)
    return net, accuracy


def save_tiny_cnn(net: TinyConvNet, path) -> None:
    save_tensors(path, net.params)


def load_tiny_cnn(path=None) -> TinyCnnModel:
    """The packaged trained CNN (or one from an explicit weights file)."""
    if path is None:
        path = data_dir() / WEIGHTS_FILENAME
    return TinyCnnModel(TinyConvNet(load_tensors(path)), side=SIDE)


def _register():
    from .models import register_adapter

    register_adapter("tiny_cnn", lambda path=None: load_tiny_cnn(path))


_register()
