"""File formats: saliency map container, named-tensor container, PNG heatmaps.

Saliency map format
-------------------
A UTF-8 JSON header line ``{"height": H, "width": W, "dtype": "f32le",
"normalized": true|false}`` terminated by a single ``\\n``, followed by the
raw little-endian float32 payload, row-major. The same envelope stores named
weight collections, with the header carrying a ``tensors`` list of
``{"name", "shape"}`` entries and the payloads concatenated in order.

Heatmap colormaps
-----------------
``gray`` maps value v to gray level round(255 * v). ``hot`` is the classic
black-red-yellow-white ramp: r = clip(3v, 0, 1), g = clip(3v - 1, 0, 1),
b = clip(3v - 2, 0, 1), each scaled to 8 bits.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

MAP_DTYPE = "f32le"

__all__ = [
    "load_map",
    "load_tensors",
    "render_heatmap",
    "save_map",
    "save_tensors",
]


def save_map(path, values, normalized: bool | None = None) -> None:
    """Write a 2-D map in the JSON-header + f32le format."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D map, got shape {arr.shape}")
    if normalized is None:
        normalized = bool(
            np.all(np.isfinite(arr)) and arr.min() >= 0.0 and arr.max() <= 1.0 and arr.max() > 0.0
        )
    header = {
        "height": int(arr.shape[0]),
        "width": int(arr.shape[1]),
        "dtype": MAP_DTYPE,
        "normalized": bool(normalized),
    }
    payload = arr.astype("<f4").tobytes(order="C")
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(payload)


def load_map(path) -> tuple[np.ndarray, dict]:
    """Read a 2-D map; returns (float64 array, header dict)."""
    with open(path, "rb") as fh:
        header_line = fh.readline()
        payload = fh.read()
    header = json.loads(header_line.decode("utf-8"))
    if header.get("dtype") != MAP_DTYPE:
        raise ValueError(f"unsupported dtype in {path}: {header.get('dtype')!r}")
    h, w = int(header["height"]), int(header["width"])
    flat = np.frombuffer(payload, dtype="<f4", count=h * w)
    return flat.reshape(h, w).astype(np.float64), header


def save_tensors(path, tensors: dict[str, np.ndarray]) -> None:
    """Write named float arrays into one JSON-header + f32le file."""
    names = list(tensors.keys())
    header = {
        "dtype": MAP_DTYPE,
        "tensors": [
            {"name": name, "shape": list(np.asarray(tensors[name]).shape)} for name in names
        ],
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        for name in names:
            fh.write(np.asarray(tensors[name], dtype=np.float64).astype("<f4").tobytes(order="C"))


def load_tensors(path) -> dict[str, np.ndarray]:
    """Read a named-tensor file back as float64 arrays."""
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        if header.get("dtype") != MAP_DTYPE:
            raise ValueError(f"unsupported dtype in {path}: {header.get('dtype')!r}")
        out: dict[str, np.ndarray] = {}
        for entry in header["tensors"]:
            shape = tuple(int(s) for s in entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            buf = fh.read(count * 4)
            out[entry["name"]] = (
                np.frombuffer(buf, dtype="<f4", count=count).reshape(shape).astype(np.float64)
            )
    return out


def _apply_colormap(values01: np.ndarray, colormap: str) -> np.ndarray:
    v = np.clip(values01, 0.0, 1.0)
    if colormap == "gray":
        g = np.rint(v * 255.0).astype(np.uint8)
        return np.stack([g, g, g], axis=-1)
    if colormap == "hot":
        r = np.clip(3.0 * v, 0.0, 1.0)
        g = np.clip(3.0 * v - 1.0, 0.0, 1.0)
        b = np.clip(3.0 * v - 2.0, 0.0, 1.0)
        return np.rint(np.stack([r, g, b], axis=-1) * 255.0).astype(np.uint8)
    raise ValueError(f"unknown colormap: {colormap!r}")


def _mask_outline(mask: np.ndarray) -> np.ndarray:
    """Pixels of the mask whose 4-neighbourhood leaves the mask."""
    m = np.asarray(mask, dtype=bool)
    inner = np.zeros_like(m)
    inner[1:-1, 1:-1] = m[1:-1, 1:-1] & m[:-2, 1:-1] & m[2:, 1:-1] & m[1:-1, :-2] & m[1:-1, 2:]
    return m & ~inner


def render_heatmap(
    values,
    path=None,
    colormap: str = "gray",
    focus_mask=None,
    gt_mask=None,
    scale: int = 1,
):
    """Render a saliency map to an RGB PNG.

    When a focus mask is given the noise area is dimmed to 30% brightness so
    the focus area stands out; a ground-truth mask is drawn as a green
    outline. ``scale`` integer-upsamples tiny maps for visibility.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D map, got shape {arr.shape}")
    rgb = _apply_colormap(arr, colormap).astype(np.float64)
    if focus_mask is not None:
        dim = np.where(np.asarray(focus_mask, dtype=bool), 1.0, 0.3)
        rgb = rgb * dim[..., None]
    if gt_mask is not None:
        outline = _mask_outline(gt_mask)
        rgb[outline] = (0.0, 200.0, 0.0)
    img = Image.fromarray(np.rint(rgb).astype(np.uint8), mode="RGB")
    if scale > 1:
        img = img.resize((img.width * scale, img.height * scale), Image.NEAREST)
    if path is not None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        img.save(path, format="PNG")
    return img
