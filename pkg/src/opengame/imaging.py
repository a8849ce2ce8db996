"""Pixel-level primitives shared by the bench harness and the scoring module.

Everything operates on PNG byte blobs or 2D uint8 grayscale arrays; color
frames are reduced with the usual ITU-R 601-2 luma transform before any
statistic is computed, so results do not depend on channel order.
"""

from __future__ import annotations

import io

import numpy as np
from PIL import Image

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


class DecodeError(ValueError):
    """Raised when a byte blob cannot be decoded as an image."""


def is_png(data: bytes) -> bool:
    return data[:8] == PNG_SIGNATURE


def grayscale_array(image_bytes: bytes) -> np.ndarray:
    """Decode an image blob into a 2D uint8 grayscale array."""
    try:
        with Image.open(io.BytesIO(image_bytes)) as img:
            return np.asarray(img.convert("L"), dtype=np.uint8)
    except Exception as exc:
        raise DecodeError(f"not a decodable image: {exc}") from exc


def histogram_entropy(gray: np.ndarray) -> float:
    """Shannon entropy of the 256-bin intensity histogram, normalized to [0,1].

    A uniform frame scores 0.0; a frame whose pixels are spread evenly over
    all 256 intensities scores 1.0 (8 bits / 8).
    """
    counts = np.bincount(gray.reshape(-1), minlength=256)
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts[counts > 0] / total
    bits = float(-(p * np.log2(p)).sum())
    return bits / 8.0


def is_uniform(gray: np.ndarray) -> bool:
    """True when every pixel has the same intensity."""
    return gray.size == 0 or int(gray.min()) == int(gray.max())


def mean_abs_diff(a: np.ndarray, b: np.ndarray) -> float:
    """Mean absolute per-pixel difference of two grayscale frames, in [0,1].

    Frames of different shapes are compared on their common top-left crop;
    resized captures mid-session are rare but must not crash the metric.
    """
    if a.shape != b.shape:
        h = min(a.shape[0], b.shape[0])
        w = min(a.shape[1], b.shape[1])
        if h == 0 or w == 0:
            return 0.0
        a, b = a[:h, :w], b[:h, :w]
    diff = np.abs(a.astype(np.int16) - b.astype(np.int16))
    return float(diff.mean()) / 255.0


def encode_png(array: np.ndarray) -> bytes:
    """Encode a uint8 array (grayscale or RGB) as PNG bytes deterministically."""
    mode = "L" if array.ndim == 2 else "RGB"
    buf = io.BytesIO()
    Image.fromarray(array.astype(np.uint8), mode=mode).save(buf, format="PNG")
    return buf.getvalue()


def solid_png(width: int, height: int, rgb: tuple[int, int, int]) -> bytes:
    arr = np.zeros((height, width, 3), dtype=np.uint8)
    arr[:, :] = rgb
    return encode_png(arr)


def non_empty_frame(image_bytes: bytes, entropy_floor: float = 0.05) -> bool:
    """A frame counts as non-empty when it is not one uniform color and its
    normalized histogram entropy clears the floor."""
    gray = grayscale_array(image_bytes)
    if is_uniform(gray):
        return False
    return histogram_entropy(gray) > entropy_floor
