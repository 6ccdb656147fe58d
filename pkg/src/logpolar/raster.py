"""Binary PGM (P5) / PPM (P6) writers for debug rasters."""

from __future__ import annotations

import numpy as np

__all__ = ["pgm_bytes", "ppm_bytes", "to_gray"]


def pgm_bytes(img) -> bytes:
    """Encode a (H, W) uint8 array as binary PGM."""
    img = np.asarray(img, dtype=np.uint8)
    if img.ndim != 2:
        raise ValueError(f"PGM needs a 2-D array, got shape {img.shape}")
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
    return header + img.tobytes(order="C")


def ppm_bytes(img) -> bytes:
    """Encode a (H, W, 3) uint8 array as binary PPM."""
    img = np.asarray(img, dtype=np.uint8)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"PPM needs a (H, W, 3) array, got shape {img.shape}")
    header = f"P6\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
    return header + img.tobytes(order="C")


def to_gray(values, lo=None, hi=None, floor=0) -> np.ndarray:
    """Min-max scale finite values into [floor, 255]; NaN cells map to 0."""
    values = np.asarray(values, dtype=np.float64)
    finite = np.isfinite(values)
    out = np.zeros(values.shape, dtype=np.uint8)
    if not finite.any():
        return out
    lo = float(np.min(values[finite])) if lo is None else lo
    hi = float(np.max(values[finite])) if hi is None else hi
    span = hi - lo
    if span <= 0:
        out[finite] = 255
        return out
    scaled = (values[finite] - lo) / span
    out[finite] = np.rint(floor + scaled * (255 - floor)).astype(np.uint8)
    return out
