"""Radius-1 flat morphology: min/max pooling and binary dilation.

Out-of-bounds neighbours read as 0 (outside the image is background), so a
minpool zeroes the border shell while a maxpool is unaffected there. Axes of
extent 1 carry no neighbour offsets: a single-slice volume pools in-plane
instead of being wiped by its out-of-bounds z neighbours.

The cube pool runs as sequential per-axis passes; for values in [0, 1] with
zero padding this is bit-identical to the direct 3^d window definition.
"""

from __future__ import annotations

from typing import Literal

import numpy as np

from .volume import require_binary

StructuringElement = Literal["cross", "cube"]
SE_KINDS = ("cross", "cube")


def _check_se(se: str) -> None:
    if se not in SE_KINDS:
        raise ValueError(f"unknown structuring element {se!r}; expected one of {SE_KINDS}")


def _neighbour_slices(a: np.ndarray, axis: int) -> tuple[np.ndarray, np.ndarray]:
    """Views of the padded array shifted -1/+1 along ``axis``; pads are 0."""
    pad = [(0, 0)] * a.ndim
    pad[axis] = (1, 1)
    p = np.pad(a, pad, mode="constant", constant_values=0)
    lo = [slice(None)] * a.ndim
    hi = [slice(None)] * a.ndim
    lo[axis] = slice(0, -2)
    hi[axis] = slice(2, None)
    return p[tuple(lo)], p[tuple(hi)]


def _pool_cross(a: np.ndarray, ufunc: np.ufunc) -> np.ndarray:
    out = a.copy()
    for axis in range(a.ndim):
        if a.shape[axis] <= 1:
            continue
        lo, hi = _neighbour_slices(a, axis)
        ufunc(out, lo, out=out)
        ufunc(out, hi, out=out)
    return out


def _pool_cube(a: np.ndarray, ufunc: np.ufunc) -> np.ndarray:
    out = a
    for axis in range(a.ndim):
        if a.shape[axis] <= 1:
            continue
        lo, hi = _neighbour_slices(out, axis)
        nxt = ufunc(lo, out)
        ufunc(nxt, hi, out=nxt)
        out = nxt
    return out.copy() if out is a else out


def minpool(v: np.ndarray, se: StructuringElement = "cross") -> np.ndarray:
    """Per-voxel minimum over the structuring-element neighbourhood (soft erosion)."""
    _check_se(se)
    v = np.asarray(v)
    return _pool_cross(v, np.minimum) if se == "cross" else _pool_cube(v, np.minimum)


def maxpool(v: np.ndarray, se: StructuringElement = "cube") -> np.ndarray:
    """Per-voxel maximum over the structuring-element neighbourhood (soft dilation)."""
    _check_se(se)
    v = np.asarray(v)
    return _pool_cross(v, np.maximum) if se == "cross" else _pool_cube(v, np.maximum)


def binary_dilate(v: np.ndarray, se: StructuringElement = "cross") -> np.ndarray:
    """Binary dilation; the default cross element grows face neighbours only."""
    require_binary(v, "binary_dilate input")
    return maxpool(np.asarray(v), se)
