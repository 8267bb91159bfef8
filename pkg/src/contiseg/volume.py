"""Dense voxel volumes with physical spacing, plus the CVOL file container.

Axis order is (z, y, x) everywhere, row-major with x fastest, matching the
usual microscopy stack layout. Probability data is stored as float32, label
data as uint8.

CVOL container layout (version 1, no compression)::

    bytes 0..3    magic "CVOL"
    byte  4       format version (1)
    bytes 5..8    little-endian uint32 header length H
    bytes 9..9+H  UTF-8 JSON header:
                  {"dims": [z, y, x], "dtype": "u8"|"f32",
                   "spacing": [sz, sy, sx], "order": "zyx-rowmajor"}
    remainder     raw little-endian payload, exactly prod(dims) elements

Writing the same array and spacing twice produces identical bytes, and
``read_volume(write_volume(...))`` is the identity on dims, dtype, spacing
and payload.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"CVOL"
VERSION = 1

DTYPE_TAGS = {"u8": np.dtype("<u1"), "f32": np.dtype("<f4")}
_HEADER_ORDER = ("dims", "dtype", "spacing", "order")


class ContainerFormatError(ValueError):
    """A volume file does not conform to the CVOL container format."""


@dataclass(frozen=True)
class Spacing:
    """Physical voxel size in micrometres per axis, (z, y, x) order."""

    sz: float
    sy: float
    sx: float

    def __post_init__(self) -> None:
        if not (self.sz > 0 and self.sy > 0 and self.sx > 0):
            raise ValueError(
                f"spacing components must be strictly positive, got {(self.sz, self.sy, self.sx)}"
            )

    def as_tuple(self) -> tuple[float, float, float]:
        return (float(self.sz), float(self.sy), float(self.sx))

    def scaled(self, factor: float) -> "Spacing":
        return Spacing(self.sz * factor, self.sy * factor, self.sx * factor)


def is_binary(data: np.ndarray) -> bool:
    data = np.asarray(data)
    if data.dtype == bool:
        return True
    return bool(((data == 0) | (data == 1)).all())


def require_binary(data: np.ndarray, what: str = "volume") -> None:
    if not is_binary(data):
        raise ValueError(f"{what} must be binary (every value in {{0, 1}})")


def require_probabilities(data: np.ndarray, what: str = "volume") -> None:
    data = np.asarray(data)
    if data.size and (float(data.min()) < 0.0 or float(data.max()) > 1.0):
        raise ValueError(f"{what} must contain values in [0, 1]")


def require_same_shape(a: np.ndarray, b: np.ndarray, what: str = "volumes") -> None:
    if np.shape(a) != np.shape(b):
        raise ValueError(f"{what} must share a shape: {np.shape(a)} vs {np.shape(b)}")


def _tag_for(dtype: np.dtype) -> str:
    if dtype == np.uint8 or dtype == bool:
        return "u8"
    if dtype == np.float32:
        return "f32"
    raise ValueError(f"unsupported volume dtype {dtype}; use uint8 or float32")


def write_volume(data: np.ndarray, spacing: Spacing, path: str | Path) -> None:
    """Write ``data`` to ``path`` in the CVOL container format.

    Bytes are a pure function of (data, spacing); no timestamps or other
    environment state is embedded.
    """
    data = np.asarray(data)
    if data.ndim != 3:
        raise ValueError(f"container stores 3-D (z, y, x) volumes, got ndim={data.ndim}")
    tag = _tag_for(data.dtype)
    payload = np.ascontiguousarray(data, dtype=DTYPE_TAGS[tag]).tobytes()
    header = {
        "dims": [int(n) for n in data.shape],
        "dtype": tag,
        "spacing": list(spacing.as_tuple()),
        "order": "zyx-rowmajor",
    }
    blob = json.dumps(header, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(bytes([VERSION]))
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(payload)


def read_volume(path: str | Path) -> tuple[np.ndarray, Spacing]:
    """Read a CVOL file, returning the voxel array and its spacing.

    Each format violation is reported distinctly: bad magic, unsupported
    version, malformed or truncated header, unknown dtype, invalid spacing,
    payload length mismatch.
    """
    raw = Path(path).read_bytes()
    if len(raw) < 9 or raw[:4] != MAGIC:
        raise ContainerFormatError(f"bad magic: {path} is not a CVOL container")
    version = raw[4]
    if version != VERSION:
        raise ContainerFormatError(f"unsupported container version {version}")
    (hlen,) = struct.unpack_from("<I", raw, 5)
    if 9 + hlen > len(raw):
        raise ContainerFormatError("header length exceeds file size")
    try:
        header = json.loads(raw[9 : 9 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ContainerFormatError(f"malformed JSON header: {exc}") from exc
    if not isinstance(header, dict) or any(k not in header for k in _HEADER_ORDER):
        raise ContainerFormatError(f"header must carry keys {_HEADER_ORDER}")

    dims = header["dims"]
    if (
        not isinstance(dims, list)
        or len(dims) != 3
        or any(not isinstance(n, int) or n < 1 for n in dims)
    ):
        raise ContainerFormatError(f"invalid dims {dims!r}: expected three positive integers")
    tag = header["dtype"]
    if tag not in DTYPE_TAGS:
        raise ContainerFormatError(f"unknown dtype {tag!r}")
    if header["order"] != "zyx-rowmajor":
        raise ContainerFormatError(f"unsupported element order {header['order']!r}")
    spacing = header["spacing"]
    if (
        not isinstance(spacing, list)
        or len(spacing) != 3
        or any(not isinstance(s, (int, float)) or not s > 0 for s in spacing)
    ):
        raise ContainerFormatError(
            f"invalid spacing {spacing!r}: components must be strictly positive"
        )

    dtype = DTYPE_TAGS[tag]
    expected = dims[0] * dims[1] * dims[2] * dtype.itemsize
    actual = len(raw) - 9 - hlen
    if actual != expected:
        raise ContainerFormatError(
            f"payload length mismatch: header implies {expected} bytes, found {actual}"
        )
    data = np.frombuffer(raw, dtype=dtype, offset=9 + hlen).reshape(dims).copy()
    return data, Spacing(*(float(s) for s in spacing))


def _check_factor(factor: int) -> int:
    if not isinstance(factor, (int, np.integer)) or factor < 1:
        raise ValueError(f"factor must be a positive integer, got {factor!r}")
    return int(factor)


def padded_xy_dims(shape: tuple[int, ...], factor: int) -> tuple[int, ...]:
    """Shape after zero-padding y and x up to the next multiple of ``factor``."""
    factor = _check_factor(factor)
    out = list(shape)
    for ax in (len(shape) - 2, len(shape) - 1):
        out[ax] = -(-shape[ax] // factor) * factor
    return tuple(out)


def downscale_xy(v: np.ndarray, factor: int, mode: str) -> np.ndarray:
    """Aggregate factor x factor windows in (y, x); z is untouched.

    ``mode="mean"`` averages (images; output float32), ``mode="max"`` takes
    the window maximum (binary labels; preserves thin structures, output
    keeps the input dtype). Dims that do not divide evenly are zero-padded
    up to the next multiple first; ``padded_xy_dims`` reports the padded
    extents.
    """
    factor = _check_factor(factor)
    if mode not in ("mean", "max"):
        raise ValueError(f"unknown downscale mode {mode!r}")
    v = np.asarray(v)
    if v.ndim not in (2, 3):
        raise ValueError(f"expected a 2-D or 3-D array, got ndim={v.ndim}")
    if factor == 1:
        return v.copy()
    padded_shape = padded_xy_dims(v.shape, factor)
    if padded_shape != v.shape:
        pad = [(0, p - s) for p, s in zip(padded_shape, v.shape)]
        v = np.pad(v, pad, mode="constant", constant_values=0)
    lead = v.shape[:-2]
    ny, nx = v.shape[-2] // factor, v.shape[-1] // factor
    blocks = v.reshape(*lead, ny, factor, nx, factor)
    if mode == "max":
        return blocks.max(axis=(-3, -1))
    return blocks.mean(axis=(-3, -1), dtype=np.float64).astype(np.float32)


def upscale_xy_nearest(v: np.ndarray, factor: int) -> np.ndarray:
    """Nearest-neighbour replication in y and x by ``factor``."""
    factor = _check_factor(factor)
    v = np.asarray(v)
    if v.ndim not in (2, 3):
        raise ValueError(f"expected a 2-D or 3-D array, got ndim={v.ndim}")
    if factor == 1:
        return v.copy()
    return np.repeat(np.repeat(v, factor, axis=-2), factor, axis=-1)
