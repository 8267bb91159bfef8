"""Seeded test scenes: non-touching tubes with known centerlines and gaps.

Centerlines are smooth random walks with bounded turning, rasterized as
balls of the requested radius. Tubes keep a separation of at least
2 * (radius + 1) voxels, so the label's component count equals the tube
count by construction. The prediction repeats the tubes with the gap
segments removed and optional bounded noise added; thresholding at 0.5
always recovers exactly the gapped tube mask.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage as ndi


@dataclass(frozen=True)
class TubeSpec:
    """Ground truth for one generated tube."""

    centerline: tuple[tuple[int, int, int], ...]
    radius: int
    gaps: tuple[tuple[float, float], ...]  # (start fraction, length fraction)
    p_in: float
    p_out: float


def _ball_offsets(radius: int, ndim: int = 3) -> np.ndarray:
    rng = range(-radius, radius + 1)
    offs = [o for o in itertools.product(rng, repeat=ndim) if sum(c * c for c in o) <= radius * radius]
    return np.asarray(offs, dtype=np.int64)


def stamp_centerline(
    centerline, radius: int, dims: tuple[int, int, int]
) -> np.ndarray:
    """Boolean mask of all voxels within Euclidean ``radius`` of the polyline voxels."""
    mask = np.zeros(dims, dtype=bool)
    pts = np.asarray(list(centerline), dtype=np.int64)
    if pts.size == 0:
        return mask
    offs = _ball_offsets(radius, pts.shape[1])
    allp = (pts[:, None, :] + offs[None, :, :]).reshape(-1, pts.shape[1])
    keep = np.all((allp >= 0) & (allp < np.asarray(dims)), axis=1)
    allp = allp[keep]
    mask[tuple(allp.T)] = True
    return mask


def _random_centerline(rng, dims, n_steps, margin, step=0.72, turn=0.3):
    lo = np.full(3, float(margin))
    hi = np.asarray(dims, dtype=np.float64) - 1.0 - margin
    planar = dims[0] == 1
    if planar:
        lo[0] = hi[0] = 0.0
    if np.any(hi < lo):
        raise ValueError(f"dims {tuple(dims)} too small for margin {margin}")
    pos = rng.uniform(lo, hi)
    direction = rng.normal(size=3)
    if planar:
        direction[0] = 0.0
    direction /= max(float(np.linalg.norm(direction)), 1e-9)
    voxels = [tuple(int(math.floor(c + 0.5)) for c in pos)]
    for _ in range(n_steps):
        direction = direction + turn * rng.normal(size=3)
        if planar:
            direction[0] = 0.0
        direction /= max(float(np.linalg.norm(direction)), 1e-9)
        nxt = pos + step * direction
        for ax in range(3):
            if nxt[ax] < lo[ax] or nxt[ax] > hi[ax]:
                direction[ax] = -direction[ax]
        nxt = np.clip(pos + step * direction, lo, hi)
        pos = nxt
        v = tuple(int(math.floor(c + 0.5)) for c in pos)
        if v != voxels[-1]:
            voxels.append(v)
    return voxels


def _self_touches(voxels, radius: int) -> bool:
    """True when far-apart arc indices come close enough to merge tube arcs."""
    pts = np.asarray(voxels, dtype=np.int64)
    n = len(pts)
    min_sep = 2 * radius + 2
    window = 4 * min_sep
    for i in range(n):
        far = pts[i + window :]
        if far.size == 0:
            continue
        cheb = np.max(np.abs(far - pts[i]), axis=1)
        if np.any(cheb < min_sep):
            return True
    return False


def _gap_index_ranges(n: int, gaps) -> list[tuple[int, int]]:
    return [
        (int(math.floor(start * n)), int(math.floor((start + length) * n)))
        for start, length in gaps
    ]


def _sample_gaps(rng, count: int, len_range) -> tuple[tuple[float, float], ...]:
    for _ in range(64):
        gaps = []
        for _ in range(count):
            length = float(rng.uniform(*len_range))
            start = float(rng.uniform(0.12, 0.88 - length))
            gaps.append((start, length))
        gaps.sort()
        if all(g0[0] + g0[1] < g1[0] for g0, g1 in zip(gaps, gaps[1:])):
            return tuple(gaps)
    raise ValueError("could not sample non-overlapping gaps; lower count or length")


def generate_scene(
    seed: int,
    n_tubes: int,
    dims: tuple[int, int, int],
    *,
    radius_range: tuple[int, int] = (1, 2),
    steps_range: tuple[int, int] = (36, 56),
    gaps_per_tube: int = 0,
    gap_len_range: tuple[float, float] = (0.25, 0.35),
    p_in: float = 1.0,
    p_out: float = 0.0,
    noise: float = 0.0,
    max_tries: int = 60,
) -> tuple[np.ndarray, np.ndarray, list[TubeSpec]]:
    """Generate (label, prediction, truth) for a seeded tube scene.

    The label is the union of the full tubes (uint8). The prediction is
    float32: ``p_in`` on tube voxels outside any gap segment, ``p_out``
    elsewhere, plus uniform noise in [-noise, noise] clipped to [0, 1].
    Noise must keep tube voxels above and gap/background voxels at or below
    the 0.5 threshold. Raises when a tube cannot be placed within
    ``max_tries`` attempts.
    """
    if radius_range[0] < 1:
        raise ValueError("tube radius must be at least 1 voxel")
    if not (p_in - noise > 0.5 and p_out + noise <= 0.5):
        raise ValueError(
            "p_in/p_out/noise must keep the 0.5 threshold exact: "
            "require p_in - noise > 0.5 and p_out + noise <= 0.5"
        )
    dims = tuple(int(d) for d in dims)
    rng = np.random.default_rng(seed)
    label = np.zeros(dims, dtype=bool)
    pred_mask = np.zeros(dims, dtype=bool)
    blocked = np.zeros(dims, dtype=bool)
    specs: list[TubeSpec] = []

    for index in range(n_tubes):
        placed = False
        for _ in range(max_tries):
            radius = int(rng.integers(radius_range[0], radius_range[1] + 1))
            n_steps = int(rng.integers(steps_range[0], steps_range[1] + 1))
            centerline = _random_centerline(rng, dims, n_steps, margin=radius + 2)
            if len(centerline) < 4 or _self_touches(centerline, radius):
                continue
            tube = stamp_centerline(centerline, radius, dims)
            if (tube & blocked).any():
                continue
            gaps = _sample_gaps(rng, gaps_per_tube, gap_len_range) if gaps_per_tube else ()
            ranges = _gap_index_ranges(len(centerline), gaps)
            kept = [
                v
                for i, v in enumerate(centerline)
                if not any(i0 <= i < i1 for i0, i1 in ranges)
            ]
            label |= tube
            if kept:
                pred_mask |= stamp_centerline(kept, radius, dims)
            separation = 2 * (radius + 1)
            blocked |= ndi.binary_dilation(
                tube, structure=np.ones((3, 3, 3), dtype=bool), iterations=separation
            )
            specs.append(
                TubeSpec(tuple(centerline), radius, gaps, float(p_in), float(p_out))
            )
            placed = True
            break
        if not placed:
            raise ValueError(
                f"could not place tube {index + 1}/{n_tubes} after {max_tries} attempts"
            )

    pred = np.full(dims, float(p_out), dtype=np.float64)
    pred[pred_mask] = float(p_in)
    if noise > 0.0:
        pred += rng.uniform(-noise, noise, size=dims)
        np.clip(pred, 0.0, 1.0, out=pred)
    return label.astype(np.uint8), pred.astype(np.float32), specs
