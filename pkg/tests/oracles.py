"""Independent reference implementations used to pin expected test values.

Everything here is deliberately brute force (per-voxel loops, flood fill,
exhaustive enumeration, LP-style assignment) and shares no code with the
package under test.
"""

from __future__ import annotations

import itertools
import math
from collections import deque

import numpy as np
from scipy.optimize import linear_sum_assignment


def se_offsets(shape, kind):
    """Structuring-element offsets incl. centre; singleton axes carry none."""
    ndim = len(shape)
    if kind == "cross":
        offs = [tuple([0] * ndim)]
        for ax in range(ndim):
            if shape[ax] <= 1:
                continue
            for d in (-1, 1):
                o = [0] * ndim
                o[ax] = d
                offs.append(tuple(o))
        return offs
    if kind == "cube":
        ranges = [(-1, 0, 1) if n > 1 else (0,) for n in shape]
        return list(itertools.product(*ranges))
    raise ValueError(kind)


def pool_oracle(a, kind, op):
    """Direct window definition of min/max pooling with out-of-bounds zeros."""
    a = np.asarray(a, dtype=np.float64)
    offs = se_offsets(a.shape, kind)
    out = np.empty(a.shape, dtype=np.float64)
    for idx in np.ndindex(a.shape):
        vals = []
        for off in offs:
            j = tuple(i + o for i, o in zip(idx, off))
            if all(0 <= jj < s for jj, s in zip(j, a.shape)):
                vals.append(float(a[j]))
            else:
                vals.append(0.0)
        out[idx] = op(vals)
    return out


def dilate_oracle(mask, kind="cross"):
    """Per-voxel neighbourhood OR."""
    return pool_oracle(np.asarray(mask) != 0, kind, max) > 0.5


def connectivity_offsets(ndim, connectivity):
    if connectivity == "face":
        offs = []
        for ax in range(ndim):
            for d in (-1, 1):
                o = [0] * ndim
                o[ax] = d
                offs.append(tuple(o))
        return offs
    return [o for o in itertools.product((-1, 0, 1), repeat=ndim) if any(o)]


def floodfill_labels(mask, connectivity="face"):
    """BFS flood fill; labels assigned in scan order, so IDs are canonical."""
    mask = np.asarray(mask) != 0
    labels = np.zeros(mask.shape, dtype=np.int32)
    offs = connectivity_offsets(mask.ndim, connectivity)
    count = 0
    for idx in np.ndindex(mask.shape):
        if not mask[idx] or labels[idx]:
            continue
        count += 1
        queue = deque([idx])
        labels[idx] = count
        while queue:
            cur = queue.popleft()
            for off in offs:
                j = tuple(i + o for i, o in zip(cur, off))
                if all(0 <= jj < s for jj, s in zip(j, mask.shape)):
                    if mask[j] and not labels[j]:
                        labels[j] = count
                        queue.append(j)
    return labels, count


def overlap_oracle(la, lb):
    """Exhaustive per-voxel co-occurrence census of two label grids."""
    la = np.asarray(la)
    lb = np.asarray(lb)
    out = {}
    for idx in np.ndindex(la.shape):
        a, b = int(la[idx]), int(lb[idx])
        if a and b:
            out[(a, b)] = out.get((a, b), 0) + 1
    return out


def _dilate_scatter(mask):
    """Cross dilation in scatter form: every ON voxel turns its face neighbours on."""
    mask = np.asarray(mask) != 0
    out = mask.copy()
    offs = connectivity_offsets(mask.ndim, "face")
    for idx in np.argwhere(mask):
        for off in offs:
            j = tuple(int(i + o) for i, o in zip(idx, off))
            if all(0 <= jj < s for jj, s in zip(j, mask.shape)):
                out[j] = True
    return out


def find_regions_oracle_both(p, l):
    """Brute-force critical-region masks: flood fill + exhaustive adjacency.

    Same documented procedure as the library: threshold at 0.5, dilate both
    the prediction and the missed regions (cross), label both dilations,
    flag missed components adjacent to >= 2 distinct prediction components
    and spurious prediction components. Returns the masks for both spurious
    rules as ``(as_written, label_overlap)``.
    """
    p = np.asarray(p)
    l = np.asarray(l)
    pt = p > 0.5
    lb = l != 0
    missed = lb & ~pt
    pred_dil = _dilate_scatter(pt)
    miss_dil = _dilate_scatter(missed)
    lab_p, n_p = floodfill_labels(pred_dil, "face")
    lab_d, n_d = floodfill_labels(miss_dil, "face")

    pairs = set()
    for idx in np.argwhere(miss_dil & pred_dil):
        pairs.add((int(lab_d[tuple(idx)]), int(lab_p[tuple(idx)])))
    fan = {}
    for d, q in pairs:
        fan.setdefault(d, set()).add(q)
    d_crit = {d for d, qs in fan.items() if len(qs) >= 2}

    with_pair = {q for _, q in pairs}
    p_crit_written = set(range(1, n_p + 1)) - with_pair
    touching = {int(lab_p[tuple(idx)]) for idx in np.argwhere(lb & pred_dil)}
    p_crit_overlap = set(range(1, n_p + 1)) - touching

    masks = []
    for p_crit in (p_crit_written, p_crit_overlap):
        mask = np.zeros(p.shape, dtype=np.uint8)
        for idx in np.argwhere(miss_dil):
            if int(lab_d[tuple(idx)]) in d_crit:
                mask[tuple(idx)] = 1
        for idx in np.argwhere(pred_dil):
            if int(lab_p[tuple(idx)]) in p_crit:
                mask[tuple(idx)] = 1
        masks.append(mask)
    return masks[0], masks[1]


def find_regions_oracle(p, l, mode):
    as_written, label_overlap = find_regions_oracle_both(p, l)
    return as_written if mode == "as-written" else label_overlap


def soft_skeleton_oracle(v, erode="cross", dilate="cube"):
    """Step-by-step trace of the skeletonization on a (small) volume."""
    work = np.asarray(v, dtype=np.float64)
    eroded = pool_oracle(work, erode, min)
    skel = np.maximum(work - pool_oracle(eroded, dilate, max), 0.0)
    while eroded.sum() > 0:
        nxt = pool_oracle(eroded, erode, min)
        opened = pool_oracle(nxt, dilate, max)
        skel = skel + np.maximum((1.0 - skel) * np.maximum(eroded - opened, 0.0), 0.0)
        eroded = nxt
    return pool_oracle(pool_oracle(skel, dilate, max), erode, min)


def bce_oracle(p, l, mask=None, eps=1e-7):
    """Scalar-by-scalar cross-entropy mean."""
    p = np.asarray(p, dtype=np.float64)
    l = np.asarray(l, dtype=np.float64)
    total = 0.0
    n = 0
    for idx in np.ndindex(p.shape):
        if mask is not None and not mask[idx]:
            continue
        pi = min(max(float(p[idx]), eps), 1.0 - eps)
        li = float(l[idx])
        total += -(li * math.log(pi) + (1.0 - li) * math.log(1.0 - pi))
        n += 1
    return total / n if n else 0.0


def finite_difference_gradient(fn, p, h=1e-3):
    """Central finite differences of a scalar function of the prediction."""
    p = np.asarray(p, dtype=np.float64)
    grad = np.zeros(p.shape, dtype=np.float64)
    for idx in np.ndindex(p.shape):
        hi = p.copy()
        lo = p.copy()
        hi[idx] += h
        lo[idx] -= h
        grad[idx] = (fn(hi) - fn(lo)) / (2.0 * h)
    return grad


def greedy_matching_oracle(overlaps, n_labels, n_preds):
    """Reimplementation of the one-to-one greedy matching from a pair census."""
    order = sorted(overlaps.items(), key=lambda kv: (-kv[1], kv[0][0], kv[0][1]))
    used_l, used_p, pairs = set(), set(), []
    for (lid, pid), n in order:
        if lid in used_l or pid in used_p:
            continue
        used_l.add(lid)
        used_p.add(pid)
        pairs.append((lid, pid, n))
    return pairs


def wasserstein_assignment_oracle(a, b):
    """Exact W1 via sample replication to a common size plus optimal assignment."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    common = math.lcm(a.size, b.size)
    ra = np.repeat(a, common // a.size)
    rb = np.repeat(b, common // b.size)
    cost = np.abs(ra[:, None] - rb[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum() / common)
