"""Instance-level evaluation of a prediction/label volume pair.

Undefined metrics (empty sides, zero variance) are reported as None and
flagged, never as NaN.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .components import ComponentLabels, Connectivity, label_components, overlap_table
from .lengths import instance_lengths
from .volume import Spacing, require_binary, require_same_shape


@dataclass(frozen=True)
class InstanceMatching:
    """One-to-one greedy matching between label and prediction components.

    ``pairs`` holds (label_id, pred_id, overlap_voxels); once an instance on
    either side is matched it cannot be matched again.
    """

    pairs: tuple[tuple[int, int, int], ...]
    unmatched_labels: tuple[int, ...]
    unmatched_preds: tuple[int, ...]

    @property
    def n_labels(self) -> int:
        return len(self.pairs) + len(self.unmatched_labels)

    @property
    def n_preds(self) -> int:
        return len(self.pairs) + len(self.unmatched_preds)


def voxel_dice(p: np.ndarray, l: np.ndarray) -> float:
    """2|P AND L| / (|P| + |L|); two empty masks give 1 by convention."""
    require_same_shape(p, l)
    pb = np.asarray(p) != 0
    lb = np.asarray(l) != 0
    denom = int(pb.sum()) + int(lb.sum())
    if denom == 0:
        return 1.0
    return 2.0 * int((pb & lb).sum()) / denom


def match_instances(lc: ComponentLabels, pc: ComponentLabels) -> InstanceMatching:
    """Greedy one-to-one matching over raw-voxel overlaps.

    Candidate pairs are visited by (overlap voxels descending, label ID
    ascending, prediction ID ascending); a pair is taken only while both
    sides are still unmatched.
    """
    table = overlap_table(lc, pc)
    order = sorted(table.items(), key=lambda kv: (-kv[1], kv[0][0], kv[0][1]))
    used_l: set[int] = set()
    used_p: set[int] = set()
    pairs: list[tuple[int, int, int]] = []
    for (lid, pid), n in order:
        if lid in used_l or pid in used_p:
            continue
        used_l.add(lid)
        used_p.add(pid)
        pairs.append((lid, pid, n))
    unmatched_l = tuple(k for k in range(1, lc.count + 1) if k not in used_l)
    unmatched_p = tuple(k for k in range(1, pc.count + 1) if k not in used_p)
    return InstanceMatching(tuple(pairs), unmatched_l, unmatched_p)


def precision_recall(m: InstanceMatching) -> tuple[float | None, float | None]:
    """Matched fractions per side; a side without instances is undefined (None)."""
    precision = len(m.pairs) / m.n_preds if m.n_preds else None
    recall = len(m.pairs) / m.n_labels if m.n_labels else None
    return precision, recall


def overlapping_instances(lc: ComponentLabels, pc: ComponentLabels) -> float | None:
    """Mean number of prediction components each overlapped label touches.

    Label components overlapping nothing are not considered; if no label
    overlaps any prediction the metric is undefined (None).
    """
    table = overlap_table(lc, pc)
    per_label: dict[int, int] = {}
    for lid, _ in table:
        per_label[lid] = per_label.get(lid, 0) + 1
    if not per_label:
        return None
    return sum(per_label.values()) / len(per_label)


def wasserstein_1d(a, b) -> float:
    """Exact W1 between two empirical distributions (sorted-sample form).

    Integrates |F_a - F_b| over the merged sample grid, which handles
    unequal sample sizes exactly.
    """
    av = np.sort(np.asarray(a, dtype=np.float64).ravel())
    bv = np.sort(np.asarray(b, dtype=np.float64).ravel())
    if av.size == 0 or bv.size == 0:
        raise ValueError("wasserstein_1d requires non-empty samples on both sides")
    merged = np.concatenate([av, bv])
    merged.sort(kind="mergesort")
    deltas = np.diff(merged)
    cdf_a = np.searchsorted(av, merged[:-1], side="right") / av.size
    cdf_b = np.searchsorted(bv, merged[:-1], side="right") / bv.size
    return float(np.sum(np.abs(cdf_a - cdf_b) * deltas))


def ssmd(a, b) -> float | None:
    """Strictly standardized mean difference (mean(a)-mean(b))/sqrt(var(a)+var(b)).

    Sample variances use the n-1 denominator, so both sides need at least
    two samples; zero combined variance is undefined (None).
    """
    av = np.asarray(a, dtype=np.float64).ravel()
    bv = np.asarray(b, dtype=np.float64).ravel()
    if av.size < 2 or bv.size < 2:
        raise ValueError("ssmd requires at least two samples per side")
    var = float(av.var(ddof=1)) + float(bv.var(ddof=1))
    if var == 0.0:
        return None
    return float((av.mean() - bv.mean()) / np.sqrt(var))


@dataclass(frozen=True)
class MetricReport:
    """The full metric suite for one prediction/label pair.

    Serialized as flat JSON with a per-field ``<name>_defined`` boolean;
    undefined fields are null.
    """

    dice: float
    precision: float | None
    recall: float | None
    overlapping_instances: float | None
    wasserstein_um: float | None
    ssmd: float | None
    n_label_instances: int
    n_pred_instances: int

    _FIELDS = ("dice", "precision", "recall", "overlapping_instances", "wasserstein_um", "ssmd")

    def to_json_dict(self) -> dict:
        out: dict = {}
        for name in self._FIELDS:
            value = getattr(self, name)
            out[name] = value
            out[f"{name}_defined"] = value is not None
        out["n_label_instances"] = self.n_label_instances
        out["n_pred_instances"] = self.n_pred_instances
        return out


def evaluate_pair(
    p: np.ndarray,
    l: np.ndarray,
    spacing: Spacing,
    threshold: float = 0.5,
    connectivity: Connectivity = "face",
) -> MetricReport:
    """Binarize, label, match, and measure one prediction against its label.

    Float predictions are thresholded (strict >); integer/bool predictions
    are taken as-is. Length metrics (Wasserstein of the length
    distributions, SSMD computed label-minus-prediction) use only instances
    that do not touch the volume border.
    """
    p = np.asarray(p)
    l = np.asarray(l)
    require_same_shape(p, l)
    require_binary(l, "label")
    if p.dtype == np.uint8 or p.dtype == bool:
        pt = (p != 0).astype(np.uint8)
    else:
        pt = (p > threshold).astype(np.uint8)
    lb = (l != 0).astype(np.uint8)

    lc = label_components(lb, connectivity)
    pc = label_components(pt, connectivity)
    matching = match_instances(lc, pc)
    precision, recall = precision_recall(matching)
    overlap = overlapping_instances(lc, pc)
    dice = voxel_dice(pt, lb)

    label_lengths = [
        r.length_um for r in instance_lengths(lb, spacing, connectivity) if not r.touches_border
    ]
    pred_lengths = [
        r.length_um for r in instance_lengths(pt, spacing, connectivity) if not r.touches_border
    ]
    w1 = wasserstein_1d(label_lengths, pred_lengths) if label_lengths and pred_lengths else None
    sv = (
        ssmd(label_lengths, pred_lengths)
        if len(label_lengths) >= 2 and len(pred_lengths) >= 2
        else None
    )
    return MetricReport(dice, precision, recall, overlap, w1, sv, lc.count, pc.count)
