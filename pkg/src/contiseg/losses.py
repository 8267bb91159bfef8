"""Loss terms for continuity-preserving segmentation training.

Every loss takes a prediction volume ``p`` (probabilities) and a binary
label volume ``l`` of the same shape, computes in float64, and returns its
value together with a dense analytic gradient with respect to ``p`` where
one exists. Gradients are returned as volumes so a caller can register them
with any external optimizer; nothing here depends on an autodiff framework.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .components import label_components, overlap_table
from .morphology import binary_dilate
from .skeleton import soft_skeleton
from .volume import require_binary, require_same_shape

EPS = 1e-7

EVAL_KINDS = ("none", "cl_dice", "negative_centerline", "simplified_topology")
REGION_MODES = ("as-written", "label-overlap")


class DegenerateLossWarning(UserWarning):
    """A loss was evaluated on degenerate inputs (e.g. an empty skeleton)."""


def bce(
    p: np.ndarray, l: np.ndarray, mask: np.ndarray | None = None
) -> tuple[float, np.ndarray]:
    """Binary cross-entropy, optionally restricted to a mask.

    Value is the mean of -[l*log(p) + (1-l)*log(1-p)] over mask voxels (all
    voxels without a mask), with p clamped to [EPS, 1-EPS]. The gradient is
    (p - l) / (p * (1 - p) * N_mask) on the mask and exactly 0 off it; the
    masked mean divides by the mask voxel count so gradient magnitude does
    not depend on volume size. An empty mask yields value 0 and a zero
    gradient.
    """
    p = np.asarray(p, dtype=np.float64)
    l = np.asarray(l, dtype=np.float64)
    require_same_shape(p, l)
    pc = np.clip(p, EPS, 1.0 - EPS)
    if mask is not None:
        require_same_shape(mask, p, "mask and prediction")
        sel = np.asarray(mask) != 0
        grad = np.zeros(p.shape, dtype=np.float64)
        n = int(sel.sum())
        if n == 0:
            return 0.0, grad
        pm = pc[sel]
        lm = l[sel]
        value = float(np.mean(-(lm * np.log(pm) + (1.0 - lm) * np.log1p(-pm))))
        grad[sel] = (pm - lm) / (pm * (1.0 - pm) * n)
        return value, grad
    value = float(np.mean(-(l * np.log(pc) + (1.0 - l) * np.log1p(-pc))))
    grad = (pc - l) / (pc * (1.0 - pc) * p.size)
    return value, grad


def soft_dice(p: np.ndarray, l: np.ndarray) -> tuple[float, np.ndarray]:
    """Soft Dice loss 1 - (2*sum(p*l) + EPS) / (sum(p) + sum(l) + EPS)."""
    p = np.asarray(p, dtype=np.float64)
    l = np.asarray(l, dtype=np.float64)
    require_same_shape(p, l)
    num = 2.0 * float(np.sum(p * l)) + EPS
    den = float(np.sum(p)) + float(np.sum(l)) + EPS
    value = 1.0 - num / den
    grad = (num - 2.0 * l * den) / (den * den)
    return value, grad


def negative_centerline(p: np.ndarray, l: np.ndarray) -> tuple[float, np.ndarray]:
    """Fraction of the label's skeleton not covered by the prediction.

    The skeleton depends only on the label, so the loss is affine in p and
    the gradient -skeleton / sum(skeleton) is exact. An empty skeleton gives
    value 0 with a zero gradient and a DegenerateLossWarning.
    """
    p = np.asarray(p, dtype=np.float64)
    require_same_shape(p, l)
    cl = soft_skeleton(np.asarray(l))
    total = float(cl.sum())
    if total == 0.0:
        warnings.warn(
            "label skeleton is empty; negative centerline loss is 0 by convention",
            DegenerateLossWarning,
            stacklevel=2,
        )
        return 0.0, np.zeros(p.shape, dtype=np.float64)
    value = float(np.sum((1.0 - p) * cl)) / total
    grad = -cl / total
    return value, grad


def find_regions(p: np.ndarray, l: np.ndarray, mode: str = "label-overlap") -> np.ndarray:
    """Binary mask of the regions critical for instance continuity.

    Procedure: threshold p at 0.5; compute the missed regions L AND NOT P;
    dilate both the thresholded prediction and the missed regions with the
    cross element; label both dilations (face connectivity). The mask covers
    voxels of every dilated missed-region component adjacent to at least two
    distinct dilated prediction components, plus every dilated prediction
    component that is spurious. "Spurious" depends on ``mode``:

    - ``"label-overlap"`` (default): the dilated prediction component shares
      no voxel with the label.
    - ``"as-written"``: the dilated prediction component has no entry in the
      overlap table at all. Note this flags perfectly segmented components
      too, since a perfect prediction leaves no missed regions to overlap.

    Note the radius-1 prediction dilation bridges gaps up to two voxels
    wide; such micro-gaps merge into one prediction component and are not
    flagged.
    """
    if mode not in REGION_MODES:
        raise ValueError(f"unknown find-regions mode {mode!r}; expected one of {REGION_MODES}")
    p = np.asarray(p)
    l = np.asarray(l)
    require_same_shape(p, l)
    require_binary(l, "label")

    pt = p > 0.5
    lb = l != 0
    missed = lb & ~pt
    pred_dil = binary_dilate(pt, "cross")
    miss_dil = binary_dilate(missed, "cross")
    cc_p = label_components(pred_dil, "face")
    cc_d = label_components(miss_dil, "face")
    table = overlap_table(cc_d, cc_p)

    fan_out = np.zeros(cc_d.count + 1, dtype=np.int64)
    for d_id, _ in table:
        fan_out[d_id] += 1
    d_critical = fan_out >= 2
    d_critical[0] = False

    p_spurious = np.ones(cc_p.count + 1, dtype=bool)
    p_spurious[0] = False
    if mode == "as-written":
        for _, p_id in table:
            p_spurious[p_id] = False
    else:
        touching = np.unique(cc_p.labels[lb])
        p_spurious[touching[touching != 0]] = False

    mask = d_critical[cc_d.labels] | p_spurious[cc_p.labels]
    return mask.astype(np.uint8)


def simplified_topology(
    p: np.ndarray, l: np.ndarray, mode: str = "label-overlap"
) -> tuple[float, np.ndarray, np.ndarray]:
    """Cross-entropy re-applied on the critical-region mask.

    The mask is treated as a constant: no gradient flows through its
    construction, and the returned gradient is exactly 0 off the mask.
    Returns (value, gradient, mask).
    """
    mask = find_regions(p, l, mode)
    value, grad = bce(p, l, mask)
    return value, grad, mask


def cl_dice(p: np.ndarray, l: np.ndarray) -> float:
    """Centerline Dice between prediction and label skeletons (value only).

    Degenerate denominators (either skeleton empty, or both topological
    precision and sensitivity zero) give 1 with a DegenerateLossWarning.
    """
    p = np.asarray(p, dtype=np.float64)
    l = np.asarray(l, dtype=np.float64)
    require_same_shape(p, l)
    skel_p = soft_skeleton(p)
    skel_l = soft_skeleton(l)
    sum_p = float(skel_p.sum())
    sum_l = float(skel_l.sum())
    if sum_p == 0.0 or sum_l == 0.0:
        warnings.warn(
            "empty skeleton; clDice loss is 1 by convention",
            DegenerateLossWarning,
            stacklevel=2,
        )
        return 1.0
    tprec = float(np.sum(skel_p * l)) / sum_p
    tsens = float(np.sum(skel_l * p)) / sum_l
    if tprec + tsens == 0.0:
        warnings.warn(
            "prediction and label skeletons are mutually disjoint; clDice loss is 1",
            DegenerateLossWarning,
            stacklevel=2,
        )
        return 1.0
    return 1.0 - 2.0 * tprec * tsens / (tprec + tsens)


@dataclass(frozen=True)
class LossWeights:
    """Weights of the combined loss w_bce*BCE + w_dice*Dice + w_eval*eval."""

    w_bce: float = 1.0
    w_dice: float = 1.0
    w_eval: float = 0.0
    eval_kind: str = "none"

    def __post_init__(self) -> None:
        if self.eval_kind not in EVAL_KINDS:
            raise ValueError(f"unknown eval_kind {self.eval_kind!r}; expected one of {EVAL_KINDS}")
        if min(self.w_bce, self.w_dice, self.w_eval) < 0:
            raise ValueError("loss weights must be non-negative")
        active = [self.w_bce, self.w_dice]
        if self.eval_kind != "none":
            active.append(self.w_eval)
        if max(active) <= 0:
            raise ValueError("at least one loss weight must be positive")


#: Named weight presets; the eval weights are 3, 3 and 4/5 for clDice,
#: negative centerline and simplified topology respectively.
PRESETS: dict[str, LossWeights] = {
    "baseline": LossWeights(1.0, 1.0, 0.0, "none"),
    "cldice": LossWeights(1.0, 1.0, 3.0, "cl_dice"),
    "negative-centerline": LossWeights(1.0, 1.0, 3.0, "negative_centerline"),
    "simplified-topology": LossWeights(1.0, 1.0, 4.0 / 5.0, "simplified_topology"),
}


@dataclass
class LossReport:
    """Per-term values, the weighted combination, and optional gradient/mask.

    ``gradient`` is the full d(combined)/dp volume when every active term
    has an analytic gradient; it is None for the clDice eval kind, which is
    evaluation-only here. ``region_mask`` is set for simplified topology.
    """

    weights: LossWeights
    bce_value: float
    dice_value: float
    eval_value: float | None
    combined: float
    gradient: np.ndarray | None
    region_mask: np.ndarray | None
    warnings: list[str] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        w = self.weights
        return {
            "eval_kind": w.eval_kind,
            "w_bce": w.w_bce,
            "w_dice": w.w_dice,
            "w_eval": None if w.eval_kind == "none" else w.w_eval,
            "bce": self.bce_value,
            "dice": self.dice_value,
            "eval": self.eval_value,
            "combined": self.combined,
            "warnings": list(self.warnings),
        }


def combined_loss(
    p: np.ndarray,
    l: np.ndarray,
    weights: LossWeights,
    region_mode: str = "label-overlap",
) -> LossReport:
    """Evaluate the weighted loss combination configured by ``weights``.

    Degenerate-input warnings raised by the eval term are captured into the
    report rather than escaping to the caller.
    """
    bce_value, bce_grad = bce(p, l)
    dice_value, dice_grad = soft_dice(p, l)
    eval_value: float | None = None
    eval_grad: np.ndarray | None = None
    region_mask: np.ndarray | None = None
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", DegenerateLossWarning)
        if weights.eval_kind == "negative_centerline":
            eval_value, eval_grad = negative_centerline(p, l)
        elif weights.eval_kind == "simplified_topology":
            eval_value, eval_grad, region_mask = simplified_topology(p, l, region_mode)
        elif weights.eval_kind == "cl_dice":
            eval_value = cl_dice(p, l)
    notes = [str(w.message) for w in caught if issubclass(w.category, DegenerateLossWarning)]

    combined = weights.w_bce * bce_value + weights.w_dice * dice_value
    if eval_value is not None:
        combined += weights.w_eval * eval_value
    if weights.eval_kind == "cl_dice":
        gradient = None
    else:
        gradient = weights.w_bce * bce_grad + weights.w_dice * dice_grad
        if eval_grad is not None:
            gradient += weights.w_eval * eval_grad
    return LossReport(
        weights, bce_value, dice_value, eval_value, combined, gradient, region_mask, notes
    )
