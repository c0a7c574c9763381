"""Instance-segmentation evaluation: IoU, matching, AR, AP, and NMS.

Matching is the standard greedy protocol: proposals in strictly
descending score (ties broken by ascending input index) each claim the
unclaimed ground truth of highest IoU at or above the threshold, ties
going to the lowest ground-truth index.  Everything downstream (recall
curves, average recall, average precision) reuses that single matcher,
so the metrics are mutually consistent and fully deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .grid import BinaryMask, Box, BoxProposal

# Recall is averaged over this IoU grid for AR@N.
AR_IOU_THRESHOLDS = (0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95)

# Post-processing defaults: box-stage NMS, proposal cap, mask-stage NMS.
DEFAULT_BOX_NMS_IOU = 0.7
DEFAULT_MASK_NMS_IOU = 0.5
DEFAULT_PROPOSAL_CAP = 300


def mask_iou(a: BinaryMask, b: BinaryMask) -> float:
    """Intersection over union of two masks of equal dimensions.

    Two empty masks have IoU 1 (nothing disagrees); exactly one empty
    gives 0.
    """
    if a.pixels.shape != b.pixels.shape:
        raise ValueError(
            f"mask dimensions differ: {a.width}x{a.height} vs {b.width}x{b.height}"
        )
    union = int((a.pixels | b.pixels).sum())
    if union == 0:
        return 1.0
    return int((a.pixels & b.pixels).sum()) / union


def box_iou(a: Box, b: Box) -> float:
    """Intersection over union of two half-open boxes."""
    iw = min(a.x1, b.x1) - max(a.x0, b.x0)
    ih = min(a.y1, b.y1) - max(a.y0, b.y0)
    inter = max(iw, 0) * max(ih, 0)
    union = a.box_area + b.box_area - inter
    return inter / union


@dataclass(frozen=True)
class MatchResult:
    """Outcome of one greedy matching pass.

    `pairs` holds (proposal index, ground-truth index, iou) triples;
    no index appears twice.  `unmatched_gts` lists ground-truth indices
    no proposal claimed.
    """

    pairs: tuple[tuple[int, int, float], ...]
    unmatched_gts: tuple[int, ...]


def _score_order(proposals: Sequence[BoxProposal]) -> list[int]:
    return sorted(range(len(proposals)), key=lambda i: (-proposals[i].score, i))


def _canvas_shape(gts: Sequence[BinaryMask]) -> tuple[int, int]:
    if not gts:
        raise ValueError("ground-truth list is empty; recall is undefined")
    shape = gts[0].pixels.shape
    for g in gts[1:]:
        if g.pixels.shape != shape:
            raise ValueError("ground-truth masks must share one canvas")
    return shape


def _iou_matrix(proposals, gts) -> np.ndarray:
    h, w = _canvas_shape(gts)
    out = np.zeros((len(proposals), len(gts)))
    for i, p in enumerate(proposals):
        pm = p.canvas_mask(w, h)
        for j, g in enumerate(gts):
            out[i, j] = mask_iou(pm, g)
    return out


def _greedy_pairs(
    iou_mat: np.ndarray, order: Sequence[int], iou_thresh: float
) -> list[tuple[int, int, float]]:
    pairs = []
    taken = np.zeros(iou_mat.shape[1], dtype=bool)
    for i in order:
        if taken.all():
            break
        row = np.where(taken, -1.0, iou_mat[i])
        j = int(row.argmax())  # argmax takes the lowest index on ties
        if row[j] >= iou_thresh:
            taken[j] = True
            pairs.append((i, j, float(row[j])))
    return pairs


def greedy_match(
    proposals: Sequence[BoxProposal], gts: Sequence[BinaryMask], iou_thresh: float
) -> MatchResult:
    """Match proposals to ground truths by mask IoU, greedily by score."""
    mat = _iou_matrix(proposals, gts)
    pairs = _greedy_pairs(mat, _score_order(proposals), iou_thresh)
    matched = {j for _, j, _ in pairs}
    unmatched = tuple(j for j in range(len(gts)) if j not in matched)
    return MatchResult(tuple(pairs), unmatched)


def recall_curve(
    proposals: Sequence[BoxProposal],
    gts: Sequence[BinaryMask],
    thresholds: Sequence[float] = AR_IOU_THRESHOLDS,
) -> list[tuple[float, float]]:
    """Recall of the greedy matcher at each IoU threshold.

    Thresholds must be sorted ascending; recall is then non-increasing
    along the curve.
    """
    if any(b < a for a, b in zip(thresholds, thresholds[1:])):
        raise ValueError("thresholds must be sorted ascending")
    mat = _iou_matrix(proposals, gts)
    order = _score_order(proposals)
    out = []
    for t in thresholds:
        matched = len(_greedy_pairs(mat, order, t))
        out.append((float(t), matched / len(gts)))
    return out


def top_scoring(proposals: Sequence[BoxProposal], n: int) -> list[BoxProposal]:
    """The n highest-scoring proposals, score ties by input order."""
    if n < 1:
        raise ValueError(f"proposal budget must be >= 1, got {n}")
    return [proposals[i] for i in _score_order(proposals)[:n]]


def average_recall(
    proposals: Sequence[BoxProposal],
    gts: Sequence[BinaryMask],
    n: int,
    area_range: tuple[int, int] | None = None,
) -> float:
    """Mean recall of the top-n proposals over the standard IoU grid.

    `area_range` optionally restricts ground truths to pixel areas in
    [lo, hi); an empty selection is an error rather than a silent 0.
    """
    if n < 1:
        raise ValueError(f"proposal budget must be >= 1, got {n}")
    _canvas_shape(gts)
    if area_range is not None:
        lo, hi = area_range
        gts = [g for g in gts if lo <= g.area < hi]
        if not gts:
            raise ValueError(f"no ground truths with area in [{lo}, {hi})")
    curve = recall_curve(top_scoring(proposals, n), gts, AR_IOU_THRESHOLDS)
    return sum(r for _, r in curve) / len(curve)


def average_precision(
    proposals: Sequence[BoxProposal], gts: Sequence[BinaryMask], iou_thresh: float
) -> float:
    """Area under the monotone-envelope precision-recall curve.

    Proposals are ranked by score; each is a true positive when the
    greedy matcher pairs it with a ground truth at `iou_thresh`.  All
    recall points contribute (all-points interpolation).
    """
    _canvas_shape(gts)
    if not proposals:
        return 0.0
    mat = _iou_matrix(proposals, gts)
    order = _score_order(proposals)
    rank_of = {i: r for r, i in enumerate(order)}
    matched_ranks = {rank_of[i] for i, _, _ in _greedy_pairs(mat, order, iou_thresh)}
    tp = np.array([1.0 if r in matched_ranks else 0.0 for r in range(len(order))])
    tp_cum = tp.cumsum()
    precision = tp_cum / np.arange(1, len(order) + 1)
    recall = tp_cum / len(gts)
    mrec = np.concatenate(([0.0], recall, [recall[-1]]))
    mpre = np.concatenate(([0.0], precision, [0.0]))
    for k in range(len(mpre) - 2, -1, -1):
        mpre[k] = max(mpre[k], mpre[k + 1])
    steps = np.nonzero(mrec[1:] != mrec[:-1])[0]
    return float(((mrec[steps + 1] - mrec[steps]) * mpre[steps + 1]).sum())


def nms(
    proposals: Sequence[BoxProposal],
    iou_thresh: float,
    use_masks: bool = False,
    canvas_size: tuple[int, int] | None = None,
) -> list[BoxProposal]:
    """Greedy non-maximum suppression in descending score order.

    A proposal is suppressed when its overlap with an already kept one
    exceeds `iou_thresh` (strictly).  Overlap is box IoU, or mask IoU
    when `use_masks` is set; mask NMS needs `canvas_size` = (width,
    height) to materialize box-anchored masks.  Output preserves score
    order.
    """
    order = _score_order(proposals)
    if use_masks:
        if canvas_size is None:
            raise ValueError("mask NMS needs canvas_size=(width, height)")
        w, h = canvas_size
        masks = [p.canvas_mask(w, h) for p in proposals]
        overlap = lambda i, j: mask_iou(masks[i], masks[j])
    else:
        overlap = lambda i, j: box_iou(proposals[i].box, proposals[j].box)
    keep: list[int] = []
    for i in order:
        if all(overlap(i, k) <= iou_thresh for k in keep):
            keep.append(i)
    return [proposals[i] for i in keep]


@dataclass
class EvalReport:
    """Bundle of evaluation results plus the configuration that made them."""

    num_ground_truth: int
    num_proposals: int
    curve: list[tuple[float, float]]
    ar_at_n: dict[int, float]
    ap_at: dict[float, float]
    settings: dict[str, object] = field(default_factory=dict)


def evaluate(
    proposals: Sequence[BoxProposal],
    gts: Sequence[BinaryMask],
    ar_ns: Sequence[int] = (10, 100, 1000),
    ap_ious: Sequence[float] = (0.5, 0.7),
    curve_thresholds: Sequence[float] = AR_IOU_THRESHOLDS,
    settings: dict[str, object] | None = None,
) -> EvalReport:
    """Recall curve, AR@N, and AP in one pass over shared matching."""
    return EvalReport(
        num_ground_truth=len(gts),
        num_proposals=len(proposals),
        curve=recall_curve(proposals, gts, curve_thresholds),
        ar_at_n={n: average_recall(proposals, gts, n) for n in ar_ns},
        ap_at={t: average_precision(proposals, gts, t) for t in ap_ious},
        settings=dict(settings or {}),
    )
