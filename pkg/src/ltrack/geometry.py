"""Boxes, anchor grids, overlap, offset coding, matching and NMS.

Everything here is a pure function over immutable inputs; array variants
(`iou_matrix`, `encode_array`, ...) carry the vectorized work, the Box-level
wrappers keep call sites readable.
"""
import math
from dataclasses import dataclass

import numpy as np

POSITIVE = 1
IGNORE = 0
NEGATIVE = -1


@dataclass(frozen=True)
class Box:
    """Axis-aligned rectangle: top-left corner (x, y), extents (w, h) in pixels."""
    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"box extents must be positive, got w={self.w} h={self.h}")
        if not all(math.isfinite(v) for v in (self.x, self.y, self.w, self.h)):
            raise ValueError("box fields must be finite")

    @property
    def cx(self):
        return self.x + self.w / 2.0

    @property
    def cy(self):
        return self.y + self.h / 2.0

    @property
    def area(self):
        return self.w * self.h

    def as_array(self):
        return np.array([self.x, self.y, self.w, self.h], dtype=np.float64)


def boxes_to_array(boxes):
    if len(boxes) == 0:
        return np.zeros((0, 4))
    return np.stack([b.as_array() for b in boxes])


def iou(a, b):
    """Intersection area over union area; 0 for disjoint boxes."""
    left = max(a.x, b.x)
    top = max(a.y, b.y)
    right = min(a.x + a.w, b.x + b.w)
    bottom = min(a.y + a.h, b.y + b.h)
    inter = max(0.0, right - left) * max(0.0, bottom - top)
    if inter == 0.0:
        return 0.0
    return inter / (a.area + b.area - inter)


def iou_matrix(a, b):
    """Pairwise IoU between (N,4) and (M,4) x,y,w,h arrays -> (N,M)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        return np.zeros((a.shape[0], b.shape[0]))
    ax1, ay1 = a[:, 0:1], a[:, 1:2]
    ax2, ay2 = ax1 + a[:, 2:3], ay1 + a[:, 3:4]
    bx1, by1 = b[:, 0], b[:, 1]
    bx2, by2 = bx1 + b[:, 2], by1 + b[:, 3]
    iw = np.maximum(0.0, np.minimum(ax2, bx2) - np.maximum(ax1, bx1))
    ih = np.maximum(0.0, np.minimum(ay2, by2) - np.maximum(ay1, by1))
    inter = iw * ih
    union = (a[:, 2:3] * a[:, 3:4]) + (b[:, 2] * b[:, 3]) - inter
    out = np.zeros_like(inter)
    np.divide(inter, union, out=out, where=inter > 0)
    return out


@dataclass(frozen=True)
class AnchorSet:
    """Anchor boxes with (level, row, col, ratio index) provenance per anchor.

    Enumeration order is level-major, then row, col, ratio — the same
    row-major order in which the RPN heads emit per-anchor channels.
    """
    boxes: np.ndarray         # (N, 4) x,y,w,h
    level: np.ndarray         # (N,)
    row: np.ndarray
    col: np.ndarray
    ratio_index: np.ndarray
    level_sizes: tuple        # anchors per level, in level order

    def __len__(self):
        return self.boxes.shape[0]


def generate_anchors(levels, ratios):
    """Anchor grid over scale levels: (grid_h, grid_w, stride, base_size) each.

    Per cell and ratio r the anchor is centered on the cell center with
    w = base*sqrt(r), h = base/sqrt(r).
    """
    if len(ratios) == 0:
        raise ValueError("at least one anchor ratio is required")
    boxes, lev, row, col, ridx, sizes = [], [], [], [], [], []
    for li, (gh, gw, stride, base) in enumerate(levels):
        if stride <= 0 or base <= 0:
            raise ValueError("anchor stride and base size must be positive")
        count = 0
        for r in range(gh):
            cy = (r + 0.5) * stride
            for c in range(gw):
                cx = (c + 0.5) * stride
                for k, ratio in enumerate(ratios):
                    w = base * math.sqrt(ratio)
                    h = base / math.sqrt(ratio)
                    boxes.append((cx - w / 2.0, cy - h / 2.0, w, h))
                    lev.append(li)
                    row.append(r)
                    col.append(c)
                    ridx.append(k)
                    count += 1
        sizes.append(count)
    return AnchorSet(
        boxes=np.asarray(boxes, dtype=np.float64),
        level=np.asarray(lev, dtype=np.int32),
        row=np.asarray(row, dtype=np.int32),
        col=np.asarray(col, dtype=np.int32),
        ratio_index=np.asarray(ridx, dtype=np.int32),
        level_sizes=tuple(sizes),
    )


def encode_array(truths, anchors):
    """Offsets (dx, dy, dw, dh) from (N,4) anchors to matched (N,4) truths."""
    truths = np.asarray(truths, dtype=np.float64)
    anchors = np.asarray(anchors, dtype=np.float64)
    if np.any(anchors[:, 2:] <= 0):
        raise ValueError("anchor extents must be positive")
    tcx = truths[:, 0] + truths[:, 2] / 2.0
    tcy = truths[:, 1] + truths[:, 3] / 2.0
    acx = anchors[:, 0] + anchors[:, 2] / 2.0
    acy = anchors[:, 1] + anchors[:, 3] / 2.0
    return np.stack([
        (tcx - acx) / anchors[:, 2],
        (tcy - acy) / anchors[:, 3],
        np.log(truths[:, 2] / anchors[:, 2]),
        np.log(truths[:, 3] / anchors[:, 3]),
    ], axis=1)


# Offset magnitudes past this decode to absurd boxes; clamp keeps exp finite.
_MAX_LOG_SIZE = 10.0


def decode_array(offsets, anchors):
    offsets = np.asarray(offsets, dtype=np.float64)
    anchors = np.asarray(anchors, dtype=np.float64)
    if np.any(anchors[:, 2:] <= 0):
        raise ValueError("anchor extents must be positive")
    acx = anchors[:, 0] + anchors[:, 2] / 2.0
    acy = anchors[:, 1] + anchors[:, 3] / 2.0
    cx = acx + offsets[:, 0] * anchors[:, 2]
    cy = acy + offsets[:, 1] * anchors[:, 3]
    w = anchors[:, 2] * np.exp(np.clip(offsets[:, 2], -_MAX_LOG_SIZE, _MAX_LOG_SIZE))
    h = anchors[:, 3] * np.exp(np.clip(offsets[:, 3], -_MAX_LOG_SIZE, _MAX_LOG_SIZE))
    return np.stack([cx - w / 2.0, cy - h / 2.0, w, h], axis=1)


def encode(truth, anchor):
    return tuple(encode_array(truth.as_array()[None], anchor.as_array()[None])[0])


def decode(offsets, anchor):
    arr = decode_array(np.asarray(offsets, dtype=np.float64)[None],
                       anchor.as_array()[None])[0]
    return Box(*arr)


@dataclass(frozen=True)
class MatchResult:
    """Per-anchor labels with matched truth indices and encoded targets.

    labels: POSITIVE / IGNORE / NEGATIVE per anchor; truth_index is -1 for
    non-positives; offsets rows are meaningful only where labels==POSITIVE.
    """
    labels: np.ndarray
    truth_index: np.ndarray
    offsets: np.ndarray

    @property
    def positive_indices(self):
        return np.nonzero(self.labels == POSITIVE)[0]

    @property
    def negative_indices(self):
        return np.nonzero(self.labels == NEGATIVE)[0]


def match_anchors(anchors, truths, th_lo=0.5, th_hi=0.7):
    """Label anchors by their best IoU with the truth boxes.

    IoU > th_hi -> positive (matched to its argmax truth), IoU < th_lo ->
    negative, the band between is ignored.  An empty truth list labels every
    anchor negative.
    """
    if not 0.0 <= th_lo <= th_hi <= 1.0:
        raise ValueError("thresholds must satisfy 0 <= th_lo <= th_hi <= 1")
    n = len(anchors)
    labels = np.full(n, NEGATIVE, dtype=np.int8)
    truth_index = np.full(n, -1, dtype=np.int32)
    offsets = np.zeros((n, 4))
    if len(truths) > 0:
        truth_arr = boxes_to_array(truths)
        overlaps = iou_matrix(anchors.boxes, truth_arr)
        best = overlaps.max(axis=1)
        best_idx = overlaps.argmax(axis=1)
        labels[(best >= th_lo) & (best <= th_hi)] = IGNORE
        pos = best > th_hi
        labels[pos] = POSITIVE
        truth_index[pos] = best_idx[pos]
        if pos.any():
            offsets[pos] = encode_array(truth_arr[best_idx[pos]], anchors.boxes[pos])
    return MatchResult(labels=labels, truth_index=truth_index, offsets=offsets)


def nms(boxes, scores, iou_threshold=0.6):
    """Greedy non-maximum suppression.

    Returns kept indices in descending score order (ties kept in input
    order); a candidate is suppressed iff its IoU with an already-kept one
    strictly exceeds the threshold.
    """
    boxes = np.asarray(boxes, dtype=np.float64)
    scores = np.asarray(scores, dtype=np.float64)
    n = boxes.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    order = np.lexsort((np.arange(n), -scores))
    kept = []
    while order.size:
        i = order[0]
        kept.append(i)
        rest = order[1:]
        if rest.size == 0:
            break
        overlaps = iou_matrix(boxes[i][None], boxes[rest])[0]
        order = rest[overlaps <= iou_threshold]
    return np.asarray(kept, dtype=np.int64)


def clip_box_array(boxes, width, height, min_size=1e-3):
    """Clip (N,4) boxes to [0,width]x[0,height], keeping extents positive."""
    boxes = np.asarray(boxes, dtype=np.float64)
    x1 = np.clip(boxes[:, 0], 0.0, width - min_size)
    y1 = np.clip(boxes[:, 1], 0.0, height - min_size)
    x2 = np.clip(boxes[:, 0] + boxes[:, 2], min_size, width)
    y2 = np.clip(boxes[:, 1] + boxes[:, 3], min_size, height)
    w = np.maximum(x2 - x1, min_size)
    h = np.maximum(y2 - y1, min_size)
    return np.stack([x1, y1, w, h], axis=1)
