"""Detection evaluation: IoU, greedy matching, AP, and COCO-style mAP.

Average precision uses 101-point interpolation (precision envelope sampled
at recall 0.00..1.00 in 0.01 steps); mAP@0.5:0.95 averages over IoU
thresholds 0.50..0.95 in 0.05 steps. When an image set has no ground truth,
AP is 1.0 if there are also no predictions and 0.0 otherwise, so only false
alarms are penalized.

Also includes the parameterized detector stub used by the mission loop in
place of a trained model: misses, box jitter, Poisson false positives, and
Beta-distributed confidence scores.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

AP_RECALL_SAMPLES = np.linspace(0.0, 1.0, 101)
MAP_IOU_THRESHOLDS = tuple(round(0.5 + 0.05 * i, 2) for i in range(10))
OPERATING_SCORE = 0.5
OPERATING_IOU = 0.5


@dataclass(frozen=True)
class BBox:
    x_min: float
    y_min: float
    x_max: float
    y_max: float
    label: str = "human"
    score: float | None = None

    def __post_init__(self) -> None:
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(f"degenerate box: {self}")
        if self.score is not None and not (0.0 <= self.score <= 1.0):
            raise ValueError(f"score must be in [0, 1], got {self.score}")

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)

    def scaled(self, factor: float) -> "BBox":
        return BBox(self.x_min * factor, self.y_min * factor,
                    self.x_max * factor, self.y_max * factor,
                    self.label, self.score)


@dataclass
class BBoxSet:
    image_id: str
    boxes: list[BBox] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.boxes)


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two axis-aligned boxes."""
    if a.area <= 0 or b.area <= 0:
        raise ValueError("zero-area box")
    ix = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    iy = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    return inter / (a.area + b.area - inter)


def _pred_order(preds: list[BBox]) -> list[int]:
    """Score descending; ties broken by larger area, then input order."""
    def score(b: BBox) -> float:
        return b.score if b.score is not None else 1.0
    return sorted(range(len(preds)),
                  key=lambda i: (-score(preds[i]), -preds[i].area, i))


def match_greedy(preds: list[BBox], gts: list[BBox],
                 iou_thr: float) -> tuple[dict[int, int], list[int], list[int]]:
    """Greedy assignment of predictions to ground-truth boxes of one class.

    Predictions claim, in score order, the unmatched ground-truth box of
    highest IoU >= iou_thr. Returns (matches pred->gt, false-positive pred
    indices, false-negative gt indices).
    """
    labels = {b.label for b in preds} | {b.label for b in gts}
    if len(labels) > 1:
        raise ValueError(f"match_greedy expects a single class, got {sorted(labels)}")
    matches: dict[int, int] = {}
    claimed: set[int] = set()
    for pi in _pred_order(preds):
        best_gi, best_iou = -1, iou_thr
        for gi, gt in enumerate(gts):
            if gi in claimed:
                continue
            v = iou(preds[pi], gt)
            if v > best_iou or (v == best_iou and v >= iou_thr and best_gi < 0):
                best_gi, best_iou = gi, v
        if best_gi >= 0:
            matches[pi] = best_gi
            claimed.add(best_gi)
    fp = [i for i in range(len(preds)) if i not in matches]
    fn = [i for i in range(len(gts)) if i not in claimed]
    return matches, fp, fn


def _pooled_ap(preds_by_image: dict[str, list[BBox]],
               gts_by_image: dict[str, list[BBox]], iou_thr: float) -> float:
    """AP for one class pooled over images (101-point interpolation)."""
    n_gts = sum(len(g) for g in gts_by_image.values())
    records: list[tuple[float, float, int, int, bool]] = []
    image_order = {img: k for k, img in enumerate(preds_by_image)}
    for img, preds in preds_by_image.items():
        gts = gts_by_image.get(img, [])
        matches, _, _ = match_greedy(preds, gts, iou_thr)
        for pi, p in enumerate(preds):
            s = p.score if p.score is not None else 1.0
            records.append((s, p.area, image_order[img], pi, pi in matches))
    if n_gts == 0:
        return 1.0 if not records else 0.0
    if not records:
        return 0.0
    records.sort(key=lambda r: (-r[0], -r[1], r[2], r[3]))
    tp_cum = np.cumsum([1.0 if r[4] else 0.0 for r in records])
    k = np.arange(1, len(records) + 1)
    recall = tp_cum / n_gts
    precision = tp_cum / k
    # Envelope: max precision over any recall >= r.
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    interp = np.zeros_like(AP_RECALL_SAMPLES)
    idx = np.searchsorted(recall, AP_RECALL_SAMPLES - 1e-12, side="left")
    valid = idx < len(records)
    interp[valid] = envelope[idx[valid]]
    return float(interp.mean())


def average_precision(preds: list[BBox], gts: list[BBox], iou_thr: float) -> float:
    """Single-image AP at one IoU threshold."""
    return _pooled_ap({"_": preds}, {"_": gts}, iou_thr)


@dataclass
class EvalResult:
    precision: float
    recall: float
    f1: float
    ap_per_threshold: dict[float, float]
    map50: float
    map5095: float
    per_image: dict[str, dict[str, int]]

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "ap_per_threshold": {f"{t:.2f}": v for t, v in self.ap_per_threshold.items()},
            "map50": self.map50,
            "map5095": self.map5095,
            "per_image": self.per_image,
        }


def _by_class(boxes_by_image: dict[str, list[BBox]], label: str) -> dict[str, list[BBox]]:
    return {img: [b for b in boxes if b.label == label]
            for img, boxes in boxes_by_image.items()}


def _as_dict(sets) -> dict[str, list[BBox]]:
    if isinstance(sets, dict):
        return sets
    out: dict[str, list[BBox]] = {}
    for s in sets:
        if s.image_id in out:
            raise ValueError(f"duplicate image id {s.image_id!r}")
        out[s.image_id] = list(s.boxes)
    return out


def map_range(preds_by_image, gts_by_image) -> EvalResult:
    """Evaluate pooled AP over IoU 0.50..0.95 plus an operating-point P/R/F1.

    Precision, recall, and F1 are reported at score threshold 0.5 and
    IoU 0.5; AP pools detections over all images per class.
    """
    preds = _as_dict(preds_by_image)
    gts = _as_dict(gts_by_image)
    images = sorted(set(preds) | set(gts))
    preds = {img: preds.get(img, []) for img in images}
    gts = {img: gts.get(img, []) for img in images}

    classes = sorted({b.label for boxes in gts.values() for b in boxes}
                     | {b.label for boxes in preds.values() for b in boxes})
    ap_per_threshold: dict[float, float] = {}
    for thr in MAP_IOU_THRESHOLDS:
        if classes:
            aps = [_pooled_ap(_by_class(preds, c), _by_class(gts, c), thr)
                   for c in classes]
            ap_per_threshold[thr] = float(np.mean(aps))
        else:
            ap_per_threshold[thr] = 1.0
    map50 = ap_per_threshold[0.5]
    map5095 = float(np.mean(list(ap_per_threshold.values())))

    tp = fp = fn = 0
    per_image: dict[str, dict[str, int]] = {}
    for img in images:
        img_tp = img_fp = img_fn = 0
        for c in classes:
            strong = [b for b in preds[img]
                      if b.label == c and (b.score is None or b.score >= OPERATING_SCORE)]
            cls_gts = [b for b in gts[img] if b.label == c]
            matches, fps, fns = match_greedy(strong, cls_gts, OPERATING_IOU)
            img_tp += len(matches)
            img_fp += len(fps)
            img_fn += len(fns)
        per_image[img] = {"tp": img_tp, "fp": img_fp, "fn": img_fn}
        tp += img_tp
        fp += img_fp
        fn += img_fn
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return EvalResult(precision, recall, f1, ap_per_threshold, map50, map5095, per_image)


@dataclass(frozen=True)
class DetectorNoise:
    """Stub-detector corruption model standing in for a trained network."""

    p_miss: float = 0.05
    fp_rate: float = 0.1
    center_sigma: float = 3.0
    size_sigma: float = 3.0
    frame: tuple[float, float] = (640.0, 640.0)
    tp_score_beta: tuple[float, float] = (8.0, 2.0)
    fp_score_beta: tuple[float, float] = (2.0, 5.0)

    def __post_init__(self) -> None:
        if not (0.0 <= self.p_miss <= 1.0):
            raise ValueError("p_miss must be a probability")
        if self.fp_rate < 0:
            raise ValueError("fp_rate must be non-negative")


def _clip_box(cx, cy, w, h, frame, label, score) -> BBox | None:
    w = max(w, 2.0)
    h = max(h, 2.0)
    x0 = np.clip(cx - w / 2, 0.0, frame[0] - 1.0)
    x1 = np.clip(cx + w / 2, x0 + 1.0, frame[0])
    y0 = np.clip(cy - h / 2, 0.0, frame[1] - 1.0)
    y1 = np.clip(cy + h / 2, y0 + 1.0, frame[1])
    return BBox(float(x0), float(y0), float(x1), float(y1), label, float(score))


def simulate_detector(gt: BBoxSet, noise: DetectorNoise,
                      rng: np.random.Generator) -> BBoxSet:
    """Corrupt ground-truth boxes into plausible detector output."""
    out: list[BBox] = []
    for b in gt.boxes:
        if rng.random() < noise.p_miss:
            continue
        cx = (b.x_min + b.x_max) / 2
        cy = (b.y_min + b.y_max) / 2
        w = b.x_max - b.x_min
        h = b.y_max - b.y_min
        if noise.center_sigma > 0 or noise.size_sigma > 0:
            jit = rng.normal(0.0, 1.0, 4)
            cx += jit[0] * noise.center_sigma
            cy += jit[1] * noise.center_sigma
            w += jit[2] * noise.size_sigma
            h += jit[3] * noise.size_sigma
        score = rng.beta(*noise.tp_score_beta)
        box = _clip_box(cx, cy, w, h, noise.frame, b.label, score)
        if box is not None:
            out.append(box)
    n_fp = rng.poisson(noise.fp_rate)
    for _ in range(n_fp):
        cx = rng.uniform(0, noise.frame[0])
        cy = rng.uniform(0, noise.frame[1])
        w = rng.uniform(10.0, 100.0)
        h = rng.uniform(10.0, 100.0)
        score = rng.beta(*noise.fp_score_beta)
        box = _clip_box(cx, cy, w, h, noise.frame, "human", score)
        if box is not None:
            out.append(box)
    return BBoxSet(gt.image_id, out)


def boxes_to_json(sets: list[BBoxSet], path: str | Path | None = None):
    payload = [{
        "image_id": s.image_id,
        "boxes": [{k: v for k, v in {
            "label": b.label, "score": b.score,
            "x_min": b.x_min, "y_min": b.y_min,
            "x_max": b.x_max, "y_max": b.y_max,
        }.items() if v is not None} for b in s.boxes],
    } for s in sets]
    if path is not None:
        Path(path).write_text(json.dumps(payload, indent=2) + "\n")
    return payload


def boxes_from_json(source: str | Path | list) -> list[BBoxSet]:
    payload = source if isinstance(source, list) else json.loads(Path(source).read_text())
    out = []
    for entry in payload:
        boxes = [BBox(b["x_min"], b["y_min"], b["x_max"], b["y_max"],
                      b.get("label", "human"), b.get("score"))
                 for b in entry.get("boxes", [])]
        out.append(BBoxSet(entry["image_id"], boxes))
    return out
