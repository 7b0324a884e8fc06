import numpy as np
import pytest

from mavrecon import rng as rng_mod
from mavrecon.detmetrics import (BBox, BBoxSet, DetectorNoise, average_precision,
                                 boxes_from_json, boxes_to_json, iou, map_range,
                                 match_greedy, simulate_detector)


def B(x0, y0, x1, y1, score=None, label="human"):
    return BBox(x0, y0, x1, y1, label, score)


# ----------------------------------------------------------------------- iou

def test_iou_identical():
    assert iou(B(0, 0, 2, 2), B(0, 0, 2, 2)) == 1.0


def test_iou_disjoint():
    assert iou(B(0, 0, 1, 1), B(5, 5, 6, 6)) == 0.0


def test_iou_worked_example():
    # intersection 1, union 4 + 4 - 1 = 7
    assert iou(B(0, 0, 2, 2), B(1, 1, 3, 3)) == pytest.approx(1 / 7)


def test_degenerate_box_rejected():
    with pytest.raises(ValueError):
        B(0, 0, 0, 1)


# -------------------------------------------------------------- match_greedy

def test_match_perfect_one_to_one():
    gts = [B(0, 0, 10, 10), B(20, 20, 30, 30)]
    preds = [B(0, 0, 10, 10, 0.9), B(20, 20, 30, 30, 0.8)]
    matches, fp, fn = match_greedy(preds, gts, 0.5)
    assert matches == {0: 0, 1: 1}
    assert fp == [] and fn == []


def test_match_higher_score_wins():
    gts = [B(0, 0, 10, 10)]
    preds = [B(1, 1, 11, 11, 0.5), B(0, 0, 10, 10, 0.9)]
    matches, fp, fn = match_greedy(preds, gts, 0.5)
    assert matches == {1: 0}
    assert fp == [0] and fn == []


def _match_oracle(preds, gts, thr):
    """Independent greedy reimplementation: explicit claim loop."""
    order = sorted(range(len(preds)),
                   key=lambda i: (-(preds[i].score or 1.0), -preds[i].area, i))
    taken = set()
    pairs = {}
    for pi in order:
        cand = None
        cand_iou = thr - 1e-15
        for gi in range(len(gts)):
            if gi in taken:
                continue
            v = iou(preds[pi], gts[gi])
            if v >= thr and v > cand_iou:
                cand, cand_iou = gi, v
        if cand is not None:
            pairs[pi] = cand
            taken.add(cand)
    fp = sorted(set(range(len(preds))) - set(pairs))
    fn = sorted(set(range(len(gts))) - taken)
    return pairs, fp, fn


def _random_boxes(rng, n, scored):
    out = []
    for _ in range(n):
        x0, y0 = rng.uniform(0, 80, 2)
        w, h = rng.uniform(5, 40, 2)
        s = float(rng.random()) if scored else None
        out.append(B(x0, y0, x0 + w, y0 + h, s))
    return out


def test_match_agrees_with_oracle_on_random_instances():
    rng = rng_mod.stream(42, "match")
    for _ in range(500):
        preds = _random_boxes(rng, int(rng.integers(0, 5)), scored=True)
        gts = _random_boxes(rng, int(rng.integers(0, 5)), scored=False)
        got = match_greedy(preds, gts, 0.5)
        want = _match_oracle(preds, gts, 0.5)
        assert got[0] == want[0]
        assert got[1] == want[1]
        assert got[2] == want[2]


# --------------------------------------------------------- average_precision

def brute_force_ap(preds, gts, thr):
    """Recompute AP by re-matching every score-cutoff prefix from scratch."""
    if not gts:
        return 1.0 if not preds else 0.0
    if not preds:
        return 0.0
    order = sorted(range(len(preds)),
                   key=lambda i: (-(preds[i].score or 1.0), -preds[i].area, i))
    points = []
    for k in range(1, len(order) + 1):
        subset = [preds[i] for i in order[:k]]
        matches, _, _ = _match_oracle(subset, gts, thr)
        tp = len(matches)
        points.append((tp / len(gts), tp / k))
    total = 0.0
    for r in np.linspace(0, 1, 101):
        best = 0.0
        for rec, prec in points:
            if rec >= r - 1e-12 and prec > best:
                best = prec
        total += best
    return total / 101.0


def test_ap_perfect_is_one():
    gts = [B(0, 0, 10, 10), B(20, 20, 30, 30)]
    preds = [B(0, 0, 10, 10, 0.9), B(20, 20, 30, 30, 0.8)]
    assert average_precision(preds, gts, 0.5) == 1.0


def test_ap_worked_example_51_of_101():
    gts = [B(0, 0, 10, 10), B(50, 50, 60, 60)]
    preds = [B(0, 0, 10, 10, 0.9), B(80, 80, 90, 90, 0.8)]
    assert average_precision(preds, gts, 0.5) == pytest.approx(51 / 101, abs=1e-12)


def test_ap_no_predictions_is_zero():
    gts = [B(0, 0, 10, 10)]
    assert average_precision([], gts, 0.5) == 0.0


def test_ap_empty_ground_truth_conventions():
    assert average_precision([], [], 0.5) == 1.0
    assert average_precision([B(0, 0, 5, 5, 0.9)], [], 0.5) == 0.0


def test_ap_agrees_with_brute_force():
    rng = rng_mod.stream(7, "ap")
    for _ in range(800):
        preds = _random_boxes(rng, int(rng.integers(0, 5)), scored=True)
        gts = _random_boxes(rng, int(rng.integers(0, 5)), scored=False)
        thr = float(rng.choice([0.3, 0.5, 0.75]))
        got = average_precision(preds, gts, thr)
        want = brute_force_ap(preds, gts, thr)
        assert got == pytest.approx(want, abs=1e-12)


# ------------------------------------------------------------------ map_range

def test_map_range_perfect():
    gts = {"a": [B(0, 0, 10, 10)], "b": [B(5, 5, 9, 9)]}
    preds = {"a": [B(0, 0, 10, 10, 1.0)], "b": [B(5, 5, 9, 9, 1.0)]}
    res = map_range(preds, gts)
    assert res.map50 == 1.0
    assert res.map5095 == 1.0
    assert res.precision == 1.0 and res.recall == 1.0 and res.f1 == 1.0


def test_map_range_iou_06_threshold_counting():
    # one box pair with IoU exactly 0.6: AP=1 for thr in {.5,.55,.6}, else 0
    gt = B(0, 0, 10, 10)
    pred = B(0, 4, 10, 14, 0.9)  # overlap 6/10, union 140 - 60 = ... iou = 60/140
    # construct instead a pair with exact IoU 0.6: heights 10 and overlap h
    # iou = h / (20 - h) = 0.6 -> h = 7.5
    pred = B(0, 2.5, 10, 12.5, 0.9)
    assert iou(pred, gt) == pytest.approx(0.6)
    res = map_range({"i": [pred]}, {"i": [gt]})
    assert res.map5095 == pytest.approx(3 / 10, abs=1e-12)
    for thr, ap in res.ap_per_threshold.items():
        assert ap == (1.0 if thr <= 0.6 else 0.0)


def test_map_range_duplicate_image_ids_rejected():
    sets = [BBoxSet("x", []), BBoxSet("x", [])]
    with pytest.raises(ValueError):
        map_range(sets, [BBoxSet("x", [])])


def test_map5095_never_exceeds_map50_on_random_instances():
    rng = rng_mod.stream(11, "mono")
    for _ in range(300):
        preds = {"i": _random_boxes(rng, int(rng.integers(0, 5)), scored=True)}
        gts = {"i": _random_boxes(rng, int(rng.integers(0, 5)), scored=False)}
        res = map_range(preds, gts)
        assert res.map5095 <= res.map50 + 1e-12
        aps = [res.ap_per_threshold[t] for t in sorted(res.ap_per_threshold)]
        assert all(a >= b - 1e-12 for a, b in zip(aps, aps[1:]))


def test_f1_consistency_bound():
    rng = rng_mod.stream(13, "f1")
    for _ in range(200):
        preds = {"i": _random_boxes(rng, int(rng.integers(0, 5)), scored=True)}
        gts = {"i": _random_boxes(rng, int(rng.integers(0, 5)), scored=False)}
        res = map_range(preds, gts)
        assert res.f1 <= 2 * min(res.precision, res.recall) + 1e-12


def test_evaluation_invariant_under_rescaling():
    rng = rng_mod.stream(17, "scale")
    preds = _random_boxes(rng, 6, scored=True)
    gts = _random_boxes(rng, 5, scored=False)
    base = map_range({"i": preds}, {"i": gts})
    scaled = map_range({"i": [b.scaled(3.7) for b in preds]},
                       {"i": [b.scaled(3.7) for b in gts]})
    assert base.map50 == pytest.approx(scaled.map50, abs=1e-12)
    assert base.map5095 == pytest.approx(scaled.map5095, abs=1e-12)


# ----------------------------------------------------------- simulate_detector

def test_simulate_detector_noiseless_identity():
    gt = BBoxSet("f", [B(10, 10, 50, 60), B(100, 90, 140, 150)])
    noise = DetectorNoise(p_miss=0.0, fp_rate=0.0, center_sigma=0.0, size_sigma=0.0)
    out = simulate_detector(gt, noise, rng_mod.stream(0))
    assert len(out.boxes) == 2
    for got, want in zip(out.boxes, gt.boxes):
        assert (got.x_min, got.y_min, got.x_max, got.y_max) == \
            (want.x_min, want.y_min, want.x_max, want.y_max)
        assert got.score is not None


def test_simulate_detector_all_missed():
    gt = BBoxSet("f", [B(10, 10, 50, 60)])
    noise = DetectorNoise(p_miss=1.0, fp_rate=0.0)
    out = simulate_detector(gt, noise, rng_mod.stream(0))
    assert len(out.boxes) == 0


def test_simulate_detector_deterministic():
    gt = BBoxSet("f", [B(10, 10, 50, 60), B(300, 300, 400, 380)])
    noise = DetectorNoise()
    a = simulate_detector(gt, noise, rng_mod.stream(5, "det", 1))
    b = simulate_detector(gt, noise, rng_mod.stream(5, "det", 1))
    assert boxes_to_json([a]) == boxes_to_json([b])


# ------------------------------------------------------------------- JSON io

def test_boxes_json_round_trip(tmp_path):
    sets = [BBoxSet("img0", [B(1, 2, 3, 4, 0.5), B(0, 0, 9, 9)]),
            BBoxSet("img1", [])]
    path = tmp_path / "boxes.json"
    boxes_to_json(sets, path)
    loaded = boxes_from_json(path)
    assert len(loaded) == 2
    assert loaded[0].image_id == "img0"
    assert loaded[0].boxes[0].score == 0.5
    assert loaded[0].boxes[1].score is None
    assert len(loaded[1].boxes) == 0
