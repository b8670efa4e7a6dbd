import json

import numpy as np
import pytest

from avatargen.errors import PckError
from avatargen.evaluation import format_table, load_pairs, pck, pck_curve
from avatargen.rig import KEYPOINT_NAMES


def gt_record(rng, vis=None):
    xy = rng.uniform(50, 450, (14, 2))
    vis = vis or ["visible"] * 14
    return {"keypoints": [{"name": n, "x": float(x), "y": float(y), "visibility": v}
                          for n, (x, y), v in zip(KEYPOINT_NAMES, xy, vis)],
            "bbox": [40, 30, 460, 470]}


def shifted(rec, offsets):
    out = {"keypoints": []}
    for k, (dx, dy) in zip(rec["keypoints"], offsets):
        out["keypoints"].append({"name": k["name"], "x": k["x"] + dx, "y": k["y"] + dy})
    return out


def torso(rec):
    kp = {k["name"]: k for k in rec["keypoints"]}
    return float(np.hypot(kp["l_shoulder"]["x"] - kp["r_hip"]["x"], kp["l_shoulder"]["y"] - kp["r_hip"]["y"]))


def unit_dirs(rng, n):
    a = rng.uniform(0, 2 * np.pi, n)
    return np.stack([np.cos(a), np.sin(a)], axis=1)


def test_gt_vs_gt(rng):
    gts = [gt_record(rng) for _ in range(5)]
    for ref in ("torso", "bbox"):
        for r in pck_curve(gts, gts, [0.01, 0.2, 0.5], ref):
            assert r.overall == 1.0 and np.all(r.per_joint == 1.0)


@pytest.mark.parametrize("ref", ["torso", "bbox"])
def test_just_outside_threshold(rng, ref):
    alpha = 0.2
    gts = [gt_record(rng) for _ in range(5)]
    preds = []
    for g in gts:
        lref = torso(g) if ref == "torso" else 440.0
        preds.append(shifted(g, unit_dirs(rng, 14) * 1.01 * alpha * lref))
    assert pck(preds, gts, alpha, ref).overall == 0.0


def test_half_correct():
    # hand-built: l_shoulder (100,100), r_hip (130,140) -> torso 50, alpha 0.2 -> 10 px
    g = {"keypoints": [{"name": n, "x": 100.0 + 10 * i, "y": 100.0, "visibility": "visible"}
                       for i, n in enumerate(KEYPOINT_NAMES)]}
    kp = {k["name"]: k for k in g["keypoints"]}
    kp["l_shoulder"].update(x=100.0, y=100.0)
    kp["r_hip"].update(x=130.0, y=140.0)
    offsets = [(6.0, 8.0)] * 7 + [(6.0, 8.0001)] * 7     # exactly 10 px vs just over
    r = pck([shifted(g, offsets)], [g], 0.2)
    assert r.overall == 0.5
    assert r.per_joint.tolist() == [1.0] * 7 + [0.0] * 7


def test_out_of_frame_excluded_occluded_optional(rng):
    vis = ["visible"] * 12 + ["occluded", "out_of_frame"]
    g = gt_record(rng, vis)
    far = [(0.0, 0.0)] * 12 + [(1e4, 0.0), (1e4, 0.0)]
    p = shifted(g, far)
    r = pck([p], [g], 0.5)
    assert r.joint_count == 13 and r.overall == 12 / 13
    assert np.isnan(r.per_joint[13])
    r = pck([p], [g], 0.5, include_occluded=False)
    assert r.joint_count == 12 and r.overall == 1.0


def test_errors(rng):
    g = gt_record(rng)
    with pytest.raises(PckError):
        pck([g, g], [g], 0.5)
    short = {"keypoints": g["keypoints"][:13]}
    with pytest.raises(PckError):
        pck([short], [g], 0.5)
    degenerate = json.loads(json.dumps(g))
    kp = {k["name"]: k for k in degenerate["keypoints"]}
    kp["r_hip"].update(x=kp["l_shoulder"]["x"], y=kp["l_shoulder"]["y"])
    with pytest.raises(PckError):
        pck([degenerate], [degenerate], 0.5)
    with pytest.raises(PckError):
        pck_curve([g], [g], [0.5, 0.2])


def test_monotone_in_alpha(rng):
    gts = [gt_record(rng) for _ in range(10)]
    preds = [shifted(g, rng.normal(0, 30, (14, 2))) for g in gts]
    curve = pck_curve(preds, gts, np.linspace(0.05, 1.0, 20))
    vals = [r.overall for r in curve]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_overall_is_mean_of_per_joint(rng):
    gts = [gt_record(rng) for _ in range(8)]
    preds = [shifted(g, rng.normal(0, 20, (14, 2))) for g in gts]
    r = pck(preds, gts, 0.2)
    assert abs(r.overall - r.per_joint.mean()) < 1e-12


def _transform(rec, scale, shift):
    out = json.loads(json.dumps(rec))
    for k in out["keypoints"]:
        k["x"] = k["x"] * scale + shift[0]
        k["y"] = k["y"] * scale + shift[1]
    if "bbox" in out:
        x0, y0, x1, y1 = out["bbox"]
        out["bbox"] = [x0 * scale + shift[0], y0 * scale + shift[1], x1 * scale + shift[0], y1 * scale + shift[1]]
    return out


def test_scale_and_translation_invariance(rng):
    gts = [gt_record(rng) for _ in range(10)]
    preds = [shifted(g, rng.normal(0, 25, (14, 2))) for g in gts]
    for ref in ("torso", "bbox"):
        base = [r.overall for r in pck_curve(preds, gts, [0.1, 0.2, 0.5], ref)]
        for scale in (0.25, 2.0, 8.0):   # powers of two keep the arithmetic exact
            s = [r.overall for r in pck_curve([_transform(p, scale, (0, 0)) for p in preds],
                                              [_transform(g, scale, (0, 0)) for g in gts], [0.1, 0.2, 0.5], ref)]
            assert s == base
        t = [r.overall for r in pck_curve([_transform(p, 1.0, (64, -32)) for p in preds],
                                          [_transform(g, 1.0, (64, -32)) for g in gts], [0.1, 0.2, 0.5], ref)]
        assert t == base


def test_directory_pairs_and_table(tmp_path, rng):
    for sub in ("gt/a", "pred/a"):
        (tmp_path / sub).mkdir(parents=True)
    g = gt_record(rng)
    (tmp_path / "gt/a/000000.json").write_text(json.dumps(g))
    (tmp_path / "pred/a/000000.json").write_text(json.dumps(shifted(g, np.zeros((14, 2)))))
    preds, gts = load_pairs(tmp_path / "pred", tmp_path / "gt")
    results = pck_curve(preds, gts, [0.2, 0.5])
    text = format_table(results)
    assert "torso" in text and "100.0" in text
    csv = format_table(results, "csv").splitlines()
    assert csv[0].startswith("alpha,overall,r_ankle") and csv[1].startswith("0.2,100.0")
    (tmp_path / "pred/a/000000.json").unlink()
    with pytest.raises(PckError):
        load_pairs(tmp_path / "pred", tmp_path / "gt")
