"""PCK scoring of predicted 2D keypoints against rendered ground truth.

Ground truth and predictions share one layout: a list of images, each with
14 named keypoints in image pixels.  Predictions need only ``name``, ``x``
and ``y``; a ground-truth keypoint additionally carries ``visibility``.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import AssetMissingError, PckError
from .render import OCCLUDED, OUT_OF_FRAME

REF_MODES = ("torso", "bbox")
TORSO_ENDS = ("l_shoulder", "r_hip")


@dataclass
class PckResult:
    alpha: float
    ref_mode: str
    joint_names: tuple
    per_joint: np.ndarray       # fraction correct per joint, NaN when never evaluated
    correct: np.ndarray         # counts per joint
    evaluated: np.ndarray
    include_occluded: bool = True

    @property
    def overall(self) -> float:
        n = int(self.evaluated.sum())
        return float(self.correct.sum() / n) if n else float("nan")

    @property
    def joint_count(self) -> int:
        return int(self.evaluated.sum())


@dataclass
class KeypointSet:
    """One image's keypoints as arrays (NaN coordinates when unknown)."""

    names: tuple
    xy: np.ndarray                  # (K, 2)
    visibility: tuple | None = None
    bbox: list | None = None


def keypoint_set(doc: dict) -> KeypointSet:
    kps = doc.get("keypoints")
    if not isinstance(kps, list):
        raise PckError("keypoint record has no 'keypoints' list")
    names = tuple(k["name"] for k in kps)
    xy = np.array([[np.nan if k.get("x") is None else k["x"], np.nan if k.get("y") is None else k["y"]]
                   for k in kps], dtype=np.float64).reshape(-1, 2)
    vis = tuple(k["visibility"] for k in kps) if all("visibility" in k for k in kps) else None
    return KeypointSet(names, xy, vis, doc.get("bbox"))


def reference_length(gt: KeypointSet, ref_mode: str) -> float:
    if ref_mode == "torso":
        try:
            a, b = (gt.names.index(n) for n in TORSO_ENDS)
        except ValueError:
            raise PckError("torso reference needs l_shoulder and r_hip in the ground truth") from None
        length = float(np.hypot(*(gt.xy[a] - gt.xy[b])))
    elif ref_mode == "bbox":
        if gt.bbox is None:
            raise PckError("bbox reference needs a ground-truth bounding box")
        x0, y0, x1, y1 = gt.bbox
        length = float(max(x1 - x0, y1 - y0))
    else:
        raise PckError(f"unknown reference mode '{ref_mode}' (expected one of {REF_MODES})")
    if not np.isfinite(length) or length <= 0:
        raise PckError(f"degenerate ground truth: {ref_mode} reference length is {length}")
    return length


def _as_sets(items):
    return [it if isinstance(it, KeypointSet) else keypoint_set(it) for it in items]


def _distances(predictions, ground_truth, ref_mode, include_occluded):
    """Per-image normalized errors ``d / L_ref`` and evaluation masks, shape (N, K)."""
    preds, gts = _as_sets(predictions), _as_sets(ground_truth)
    if len(preds) != len(gts):
        raise PckError(f"{len(preds)} predictions for {len(gts)} ground-truth images")
    if not gts:
        raise PckError("nothing to evaluate")
    names = gts[0].names
    err = np.empty((len(gts), len(names)))
    mask = np.empty((len(gts), len(names)), dtype=bool)
    for i, (p, g) in enumerate(zip(preds, gts)):
        if g.names != names:
            raise PckError(f"image {i}: ground-truth keypoints differ from the first image")
        if len(p.names) != len(g.names):
            raise PckError(f"image {i}: {len(p.names)} predicted keypoints vs {len(g.names)} in ground truth")
        if p.names != g.names:
            raise PckError(f"image {i}: predicted keypoint names do not match the ground truth")
        ref = reference_length(g, ref_mode)
        d = np.hypot(*(p.xy - g.xy).T)
        err[i] = np.where(np.isnan(d), np.inf, d) / ref    # a missing prediction is never correct
        vis = g.visibility or ("visible",) * len(names)
        mask[i] = [v != OUT_OF_FRAME and (include_occluded or v != OCCLUDED) for v in vis]
    return names, err, mask


def _result(names, err, mask, alpha, ref_mode, include_occluded):
    if not alpha > 0:
        raise PckError(f"alpha must be positive, got {alpha}")
    hit = (err <= alpha) & mask
    correct = hit.sum(axis=0)
    evaluated = mask.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        per_joint = np.where(evaluated > 0, correct / np.maximum(evaluated, 1), np.nan)
    return PckResult(float(alpha), ref_mode, tuple(names), per_joint, correct, evaluated, include_occluded)


def pck(predictions, ground_truth, alpha: float, ref_mode: str = "torso", include_occluded: bool = True) -> PckResult:
    """Fraction of keypoints with ``||pred - gt|| <= alpha * L_ref``.

    Keypoints labeled out of frame in the ground truth are skipped, occluded
    ones count unless ``include_occluded`` is False.
    """
    names, err, mask = _distances(predictions, ground_truth, ref_mode, include_occluded)
    return _result(names, err, mask, alpha, ref_mode, include_occluded)


def pck_curve(predictions, ground_truth, alphas, ref_mode: str = "torso", include_occluded: bool = True) -> list:
    alphas = [float(a) for a in alphas]
    if not alphas:
        raise PckError("empty alpha list")
    if any(b < a for a, b in zip(alphas, alphas[1:])):
        raise PckError("alpha list must be sorted ascending")
    names, err, mask = _distances(predictions, ground_truth, ref_mode, include_occluded)
    return [_result(names, err, mask, a, ref_mode, include_occluded) for a in alphas]


# --------------------------------------------------------------------------- files

def _json_files(root: Path):
    return sorted(p.relative_to(root) for p in root.rglob("*.json") if p.name != "manifest.json")


def load_pairs(pred_dir, gt_dir):
    """Pair prediction and ground-truth files by their path relative to each root."""
    pred_dir, gt_dir = Path(pred_dir), Path(gt_dir)
    for d in (pred_dir, gt_dir):
        if not d.is_dir():
            raise AssetMissingError(f"directory not found: {d}")
    gt_files = _json_files(gt_dir)
    if not gt_files:
        raise PckError(f"no annotation files under {gt_dir}")
    preds, gts = [], []
    for rel in gt_files:
        p = pred_dir / rel
        if not p.is_file():
            raise PckError(f"no prediction for {rel}")
        try:
            preds.append(keypoint_set(json.loads(p.read_text())))
            gts.append(keypoint_set(json.loads((gt_dir / rel).read_text())))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise PckError(f"{rel}: malformed keypoint file ({exc})") from None
    return preds, gts


def format_table(results, fmt: str = "text") -> str:
    """Accuracy (percent) against alpha: one row per alpha, one column per joint."""
    if not results:
        return ""
    names = list(results[0].joint_names)
    header = ["alpha", "overall"] + names
    rows = [[f"{r.alpha:g}", f"{100 * r.overall:.1f}"] +
            ["" if np.isnan(v) else f"{100 * v:.1f}" for v in r.per_joint] for r in results]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        return buf.getvalue()
    widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(header)]
    r0 = results[0]
    lines = [f"# PCK (%), reference length: {r0.ref_mode}, occluded keypoints "
             f"{'included' if r0.include_occluded else 'excluded'}"]
    lines.append("  ".join(h.rjust(w) for h, w in zip(header, widths)))
    lines += ["  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in rows]
    return "\n".join(lines) + "\n"

