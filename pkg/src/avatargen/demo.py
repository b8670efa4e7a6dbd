"""Procedural stand-ins for real scan data.

The capsule person wraps every bone of the canonical rig in a closed capsule
mesh, pre-labeled with its bone, so the whole pipeline runs without any
external assets.
"""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import yaml

from .mesh_io import Mesh, write_ply
from .poses import BvhJoint, MocapClip, default_constraints_text, default_retarget_text, write_bvh
from .rig import Skeleton, default_rig_text, default_skeleton
from .render import save_png
from .skinning import VertexBinding, format_binding

CAPSULE_RADIUS = {
    "T": 0.14, "H": 0.11,
    "LUA": 0.05, "RUA": 0.05, "LLA": 0.04, "RLA": 0.04, "LP": 0.035, "RP": 0.035,
    "LUL": 0.075, "RUL": 0.075, "LLL": 0.055, "RLL": 0.055, "LF": 0.045, "RF": 0.045,
}

_SKIN = (0.87, 0.69, 0.56)
_SHIRT = (0.20, 0.35, 0.65)
_PANTS = (0.25, 0.25, 0.30)
_SHOES = (0.40, 0.22, 0.12)
CAPSULE_COLOR = {
    "T": _SHIRT, "H": _SKIN,
    "LUA": _SHIRT, "RUA": _SHIRT, "LLA": _SKIN, "RLA": _SKIN, "LP": _SKIN, "RP": _SKIN,
    "LUL": _PANTS, "RUL": _PANTS, "LLL": _PANTS, "RLL": _PANTS, "LF": _SHOES, "RF": _SHOES,
}


def capsule(a, b, radius, segments=16, rings=4):
    """Closed, outward-oriented capsule around segment ``a -> b``."""
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    axis = b - a
    length = np.linalg.norm(axis)
    w = axis / length if length > 0 else np.array([0.0, 0.0, 1.0])
    helper = np.array([1.0, 0.0, 0.0]) if abs(w[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = np.cross(w, helper)
    u /= np.linalg.norm(u)
    v = np.cross(w, u)

    ring_defs = []
    for i in range(1, rings + 1):          # lower hemisphere, up to the equator
        phi = -math.pi / 2 + i * math.pi / (2 * rings)
        ring_defs.append((phi, 0.0))
    for j in range(rings):                 # upper hemisphere, from the equator
        phi = j * math.pi / (2 * rings)
        ring_defs.append((phi, length))

    ang = 2 * math.pi * np.arange(segments) / segments
    verts = [a - radius * w]
    for phi, h in ring_defs:
        rr, zz = radius * math.cos(phi), radius * math.sin(phi) + h
        for t in ang:
            verts.append(a + zz * w + rr * (math.cos(t) * u + math.sin(t) * v))
    verts.append(b + radius * w)
    verts = np.array(verts)

    faces = []
    n_r = len(ring_defs)
    top = len(verts) - 1

    def idx(r, s):
        return 1 + r * segments + (s % segments)

    for s in range(segments):
        faces.append((0, idx(0, s + 1), idx(0, s)))
    for r in range(n_r - 1):
        for s in range(segments):
            faces.append((idx(r, s), idx(r, s + 1), idx(r + 1, s + 1)))
            faces.append((idx(r, s), idx(r + 1, s + 1), idx(r + 1, s)))
    for s in range(segments):
        faces.append((top, idx(n_r - 1, s), idx(n_r - 1, s + 1)))
    return verts, np.array(faces, dtype=np.int64)


def capsule_person(skeleton: Skeleton | None = None, segments=16, rings=4):
    """Return ``(mesh, binding)`` for the procedural capsule person."""
    skeleton = skeleton or default_skeleton()
    all_v, all_f, all_c, labels = [], [], [], []
    base = 0
    for bi, bone in enumerate(skeleton.bones):
        verts, faces = capsule(bone.head, bone.tail, CAPSULE_RADIUS.get(bone.name, 0.05), segments, rings)
        all_v.append(verts)
        all_f.append(faces + base)
        all_c.append(np.tile(CAPSULE_COLOR.get(bone.name, (0.5, 0.5, 0.5)), (len(verts), 1)))
        labels.append(np.full(len(verts), bi))
        base += len(verts)
    mesh = Mesh(np.concatenate(all_v), np.concatenate(all_f), np.concatenate(all_c))
    labels = np.concatenate(labels)
    binding = VertexBinding("rigid", skeleton.bone_names, labels, np.ones(len(labels)))
    return mesh.with_normals(), binding


# --------------------------------------------------------------------------- mocap

def _walk_hierarchy():
    spec = [
        # name, parent, offset (cm, Y up, facing +Z), channels
        ("Hips", -1, (0.0, 0.0, 0.0), ("Xposition", "Yposition", "Zposition", "Zrotation", "Yrotation", "Xrotation")),
        ("LeftUpLeg", 0, (10.0, -5.0, 0.0), None),
        ("LeftLeg", 1, (0.0, -43.0, 0.0), None),
        ("LeftFoot", 2, (0.0, -44.0, 0.0), None),
        ("LeftFoot_end", 3, (0.0, -5.0, 17.0), ()),
        ("RightUpLeg", 0, (-10.0, -5.0, 0.0), None),
        ("RightLeg", 5, (0.0, -43.0, 0.0), None),
        ("RightFoot", 6, (0.0, -44.0, 0.0), None),
        ("RightFoot_end", 7, (0.0, -5.0, 17.0), ()),
        ("Spine", 0, (0.0, 45.0, 0.0), None),
        ("Neck", 9, (0.0, 5.0, 0.0), None),
        ("Head", 10, (0.0, 10.0, 0.0), None),
        ("Head_end", 11, (0.0, 15.0, 0.0), ()),
        ("LeftArm", 9, (20.0, 0.0, 0.0), None),
        ("LeftForeArm", 13, (28.0, 0.0, 0.0), None),
        ("LeftHand", 14, (26.0, 0.0, 0.0), None),
        ("LeftHand_end", 15, (18.0, 0.0, 0.0), ()),
        ("RightArm", 9, (-20.0, 0.0, 0.0), None),
        ("RightForeArm", 17, (-28.0, 0.0, 0.0), None),
        ("RightHand", 18, (-26.0, 0.0, 0.0), None),
        ("RightHand_end", 19, (-18.0, 0.0, 0.0), ()),
    ]
    rot = ("Zrotation", "Yrotation", "Xrotation")
    return [BvhJoint(n, p, o, rot if ch is None else ch, end_site=(ch == ())) for n, p, o, ch in spec]


def walk_clip(frames=120, fps=30.0) -> MocapClip:
    """A synthetic walk cycle in CMU-style joint naming (degrees)."""
    joints = _walk_hierarchy()
    clip = MocapClip(joints, 1.0 / fps, np.zeros((frames, sum(len(j.channels) for j in joints))))
    t = np.arange(frames) / fps
    ph = 2 * math.pi * t / 1.1          # one gait cycle per 1.1 s

    def put(joint, channel, values):
        clip.frames[:, clip.column(joint, channel)] = values

    put("Hips", "Zposition", 120.0 * t)
    put("Hips", "Yposition", 95.0 + 2.0 * np.cos(2 * ph))
    put("Hips", "Yrotation", 6.0 * np.sin(ph))
    put("Hips", "Xrotation", 3.0)
    put("LeftUpLeg", "Xrotation", -25.0 * np.sin(ph))
    put("RightUpLeg", "Xrotation", 25.0 * np.sin(ph))
    put("LeftLeg", "Xrotation", np.maximum(0.0, 55.0 * np.sin(ph - 1.2)) + 5.0)
    put("RightLeg", "Xrotation", np.maximum(0.0, 55.0 * np.sin(ph + math.pi - 1.2)) + 5.0)
    put("LeftFoot", "Xrotation", 10.0 * np.sin(ph + 0.5))
    put("RightFoot", "Xrotation", -10.0 * np.sin(ph + 0.5))
    put("Neck", "Xrotation", 8.0)
    put("Neck", "Yrotation", 10.0 * np.sin(0.5 * ph))
    put("RightArm", "Zrotation", 75.0)
    put("LeftArm", "Zrotation", -75.0)
    put("RightArm", "Yrotation", 20.0 * np.sin(ph))
    put("LeftArm", "Yrotation", 20.0 * np.sin(ph))
    put("RightForeArm", "Yrotation", 25.0 + 15.0 * np.sin(ph))
    put("LeftForeArm", "Yrotation", -(25.0 - 15.0 * np.sin(ph)))
    put("LeftHand", "Yrotation", -20.0 * np.sin(ph))
    # exceeds the +-25 deg wrist deviation bound, so retargeting clamps it
    put("LeftHand", "Zrotation", 30.0 * np.sin(ph))
    return clip


# --------------------------------------------------------------------------- backgrounds

def background_image(rng: np.random.Generator, width=320, height=240) -> np.ndarray:
    """Indoor-ish backdrop: a wall/floor gradient with a few flat boxes."""
    top, bottom, floor = rng.uniform(40, 230, size=(3, 3))
    horizon = int(height * rng.uniform(0.55, 0.75))
    yy = np.linspace(0.0, 1.0, horizon)[:, None]
    img = np.zeros((height, width, 3))
    img[:horizon] = (top * (1 - yy) + bottom * yy)[:, None, :]
    img[horizon:] = floor
    for _ in range(rng.integers(2, 6)):
        x0, y0 = rng.integers(0, width - 20), rng.integers(0, height - 20)
        w, h = rng.integers(15, width // 3), rng.integers(15, height // 3)
        img[y0:y0 + h, x0:x0 + w] = rng.uniform(20, 240, size=3)
    img += rng.normal(0, 3.0, size=img.shape)
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


# --------------------------------------------------------------------------- assets on disk

def demo_config(images_per_scan=50, size=256, seed=2024) -> dict:
    return {
        "seed": seed,
        "images_per_scan": images_per_scan,
        "scans": [{
            "id": "capsule",
            "mesh": "capsule_person.ply",
            "rig": "human_rig.yaml",
            "binding": "capsule_person.binding",
        }],
        "pose_source": {
            "kind": "mocap",
            "constraints": "constraints.yaml",
            "profile": "upright",
            "clip": "walk.bvh",
            "retarget": "cmu_retarget.yaml",
            "frame_selection": "random",
        },
        "camera": {
            "radius": [3.0, 4.0],
            "azimuth": [-180.0, 180.0],
            "elevation": [-5.0, 25.0],
            "focal_length_mm": 35.0,
            "sensor_width_mm": 36.0,
            "width": size,
            "height": size,
        },
        "light": {
            "azimuth": [-180.0, 180.0],
            "elevation": [10.0, 70.0],
            "intensity": [0.5, 0.8],
            "ambient": [0.2, 0.4],
        },
        "background": {"directory": "backgrounds"},
        "adaptation": {"kind": "gauss", "sigma": 1.5},
    }


def write_demo_assets(out_dir, n_backgrounds=6, images_per_scan=50, size=256, seed=2024) -> Path:
    """Write mesh, rig, binding, constraints, clip, map, backgrounds and config.

    Returns the path of the generation config.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    skeleton = default_skeleton()
    mesh, binding = capsule_person(skeleton)
    (out / "capsule_person.ply").write_bytes(write_ply(mesh, "binary"))
    (out / "capsule_person.binding").write_text(format_binding(binding))
    (out / "human_rig.yaml").write_text(default_rig_text())
    (out / "constraints.yaml").write_text(default_constraints_text())
    (out / "cmu_retarget.yaml").write_text(default_retarget_text())
    (out / "walk.bvh").write_text(write_bvh(walk_clip()))
    bg_dir = out / "backgrounds"
    bg_dir.mkdir(exist_ok=True)
    rng = np.random.default_rng(seed)
    for i in range(n_backgrounds):
        save_png(background_image(rng), bg_dir / f"bg_{i:03d}.png")
    cfg_path = out / "config.yaml"
    cfg_path.write_text(yaml.safe_dump(demo_config(images_per_scan, size, seed), sort_keys=False))
    return cfg_path
