"""Acceptance criteria, one test per criterion.

Each test records a ``PASS``/``FAIL`` line; conftest prints them after the
run.  ``python3 tests/test_acceptance.py`` runs just this file.
"""
import math
import os
import time

import numpy as np
import pytest
from scipy import stats

from avatargen import adapt, dataset, demo
from avatargen.evaluation import pck, pck_curve
from avatargen.mesh_io import Mesh, parse_obj, parse_ply, write_ply
from avatargen.errors import BvhParseError, MeshParseError
from avatargen.poses import (default_constraints, parse_bvh, sample_grid, sample_uniform_batch)
from avatargen.render import (CameraParams, LightParams, annotate_joints, foreground_bbox, make_camera, project,
                              rasterize)
from avatargen.rig import (KEYPOINT_NAMES, PoseVector, default_skeleton, forward_kinematics,
                           forward_kinematics_batch, joint_world_positions, keypoint_array, rest_inverse_bind)
from avatargen.skinning import apply_pose

RESULTS = []


def record(name, ok, detail):
    RESULTS.append(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    assert ok, detail


def tree(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture(scope="module")
def assets(tmp_path_factory):
    return demo.write_demo_assets(tmp_path_factory.mktemp("acc") / "assets", images_per_scan=50, size=256)


def test_rig_and_constraint_defaults():
    skel = default_skeleton()
    cons = default_constraints(skeleton=skel)
    elbow = [tuple(map(math.degrees, cons.bounds(n))) for n in ("elbow_r", "elbow_l")]
    alpha = tuple(map(math.degrees, cons.bounds("root_alpha")))
    gamma = tuple(map(math.degrees, cons.bounds("root_gamma")))
    ok = (skel.dof_count == 27 and len(skel) == 14 and all(np.allclose(e, (0, 145), atol=1e-12) for e in elbow)
          and np.allclose(alpha, (-30, 30), atol=1e-12) and np.allclose(gamma, (-30, 30), atol=1e-12))
    record("rig 27 DOF / 14 bones, elbow [0,145], upright alpha,gamma [-30,30]", ok,
           f"dof={skel.dof_count} bones={len(skel)} elbow={elbow[0]} alpha={alpha} gamma={gamma}")


def test_generate_2000_manifest_under_1mb(assets, tmp_path):
    cfg = dataset.load_config(assets)
    cfg.images_per_scan = 2000
    t0 = time.perf_counter()
    dataset.generate(cfg, tmp_path / "big")
    elapsed = time.perf_counter() - t0
    pngs = len(list((tmp_path / "big/capsule").glob("*.png")))
    anns = len(list((tmp_path / "big/capsule").glob("*.json")))
    size = (tmp_path / "big" / dataset.MANIFEST_NAME).stat().st_size
    record("generate 2000 images, manifest < 1 MB", pngs == 2000 and anns == 2000 and size < 1_000_000,
           f"{pngs} PNGs, {anns} annotations, manifest {size} bytes ({size / 2000:.0f} B/sample), {elapsed:.0f} s")


def test_desk_scale_determinism_and_replay(assets, tmp_path):
    cfg = dataset.load_config(assets)
    t0 = time.perf_counter()
    dataset.generate(cfg, tmp_path / "a")
    elapsed = time.perf_counter() - t0
    record("desk-scale 50 images at 256x256 in < 60 s", elapsed < 60 and cfg.camera["width"] == 256,
           f"{elapsed:.1f} s on {os.cpu_count()} core(s)")

    dataset.generate(dataset.load_config(assets), tmp_path / "b")
    a, b = tree(tmp_path / "a"), tree(tmp_path / "b")
    diff = sorted(k for k in a.keys() | b.keys() if a.get(k) != b.get(k))
    dataset.replay(tmp_path / "a" / dataset.MANIFEST_NAME, tmp_path / "r")
    r = tree(tmp_path / "r")
    rdiff = sorted(k for k in a if k != dataset.MANIFEST_NAME and a[k] != r.get(k))
    record("determinism: identical runs byte-identical, replay bit-exact", not diff and not rdiff and len(a) == 101,
           f"{len(a)} files compared, {len(diff)} differ between runs, {len(rdiff)} differ after replay")


def test_fk_suite():
    skel = default_skeleton()
    rng = np.random.default_rng(2024)
    zero = forward_kinematics(skel, PoseVector.zeros(27))
    dev_id = np.abs(zero.skinning - np.eye(4)).max()
    rest_len = np.linalg.norm(skel.heads[1:] - skel.heads[skel.parent_index[1:]], axis=1)
    bone_vec = skel.tails - skel.heads
    worst_len = worst_orth = worst_det = 0.0
    for _ in range(5):
        n = 20_000
        rot, pos = forward_kinematics_batch(skel, rng.uniform(-np.pi, np.pi, (n, 27)),
                                            rng.uniform(-np.pi, np.pi, (n, 3)), rng.normal(size=(n, 3)))
        seg = np.linalg.norm(pos[:, 1:] - pos[:, skel.parent_index[1:]], axis=2)
        tails = pos + np.einsum("nbij,bj->nbi", rot, bone_vec)
        own = np.linalg.norm(tails - pos, axis=2)
        worst_len = max(worst_len, np.abs(seg / rest_len - 1).max(),
                        np.abs(own / np.linalg.norm(bone_vec, axis=1) - 1).max())
        worst_orth = max(worst_orth, np.abs(np.einsum("nbij,nbkj->nbik", rot, rot) - np.eye(3)).max())
        worst_det = max(worst_det, np.abs(np.linalg.det(rot) - 1).max())
    ok = dev_id < 1e-9 and worst_len < 1e-9 and worst_orth < 1e-9 and worst_det < 1e-9
    record("FK suite over 1e5 poses", ok,
           f"identity dev {dev_id:.1e}, bone length rel dev {worst_len:.1e}, RR^T-I {worst_orth:.1e}, "
           f"det-1 {worst_det:.1e}")


def test_sampler_suite():
    cons = default_constraints()
    n = 100_000
    width = cons.high - cons.low
    tol = 3 * (width / math.sqrt(12)) / math.sqrt(n)
    theta, orient, trans = sample_uniform_batch(cons, np.random.default_rng(0), n)
    viol = int(np.sum((theta < cons.low) | (theta > cons.high)) + np.sum((orient < cons.root_low) | (orient > cons.root_high))
               + np.sum((trans < cons.translation_low) | (trans > cons.translation_high)))
    dev = np.abs(theta.mean(axis=0) - (cons.low + cons.high) / 2)
    mean_ok = bool(np.all(dev <= tol))
    # a per-DOF 3 sigma bound over 27 DOFs fails by chance on a few percent of
    # seeds, so also check that mean errors over fixed seeds look standard normal
    z = []
    for seed in range(100, 120):
        th, _, _ = sample_uniform_batch(cons, np.random.default_rng(seed), n)
        z.extend(((th.mean(axis=0) - (cons.low + cons.high) / 2) / (tol / 3))[width > 0])
    ks_p = stats.kstest(z, "norm").pvalue
    grid = [p.theta[cons.dof_index["elbow_r"]] for p in sample_grid(cons, ["elbow_r"], 3)]
    grid_ok = grid == [0.0, math.radians(72.5), math.radians(145)]
    record("sampler suite", viol == 0 and mean_ok and grid_ok and ks_p > 0.001,
           f"{viol} violations in 1e5, worst mean dev {np.max(dev / np.where(tol > 0, tol, 1)):.2f} of tolerance, "
           f"z-scores over 20 seeds KS p={ks_p:.2f}, grid {[round(math.degrees(v), 9) for v in grid]}")


def _square(x, half, color, y0=0.0):
    v = [[x, y0 - half, -half], [x, y0 + half, -half], [x, y0 + half, half], [x, y0 - half, half]]
    return Mesh(v, [[0, 1, 2], [0, 2, 3]], np.tile(color, (4, 1))).with_normals()


def test_projection_rasterizer_suite():
    target = np.array([0.3, -0.2, 1.1])
    worst = 0.0
    for az, el in [(0.0, 0.0), (1.3, 0.5), (-2.9, -1.2), (0.4, 1.5)]:
        x, y, _, _ = project(make_camera(CameraParams(3.7, az, el), target), target)
        worst = max(worst, abs(x - 256), abs(y - 256))
    flat = LightParams([1, 0, 0], 0.0, 1.0)
    cam = make_camera(CameraParams(4.0, 0.0, 0.0), np.zeros(3))
    covered = rasterize(_square(0.0, 0.5, (1, 1, 1)), cam, flat).mask.sum()
    expected = (cam.focal_px / 4.0) ** 2
    cov_err = abs(covered / expected - 1)
    near, far = _square(0.0, 0.5, (1, 0, 0)), _square(-1.0, 0.5, (0, 0, 1), 0.6)
    both = Mesh(np.vstack([far.vertices, near.vertices]), np.vstack([far.faces, near.faces + 4]),
                np.vstack([far.colors, near.colors])).with_normals()
    cam2 = make_camera(CameraParams(2.0, 0.0, 0.0, width=128, height=128), np.zeros(3))
    fb = rasterize(both, cam2, flat)
    px, py, _, _ = project(cam2, [0.0, 0.3, 0.0])
    qx, qy, _, _ = project(cam2, [-1.0, 1.0, 0.0])
    z_ok = (tuple(fb.color[int(py), int(px)]) == (255, 0, 0) and fb.depth[int(py), int(px)] == 2.0
            and tuple(fb.color[int(qy), int(qx)]) == (0, 0, 255))
    record("projection / rasterizer suite", worst < 1e-6 and cov_err < 0.02 and z_ok,
           f"principal point error {worst:.1e} px, square coverage {covered} vs {expected:.0f} "
           f"({100 * cov_err:.2f}%), z-order {'exact' if z_ok else 'wrong'}")


BVH = """HIERARCHY
ROOT Hips
{
  OFFSET 0 0 0
  CHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation
  End Site
  {
    OFFSET 0 10 0
  }
}
MOTION
Frames: 2
Frame Time: 0.04
0.5 -1.25 3 90 0 -45.5
0 0 0 0 12.75 0
"""


def test_parser_suite():
    rng = np.random.default_rng(3)
    n = 5000
    m = Mesh(rng.normal(size=(n, 3)), np.stack([np.arange(n - 2), np.arange(1, n - 1), np.arange(2, n)], 1),
             rng.random((n, 3)))
    back = parse_ply(write_ply(m, "binary"))
    ply_ok = (back.vertices.tobytes() == m.vertices.tobytes() and back.colors.tobytes() == m.colors.tobytes()
              and np.array_equal(back.faces, m.faces))
    quad = parse_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n").faces.tolist()
    clip = parse_bvh(BVH)
    bvh_ok = (clip.frame_count == 2 and clip.frames.tolist() == [[0.5, -1.25, 3, 90, 0, -45.5],
                                                                 [0, 0, 0, 0, 12.75, 0]]
              and clip.value("Hips", "Zrotation", 0) == 90.0)
    errors = []
    for fn, bad, exc in ((parse_obj, "v 0 0 x\n", MeshParseError), (parse_ply, b"ply\nformat nope 1.0\n", MeshParseError),
                         (parse_bvh, BVH.replace("0 0 0 0 12.75 0", "0 0 0 12.75 0"), BvhParseError),
                         (parse_bvh, BVH.split("MOTION")[0], BvhParseError)):
        try:
            fn(bad)
            errors.append("accepted")
        except exc:
            errors.append("ok")
        except Exception as e:       # anything else is a crash
            errors.append(type(e).__name__)
    ok = ply_ok and quad == [[0, 1, 2], [0, 2, 3]] and bvh_ok and errors == ["ok"] * 4
    record("parser suite", ok, f"PLY binary bit-identical={ply_ok}, quad fan={quad}, BVH exact={bvh_ok}, "
           f"malformed inputs={errors}")


def test_domain_adapt_suite():
    rng = np.random.default_rng(11)
    img = rng.integers(0, 256, (64, 64, 3), dtype=np.uint8)
    ident = (np.array_equal(adapt.gaussian_blur(img, 0), img)
             and np.array_equal(adapt.add_white_noise(img, 0, rng), img))
    const = max(int(np.abs(adapt.gaussian_blur(np.full((64, 64, 3), v, np.uint8), s).astype(int) - v).max())
                for v in (0, 90, 255) for s in (0.5, 1.5, 3.0))
    ksum = max(abs(adapt.gaussian_kernel(s).sum() - 1) for s in (0.3, 1.0, 1.5, 2.2, 5.0))
    gray = np.full((512, 512, 3), 128, np.uint8)
    std = (adapt.add_white_noise(gray, 10.0, np.random.default_rng(5)).astype(float) - 128).std()
    ok = ident and const <= 1 and ksum < 1e-12 and abs(std / 10 - 1) < 0.05
    record("domain-adapt suite", ok, f"identities={ident}, constant blur max dev {const} level(s), "
           f"kernel sum err {ksum:.1e}, noise std {std:.3f} for 10")


def test_pck_suite():
    rng = np.random.default_rng(21)

    def rec(xy):
        return {"keypoints": [{"name": n, "x": float(x), "y": float(y), "visibility": "visible"}
                              for n, (x, y) in zip(KEYPOINT_NAMES, xy)]}

    gts = [rng.uniform(0, 400, (14, 2)) for _ in range(20)]
    g = [rec(x) for x in gts]
    alphas = [0.05, 0.1, 0.2, 0.5]
    self_ok = all(r.overall == 1.0 for r in pck_curve(g, g, alphas))
    off = []
    for x in gts:
        lref = np.linalg.norm(x[KEYPOINT_NAMES.index("l_shoulder")] - x[KEYPOINT_NAMES.index("r_hip")])
        ang = rng.uniform(0, 2 * np.pi, 14)
        off.append(rec(x + 1.01 * 0.2 * lref * np.stack([np.cos(ang), np.sin(ang)], 1)))
    zero_ok = pck(off, g, 0.2).overall == 0.0
    noisy = [rec(x + rng.normal(0, 25, x.shape)) for x in gts]
    curve = [r.overall for r in pck_curve(noisy, g, np.linspace(0.01, 1, 50))]
    mono = all(b >= a for a, b in zip(curve, curve[1:]))
    scaled = [r.overall for r in pck_curve([rec(np.array([[k["x"], k["y"]] for k in p["keypoints"]]) * 4) for p in noisy],
                                           [rec(x * 4) for x in gts], np.linspace(0.01, 1, 50))]
    record("PCK suite", self_ok and zero_ok and mono and scaled == curve,
           f"GT-vs-GT 100%={self_ok}, 1.01 alpha offsets 0%={zero_ok}, monotone={mono}, "
           f"scale invariance exact={scaled == curve}")


def test_occlusion_oracle():
    skel = default_skeleton()
    mesh, binding = demo.capsule_person(skel)
    theta = np.zeros(27)
    for name, deg in (("shoulder_r_x", 90), ("shoulder_r_z", 135), ("elbow_r", 90)):
        theta[skel.dof_index[name]] = math.radians(deg)
    tf = forward_kinematics(skel, PoseVector(theta))
    kp = joint_world_positions(skel, tf)
    posed = apply_pose(mesh, binding, tf)
    cam = make_camera(CameraParams(3.0, 0.0, 0.0), skel.root.head)   # frontal view
    fb = rasterize(posed, cam, LightParams(), binding.labels()[posed.faces[:, 0]])
    own = [{skel.index[b] for b in skel.keypoint_bones(k)} for k in KEYPOINT_NAMES]
    ann = annotate_joints(keypoint_array(kp), cam, fb.depth, list(KEYPOINT_NAMES), fb.labels, own)
    vis = {a.name: a.visibility for a in ann}
    x0, y0, x1, y1 = foreground_bbox(fb.mask)
    inside = all(x0 - 2 <= a.x <= x1 + 2 and y0 - 2 <= a.y <= y1 + 2 for a in ann if a.visibility == "visible")
    others = all(v == "visible" for n, v in vis.items() if n != "r_wrist")
    record("annotation occlusion oracle", vis["r_wrist"] == "occluded" and others and inside,
           f"r_wrist={vis['r_wrist']}, other 13 visible={others}, visible keypoints inside dilated bbox={inside}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
