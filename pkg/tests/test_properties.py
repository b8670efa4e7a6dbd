import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from avatargen.adapt import gaussian_blur, gaussian_kernel
from avatargen.evaluation import pck_curve
from avatargen.mesh_io import Mesh, parse_obj, parse_ply, write_obj, write_ply
from avatargen.poses import default_constraints, sample_grid
from avatargen.rig import KEYPOINT_NAMES, PoseVector, default_skeleton, euler_to_rotation, forward_kinematics
from avatargen.skinning import VertexBinding, format_binding, parse_binding

SKEL = default_skeleton()
CONS = default_constraints(skeleton=SKEL)
angle = st.floats(-4 * math.pi, 4 * math.pi, allow_nan=False)
finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@st.composite
def meshes(draw):
    n = draw(st.integers(3, 30))
    verts = draw(arrays(np.float64, (n, 3), elements=finite))
    m = draw(st.integers(0, 20))
    faces = []
    for _ in range(m):
        faces.append(draw(st.lists(st.integers(0, n - 1), min_size=3, max_size=3, unique=True)))
    colors = draw(st.none() | arrays(np.float64, (n, 3), elements=st.floats(0, 1)))
    return Mesh(verts, np.array(faces, dtype=np.int64).reshape(-1, 3), colors)


@given(angle, angle, angle)
def test_euler_is_rotation(a, b, c):
    r = euler_to_rotation(a, b, c)
    assert np.abs(r @ r.T - np.eye(3)).max() < 1e-12
    assert abs(np.linalg.det(r) - 1) < 1e-12


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, 27, elements=angle), arrays(np.float64, 3, elements=angle),
       arrays(np.float64, 3, elements=st.floats(-10, 10)))
def test_fk_rigid(theta, orient, trans):
    tf = forward_kinematics(SKEL, PoseVector(theta, orient, trans))
    rot = tf.world[:, :3, :3]
    assert np.abs(np.einsum("bij,bkj->bik", rot, rot) - np.eye(3)).max() < 1e-9
    heads = tf.world[:, :3, 3]
    for bi, p in enumerate(SKEL.parent_index):
        if p >= 0:
            rest = np.linalg.norm(SKEL.heads[bi] - SKEL.heads[p])
            assert abs(np.linalg.norm(heads[bi] - heads[p]) - rest) < 1e-9


@settings(max_examples=100)
@given(arrays(np.float64, 27, elements=st.floats(-10, 10)), arrays(np.float64, 3, elements=st.floats(-10, 10)))
def test_clamp_always_satisfies(theta, orient):
    assert CONS.contains(CONS.clamp(PoseVector(theta, orient)))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.sampled_from(CONS.dof_names), min_size=1, max_size=3, unique=True), st.data())
def test_grid_count(dofs, data):
    steps = [data.draw(st.integers(1, 4)) for _ in dofs]
    poses = sample_grid(CONS, dofs, steps)
    assert len(poses) == math.prod(steps)
    assert all(CONS.contains(p) for p in poses)


@settings(max_examples=60, deadline=None)
@given(meshes())
def test_ply_binary_roundtrip(mesh):
    back = parse_ply(write_ply(mesh, "binary"))
    assert back.vertices.tobytes() == mesh.vertices.tobytes()
    np.testing.assert_array_equal(back.faces, mesh.faces)
    if mesh.colors is None:
        assert back.colors is None
    else:
        assert back.colors.tobytes() == mesh.colors.tobytes()


@settings(max_examples=60, deadline=None)
@given(meshes())
def test_obj_roundtrip(mesh):
    back = parse_obj(write_obj(mesh))
    np.testing.assert_array_equal(back.vertices, mesh.vertices)
    np.testing.assert_array_equal(back.faces, mesh.faces)


@given(st.floats(0.05, 8.0))
def test_kernel_sum(sigma):
    assert abs(gaussian_kernel(sigma).sum() - 1) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 255), st.floats(0.1, 4.0), st.integers(1, 20), st.integers(1, 20))
def test_blur_constant(value, sigma, h, w):
    img = np.full((h, w, 3), value, dtype=np.uint8)
    assert np.abs(gaussian_blur(img, sigma).astype(int) - value).max() <= 1


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.lists(st.floats(0.01, 2.0), min_size=1, max_size=6),
       st.floats(-500, 500), st.floats(-500, 500))
def test_pck_monotone_and_translation(seed, alphas, tx, ty):
    rng = np.random.default_rng(seed)
    alphas = sorted(alphas)

    def rec(xy, vis=True):
        return {"keypoints": [dict(name=n, x=float(x), y=float(y), **({"visibility": "visible"} if vis else {}))
                              for n, (x, y) in zip(KEYPOINT_NAMES, xy)]}

    gt_xy = [rng.uniform(0, 300, (14, 2)) for _ in range(3)]
    pr_xy = [g + rng.normal(0, 40, (14, 2)) for g in gt_xy]
    base = [r.overall for r in pck_curve([rec(p, False) for p in pr_xy], [rec(g) for g in gt_xy], alphas)]
    assert all(b >= a for a, b in zip(base, base[1:]))
    assert all(0 <= v <= 1 for v in base)
    # translate by a dyadic amount so subtraction stays exact
    t = np.array([round(tx * 4) / 4, round(ty * 4) / 4])
    moved = [r.overall for r in pck_curve([rec(p + t, False) for p in pr_xy], [rec(g + t) for g in gt_xy], alphas)]
    assert np.allclose(moved, base)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 40))
def test_binding_text_roundtrip(seed, n):
    rng = np.random.default_rng(seed)
    bones = np.stack([rng.permutation(14)[:2] for _ in range(n)])
    w = rng.random((n, 2)) + 1e-3
    w /= w.sum(axis=1, keepdims=True)
    b = VertexBinding("blend", SKEL.bone_names, bones, w)
    assert parse_binding(format_binding(b), SKEL, n) == b
