"""Skeleton definition and forward kinematics.

World frame: right-handed, Z up, the subject faces +X in the rest pose.
Every bone's rest orientation is the world frame, so a bone's rest transform
is a pure translation to its head and its joint axes are world axes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources

import numpy as np
import yaml

from .errors import RigSpecError

JOINT_DOF = {"fixed": 0, "revolute": 1, "universal": 2, "spherical": 3}

# 14 annotation keypoints, in the usual LSP order
KEYPOINT_NAMES = (
    "r_ankle", "r_knee", "r_hip", "l_hip", "l_knee", "l_ankle",
    "r_wrist", "r_elbow", "r_shoulder", "l_shoulder", "l_elbow", "l_wrist",
    "neck", "head_top",
)

# keypoint -> (bone, "head" | "tail")
KEYPOINT_SOURCES = {
    "r_ankle": ("RF", "head"),
    "r_knee": ("RLL", "head"),
    "r_hip": ("RUL", "head"),
    "l_hip": ("LUL", "head"),
    "l_knee": ("LLL", "head"),
    "l_ankle": ("LF", "head"),
    "r_wrist": ("RP", "head"),
    "r_elbow": ("RLA", "head"),
    "r_shoulder": ("RUA", "head"),
    "l_shoulder": ("LUA", "head"),
    "l_elbow": ("LLA", "head"),
    "l_wrist": ("LP", "head"),
    "neck": ("H", "head"),
    "head_top": ("H", "tail"),
}

CANONICAL_BONES = ("T", "H", "LUA", "LLA", "LP", "RUA", "RLA", "RP", "LUL", "LLL", "LF", "RUL", "RLL", "RF")


@dataclass(frozen=True)
class JointSpec:
    kind: str
    theta_indices: tuple = ()
    axes: tuple = ()
    dof_names: tuple = ()

    @property
    def dof(self) -> int:
        return JOINT_DOF[self.kind]


@dataclass(frozen=True, eq=False)
class Bone:
    name: str
    parent: str | None
    head: np.ndarray
    tail: np.ndarray
    joint: JointSpec

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.tail - self.head))


@dataclass(eq=False)
class Skeleton:
    bones: tuple
    name: str = "rig"
    source_text: str | None = field(default=None, repr=False)

    def __post_init__(self):
        self.bones = tuple(self.bones)
        self.index = {b.name: i for i, b in enumerate(self.bones)}
        self.parent_index = np.array(
            [-1 if b.parent is None else self.index[b.parent] for b in self.bones], dtype=np.int64
        )
        self.order = _topological_order(self.bones, self.index)
        self.dof_count = sum(b.joint.dof for b in self.bones)
        names = [None] * self.dof_count
        for b in self.bones:
            for i, n in zip(b.joint.theta_indices, b.joint.dof_names):
                names[i] = n
        self.dof_names = tuple(names)
        self.dof_index = {n: i for i, n in enumerate(self.dof_names)}
        self.heads = np.array([b.head for b in self.bones]).reshape(-1, 3)
        self.tails = np.array([b.tail for b in self.bones]).reshape(-1, 3)

    def __len__(self):
        return len(self.bones)

    @property
    def bone_names(self) -> tuple:
        return tuple(b.name for b in self.bones)

    @property
    def root(self) -> Bone:
        return self.bones[self.order[0]]

    def bone(self, name: str) -> Bone:
        return self.bones[self.index[name]]

    def keypoint_bones(self, keypoint: str) -> tuple:
        """Bones whose surface encloses the keypoint (used for self-occlusion)."""
        bone, end = KEYPOINT_SOURCES[keypoint]
        b = self.bone(bone)
        if end == "head" and b.parent is not None:
            return (b.name, b.parent)
        return (b.name,)


@dataclass
class PoseVector:
    theta: np.ndarray
    root_orientation: np.ndarray = field(default_factory=lambda: np.zeros(3))
    root_translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=np.float64).reshape(-1)
        self.root_orientation = np.asarray(self.root_orientation, dtype=np.float64).reshape(3)
        self.root_translation = np.asarray(self.root_translation, dtype=np.float64).reshape(3)
        for arr in (self.theta, self.root_orientation, self.root_translation):
            if not np.all(np.isfinite(arr)):
                raise ValueError("pose contains non-finite values")

    @classmethod
    def zeros(cls, dof_count: int = 27) -> "PoseVector":
        return cls(np.zeros(dof_count))

    def copy(self) -> "PoseVector":
        return PoseVector(self.theta.copy(), self.root_orientation.copy(), self.root_translation.copy())

    def __eq__(self, other):
        if not isinstance(other, PoseVector):
            return NotImplemented
        return (
            np.array_equal(self.theta, other.theta)
            and np.array_equal(self.root_orientation, other.root_orientation)
            and np.array_equal(self.root_translation, other.root_translation)
        )


@dataclass(eq=False)
class BoneTransforms:
    """World transforms of every bone plus the rest-pose inverse bind matrices."""

    world: np.ndarray          # (B, 4, 4)
    inverse_bind: np.ndarray   # (B, 4, 4)
    bone_names: tuple

    @property
    def skinning(self) -> np.ndarray:
        return self.world @ self.inverse_bind


# --------------------------------------------------------------------------- rotations

def _rot_x(a):
    c, s = np.cos(a), np.sin(a)
    o, z = np.ones_like(a), np.zeros_like(a)
    return np.stack([np.stack([o, z, z], -1), np.stack([z, c, -s], -1), np.stack([z, s, c], -1)], -2)


def _rot_y(b):
    c, s = np.cos(b), np.sin(b)
    o, z = np.ones_like(b), np.zeros_like(b)
    return np.stack([np.stack([c, z, s], -1), np.stack([z, o, z], -1), np.stack([-s, z, c], -1)], -2)


def _rot_z(g):
    c, s = np.cos(g), np.sin(g)
    o, z = np.ones_like(g), np.zeros_like(g)
    return np.stack([np.stack([c, -s, z], -1), np.stack([s, c, z], -1), np.stack([z, z, o], -1)], -2)


def euler_to_rotation(alpha, beta, gamma) -> np.ndarray:
    """Fixed-axis X-Y-Z Euler angles: ``R = Rz(gamma) @ Ry(beta) @ Rx(alpha)``.

    Inputs broadcast; the result has shape ``broadcast_shape + (3, 3)``.
    """
    a, b, g = np.broadcast_arrays(
        np.asarray(alpha, dtype=np.float64), np.asarray(beta, dtype=np.float64), np.asarray(gamma, dtype=np.float64)
    )
    return _rot_z(g) @ _rot_y(b) @ _rot_x(a)


def axis_angle_rotation(axis, angle) -> np.ndarray:
    """Rodrigues' formula for a unit ``axis``; ``angle`` may be an array."""
    x, y, z = np.asarray(axis, dtype=np.float64)
    angle = np.asarray(angle, dtype=np.float64)
    c, s = np.cos(angle), np.sin(angle)
    t = 1.0 - c
    return np.stack([
        np.stack([t * x * x + c, t * x * y - s * z, t * x * z + s * y], -1),
        np.stack([t * x * y + s * z, t * y * y + c, t * y * z - s * x], -1),
        np.stack([t * x * z - s * y, t * y * z + s * x, t * z * z + c], -1),
    ], -2)


def joint_rotation(joint: JointSpec, angles) -> np.ndarray:
    """Local rotation of ``joint`` for its angle vector (radians).

    ``angles`` has shape ``(dof,)`` or ``(N, dof)``.
    """
    angles = np.asarray(angles, dtype=np.float64)
    if angles.shape[-1:] != (joint.dof,) and not (joint.dof == 0 and angles.size == 0):
        raise ValueError(f"{joint.kind} joint takes {joint.dof} angles, got shape {angles.shape}")
    batch = angles.shape[:-1]
    if joint.kind == "fixed":
        return np.broadcast_to(np.eye(3), batch + (3, 3)).copy()
    if joint.kind == "revolute":
        return axis_angle_rotation(joint.axes[0], angles[..., 0])
    if joint.kind == "universal":
        return axis_angle_rotation(joint.axes[0], angles[..., 0]) @ axis_angle_rotation(joint.axes[1], angles[..., 1])
    return euler_to_rotation(angles[..., 0], angles[..., 1], angles[..., 2])


# --------------------------------------------------------------------------- rig spec

def _topological_order(bones, index):
    children = {i: [] for i in range(len(bones))}
    roots = []
    for i, b in enumerate(bones):
        if b.parent is None:
            roots.append(i)
        else:
            children[index[b.parent]].append(i)
    order = []
    stack = list(reversed(roots))
    while stack:
        i = stack.pop()
        order.append(i)
        stack.extend(reversed(children[i]))
    if len(order) != len(bones):
        raise RigSpecError("parent links contain a cycle")
    return np.array(order, dtype=np.int64)


def _vec3(value, what):
    try:
        arr = np.asarray(value, dtype=np.float64).reshape(3)
    except (TypeError, ValueError):
        raise RigSpecError(f"{what} must be a 3-vector, got {value!r}") from None
    if not np.all(np.isfinite(arr)):
        raise RigSpecError(f"{what} is not finite")
    return arr


def _joint_from_dict(bone_name, d) -> JointSpec:
    if not isinstance(d, dict) or "kind" not in d:
        raise RigSpecError(f"bone {bone_name}: joint needs a 'kind'")
    kind = d["kind"]
    if kind not in JOINT_DOF:
        raise RigSpecError(f"bone {bone_name}: unknown joint kind '{kind}'")
    dof = JOINT_DOF[kind]
    idx = tuple(int(i) for i in d.get("theta_indices", ()))
    if len(idx) != dof:
        raise RigSpecError(f"bone {bone_name}: {kind} joint needs {dof} theta indices, got {len(idx)}")
    names = tuple(d.get("dofs") or (f"{bone_name}_{k}" for k in range(dof)))
    if len(names) != dof:
        raise RigSpecError(f"bone {bone_name}: {kind} joint needs {dof} dof names, got {len(names)}")
    axes = ()
    if kind == "revolute":
        axes = (_vec3(d.get("axis"), f"bone {bone_name} axis"),)
    elif kind == "universal":
        raw = d.get("axes")
        if not raw or len(raw) != 2:
            raise RigSpecError(f"bone {bone_name}: universal joint needs two axes")
        axes = tuple(_vec3(a, f"bone {bone_name} axis") for a in raw)
        if abs(float(axes[0] @ axes[1])) >= 1e-9:
            raise RigSpecError(f"bone {bone_name}: universal joint axes are not orthogonal")
    for a in axes:
        if abs(np.linalg.norm(a) - 1.0) >= 1e-9:
            raise RigSpecError(f"bone {bone_name}: joint axis {a.tolist()} is not unit length")
    return JointSpec(kind, idx, axes, names)


def load_rig_spec(text: str) -> Skeleton:
    """Build a validated :class:`Skeleton` from a YAML rig description."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise RigSpecError(f"rig spec is not valid YAML: {exc}") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("bones"), list) or not doc["bones"]:
        raise RigSpecError("rig spec needs a non-empty 'bones' list")

    bones = []
    seen = set()
    for raw in doc["bones"]:
        if not isinstance(raw, dict) or "name" not in raw:
            raise RigSpecError(f"bone entry without a name: {raw!r}")
        name = str(raw["name"])
        if name in seen:
            raise RigSpecError(f"duplicate bone name '{name}'")
        seen.add(name)
        head = _vec3(raw.get("head"), f"bone {name} head")
        tail = _vec3(raw.get("tail", head), f"bone {name} tail")
        parent = raw.get("parent")
        bones.append(Bone(name, None if parent is None else str(parent), head, tail,
                          _joint_from_dict(name, raw.get("joint", {"kind": "fixed"}))))

    names = {b.name for b in bones}
    roots = [b.name for b in bones if b.parent is None]
    if len(roots) != 1:
        raise RigSpecError(f"rig needs exactly one root bone, found {roots}")
    for b in bones:
        if b.parent is not None and b.parent not in names:
            raise RigSpecError(f"bone {b.name}: unknown parent '{b.parent}'")

    all_idx = sorted(i for b in bones for i in b.joint.theta_indices)
    if all_idx != list(range(len(all_idx))):
        raise RigSpecError(f"theta indices do not partition 0..{len(all_idx) - 1}: {all_idx}")
    dof_names = [n for b in bones for n in b.joint.dof_names]
    if len(set(dof_names)) != len(dof_names):
        raise RigSpecError("duplicate dof names")

    index = {b.name: i for i, b in enumerate(bones)}
    _topological_order(bones, index)
    return Skeleton(tuple(bones), name=str(doc.get("name", "rig")), source_text=text)


def default_rig_text() -> str:
    return resources.files("avatargen").joinpath("data/human_rig.yaml").read_text()


def default_skeleton() -> Skeleton:
    """The bundled 14-bone, 27-DOF human rig."""
    return load_rig_spec(default_rig_text())


# --------------------------------------------------------------------------- kinematics

def _as_batch(skeleton, theta, orientation, translation):
    theta = np.atleast_2d(np.asarray(theta, dtype=np.float64))
    n = theta.shape[0]
    if theta.shape[1] != skeleton.dof_count:
        raise ValueError(f"pose has {theta.shape[1]} angles, skeleton needs {skeleton.dof_count}")
    orientation = np.broadcast_to(np.asarray(orientation, dtype=np.float64), (n, 3))
    translation = np.broadcast_to(np.asarray(translation, dtype=np.float64), (n, 3))
    return theta, orientation, translation


def forward_kinematics_batch(skeleton: Skeleton, theta, orientation=np.zeros(3), translation=np.zeros(3)):
    """World rotations ``(N, B, 3, 3)`` and bone-head positions ``(N, B, 3)``.

    The root is rotated by the Euler root orientation about its own head and
    then shifted by the root translation.
    """
    theta, orientation, translation = _as_batch(skeleton, theta, orientation, translation)
    n, nb = theta.shape[0], len(skeleton)
    rot = np.empty((n, nb, 3, 3))
    pos = np.empty((n, nb, 3))
    for bi in skeleton.order:
        bone = skeleton.bones[bi]
        local = joint_rotation(bone.joint, theta[:, list(bone.joint.theta_indices)])
        p = skeleton.parent_index[bi]
        if p < 0:
            rot[:, bi] = euler_to_rotation(orientation[:, 0], orientation[:, 1], orientation[:, 2]) @ local
            pos[:, bi] = translation + bone.head
        else:
            offset = bone.head - skeleton.bones[p].head
            rot[:, bi] = rot[:, p] @ local
            pos[:, bi] = pos[:, p] + rot[:, p] @ offset
    return rot, pos


def _homogeneous(rot, pos):
    out = np.zeros(rot.shape[:-2] + (4, 4))
    out[..., :3, :3] = rot
    out[..., :3, 3] = pos
    out[..., 3, 3] = 1.0
    return out


def rest_inverse_bind(skeleton: Skeleton) -> np.ndarray:
    rot, pos = forward_kinematics_batch(skeleton, np.zeros((1, skeleton.dof_count)))
    rt = np.swapaxes(rot[0], -1, -2)
    return _homogeneous(rt, -np.einsum("bij,bj->bi", rt, pos[0]))


def forward_kinematics(skeleton: Skeleton, pose: PoseVector) -> BoneTransforms:
    if len(pose.theta) != skeleton.dof_count:
        raise ValueError(f"pose has {len(pose.theta)} angles, skeleton needs {skeleton.dof_count}")
    rot, pos = forward_kinematics_batch(skeleton, pose.theta[None], pose.root_orientation, pose.root_translation)
    return BoneTransforms(_homogeneous(rot[0], pos[0]), rest_inverse_bind(skeleton), skeleton.bone_names)


def joint_world_positions(skeleton: Skeleton, transforms: BoneTransforms) -> dict:
    """The 14 annotation keypoints as ``{name: xyz}`` in :data:`KEYPOINT_NAMES` order."""
    missing = [b for b, _ in KEYPOINT_SOURCES.values() if b not in skeleton.index]
    if missing:
        raise RigSpecError(f"rig lacks bones required for keypoints: {sorted(set(missing))}")
    out = {}
    for name in KEYPOINT_NAMES:
        bone_name, end = KEYPOINT_SOURCES[name]
        bi = skeleton.index[bone_name]
        w = transforms.world[bi]
        if end == "head":
            out[name] = w[:3, 3].copy()
        else:
            bone = skeleton.bones[bi]
            out[name] = w[:3, :3] @ (bone.tail - bone.head) + w[:3, 3]
    return out


def keypoint_array(keypoints: dict) -> np.ndarray:
    return np.array([keypoints[n] for n in KEYPOINT_NAMES])
