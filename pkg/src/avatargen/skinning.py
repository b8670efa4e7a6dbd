"""Vertex-to-limb binding and mesh deformation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BindingError
from .mesh_io import Mesh, vertex_normals
from .rig import BoneTransforms, Skeleton

BLEND_EPS = 1e-6
MAX_INFLUENCES = 4


@dataclass(eq=False)
class VertexBinding:
    """Per-vertex bone influences.

    ``bones`` and ``weights`` have shape ``(V, K)``; unused slots carry
    bone -1 and weight 0.  Rigid bindings have K == 1 and weight 1.
    """

    mode: str
    bone_names: tuple
    bones: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.bone_names = tuple(self.bone_names)
        self.bones = np.asarray(self.bones, dtype=np.int64)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.bones.ndim == 1:
            self.bones = self.bones[:, None]
        if self.weights.ndim == 1:
            self.weights = self.weights[:, None]
        if self.mode not in ("rigid", "blend"):
            raise BindingError(f"unknown binding mode '{self.mode}'")
        if self.bones.shape != self.weights.shape:
            raise BindingError("bones and weights differ in shape")
        if self.bones.shape[1] > MAX_INFLUENCES:
            raise BindingError(f"at most {MAX_INFLUENCES} influences per vertex")
        if len(self.bones) and self.bones.max() >= len(self.bone_names):
            raise BindingError("bone index out of range")
        used = self.bones >= 0
        if self.mode == "rigid":
            if self.bones.shape[1] != 1 or not used.all():
                raise BindingError("rigid binding needs exactly one bone per vertex")
        if np.any(self.weights < 0) or np.any(self.weights[~used] != 0):
            raise BindingError("weights must be non-negative and zero on unused slots")
        if len(self.weights) and np.max(np.abs(self.weights.sum(axis=1) - 1.0)) > 1e-6:
            raise BindingError("weights of some vertex do not sum to 1")

    @property
    def vertex_count(self) -> int:
        return len(self.bones)

    def labels(self) -> np.ndarray:
        """Dominant bone index per vertex."""
        pick = np.argmax(self.weights, axis=1)
        return self.bones[np.arange(len(self.bones)), pick]

    def __eq__(self, other):
        if not isinstance(other, VertexBinding):
            return NotImplemented
        return (
            self.mode == other.mode
            and self.bone_names == other.bone_names
            and np.array_equal(self.bones, other.bones)
            and np.array_equal(self.weights, other.weights)
        )


def segment_distances(points: np.ndarray, heads: np.ndarray, tails: np.ndarray) -> np.ndarray:
    """Distance from each point to each segment, shape ``(P, S)``."""
    d = tails - heads                                   # (S, 3)
    rel = points[:, None, :] - heads[None, :, :]        # (P, S, 3)
    denom = np.einsum("sk,sk->s", d, d)
    safe = np.where(denom > 0, denom, 1.0)
    t = np.einsum("psk,sk->ps", rel, d) / safe
    t = np.where(denom > 0, np.clip(t, 0.0, 1.0), 0.0)
    closest = heads[None] + t[..., None] * d[None]
    return np.linalg.norm(points[:, None, :] - closest, axis=2)


def auto_bind(mesh: Mesh, skeleton: Skeleton, mode: str = "rigid") -> VertexBinding:
    """Label every vertex with its nearest bone segment.

    ``mode="blend"`` instead spreads weight over the two nearest segments,
    proportional to ``1 / (d + eps)**2``.
    """
    if mesh.vertex_count == 0:
        raise BindingError("cannot bind an empty mesh")
    lo, hi = mesh.vertices.min(axis=0), mesh.vertices.max(axis=0)
    segs = np.concatenate([skeleton.heads, skeleton.tails])
    slo, shi = segs.min(axis=0), segs.max(axis=0)
    if np.any(hi < slo) or np.any(shi < lo):
        raise BindingError(
            "mesh and skeleton bounding boxes do not overlap; are they in the same coordinate frame?"
        )

    names = skeleton.bone_names
    dist = np.empty((mesh.vertex_count, len(names)))
    chunk = 65536
    for s in range(0, mesh.vertex_count, chunk):
        dist[s:s + chunk] = segment_distances(mesh.vertices[s:s + chunk], skeleton.heads, skeleton.tails)

    if mode == "rigid":
        # argmin picks the first minimum, so ties go to the earlier bone in the rig
        return VertexBinding("rigid", names, np.argmin(dist, axis=1), np.ones(mesh.vertex_count))
    if mode != "blend":
        raise BindingError(f"unknown binding mode '{mode}'")
    k = min(2, len(names))
    nearest = np.argsort(dist, axis=1, kind="stable")[:, :k]
    d = np.take_along_axis(dist, nearest, axis=1)
    w = 1.0 / (d + BLEND_EPS) ** 2
    w /= w.sum(axis=1, keepdims=True)
    return VertexBinding("blend", names, nearest, w)


def format_binding(binding: VertexBinding) -> str:
    lines = [f"# mode {binding.mode}", f"# vertices {binding.vertex_count}"]
    names = binding.bone_names
    if binding.mode == "rigid":
        for i, b in enumerate(binding.bones[:, 0]):
            lines.append(f"{i} {names[b]}")
    else:
        for i, (bs, ws) in enumerate(zip(binding.bones, binding.weights)):
            parts = [f"{names[b]}:{float(w)!r}" for b, w in zip(bs, ws) if b >= 0]
            lines.append(f"{i} {','.join(parts)}")
    return "\n".join(lines) + "\n"


def parse_binding(text: str, skeleton: Skeleton, vertex_count: int | None = None) -> VertexBinding:
    names = skeleton.bone_names
    lookup = {n: i for i, n in enumerate(names)}
    rows = {}
    mode = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            tokens = line[1:].split()
            if len(tokens) == 2 and tokens[0] == "mode":
                mode = tokens[1]
            continue
        parts = line.split(None, 1)
        if len(parts) != 2:
            raise BindingError(f"line {lineno}: expected '<index> <bone>[:<weight>,...]'")
        try:
            idx = int(parts[0])
        except ValueError:
            raise BindingError(f"line {lineno}: bad vertex index '{parts[0]}'") from None
        if idx in rows:
            raise BindingError(f"line {lineno}: vertex {idx} listed twice")
        infl = []
        for item in parts[1].replace(" ", "").split(","):
            bone, _, weight = item.partition(":")
            if bone not in lookup:
                raise BindingError(f"line {lineno}: unknown bone '{bone}'")
            try:
                w = float(weight) if weight else 1.0
            except ValueError:
                raise BindingError(f"line {lineno}: bad weight '{weight}'") from None
            infl.append((lookup[bone], w))
        if len(infl) > MAX_INFLUENCES:
            raise BindingError(f"line {lineno}: more than {MAX_INFLUENCES} influences")
        rows[idx] = infl

    n = len(rows)
    if sorted(rows) != list(range(n)):
        raise BindingError("vertex indices must cover 0..N-1 exactly once")
    if vertex_count is not None and n != vertex_count:
        raise BindingError(f"binding has {n} vertices, mesh has {vertex_count}")
    k = max((len(v) for v in rows.values()), default=1)
    if mode is None:
        mode = "blend" if k > 1 or any(":" in ln for ln in text.splitlines() if not ln.startswith("#")) else "rigid"
    bones = np.full((n, k), -1, dtype=np.int64)
    weights = np.zeros((n, k))
    for i, infl in rows.items():
        for j, (b, w) in enumerate(infl):
            bones[i, j] = b
            weights[i, j] = w
    return VertexBinding(mode, names, bones, weights)


def save_binding(binding: VertexBinding, path):
    with open(path, "w") as f:
        f.write(format_binding(binding))


def load_binding(path, skeleton: Skeleton, vertex_count: int | None = None) -> VertexBinding:
    with open(path) as f:
        return parse_binding(f.read(), skeleton, vertex_count)


def apply_pose(mesh: Mesh, binding: VertexBinding, transforms: BoneTransforms) -> Mesh:
    """Deform ``mesh`` by the skinning matrices ``world @ inverse_bind``."""
    if binding.vertex_count != mesh.vertex_count:
        raise BindingError(f"binding covers {binding.vertex_count} vertices, mesh has {mesh.vertex_count}")
    skin = transforms.skinning
    rot, trans = skin[:, :3, :3], skin[:, :3, 3]
    v = mesh.vertices
    if binding.mode == "rigid":
        b = binding.bones[:, 0]
        out = np.einsum("vij,vj->vi", rot[b], v) + trans[b]
    else:
        out = np.zeros_like(v)
        for j in range(binding.bones.shape[1]):
            b = binding.bones[:, j]
            w = binding.weights[:, j]
            used = b >= 0
            bb = np.where(used, b, 0)
            moved = np.einsum("vij,vj->vi", rot[bb], v) + trans[bb]
            out += np.where(used, w, 0.0)[:, None] * moved
    return Mesh(out, mesh.faces, mesh.colors, vertex_normals(out, mesh.faces))
