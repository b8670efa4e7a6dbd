"""Reading, writing and checking scanned body meshes (OBJ / PLY)."""
from __future__ import annotations

import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import InvalidMeshError, MeshParseError

logger = logging.getLogger(__name__)

DEFAULT_COLOR = (0.5, 0.5, 0.5)


@dataclass(eq=False)
class Mesh:
    """Triangle mesh with optional per-vertex colors and normals.

    Coordinates are meters; colors are RGB floats in [0, 1].  ``colors=None``
    means "no color data" and renders as mid-gray.
    """

    vertices: np.ndarray
    faces: np.ndarray
    colors: np.ndarray | None = None
    normals: np.ndarray | None = None

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if self.colors is not None:
            self.colors = np.asarray(self.colors, dtype=np.float64).reshape(-1, 3)
        if self.normals is not None:
            self.normals = np.asarray(self.normals, dtype=np.float64).reshape(-1, 3)
        self.validate()

    def validate(self):
        n = len(self.vertices)
        if len(self.faces):
            if self.faces.min() < 0 or self.faces.max() >= n:
                raise InvalidMeshError(f"face index out of range for {n} vertices")
            f = self.faces
            if np.any((f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])):
                raise InvalidMeshError("face with repeated vertex index")
        if self.colors is not None and len(self.colors) != n:
            raise InvalidMeshError(f"{len(self.colors)} colors for {n} vertices")
        if self.normals is not None and len(self.normals) != n:
            raise InvalidMeshError(f"{len(self.normals)} normals for {n} vertices")

    @property
    def vertex_count(self) -> int:
        return len(self.vertices)

    @property
    def face_count(self) -> int:
        return len(self.faces)

    @property
    def vertex_colors(self) -> np.ndarray:
        if self.colors is None:
            return np.tile(np.array(DEFAULT_COLOR), (self.vertex_count, 1))
        return self.colors

    def with_normals(self) -> "Mesh":
        """Return a copy whose normals are recomputed from the faces."""
        return Mesh(self.vertices, self.faces, self.colors, vertex_normals(self.vertices, self.faces))

    def copy(self) -> "Mesh":
        return Mesh(
            self.vertices.copy(),
            self.faces.copy(),
            None if self.colors is None else self.colors.copy(),
            None if self.normals is None else self.normals.copy(),
        )


def vertex_normals(vertices: np.ndarray, faces: np.ndarray) -> np.ndarray:
    """Area-weighted vertex normals; isolated vertices get a zero vector."""
    normals = np.zeros_like(vertices, dtype=np.float64)
    if len(faces) == 0:
        return normals
    tri = vertices[faces]
    # cross product length is twice the triangle area, which gives the weighting for free
    face_n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    for k in range(3):
        np.add.at(normals, faces[:, k], face_n)
    length = np.linalg.norm(normals, axis=1)
    nz = length > 0
    normals[nz] /= length[nz, None]
    return normals


def load_mesh(path) -> Mesh:
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".obj":
        return parse_obj(path.read_text())
    if suffix == ".ply":
        return parse_ply(path.read_bytes())
    raise MeshParseError(f"unsupported mesh format '{suffix}' ({path})")


def save_mesh(mesh: Mesh, path, mode: str = "binary"):
    path = Path(path)
    if path.suffix.lower() == ".obj":
        path.write_text(write_obj(mesh))
    else:
        path.write_bytes(write_ply(mesh, mode))


# --------------------------------------------------------------------------- OBJ

def _obj_index(token: str, n_vertices: int, lineno: int) -> int:
    ref = token.split("/")[0]
    try:
        idx = int(ref)
    except ValueError:
        raise MeshParseError(f"malformed face index '{token}'", line=lineno) from None
    if idx > 0:
        idx -= 1
    elif idx < 0:
        idx += n_vertices
    else:
        raise MeshParseError("face index 0 is invalid (OBJ indices are 1-based)", line=lineno)
    if not 0 <= idx < n_vertices:
        raise MeshParseError(f"face index {ref} out of range ({n_vertices} vertices)", line=lineno)
    return idx


def parse_obj(text: str) -> Mesh:
    """Parse Wavefront OBJ text.

    Handles ``v x y z [r g b]`` (the vertex-color extension), ``vn`` and
    ``f`` with any number of corners.  Polygons are fan-triangulated from
    their first corner.  Materials, groups, texture coordinates etc. are
    ignored.
    """
    positions = []
    colors = []
    has_color = False
    vn = []
    face_normal_refs = []
    faces = []
    dropped = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        tag = tokens[0]
        if tag == "v":
            try:
                nums = [float(t) for t in tokens[1:]]
            except ValueError:
                bad = next(t for t in tokens[1:] if not _is_float(t))
                raise MeshParseError(f"malformed number '{bad}' in vertex", line=lineno) from None
            if len(nums) in (3, 4):
                positions.append(nums[:3])
                colors.append(DEFAULT_COLOR)
            elif len(nums) in (6, 7):
                positions.append(nums[:3])
                colors.append(nums[3:6] if len(nums) == 6 else nums[4:7])
                has_color = True
            else:
                raise MeshParseError(f"vertex needs 3 or 6 numbers, got {len(nums)}", line=lineno)
        elif tag == "vn":
            try:
                vn.append([float(t) for t in tokens[1:4]])
            except ValueError:
                raise MeshParseError("malformed normal", line=lineno) from None
        elif tag == "f":
            corners = tokens[1:]
            if len(corners) < 3:
                raise MeshParseError("face needs at least 3 vertices", line=lineno)
            idx = [_obj_index(c, len(positions), lineno) for c in corners]
            for c, i in zip(corners, idx):
                parts = c.split("/")
                if len(parts) == 3 and parts[2]:
                    face_normal_refs.append((i, parts[2], lineno))
            for k in range(1, len(idx) - 1):
                tri = (idx[0], idx[k], idx[k + 1])
                if len(set(tri)) < 3:
                    dropped += 1
                    continue
                faces.append(tri)
        # everything else (vt, usemtl, mtllib, g, o, s, l, ...) is skipped

    if dropped:
        logger.warning("dropped %d degenerate triangles while parsing OBJ", dropped)
    normals = None
    if face_normal_refs and vn:
        normals = np.zeros((len(positions), 3))
        for vi, ref, lineno in face_normal_refs:
            try:
                k = int(ref)
            except ValueError:
                raise MeshParseError(f"malformed normal index '{ref}'", line=lineno) from None
            k = k - 1 if k > 0 else k + len(vn)
            if not 0 <= k < len(vn):
                raise MeshParseError(f"normal index {ref} out of range", line=lineno)
            normals[vi] = vn[k]
    return Mesh(
        np.array(positions, dtype=np.float64).reshape(-1, 3),
        np.array(faces, dtype=np.int64).reshape(-1, 3),
        np.array(colors, dtype=np.float64).reshape(-1, 3) if has_color else None,
        normals,
    )


def _is_float(tok):
    try:
        float(tok)
        return True
    except ValueError:
        return False


def write_obj(mesh: Mesh) -> str:
    lines = []
    if mesh.colors is not None:
        for p, c in zip(mesh.vertices, mesh.colors):
            lines.append("v %r %r %r %r %r %r" % (*map(float, p), *map(float, c)))
    else:
        for p in mesh.vertices:
            lines.append("v %r %r %r" % tuple(map(float, p)))
    for f in mesh.faces + 1:
        lines.append("f %d %d %d" % tuple(f))
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------- PLY

_PLY_TYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}


@dataclass
class _PlyProperty:
    name: str
    dtype: str
    count_dtype: str | None = None  # set for list properties


@dataclass
class _PlyElement:
    name: str
    count: int
    properties: list = field(default_factory=list)

    def prop(self, name):
        for p in self.properties:
            if p.name == name:
                return p
        return None


def _parse_ply_header(data: bytes):
    end = data.find(b"end_header")
    if not data.startswith(b"ply") or end < 0:
        raise MeshParseError("not a PLY file (missing 'ply' magic or 'end_header')", element="header")
    nl = data.find(b"\n", end)
    body_start = len(data) if nl < 0 else nl + 1
    try:
        header = data[:end].decode("ascii")
    except UnicodeDecodeError:
        raise MeshParseError("header is not ASCII", element="header") from None

    fmt = None
    elements = []
    for lineno, line in enumerate(header.splitlines(), start=1):
        tokens = line.split()
        if not tokens or tokens[0] in ("ply", "comment", "obj_info"):
            continue
        if tokens[0] == "format":
            if len(tokens) != 3 or tokens[1] not in ("ascii", "binary_little_endian", "binary_big_endian"):
                raise MeshParseError(f"unknown format line '{line.strip()}'", line=lineno, element="format")
            if tokens[2] != "1.0":
                raise MeshParseError(f"unsupported PLY version {tokens[2]}", line=lineno, element="format")
            fmt = tokens[1]
        elif tokens[0] == "element":
            if len(tokens) != 3:
                raise MeshParseError(f"malformed element line '{line.strip()}'", line=lineno, element="element")
            try:
                count = int(tokens[2])
            except ValueError:
                raise MeshParseError(f"bad element count '{tokens[2]}'", line=lineno, element=tokens[1]) from None
            elements.append(_PlyElement(tokens[1], count))
        elif tokens[0] == "property":
            if not elements:
                raise MeshParseError("property before any element", line=lineno, element="property")
            el = elements[-1]
            try:
                if tokens[1] == "list":
                    prop = _PlyProperty(tokens[4], _PLY_TYPES[tokens[3]], _PLY_TYPES[tokens[2]])
                else:
                    prop = _PlyProperty(tokens[2], _PLY_TYPES[tokens[1]])
            except (KeyError, IndexError):
                raise MeshParseError(
                    f"bad property line '{line.strip()}' in element '{el.name}'", line=lineno, element=el.name
                ) from None
            el.properties.append(prop)
        else:
            raise MeshParseError(f"unknown header keyword '{tokens[0]}'", line=lineno, element="header")
    if fmt is None:
        raise MeshParseError("missing format line", element="format")
    return fmt, elements, body_start


def _read_binary_element(el: _PlyElement, data: bytes, offset: int, endian: str):
    """Return ({property: array}, new_offset)."""
    has_list = any(p.count_dtype for p in el.properties)
    if not has_list:
        dt = np.dtype([(p.name, endian + p.dtype) for p in el.properties])
        need = dt.itemsize * el.count
        if offset + need > len(data):
            raise MeshParseError(f"truncated binary payload in element '{el.name}'", element=el.name)
        arr = np.frombuffer(data, dtype=dt, count=el.count, offset=offset)
        return {p.name: arr[p.name] for p in el.properties}, offset + need

    # fast path: every list in the element has the same length as in row 0
    if el.count > 0:
        fixed = _try_fixed_lists(el, data, offset, endian)
        if fixed is not None:
            return fixed

    out = {p.name: [] for p in el.properties}
    for _ in range(el.count):
        for p in el.properties:
            if p.count_dtype:
                cdt = np.dtype(endian + p.count_dtype)
                if offset + cdt.itemsize > len(data):
                    raise MeshParseError(f"truncated binary payload in element '{el.name}'", element=el.name)
                n = int(np.frombuffer(data, cdt, 1, offset)[0])
                offset += cdt.itemsize
                vdt = np.dtype(endian + p.dtype)
                if offset + vdt.itemsize * n > len(data):
                    raise MeshParseError(f"truncated binary payload in element '{el.name}'", element=el.name)
                out[p.name].append(np.frombuffer(data, vdt, n, offset))
                offset += vdt.itemsize * n
            else:
                vdt = np.dtype(endian + p.dtype)
                if offset + vdt.itemsize > len(data):
                    raise MeshParseError(f"truncated binary payload in element '{el.name}'", element=el.name)
                out[p.name].append(np.frombuffer(data, vdt, 1, offset)[0])
                offset += vdt.itemsize
    return out, offset


def _try_fixed_lists(el, data, offset, endian):
    fields = []
    pos = offset
    for p in el.properties:
        if p.count_dtype:
            cdt = np.dtype(endian + p.count_dtype)
            if pos + cdt.itemsize > len(data):
                raise MeshParseError(f"truncated binary payload in element '{el.name}'", element=el.name)
            n = int(np.frombuffer(data, cdt, 1, pos)[0])
            fields.append((p.name + "__n", endian + p.count_dtype))
            fields.append((p.name, endian + p.dtype, (n,)))
            pos += cdt.itemsize + np.dtype(endian + p.dtype).itemsize * n
        else:
            fields.append((p.name, endian + p.dtype))
            pos += np.dtype(endian + p.dtype).itemsize
    dt = np.dtype(fields)
    need = dt.itemsize * el.count
    if offset + need > len(data):
        # may be variable-length lists; let the slow path decide about truncation
        return None
    arr = np.frombuffer(data, dtype=dt, count=el.count, offset=offset)
    for p in el.properties:
        if p.count_dtype:
            expected = arr[p.name].shape[1] if arr[p.name].ndim == 2 else 0
            if np.any(arr[p.name + "__n"] != expected):
                return None
    return {p.name: arr[p.name] for p in el.properties}, offset + need


def _read_ascii_elements(elements, body: str):
    lines = iter(body.splitlines())
    result = {}
    for el in elements:
        out = {p.name: [] for p in el.properties}
        for row in range(el.count):
            try:
                line = next(lines)
                while not line.strip():
                    line = next(lines)
            except StopIteration:
                raise MeshParseError(
                    f"unexpected end of data in element '{el.name}' (row {row} of {el.count})", element=el.name
                ) from None
            tokens = line.split()
            k = 0
            try:
                for p in el.properties:
                    if p.count_dtype:
                        n = int(tokens[k])
                        vals = tokens[k + 1:k + 1 + n]
                        if len(vals) != n:
                            raise IndexError
                        out[p.name].append(np.array(vals, dtype=np.float64))
                        k += 1 + n
                    else:
                        out[p.name].append(float(tokens[k]))
                        k += 1
            except (ValueError, IndexError):
                raise MeshParseError(
                    f"malformed row {row} in element '{el.name}': '{line.strip()}'", element=el.name
                ) from None
        result[el.name] = {
            p.name: (out[p.name] if p.count_dtype else np.array(out[p.name], dtype=p.dtype))
            for p in el.properties
        }
    return result


def parse_ply(data: bytes) -> Mesh:
    """Parse an ascii or binary PLY 1.0 file into a :class:`Mesh`."""
    if isinstance(data, str):
        data = data.encode("ascii")
    fmt, elements, body_start = _parse_ply_header(data)

    if fmt == "ascii":
        values = _read_ascii_elements(elements, data[body_start:].decode("ascii", errors="replace"))
    else:
        endian = "<" if fmt == "binary_little_endian" else ">"
        values = {}
        offset = body_start
        for el in elements:
            values[el.name], offset = _read_binary_element(el, data, offset, endian)

    vert_el = next((e for e in elements if e.name == "vertex"), None)
    if vert_el is None:
        raise MeshParseError("missing 'vertex' element", element="vertex")
    for axis in "xyz":
        if vert_el.prop(axis) is None:
            raise MeshParseError(f"element 'vertex' lacks required property '{axis}'", element="vertex")
    v = values["vertex"]
    vertices = np.column_stack([np.asarray(v[a], dtype=np.float64) for a in "xyz"]).reshape(-1, 3)

    colors = None
    if all(vert_el.prop(c) is not None for c in ("red", "green", "blue")):
        cols = []
        for c in ("red", "green", "blue"):
            raw = np.asarray(v[c])
            if vert_el.prop(c).dtype == "u1":
                cols.append(raw.astype(np.float64) / 255.0)
            else:
                cols.append(raw.astype(np.float64))
        colors = np.column_stack(cols)

    normals = None
    if all(vert_el.prop(c) is not None for c in ("nx", "ny", "nz")):
        normals = np.column_stack([np.asarray(v[c], dtype=np.float64) for c in ("nx", "ny", "nz")])

    faces = np.zeros((0, 3), dtype=np.int64)
    face_el = next((e for e in elements if e.name == "face"), None)
    if face_el is not None and face_el.count > 0:
        prop = face_el.prop("vertex_indices") or face_el.prop("vertex_index")
        if prop is None or not prop.count_dtype:
            raise MeshParseError("element 'face' lacks list property 'vertex_indices'", element="face")
        faces = _triangulate(values["face"][prop.name])

    if len(faces) and (faces.min() < 0 or faces.max() >= len(vertices)):
        raise MeshParseError(f"face index out of range ({len(vertices)} vertices)", element="face")
    faces = _drop_degenerate(faces)
    return Mesh(vertices, faces, colors, normals)


def _triangulate(polys) -> np.ndarray:
    if isinstance(polys, np.ndarray) and polys.ndim == 2:
        n = polys.shape[1]
        if n < 3:
            raise MeshParseError("face with fewer than 3 vertices", element="face")
        polys = polys.astype(np.int64)
        return np.concatenate(
            [np.stack([polys[:, 0], polys[:, k], polys[:, k + 1]], axis=1) for k in range(1, n - 1)]
        ) if n > 3 else polys
    tris = []
    for poly in polys:
        poly = np.asarray(poly).astype(np.int64)
        if len(poly) < 3:
            raise MeshParseError("face with fewer than 3 vertices", element="face")
        for k in range(1, len(poly) - 1):
            tris.append((poly[0], poly[k], poly[k + 1]))
    return np.array(tris, dtype=np.int64).reshape(-1, 3)


def _drop_degenerate(faces):
    if len(faces) == 0:
        return faces
    bad = (faces[:, 0] == faces[:, 1]) | (faces[:, 1] == faces[:, 2]) | (faces[:, 0] == faces[:, 2])
    if bad.any():
        logger.warning("dropped %d degenerate triangles while parsing PLY", int(bad.sum()))
        faces = faces[~bad]
    return faces


def _colors_are_bytes(colors: np.ndarray) -> bool:
    scaled = np.rint(colors * 255.0)
    return bool(np.all((scaled >= 0) & (scaled <= 255)) and np.array_equal(scaled / 255.0, colors))


def write_ply(mesh: Mesh, mode: str = "binary") -> bytes:
    """Serialize ``mesh`` as PLY.

    Coordinates are written as doubles so a binary round-trip is exact.
    Colors go out as uchar when every channel is an exact multiple of 1/255,
    otherwise as doubles.
    """
    if mode not in ("ascii", "binary"):
        raise ValueError(f"mode must be 'ascii' or 'binary', not {mode!r}")
    n = mesh.vertex_count
    props = [("x", "f8"), ("y", "f8"), ("z", "f8")]
    cols = []
    if mesh.normals is not None:
        props += [("nx", "f8"), ("ny", "f8"), ("nz", "f8")]
        cols += [mesh.normals[:, i] for i in range(3)]
    color_bytes = mesh.colors is not None and _colors_are_bytes(mesh.colors)
    if mesh.colors is not None:
        ct = "u1" if color_bytes else "f8"
        props += [("red", ct), ("green", ct), ("blue", ct)]
        if color_bytes:
            cols += [np.rint(mesh.colors[:, i] * 255.0).astype(np.uint8) for i in range(3)]
        else:
            cols += [mesh.colors[:, i] for i in range(3)]
    names = {"f8": "double", "u1": "uchar"}

    header = [
        "ply",
        f"format {'ascii' if mode == 'ascii' else 'binary_little_endian'} 1.0",
        "comment written by avatargen",
        f"element vertex {n}",
    ]
    header += [f"property {names[t]} {name}" for name, t in props]
    header += [f"element face {mesh.face_count}", "property list uchar int vertex_indices", "end_header"]
    head = ("\n".join(header) + "\n").encode("ascii")

    columns = [mesh.vertices[:, i] for i in range(3)] + cols
    if mode == "binary":
        vdt = np.dtype([(name, "<" + t) for name, t in props])
        varr = np.empty(n, dtype=vdt)
        for (name, _), col in zip(props, columns):
            varr[name] = col
        fdt = np.dtype([("n", "u1"), ("idx", "<i4", (3,))])
        farr = np.empty(mesh.face_count, dtype=fdt)
        farr["n"] = 3
        farr["idx"] = mesh.faces
        return head + varr.tobytes() + farr.tobytes()

    lines = []
    for i in range(n):
        row = []
        for (name, t), col in zip(props, columns):
            row.append(str(int(col[i])) if t == "u1" else repr(float(col[i])))
        lines.append(" ".join(row))
    for f in mesh.faces:
        lines.append("3 %d %d %d" % tuple(f))
    body = ("\n".join(lines) + "\n") if lines else ""
    return head + body.encode("ascii")


# --------------------------------------------------------------------------- diagnostics

@dataclass
class DiagnosticsReport:
    vertex_count: int
    face_count: int
    non_manifold_edge_count: int
    boundary_loop_count: int
    boundary_edge_count: int
    bounding_box: tuple
    duplicate_vertex_count: int

    def to_dict(self) -> dict:
        return {
            "vertex_count": self.vertex_count,
            "face_count": self.face_count,
            "non_manifold_edge_count": self.non_manifold_edge_count,
            "boundary_loop_count": self.boundary_loop_count,
            "boundary_edge_count": self.boundary_edge_count,
            "bounding_box": {"min": list(self.bounding_box[0]), "max": list(self.bounding_box[1])},
            "duplicate_vertex_count": self.duplicate_vertex_count,
        }

    def format(self) -> str:
        lo, hi = self.bounding_box
        rows = [
            ("vertices", self.vertex_count),
            ("faces", self.face_count),
            ("non-manifold edges", self.non_manifold_edge_count),
            ("boundary loops (holes)", self.boundary_loop_count),
            ("boundary edges", self.boundary_edge_count),
            ("duplicate vertices", self.duplicate_vertex_count),
            ("bbox min", "(%.4f, %.4f, %.4f)" % tuple(lo)),
            ("bbox max", "(%.4f, %.4f, %.4f)" % tuple(hi)),
        ]
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k:<{width}} : {v}" for k, v in rows)

    def __str__(self):
        return self.format()


def diagnose(mesh: Mesh) -> DiagnosticsReport:
    """Count defects that need fixing before a scan can be rigged.

    Non-manifold edges are undirected edges shared by more than two faces.
    Boundary loops are connected components of the graph formed by edges
    that belong to exactly one face.
    """
    v, f = mesh.vertices, mesh.faces
    if len(v):
        bbox = (tuple(map(float, v.min(axis=0))), tuple(map(float, v.max(axis=0))))
        dup = len(v) - len(np.unique(v, axis=0))
    else:
        bbox = ((0.0, 0.0, 0.0), (0.0, 0.0, 0.0))
        dup = 0

    nonmanifold = boundary_loops = boundary_edges = 0
    if len(f):
        edges = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
        edges.sort(axis=1)
        uniq, counts = np.unique(edges, axis=0, return_counts=True)
        nonmanifold = int(np.sum(counts > 2))
        bnd = uniq[counts == 1]
        boundary_edges = len(bnd)
        if len(bnd):
            nodes, inv = np.unique(bnd, return_inverse=True)
            inv = inv.reshape(-1, 2)
            graph = coo_matrix(
                (np.ones(len(inv)), (inv[:, 0], inv[:, 1])), shape=(len(nodes), len(nodes))
            )
            boundary_loops, _ = connected_components(graph, directed=False)
    return DiagnosticsReport(
        vertex_count=len(v),
        face_count=len(f),
        non_manifold_edge_count=nonmanifold,
        boundary_loop_count=int(boundary_loops),
        boundary_edge_count=int(boundary_edges),
        bounding_box=bbox,
        duplicate_vertex_count=int(dup),
    )


if __name__ == "__main__":
    print(diagnose(load_mesh(sys.argv[1])))
