"""Software renderer for posed avatars.

Pinhole camera placed on a sphere around a look-at target, z-buffered
triangle rasterization with perspective-correct vertex colors and two-sided
Lambertian shading, background compositing and occlusion-aware 2D labels.

Camera frame: x right, y down, z forward (the view axis).  Pixel (i, j)
covers ``[i, i+1) x [j, j+1)`` and is sampled at its center.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np
from PIL import Image

from .errors import BackgroundError, CameraError
from .mesh_io import Mesh, vertex_normals

NEAR = 1e-4
OCCLUSION_DELTA = 0.02
VISIBLE, OCCLUDED, OUT_OF_FRAME = "visible", "occluded", "out_of_frame"
VISIBILITY = (VISIBLE, OCCLUDED, OUT_OF_FRAME)


@dataclass
class CameraParams:
    radius: float = 3.0
    azimuth: float = 0.0        # radians, measured from +X towards +Y
    elevation: float = 0.0      # radians, open interval (-pi/2, pi/2)
    focal_length_mm: float = 35.0
    sensor_width_mm: float = 36.0
    width: int = 512
    height: int = 512

    def __post_init__(self):
        if not self.radius > 0:
            raise CameraError(f"camera radius must be > 0, got {self.radius}")
        if not -math.pi / 2 < self.elevation < math.pi / 2:
            raise CameraError(f"elevation must lie strictly between -90 and 90 degrees, got "
                              f"{math.degrees(self.elevation):.3f}")
        if self.width < 1 or self.height < 1:
            raise CameraError("image width and height must be >= 1")
        if not (self.focal_length_mm > 0 and self.sensor_width_mm > 0):
            raise CameraError("focal length and sensor width must be positive")


@dataclass
class LightParams:
    direction: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))
    intensity: float = 0.7
    ambient: float = 0.3

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=np.float64).reshape(3)
        n = np.linalg.norm(d)
        if not n > 0:
            raise ValueError("light direction must be non-zero")
        self.direction = d / n
        if not (0 <= self.intensity <= 1 and 0 <= self.ambient <= 1):
            raise ValueError("light intensity and ambient must lie in [0, 1]")


@dataclass
class EnvParams:
    camera: CameraParams = field(default_factory=CameraParams)
    light: LightParams = field(default_factory=LightParams)
    background: str | None = None


@dataclass(eq=False)
class Camera:
    position: np.ndarray
    rotation: np.ndarray    # rows: right, down, forward (world -> camera)
    focal_px: float
    cx: float
    cy: float
    width: int
    height: int

    def to_camera(self, points):
        return (np.asarray(points, dtype=np.float64) - self.position) @ self.rotation.T


def spherical_position(target, radius, azimuth, elevation) -> np.ndarray:
    ce = math.cos(elevation)
    return np.asarray(target, dtype=np.float64) + radius * np.array(
        [ce * math.cos(azimuth), ce * math.sin(azimuth), math.sin(elevation)]
    )


def look_at(position, target, up=(0.0, 0.0, 1.0)) -> np.ndarray:
    forward = np.asarray(target, dtype=np.float64) - position
    norm = np.linalg.norm(forward)
    if norm == 0:
        raise CameraError("camera position coincides with its target")
    forward /= norm
    right = np.cross(forward, up)
    rn = np.linalg.norm(right)
    if rn < 1e-12:
        raise CameraError("view direction is parallel to world up")
    right /= rn
    down = np.cross(forward, right)
    return np.stack([right, down, forward])


def make_camera(params: CameraParams, target) -> Camera:
    position = spherical_position(target, params.radius, params.azimuth, params.elevation)
    rotation = look_at(position, target)
    f = params.focal_length_mm / params.sensor_width_mm * params.width
    return Camera(position, rotation, f, params.width / 2.0, params.height / 2.0, params.width, params.height)


def project(camera: Camera, points):
    """Pinhole projection.

    Returns ``(x, y, depth, in_front)``; ``depth`` is the distance along the
    view axis and ``in_front`` is False for points at or behind the near
    plane (their pixel coordinates are NaN).
    """
    pts = np.asarray(points, dtype=np.float64)
    single = pts.ndim == 1
    pc = camera.to_camera(np.atleast_2d(pts))
    z = pc[:, 2]
    ok = z > NEAR
    safe = np.where(ok, z, 1.0)
    x = np.where(ok, camera.focal_px * pc[:, 0] / safe + camera.cx, np.nan)
    y = np.where(ok, camera.focal_px * pc[:, 1] / safe + camera.cy, np.nan)
    if single:
        return float(x[0]), float(y[0]), float(z[0]), bool(ok[0])
    return x, y, z, ok


# --------------------------------------------------------------------------- rasterization

@dataclass(eq=False)
class Framebuffer:
    color: np.ndarray    # (H, W, 3) uint8
    depth: np.ndarray    # (H, W) float64, +inf where empty
    labels: np.ndarray   # (H, W) int32 face label, -1 where empty

    @property
    def mask(self) -> np.ndarray:
        return np.isfinite(self.depth)

    @property
    def width(self) -> int:
        return self.depth.shape[1]

    @property
    def height(self) -> int:
        return self.depth.shape[0]

    @classmethod
    def empty(cls, width, height):
        return cls(
            np.zeros((height, width, 3), dtype=np.uint8),
            np.full((height, width), np.inf),
            np.full((height, width), -1, dtype=np.int32),
        )


@numba.njit(cache=True, nogil=True)
def _raster_kernel(sx, sy, sz, col, lab, color_buf, depth_buf, label_buf):
    height, width = depth_buf.shape
    for t in range(sx.shape[0]):
        x0, y0, z0 = sx[t, 0], sy[t, 0], sz[t, 0]
        x1, y1, z1 = sx[t, 1], sy[t, 1], sz[t, 1]
        x2, y2, z2 = sx[t, 2], sy[t, 2], sz[t, 2]
        c0 = col[t, 0]
        c1 = col[t, 1]
        c2 = col[t, 2]
        area = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
        if area == 0.0 or not np.isfinite(area):
            continue
        if area < 0.0:
            # two-sided: reorder so the signed area is positive
            x1, y1, z1, x2, y2, z2 = x2, y2, z2, x1, y1, z1
            c1, c2 = c2, c1
            area = -area
        xmin = max(int(math.ceil(min(x0, x1, x2) - 0.5)), 0)
        xmax = min(int(math.floor(max(x0, x1, x2) - 0.5)), width - 1)
        ymin = max(int(math.ceil(min(y0, y1, y2) - 0.5)), 0)
        ymax = min(int(math.floor(max(y0, y1, y2) - 0.5)), height - 1)
        if xmin > xmax or ymin > ymax:
            continue
        # top-left rule: top edge is horizontal going +x, left edges go -y
        tl0 = (y2 - y1 < 0.0) or (y2 - y1 == 0.0 and x2 - x1 > 0.0)
        tl1 = (y0 - y2 < 0.0) or (y0 - y2 == 0.0 and x0 - x2 > 0.0)
        tl2 = (y1 - y0 < 0.0) or (y1 - y0 == 0.0 and x1 - x0 > 0.0)
        iz0, iz1, iz2 = 1.0 / z0, 1.0 / z1, 1.0 / z2
        inv_area = 1.0 / area
        for py in range(ymin, ymax + 1):
            pyc = py + 0.5
            for px in range(xmin, xmax + 1):
                pxc = px + 0.5
                w0 = (x2 - x1) * (pyc - y1) - (y2 - y1) * (pxc - x1)
                if w0 < 0.0 or (w0 == 0.0 and not tl0):
                    continue
                w1 = (x0 - x2) * (pyc - y2) - (y0 - y2) * (pxc - x2)
                if w1 < 0.0 or (w1 == 0.0 and not tl1):
                    continue
                w2 = (x1 - x0) * (pyc - y0) - (y1 - y0) * (pxc - x0)
                if w2 < 0.0 or (w2 == 0.0 and not tl2):
                    continue
                l0 = w0 * inv_area
                l1 = w1 * inv_area
                l2 = w2 * inv_area
                iz = l0 * iz0 + l1 * iz1 + l2 * iz2
                z = 1.0 / iz
                if z < depth_buf[py, px]:
                    depth_buf[py, px] = z
                    label_buf[py, px] = lab[t]
                    for k in range(3):
                        color_buf[py, px, k] = (l0 * iz0 * c0[k] + l1 * iz1 * c1[k] + l2 * iz2 * c2[k]) * z


def _clip_near(pc, cols, labels, tris):
    """Clip triangles straddling the near plane; returns new corner arrays."""
    out_p, out_c, out_l = [], [], []
    for t in tris:
        poly_p = []
        poly_c = []
        for k in range(3):
            a, b = t[k], t[(k + 1) % 3]
            pa, pb = pc[a], pc[b]
            ina, inb = pa[2] > NEAR, pb[2] > NEAR
            if ina:
                poly_p.append(pa)
                poly_c.append(cols[a])
            if ina != inb:
                s = (NEAR - pa[2]) / (pb[2] - pa[2])
                p = pa + s * (pb - pa)
                p[2] = max(p[2], NEAR * (1 + 1e-9))
                poly_p.append(p)
                poly_c.append(cols[a] + s * (cols[b] - cols[a]))
        for k in range(1, len(poly_p) - 1):
            out_p.append([poly_p[0], poly_p[k], poly_p[k + 1]])
            out_c.append([poly_c[0], poly_c[k], poly_c[k + 1]])
            out_l.append(labels[t[3]])
    return (np.array(out_p).reshape(-1, 3, 3), np.array(out_c).reshape(-1, 3, 3),
            np.array(out_l, dtype=np.int32))


def shade_vertices(mesh: Mesh, light: LightParams) -> np.ndarray:
    """Two-sided Lambert: ``color * (ambient + intensity * |n . l|)``."""
    normals = mesh.normals if mesh.normals is not None else vertex_normals(mesh.vertices, mesh.faces)
    lam = np.abs(normals @ light.direction)
    return mesh.vertex_colors * (light.ambient + light.intensity * lam)[:, None]


def rasterize(mesh: Mesh, camera: Camera, light: LightParams, face_labels=None) -> Framebuffer:
    """Render ``mesh`` into a new framebuffer.

    ``face_labels`` (one int per face) is written to the label buffer of the
    pixels each face wins; defaults to the face index.
    """
    fb = Framebuffer.empty(camera.width, camera.height)
    if mesh.face_count == 0:
        return fb
    if face_labels is None:
        face_labels = np.arange(mesh.face_count, dtype=np.int32)
    face_labels = np.asarray(face_labels, dtype=np.int32)
    shaded = shade_vertices(mesh, light)
    pc = camera.to_camera(mesh.vertices)
    faces = mesh.faces
    inside = pc[faces, 2] > NEAR
    full = inside.all(axis=1)
    partial = inside.any(axis=1) & ~full

    tri_p = pc[faces[full]]
    tri_c = shaded[faces[full]]
    tri_l = face_labels[full]
    if partial.any():
        idx = np.nonzero(partial)[0]
        cp, cc, cl = _clip_near(pc, shaded, face_labels, np.column_stack([faces[idx], idx]))
        tri_p = np.concatenate([tri_p, cp])
        tri_c = np.concatenate([tri_c, cc])
        tri_l = np.concatenate([tri_l, cl])

    z = tri_p[..., 2]
    sx = camera.focal_px * tri_p[..., 0] / z + camera.cx
    sy = camera.focal_px * tri_p[..., 1] / z + camera.cy
    color_buf = np.zeros((camera.height, camera.width, 3))
    _raster_kernel(np.ascontiguousarray(sx), np.ascontiguousarray(sy), np.ascontiguousarray(z),
                   np.ascontiguousarray(tri_c), tri_l, color_buf, fb.depth, fb.labels)
    fb.color[...] = np.rint(np.clip(color_buf, 0.0, 1.0) * 255.0).astype(np.uint8)
    return fb


def warmup():
    """Compile the raster kernel (a no-op after the first call or with a warm cache)."""
    cam = make_camera(CameraParams(width=4, height=4), np.zeros(3))
    tri = Mesh([[0, 0, 0], [0, 1, 0], [0, 0, 1]], [[0, 1, 2]])
    rasterize(tri, cam, LightParams())


# --------------------------------------------------------------------------- compositing

def load_background(path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise BackgroundError(f"background image not found: {path}")
    try:
        with Image.open(path) as im:
            return np.array(im.convert("RGB"), dtype=np.uint8)
    except (OSError, ValueError) as exc:
        raise BackgroundError(f"cannot decode background image {path}: {exc}") from None


def fit_background(image: np.ndarray, width: int, height: int) -> np.ndarray:
    """Center-crop to the frame aspect ratio, then resize (bilinear) to ``width x height``."""
    h, w = image.shape[:2]
    if (w, h) == (width, height):
        return image.copy()
    target = width / height
    if w / h > target:
        cw, ch = max(1, round(h * target)), h
    else:
        cw, ch = w, max(1, round(w / target))
    x0, y0 = (w - cw) // 2, (h - ch) // 2
    crop = image[y0:y0 + ch, x0:x0 + cw]
    if (cw, ch) == (width, height):
        return crop.copy()
    return np.array(Image.fromarray(np.ascontiguousarray(crop)).resize((width, height), Image.BILINEAR))


def composite(fb: Framebuffer, background=None, fill=(0, 0, 0)) -> np.ndarray:
    """Foreground pixels over a background image (or a solid ``fill`` color)."""
    if background is None:
        out = np.empty_like(fb.color)
        out[...] = np.asarray(fill, dtype=np.uint8)
    else:
        out = fit_background(np.asarray(background, dtype=np.uint8), fb.width, fb.height)
    mask = fb.mask
    out[mask] = fb.color[mask]
    return out


def foreground_bbox(mask: np.ndarray):
    """``[x0, y0, x1, y1]`` in pixel-edge coordinates, or None for an empty mask."""
    ys, xs = np.nonzero(mask)
    if len(xs) == 0:
        return None
    return [int(xs.min()), int(ys.min()), int(xs.max()) + 1, int(ys.max()) + 1]


# --------------------------------------------------------------------------- annotation

@dataclass
class JointAnnotation:
    name: str
    x: float | None
    y: float | None
    depth: float
    visibility: str

    def __post_init__(self):
        if self.visibility not in VISIBILITY:
            raise ValueError(f"bad visibility {self.visibility!r}")


def annotate_joints(keypoints3d, camera: Camera, depth_buffer: np.ndarray, names=None,
                    label_buffer=None, own_labels=None, delta: float = OCCLUSION_DELTA) -> list:
    """Project keypoints and classify each as visible, occluded or out of frame.

    A keypoint is occluded when the nearest rendered surface at its pixel lies
    more than ``delta`` in front of it.  When ``label_buffer`` and
    ``own_labels`` (a set of labels per keypoint) are given, a surface that
    belongs to the keypoint's own limbs never counts as an occluder: joint
    centers sit inside the body, so their own limb always covers them.
    """
    if isinstance(keypoints3d, dict):
        names = names or list(keypoints3d)
        pts = np.array([keypoints3d[n] for n in names])
    else:
        pts = np.asarray(keypoints3d, dtype=np.float64)
        names = names or [str(i) for i in range(len(pts))]
    x, y, z, ok = project(camera, pts)
    h, w = depth_buffer.shape
    out = []
    for i, name in enumerate(names):
        if not ok[i]:
            out.append(JointAnnotation(name, None, None, float(z[i]), OUT_OF_FRAME))
            continue
        xi, yi = float(x[i]), float(y[i])
        px, py = math.floor(xi), math.floor(yi)
        if not (0 <= px < w and 0 <= py < h):
            vis = OUT_OF_FRAME
        elif depth_buffer[py, px] < z[i] - delta:
            vis = OCCLUDED
            if label_buffer is not None and own_labels is not None and label_buffer[py, px] in own_labels[i]:
                vis = VISIBLE
        else:
            vis = VISIBLE
        out.append(JointAnnotation(name, xi, yi, float(z[i]), vis))
    return out


def save_png(image: np.ndarray, path):
    Image.fromarray(np.asarray(image, dtype=np.uint8)).save(path, format="PNG", optimize=False, compress_level=6)
