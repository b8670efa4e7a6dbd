"""Dataset generation, manifests and replay.

A dataset is a pure function of (config, assets).  Every sample gets its own
64-bit seed derived from (master seed, scan id, sample index); the sampled
pose and environment are quantized, recorded in the manifest and then
rendered from the recorded values only, so any sample can be regenerated
from its manifest row alone.

Output layout::

    <out>/manifest.jsonl
    <out>/<scan_id>/<index>.png
    <out>/<scan_id>/<index>.json      (per-image annotation)
"""
from __future__ import annotations

import hashlib
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import multiprocessing as mp
import numpy as np
import yaml

from . import adapt
from .errors import (AssetMissingError, AvatarGenError, BackgroundError, ConfigError, ReplayError,
                     SchemaError)
from .mesh_io import Mesh, load_mesh
from .poses import (ConstraintMatrix, default_constraints_text, load_bvh, load_constraints,
                    load_retarget_map, mocap_pose, sample_grid, sample_uniform)
from .render import (VISIBILITY, CameraParams, JointAnnotation, LightParams, annotate_joints, composite,
                     foreground_bbox, load_background, make_camera, rasterize, save_png, spherical_position)
from .rig import (KEYPOINT_NAMES, PoseVector, Skeleton, default_rig_text, forward_kinematics,
                  joint_world_positions, keypoint_array, load_rig_spec)
from .skinning import VertexBinding, apply_pose, auto_bind, parse_binding

logger = logging.getLogger(__name__)

ANNOTATION_SCHEMA = "avatargen.annotation/1"
MANIFEST_SCHEMA = "avatargen.manifest/1"
MANIFEST_NAME = "manifest.jsonl"
MANIFEST_COLUMNS = ["id", "scan", "index", "seed", "theta", "root", "camera", "light", "background"]
IMAGE_EXTS = (".png", ".jpg", ".jpeg")

# quantization applied to sampled values before rendering (decimal places)
ANGLE_DECIMALS = 5       # radians
TRANSLATION_DECIMALS = 4  # meters
CAMERA_DECIMALS = 4
LIGHT_DECIMALS = 3


def sample_seed(master_seed: int, scan_id: str, index: int) -> int:
    """Stable 64-bit per-sample seed, independent of generation order."""
    digest = hashlib.blake2b(f"{int(master_seed)}/{scan_id}/{int(index)}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def _checksum_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _checksum_file(path) -> str:
    return _checksum_bytes(Path(path).read_bytes())


# --------------------------------------------------------------------------- config

def _range(value, what, lo_limit=-math.inf, hi_limit=math.inf, open_limits=False):
    if isinstance(value, (int, float)):
        value = [value, value]
    try:
        lo, hi = (float(v) for v in value)
    except (TypeError, ValueError):
        raise ConfigError(f"{what}: expected a number or [low, high]") from None
    if lo > hi:
        raise ConfigError(f"{what}: low {lo} > high {hi}")
    if open_limits:
        bad = not (lo_limit < lo and hi < hi_limit)
    else:
        bad = not (lo_limit <= lo and hi <= hi_limit)
    if bad:
        raise ConfigError(f"{what}: [{lo}, {hi}] outside the allowed range ({lo_limit}, {hi_limit})")
    return [lo, hi]


@dataclass
class ScanEntry:
    id: str
    mesh: str
    rig: str | None = None
    binding: str | None = None


@dataclass
class GenerationConfig:
    scans: list
    seed: int = 0
    images_per_scan: int = 2000
    pose_source: dict = field(default_factory=lambda: {"kind": "uniform"})
    camera: dict = field(default_factory=dict)
    light: dict = field(default_factory=dict)
    background: dict = field(default_factory=dict)
    adaptation: dict = field(default_factory=lambda: {"kind": "none"})
    base_dir: Path = field(default_factory=Path.cwd)
    output: str | None = None

    @classmethod
    def from_dict(cls, doc: dict, base_dir=None) -> "GenerationConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config must be a mapping")
        known = {"scans", "seed", "images_per_scan", "pose_source", "camera", "light", "background",
                 "adaptation", "output"}
        extra = set(doc) - known
        if extra:
            raise ConfigError(f"unknown config key '{sorted(extra)[0]}'")
        scans = []
        for s in doc.get("scans") or []:
            if not isinstance(s, dict) or "mesh" not in s:
                raise ConfigError(f"scan entry needs a 'mesh': {s!r}")
            sid = str(s.get("id", Path(s["mesh"]).stem))
            scans.append(ScanEntry(sid, str(s["mesh"]), s.get("rig"), s.get("binding")))
        if not scans:
            raise ConfigError("config lists no scans")
        ids = [s.id for s in scans]
        if len(set(ids)) != len(ids):
            raise ConfigError("scan ids must be unique")
        cfg = cls(
            scans=scans,
            seed=int(doc.get("seed", 0)),
            images_per_scan=int(doc.get("images_per_scan", 2000)),
            pose_source=dict(doc.get("pose_source") or {"kind": "uniform"}),
            camera=dict(doc.get("camera") or {}),
            light=dict(doc.get("light") or {}),
            background=dict(doc.get("background") or {}),
            adaptation=dict(doc.get("adaptation") or {"kind": "none"}),
            base_dir=Path(base_dir) if base_dir is not None else Path.cwd(),
            output=doc.get("output"),
        )
        cfg.validate()
        return cfg

    def validate(self):
        if self.images_per_scan < 1:
            raise ConfigError("images_per_scan must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        c = self.camera
        c["radius"] = _range(c.get("radius", [3.0, 4.0]), "camera.radius", 0.0, math.inf, open_limits=True)
        c["azimuth"] = _range(c.get("azimuth", [-180.0, 180.0]), "camera.azimuth")
        c["elevation"] = _range(c.get("elevation", [-5.0, 25.0]), "camera.elevation", -90.0, 90.0, open_limits=True)
        c.setdefault("focal_length_mm", 35.0)
        c.setdefault("sensor_width_mm", 36.0)
        c.setdefault("width", 512)
        c.setdefault("height", 512)
        c.setdefault("target", "root")
        if int(c["width"]) < 1 or int(c["height"]) < 1:
            raise ConfigError("image width and height must be >= 1")
        if not (float(c["focal_length_mm"]) > 0 and float(c["sensor_width_mm"]) > 0):
            raise ConfigError("focal length and sensor width must be positive")
        if c["target"] != "root":
            try:
                c["target"] = [float(v) for v in c["target"]]
                assert len(c["target"]) == 3
            except (TypeError, ValueError, AssertionError):
                raise ConfigError("camera.target must be 'root' or an [x, y, z] point") from None
        lt = self.light
        lt["azimuth"] = _range(lt.get("azimuth", [-180.0, 180.0]), "light.azimuth")
        lt["elevation"] = _range(lt.get("elevation", [10.0, 70.0]), "light.elevation", -90.0, 90.0)
        lt["intensity"] = _range(lt.get("intensity", [0.5, 0.8]), "light.intensity", 0.0, 1.0)
        lt["ambient"] = _range(lt.get("ambient", [0.2, 0.4]), "light.ambient", 0.0, 1.0)

        ps = self.pose_source
        kind = ps.get("kind", "uniform")
        if kind not in ("uniform", "grid", "mocap"):
            raise ConfigError(f"unknown pose source '{kind}'")
        if kind == "grid" and not ps.get("dofs"):
            raise ConfigError("grid pose source needs 'dofs' and 'steps'")
        if kind == "mocap":
            for key in ("clip",):
                if key not in ps:
                    raise ConfigError(f"mocap pose source needs '{key}'")
            if ps.get("frame_selection", "random") not in ("random", "stride"):
                raise ConfigError("frame_selection must be 'random' or 'stride'")

        ad = self.adaptation
        kind = ad.get("kind", "none")
        if kind not in ("none", "gauss", "white_noise"):
            raise ConfigError(f"unknown adaptation '{kind}'")
        ad["kind"] = kind
        if kind == "gauss":
            ad["sigma"] = float(ad.get("sigma", adapt.DEFAULT_SIGMA))
            if ad["sigma"] < 0:
                raise ConfigError("adaptation.sigma must be >= 0")
        if kind == "white_noise":
            ad["std"] = float(ad.get("std", adapt.DEFAULT_NOISE_STD))
            if ad["std"] < 0:
                raise ConfigError("adaptation.std must be >= 0")

    def resolve(self, rel) -> Path:
        p = Path(rel)
        return p if p.is_absolute() else self.base_dir / p

    def snapshot(self) -> dict:
        """Config as plain data (no output path), stored in the manifest."""
        return {
            "seed": self.seed,
            "images_per_scan": self.images_per_scan,
            "scans": [{"id": s.id, "mesh": s.mesh, "rig": s.rig, "binding": s.binding} for s in self.scans],
            "pose_source": self.pose_source,
            "camera": self.camera,
            "light": self.light,
            "background": self.background,
            "adaptation": self.adaptation,
        }


def load_config(path) -> GenerationConfig:
    path = Path(path)
    if not path.is_file():
        raise AssetMissingError(f"config file not found: {path}")
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    return GenerationConfig.from_dict(doc, base_dir=path.resolve().parent)


# --------------------------------------------------------------------------- assets

@dataclass(eq=False)
class ScanAssets:
    id: str
    mesh: Mesh
    skeleton: Skeleton
    binding: VertexBinding
    face_labels: np.ndarray
    own_labels: list
    target: np.ndarray


@dataclass(eq=False)
class Assets:
    scans: dict
    constraints: ConstraintMatrix
    checksums: dict
    backgrounds: list             # file names relative to the background dir
    background_dir: Path | None
    clip: object = None
    retarget: object = None
    grid: list | None = None
    _bg_cache: dict = field(default_factory=dict)

    def background(self, name):
        if name is None:
            return None
        if name not in self._bg_cache:
            path = self.background_dir / name
            if not path.is_file():
                raise BackgroundError(f"background '{name}' not found in {self.background_dir}")
            self._bg_cache[name] = load_background(path)
        return self._bg_cache[name]


def _require(path: Path, what: str) -> Path:
    if not path.is_file():
        raise AssetMissingError(f"{what} not found: {path}")
    return path


def load_assets(config: GenerationConfig) -> Assets:
    """Load and check every asset; any failure aborts before sampling starts."""
    checksums = {}
    scans = {}
    for entry in config.scans:
        mesh_path = _require(config.resolve(entry.mesh), f"mesh for scan '{entry.id}'")
        mesh = load_mesh(mesh_path)
        if mesh.vertex_count == 0:
            raise AvatarGenError(f"mesh for scan '{entry.id}' is empty: {mesh_path}")
        checksums[f"{entry.id}.mesh"] = _checksum_file(mesh_path)
        if entry.rig:
            rig_text = _require(config.resolve(entry.rig), f"rig for scan '{entry.id}'").read_text()
        else:
            rig_text = default_rig_text()
        skeleton = load_rig_spec(rig_text)
        checksums[f"{entry.id}.rig"] = _checksum_bytes(rig_text.encode())
        if entry.binding:
            bpath = _require(config.resolve(entry.binding), f"binding for scan '{entry.id}'")
            binding = parse_binding(bpath.read_text(), skeleton, mesh.vertex_count)
            checksums[f"{entry.id}.binding"] = _checksum_file(bpath)
        else:
            binding = auto_bind(mesh, skeleton)
            checksums[f"{entry.id}.binding"] = "auto"
        if mesh.normals is None:
            mesh = mesh.with_normals()
        labels = binding.labels()
        own = [{skeleton.index[b] for b in skeleton.keypoint_bones(k)} for k in KEYPOINT_NAMES]
        if config.camera["target"] == "root":
            target = skeleton.root.head.copy()
        else:
            target = np.array(config.camera["target"], dtype=np.float64)
        scans[entry.id] = ScanAssets(entry.id, mesh, skeleton, binding, labels[mesh.faces[:, 0]].astype(np.int32),
                                     own, target)

    first = next(iter(scans.values())).skeleton
    for s in scans.values():
        if s.skeleton.dof_names != first.dof_names:
            raise ConfigError(f"scan '{s.id}' uses a rig with different DOFs than '{config.scans[0].id}'")

    ps = config.pose_source
    if ps.get("constraints"):
        ctext = _require(config.resolve(ps["constraints"]), "constraint file").read_text()
    else:
        ctext = default_constraints_text()
    constraints = load_constraints(ctext, first, ps.get("profile"))
    checksums["constraints"] = _checksum_bytes(ctext.encode())

    clip = rmap = grid = None
    if ps.get("kind") == "mocap":
        clip_path = _require(config.resolve(ps["clip"]), "mocap clip")
        clip = load_bvh(clip_path)
        checksums["clip"] = _checksum_file(clip_path)
        if ps.get("retarget"):
            rpath = _require(config.resolve(ps["retarget"]), "retarget map")
            rtext = rpath.read_text()
        else:
            from .poses import default_retarget_text
            rtext = default_retarget_text()
        rmap = load_retarget_map(rtext)
        checksums["retarget"] = _checksum_bytes(rtext.encode())
        mocap_pose(clip, rmap, constraints, 0)   # validates the map against the clip
    elif ps.get("kind") == "grid":
        grid = sample_grid(constraints, list(ps["dofs"]), ps.get("steps", 3))

    bg_dir = None
    backgrounds = []
    if config.background.get("directory"):
        bg_dir = config.resolve(config.background["directory"])
        if not bg_dir.is_dir():
            raise AssetMissingError(f"background directory not found: {bg_dir}")
        backgrounds = sorted(p.name for p in bg_dir.iterdir() if p.suffix.lower() in IMAGE_EXTS)
        if not backgrounds:
            raise AssetMissingError(f"no PNG/JPEG images in background directory {bg_dir}")
    return Assets(scans, constraints, checksums, backgrounds, bg_dir, clip, rmap, grid)


# --------------------------------------------------------------------------- records

@dataclass(eq=False)
class SampleRecord:
    id: int
    scan: str
    index: int
    seed: int
    pose: PoseVector
    camera: list            # [radius m, azimuth deg, elevation deg]
    light: list             # [azimuth deg, elevation deg, intensity, ambient]
    background: str | None
    adaptation: dict = field(default_factory=lambda: {"kind": "none"})
    keypoints: list = field(default_factory=list)   # JointAnnotation
    bbox: list | None = None
    width: int = 0
    height: int = 0

    @property
    def stem(self) -> str:
        return f"{self.index:06d}"

    def manifest_row(self) -> list:
        p = self.pose
        return [self.id, self.scan, self.index, self.seed,
                [float(v) for v in p.theta],
                [float(v) for v in p.root_orientation] + [float(v) for v in p.root_translation],
                [float(v) for v in self.camera], [float(v) for v in self.light], self.background]

    @classmethod
    def from_manifest_row(cls, row, adaptation=None):
        if len(row) != len(MANIFEST_COLUMNS):
            raise SchemaError(f"manifest row has {len(row)} columns, expected {len(MANIFEST_COLUMNS)}")
        sid, scan, index, seed, theta, root, cam, light, bg = row
        return cls(int(sid), str(scan), int(index), int(seed),
                   PoseVector(theta, root[:3], root[3:]), list(cam), list(light), bg,
                   dict(adaptation or {"kind": "none"}))

    def to_dict(self) -> dict:
        return {
            "schema": ANNOTATION_SCHEMA,
            "id": self.id,
            "scan": self.scan,
            "index": self.index,
            "seed": self.seed,
            "image": f"{self.stem}.png",
            "width": self.width,
            "height": self.height,
            "pose": {
                "theta": [float(v) for v in self.pose.theta],
                "root_orientation": [float(v) for v in self.pose.root_orientation],
                "root_translation": [float(v) for v in self.pose.root_translation],
            },
            "camera": {"radius": self.camera[0], "azimuth_deg": self.camera[1], "elevation_deg": self.camera[2]},
            "light": {"azimuth_deg": self.light[0], "elevation_deg": self.light[1],
                      "intensity": self.light[2], "ambient": self.light[3]},
            "background": self.background,
            "adaptation": self.adaptation,
            "bbox": self.bbox,
            "keypoints": [
                {"name": k.name, "x": k.x, "y": k.y, "depth": k.depth, "visibility": k.visibility}
                for k in self.keypoints
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SampleRecord":
        if d.get("schema") != ANNOTATION_SCHEMA:
            raise SchemaError(f"unknown annotation schema version {d.get('schema')!r}")
        try:
            kps = d["keypoints"]
            names = [k["name"] for k in kps]
            if names != list(KEYPOINT_NAMES):
                missing = [n for n in KEYPOINT_NAMES if n not in names]
                raise SchemaError(f"keypoint list does not match the 14-keypoint schema (missing {missing})")
            keypoints = []
            for k in kps:
                if k["visibility"] not in VISIBILITY:
                    raise SchemaError(f"bad visibility {k['visibility']!r} for {k['name']}")
                keypoints.append(JointAnnotation(k["name"], k["x"], k["y"], float(k["depth"]), k["visibility"]))
            pose = d["pose"]
            return cls(
                id=int(d["id"]), scan=str(d["scan"]), index=int(d["index"]), seed=int(d["seed"]),
                pose=PoseVector(pose["theta"], pose["root_orientation"], pose["root_translation"]),
                camera=[d["camera"]["radius"], d["camera"]["azimuth_deg"], d["camera"]["elevation_deg"]],
                light=[d["light"]["azimuth_deg"], d["light"]["elevation_deg"], d["light"]["intensity"],
                       d["light"]["ambient"]],
                background=d["background"], adaptation=d["adaptation"], keypoints=keypoints,
                bbox=d["bbox"], width=int(d["width"]), height=int(d["height"]),
            )
        except (KeyError, TypeError, IndexError) as exc:
            raise SchemaError(f"annotation is missing or has a malformed field: {exc}") from None


def dumps_annotation(record: SampleRecord) -> str:
    return json.dumps(record.to_dict(), indent=1) + "\n"


def write_annotation(record: SampleRecord, path):
    Path(path).write_text(dumps_annotation(record))


def read_annotation(path) -> SampleRecord:
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON: {exc}") from None
    try:
        return SampleRecord.from_dict(d)
    except SchemaError as exc:
        raise SchemaError(f"{path}: {exc}") from None


# --------------------------------------------------------------------------- sampling

def draw_sample(config: GenerationConfig, assets: Assets, scan_id: str, index: int, sample_id: int) -> SampleRecord:
    """Draw pose + environment for one sample and quantize them for the manifest."""
    seed = sample_seed(config.seed, scan_id, index)
    rng = np.random.default_rng([seed, 0])
    cons = assets.constraints
    kind = config.pose_source.get("kind", "uniform")
    if kind == "uniform":
        pose = sample_uniform(cons, rng)
    elif kind == "grid":
        pose = assets.grid[index % len(assets.grid)]
    else:
        n = assets.clip.frame_count
        if config.pose_source.get("frame_selection", "random") == "random":
            frame = int(rng.integers(n))
        else:
            frame = (index * int(config.pose_source.get("stride", 1))) % n
        pose = mocap_pose(assets.clip, assets.retarget, cons, frame)
    pose = PoseVector(
        np.clip(np.round(pose.theta, ANGLE_DECIMALS), cons.low, cons.high),
        np.clip(np.round(pose.root_orientation, ANGLE_DECIMALS), cons.root_low, cons.root_high),
        np.clip(np.round(pose.root_translation, TRANSLATION_DECIMALS), cons.translation_low, cons.translation_high),
    )

    c, lt = config.camera, config.light
    camera = [round(float(rng.uniform(*c["radius"])), CAMERA_DECIMALS),
              round(float(rng.uniform(*c["azimuth"])), CAMERA_DECIMALS),
              round(float(rng.uniform(*c["elevation"])), CAMERA_DECIMALS)]
    # rounding must not push the elevation onto the excluded pole
    camera[2] = min(max(camera[2], c["elevation"][0]), c["elevation"][1])
    light = [round(float(rng.uniform(*lt[k])), LIGHT_DECIMALS) for k in ("azimuth", "elevation", "intensity", "ambient")]
    light[2] = min(max(light[2], lt["intensity"][0]), lt["intensity"][1])
    light[3] = min(max(light[3], lt["ambient"][0]), lt["ambient"][1])
    background = assets.backgrounds[int(rng.integers(len(assets.backgrounds)))] if assets.backgrounds else None
    return SampleRecord(sample_id, scan_id, index, seed, pose, camera, light, background, dict(config.adaptation))


def render_record(config: GenerationConfig, assets: Assets, record: SampleRecord):
    """Render one sample from its record; returns (image, record with labels)."""
    scan = assets.scans[record.scan]
    transforms = forward_kinematics(scan.skeleton, record.pose)
    posed = apply_pose(scan.mesh, scan.binding, transforms)
    c = config.camera
    width, height = int(c["width"]), int(c["height"])
    cam_params = CameraParams(record.camera[0], math.radians(record.camera[1]), math.radians(record.camera[2]),
                              float(c["focal_length_mm"]), float(c["sensor_width_mm"]), width, height)
    camera = make_camera(cam_params, scan.target)
    light_dir = spherical_position(np.zeros(3), 1.0, math.radians(record.light[0]), math.radians(record.light[1]))
    light = LightParams(light_dir, record.light[2], record.light[3])
    fb = rasterize(posed, camera, light, scan.face_labels)

    fill = tuple(config.background.get("color", (128, 128, 128)))
    image = composite(fb, assets.background(record.background), fill=fill)
    ad = record.adaptation
    if ad.get("kind") == "gauss":
        image = adapt.gaussian_blur(image, float(ad["sigma"]))
    elif ad.get("kind") == "white_noise":
        image = adapt.add_white_noise(image, float(ad["std"]), np.random.default_rng([record.seed, 1]))

    keypoints = joint_world_positions(scan.skeleton, transforms)
    record.keypoints = annotate_joints(keypoint_array(keypoints), camera, fb.depth, list(KEYPOINT_NAMES),
                                       label_buffer=fb.labels, own_labels=scan.own_labels)
    record.bbox = foreground_bbox(fb.mask)
    record.width, record.height = width, height
    return image, record


def _write_sample(out_dir: Path, image, record: SampleRecord):
    scan_dir = out_dir / record.scan
    scan_dir.mkdir(parents=True, exist_ok=True)
    save_png(image, scan_dir / f"{record.stem}.png")
    write_annotation(record, scan_dir / f"{record.stem}.json")


# worker-process state; set once per process by _init_worker
_WORKER = {}


def _init_worker(config, assets, out_dir):
    _WORKER.update(config=config, assets=assets, out_dir=out_dir)


def _work(record: SampleRecord) -> SampleRecord:
    try:
        image, rec = render_record(_WORKER["config"], _WORKER["assets"], record)
        _write_sample(_WORKER["out_dir"], image, rec)
    except AvatarGenError:
        raise
    except Exception as exc:
        raise AvatarGenError(f"sample {record.id} ({record.scan}/{record.index}) failed: {exc}") from exc
    return rec


def _run(records, config, assets, out_dir, jobs):
    from .render import warmup

    warmup()
    jobs = max(1, int(jobs or os.cpu_count() or 1))
    if jobs == 1 or len(records) < 2:
        _init_worker(config, assets, out_dir)
        return [_work(r) for r in records]
    ctx = mp.get_context("fork") if "fork" in mp.get_all_start_methods() else None
    with ProcessPoolExecutor(max_workers=jobs, mp_context=ctx, initializer=_init_worker,
                             initargs=(config, assets, out_dir)) as pool:
        done = list(pool.map(_work, records, chunksize=max(1, len(records) // (jobs * 8))))
    return sorted(done, key=lambda r: r.id)


# --------------------------------------------------------------------------- manifest

@dataclass(eq=False)
class Manifest:
    header: dict
    records: list

    @property
    def config(self) -> dict:
        return self.header["config"]

    def dumps(self) -> str:
        lines = [json.dumps(self.header, separators=(",", ":"), sort_keys=True)]
        lines += [json.dumps(r.manifest_row(), separators=(",", ":")) for r in self.records]
        return "\n".join(lines) + "\n"

    def write(self, path):
        Path(path).write_text(self.dumps())


def read_manifest(path) -> Manifest:
    path = Path(path)
    if not path.is_file():
        raise AssetMissingError(f"manifest not found: {path}")
    lines = path.read_text().splitlines()
    if not lines:
        raise SchemaError(f"{path}: empty manifest")
    try:
        header = json.loads(lines[0])
        rows = [json.loads(ln) for ln in lines[1:] if ln.strip()]
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not a valid manifest: {exc}") from None
    if header.get("schema") != MANIFEST_SCHEMA:
        raise SchemaError(f"{path}: unknown manifest schema {header.get('schema')!r}")
    ad = header["config"].get("adaptation")
    records = [SampleRecord.from_manifest_row(r, ad) for r in rows]
    if [r.id for r in records] != list(range(len(records))):
        raise SchemaError(f"{path}: sample ids are not dense 0..N-1")
    return Manifest(header, records)


# --------------------------------------------------------------------------- entry points

def generate(config: GenerationConfig, out_dir=None, jobs: int | None = None) -> Manifest:
    """Render the whole dataset into ``out_dir`` and write its manifest last."""
    out = Path(out_dir or (config.resolve(config.output) if config.output else "out"))
    assets = load_assets(config)
    records = []
    for scan in config.scans:
        for i in range(config.images_per_scan):
            records.append(draw_sample(config, assets, scan.id, i, len(records)))
    out.mkdir(parents=True, exist_ok=True)
    logger.info("rendering %d samples into %s", len(records), out)
    done = _run(records, config, assets, out, jobs)
    header = {
        "schema": MANIFEST_SCHEMA,
        "config": config.snapshot(),
        "config_dir": str(config.base_dir.resolve()),
        "checksums": assets.checksums,
        "columns": MANIFEST_COLUMNS,
        "count": len(done),
        "quantization": {"angle_decimals": ANGLE_DECIMALS, "translation_decimals": TRANSLATION_DECIMALS},
    }
    manifest = Manifest(header, done)
    manifest.write(out / MANIFEST_NAME)
    return manifest


def replay(manifest: Manifest | str | os.PathLike, out_dir, assets_dir=None, jobs: int | None = None) -> list:
    """Re-render every manifest sample without re-sampling anything.

    Refuses to run (``ReplayError`` with a per-asset diff) when the current
    assets do not match the checksums recorded at generation time.
    """
    if not isinstance(manifest, Manifest):
        manifest = read_manifest(manifest)
    base = Path(assets_dir) if assets_dir is not None else Path(manifest.header.get("config_dir", "."))
    config = GenerationConfig.from_dict(dict(manifest.config), base_dir=base)
    assets = load_assets(config)
    expected = manifest.header.get("checksums", {})
    diffs = []
    for key in sorted(set(expected) | set(assets.checksums)):
        a, b = expected.get(key), assets.checksums.get(key)
        if a != b:
            diffs.append(f"  {key}: manifest {a} != current {b}")
    if diffs:
        raise ReplayError("asset checksums differ from the manifest:\n" + "\n".join(diffs))
    for r in manifest.records:
        if r.scan not in assets.scans:
            raise ReplayError(f"sample {r.id} refers to unknown scan '{r.scan}'")
        if r.background is not None:
            assets.background(r.background)   # fail early, naming the missing background
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = [SampleRecord(r.id, r.scan, r.index, r.seed, r.pose, r.camera, r.light, r.background,
                            dict(r.adaptation)) for r in manifest.records]
    done = _run(records, config, assets, out, jobs)
    return [out / r.scan / f"{r.stem}.png" for r in done]
