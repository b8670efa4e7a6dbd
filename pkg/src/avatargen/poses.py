"""Pose generation on the constrained pose manifold.

Three sources of valid poses: independent uniform draws inside the
per-DOF bounds, a cartesian grid over a few DOFs, and frames of a
motion-capture clip mapped onto the rig and clamped into the bounds.
All user-facing files use degrees; everything in memory is radians.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
import yaml

from .errors import BvhParseError, ConstraintError, GridTooLargeError, RetargetError
from .rig import PoseVector, Skeleton, default_skeleton

logger = logging.getLogger(__name__)

ROOT_ANGLES = ("alpha", "beta", "gamma")
ROOT_AXES = ("x", "y", "z")
GRID_CAP = 10 ** 6


@dataclass(eq=False)
class ConstraintMatrix:
    """Closed intervals ``[low, high]`` (radians / meters) for every pose variable."""

    dof_names: tuple
    low: np.ndarray
    high: np.ndarray
    root_low: np.ndarray = field(default_factory=lambda: np.zeros(3))
    root_high: np.ndarray = field(default_factory=lambda: np.zeros(3))
    translation_low: np.ndarray = field(default_factory=lambda: np.zeros(3))
    translation_high: np.ndarray = field(default_factory=lambda: np.zeros(3))
    profile: str | None = None

    def __post_init__(self):
        self.dof_names = tuple(self.dof_names)
        for name in ("low", "high", "root_low", "root_high", "translation_low", "translation_high"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64).copy())
        if self.low.shape != (len(self.dof_names),) or self.high.shape != self.low.shape:
            raise ConstraintError("bounds do not match the dof list")
        for lo, hi, what in (
            (self.low, self.high, self.dof_names),
            (self.root_low, self.root_high, ROOT_ANGLES),
            (self.translation_low, self.translation_high, ROOT_AXES),
        ):
            if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
                raise ConstraintError("bounds must be finite")
            bad = np.nonzero(lo > hi)[0]
            if len(bad):
                raise ConstraintError(f"low > high for '{what[bad[0]]}'")
        self.dof_index = {n: i for i, n in enumerate(self.dof_names)}

    @property
    def dof_count(self) -> int:
        return len(self.dof_names)

    def bounds(self, name: str):
        """(low, high) of a dof name or of ``root_alpha`` / ``root_beta`` / ``root_gamma``."""
        if name in self.dof_index:
            i = self.dof_index[name]
            return self.low[i], self.high[i]
        if name.startswith("root_") and name[5:] in ROOT_ANGLES:
            i = ROOT_ANGLES.index(name[5:])
            return self.root_low[i], self.root_high[i]
        raise ConstraintError(f"unknown DOF name '{name}'")

    def contains(self, pose: PoseVector) -> bool:
        return not self.violations(pose)

    def violations(self, pose: PoseVector) -> list:
        out = []
        for names, lo, hi, val in (
            (self.dof_names, self.low, self.high, pose.theta),
            (ROOT_ANGLES, self.root_low, self.root_high, pose.root_orientation),
            (ROOT_AXES, self.translation_low, self.translation_high, pose.root_translation),
        ):
            for i in np.nonzero((val < lo) | (val > hi))[0]:
                out.append(names[i])
        return out

    def clamp(self, pose: PoseVector) -> PoseVector:
        return PoseVector(
            np.clip(pose.theta, self.low, self.high),
            np.clip(pose.root_orientation, self.root_low, self.root_high),
            np.clip(pose.root_translation, self.translation_low, self.translation_high),
        )


def _parse_bound(value, what, scale):
    if isinstance(value, str):
        parts = value.split("..")
        if len(parts) != 2:
            raise ConstraintError(f"{what}: expected 'low..high', got {value!r}")
        value = parts
    try:
        lo, hi = (float(v) for v in value)
    except (TypeError, ValueError):
        raise ConstraintError(f"{what}: expected a [low, high] pair, got {value!r}") from None
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ConstraintError(f"{what}: bounds must be finite")
    if lo > hi:
        raise ConstraintError(f"{what}: low {lo} > high {hi}")
    return lo * scale, hi * scale


def load_constraints(text: str, skeleton: Skeleton | None = None, profile: str | None = None) -> ConstraintMatrix:
    """Parse a YAML constraint document against the rig's DOF names."""
    skeleton = skeleton or default_skeleton()
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConstraintError(f"constraint file is not valid YAML: {exc}") from None
    if not isinstance(doc, dict):
        raise ConstraintError("constraint file must be a mapping")
    units = doc.get("units", "degrees")
    if units not in ("degrees", "radians"):
        raise ConstraintError(f"unknown units '{units}'")
    ang = math.pi / 180.0 if units == "degrees" else 1.0

    dofs = doc.get("dofs") or {}
    names = skeleton.dof_names
    unknown = [k for k in dofs if k not in names]
    if unknown:
        raise ConstraintError(f"unknown DOF name '{unknown[0]}'")
    missing = [n for n in names if n not in dofs]
    if missing:
        raise ConstraintError(f"no bounds given for DOF '{missing[0]}'")
    low, high = np.empty(len(names)), np.empty(len(names))
    for i, n in enumerate(names):
        low[i], high[i] = _parse_bound(dofs[n], n, ang)

    root_lo, root_hi = np.zeros(3), np.zeros(3)
    ro = doc.get("root_orientation")
    chosen = None
    if ro:
        if "profiles" in ro:
            chosen = profile or ro.get("default")
            if chosen not in ro["profiles"]:
                raise ConstraintError(f"unknown orientation profile '{chosen}'")
            ro = ro["profiles"][chosen]
        elif profile is not None:
            raise ConstraintError(f"constraint file has no orientation profiles (asked for '{profile}')")
        for i, k in enumerate(ROOT_ANGLES):
            if k in ro:
                root_lo[i], root_hi[i] = _parse_bound(ro[k], k, ang)
        extra = set(ro) - set(ROOT_ANGLES)
        if extra:
            raise ConstraintError(f"unknown root orientation entry '{sorted(extra)[0]}'")

    tr_lo, tr_hi = np.zeros(3), np.zeros(3)
    for i, k in enumerate(ROOT_AXES):
        if k in (doc.get("root_translation") or {}):
            tr_lo[i], tr_hi[i] = _parse_bound(doc["root_translation"][k], f"translation {k}", 1.0)
    return ConstraintMatrix(names, low, high, root_lo, root_hi, tr_lo, tr_hi, profile=chosen)


def default_constraints_text() -> str:
    return resources.files("avatargen").joinpath("data/constraints.yaml").read_text()


def default_constraints(profile: str | None = None, skeleton: Skeleton | None = None) -> ConstraintMatrix:
    return load_constraints(default_constraints_text(), skeleton, profile)


# --------------------------------------------------------------------------- samplers

def sample_uniform(constraints: ConstraintMatrix, rng: np.random.Generator) -> PoseVector:
    """One pose with every variable independently uniform inside its bounds.

    Draw order from ``rng``: joint angles, root orientation, root translation.
    """
    theta = rng.uniform(constraints.low, constraints.high)
    orient = rng.uniform(constraints.root_low, constraints.root_high)
    trans = rng.uniform(constraints.translation_low, constraints.translation_high)
    return PoseVector(theta, orient, trans)


def uniform_stream(constraints: ConstraintMatrix, seed: int):
    """Infinite iterator of uniform poses; draw ``i`` depends only on (seed, i)."""
    for i in itertools.count():
        yield sample_uniform(constraints, np.random.default_rng([seed, i]))


def sample_uniform_batch(constraints: ConstraintMatrix, rng: np.random.Generator, n: int):
    """Vectorized draws: ``(theta (n, d), orientation (n, 3), translation (n, 3))``."""
    theta = rng.uniform(constraints.low, constraints.high, size=(n, constraints.dof_count))
    orient = rng.uniform(constraints.root_low, constraints.root_high, size=(n, 3))
    trans = rng.uniform(constraints.translation_low, constraints.translation_high, size=(n, 3))
    return theta, orient, trans


def sample_grid(constraints: ConstraintMatrix, dof_subset, steps_per_dof, base_pose: PoseVector | None = None,
                cap: int = GRID_CAP) -> list:
    """Cartesian grid over ``dof_subset``; the last listed DOF varies fastest."""
    dof_subset = [constraints.dof_names[d] if isinstance(d, (int, np.integer)) else d for d in dof_subset]
    if not dof_subset:
        raise ConstraintError("grid needs at least one DOF")
    if isinstance(steps_per_dof, int):
        steps_per_dof = [steps_per_dof] * len(dof_subset)
    steps_per_dof = [int(s) for s in steps_per_dof]
    if len(steps_per_dof) != len(dof_subset):
        raise ConstraintError("need one step count per grid DOF")
    if any(s < 1 for s in steps_per_dof):
        raise ConstraintError("grid step counts must be >= 1")
    total = math.prod(steps_per_dof)
    if total > cap:
        raise GridTooLargeError(
            f"grid of {total} poses exceeds the cap of {cap}; reduce the DOF subset or the steps per DOF"
        )
    axes = []
    for name, steps in zip(dof_subset, steps_per_dof):
        lo, hi = constraints.bounds(name)
        axes.append(np.array([(lo + hi) / 2.0]) if steps == 1 else np.linspace(lo, hi, steps))

    base = base_pose.copy() if base_pose is not None else PoseVector.zeros(constraints.dof_count)
    out = []
    for values in itertools.product(*axes):
        pose = base.copy()
        for name, val in zip(dof_subset, values):
            if name in constraints.dof_index:
                pose.theta[constraints.dof_index[name]] = val
            else:
                pose.root_orientation[ROOT_ANGLES.index(name[5:])] = val
        out.append(pose)
    return out


# --------------------------------------------------------------------------- BVH

CHANNEL_NAMES = tuple(a + k for k in ("position", "rotation") for a in "XYZ")


@dataclass(frozen=True)
class BvhJoint:
    name: str
    parent: int
    offset: tuple
    channels: tuple
    end_site: bool = False


@dataclass(eq=False)
class MocapClip:
    joints: list
    frame_time: float
    frames: np.ndarray   # (frame_count, total_channels); rotations in degrees

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float64).reshape(-1, self.channel_count)
        if not self.frame_time > 0:
            raise BvhParseError("frame time must be positive")
        self._columns = {}
        col = 0
        for j in self.joints:
            for ch in j.channels:
                self._columns[(j.name, ch)] = col
                col += 1

    @property
    def channel_count(self) -> int:
        return sum(len(j.channels) for j in self.joints)

    @property
    def frame_count(self) -> int:
        return len(self.frames)

    def joint_names(self) -> list:
        return [j.name for j in self.joints if not j.end_site]

    def column(self, joint: str, channel: str) -> int:
        try:
            return self._columns[(joint, channel)]
        except KeyError:
            raise KeyError(f"clip has no channel {joint}.{channel}") from None

    def value(self, joint: str, channel: str, frame: int) -> float:
        return float(self.frames[frame, self.column(joint, channel)])


def parse_bvh(text: str) -> MocapClip:
    lines = text.splitlines()
    i = 0

    def next_tokens():
        nonlocal i
        while i < len(lines):
            toks = lines[i].split()
            i += 1
            if toks:
                return toks, i
        return None, i

    toks, ln = next_tokens()
    if not toks or toks[0] != "HIERARCHY":
        raise BvhParseError("file must start with HIERARCHY", line=ln)

    joints = []
    stack = []
    pending = None  # (name, end_site, line)
    while True:
        toks, ln = next_tokens()
        if toks is None:
            raise BvhParseError("missing MOTION section", line=ln)
        key = toks[0]
        if key == "MOTION":
            if stack or pending:
                raise BvhParseError("unbalanced braces before MOTION", line=ln)
            break
        if key in ("ROOT", "JOINT"):
            if len(toks) < 2:
                raise BvhParseError(f"{key} without a name", line=ln)
            if key == "ROOT" and stack:
                raise BvhParseError("ROOT inside another joint", line=ln)
            if key == "JOINT" and not stack:
                raise BvhParseError("JOINT outside of ROOT", line=ln)
            pending = (" ".join(toks[1:]), False, ln)
        elif key == "End":
            if not stack:
                raise BvhParseError("End Site outside of a joint", line=ln)
            pending = (joints[stack[-1]].name + "_end", True, ln)
        elif key == "{":
            if pending is None:
                raise BvhParseError("unexpected '{'", line=ln)
            name, end, _ = pending
            joints.append(BvhJoint(name, stack[-1] if stack else -1, (0.0, 0.0, 0.0), (), end))
            stack.append(len(joints) - 1)
            pending = None
        elif key == "}":
            if not stack:
                raise BvhParseError("unexpected '}'", line=ln)
            stack.pop()
        elif key == "OFFSET":
            if not stack or len(toks) != 4:
                raise BvhParseError("malformed OFFSET", line=ln)
            try:
                off = tuple(float(t) for t in toks[1:4])
            except ValueError:
                raise BvhParseError("malformed OFFSET value", line=ln) from None
            joints[stack[-1]] = _replace(joints[stack[-1]], offset=off)
        elif key == "CHANNELS":
            if not stack:
                raise BvhParseError("CHANNELS outside a joint", line=ln)
            try:
                n = int(toks[1])
            except (IndexError, ValueError):
                raise BvhParseError("malformed CHANNELS count", line=ln) from None
            chans = tuple(toks[2:])
            if len(chans) != n:
                raise BvhParseError(f"CHANNELS declares {n} channels but lists {len(chans)}", line=ln)
            for c in chans:
                if c not in CHANNEL_NAMES:
                    raise BvhParseError(f"unknown channel '{c}'", line=ln)
            if joints[stack[-1]].end_site:
                raise BvhParseError("End Site cannot have channels", line=ln)
            joints[stack[-1]] = _replace(joints[stack[-1]], channels=chans)
        else:
            raise BvhParseError(f"unexpected token '{key}' in HIERARCHY", line=ln)
    if not joints:
        raise BvhParseError("empty hierarchy")

    toks, ln = next_tokens()
    if not toks or toks[0] != "Frames:" or len(toks) != 2:
        raise BvhParseError("expected 'Frames: <count>'", line=ln)
    try:
        frame_count = int(toks[1])
    except ValueError:
        raise BvhParseError(f"bad frame count '{toks[1]}'", line=ln) from None
    toks, ln = next_tokens()
    if not toks or " ".join(toks[:2]) != "Frame Time:" or len(toks) != 3:
        raise BvhParseError("expected 'Frame Time: <seconds>'", line=ln)
    try:
        frame_time = float(toks[2])
    except ValueError:
        raise BvhParseError(f"bad frame time '{toks[2]}'", line=ln) from None
    if not frame_time > 0:
        raise BvhParseError("frame time must be positive", line=ln)

    n_ch = sum(len(j.channels) for j in joints)
    frames = np.empty((frame_count, n_ch))
    row = 0
    while True:
        toks, ln = next_tokens()
        if toks is None:
            break
        if row >= frame_count:
            raise BvhParseError(f"more frame rows than the declared {frame_count}", line=ln)
        if len(toks) != n_ch:
            raise BvhParseError(f"frame {row} has {len(toks)} values, expected {n_ch}", line=ln)
        try:
            frames[row] = [float(t) for t in toks]
        except ValueError:
            raise BvhParseError(f"frame {row} contains a non-numeric value", line=ln) from None
        row += 1
    if row != frame_count:
        raise BvhParseError(f"declared {frame_count} frames but found {row}")
    return MocapClip(joints, frame_time, frames)


def _replace(joint, **kw):
    d = dict(name=joint.name, parent=joint.parent, offset=joint.offset, channels=joint.channels,
             end_site=joint.end_site)
    d.update(kw)
    return BvhJoint(**d)


def write_bvh(clip: MocapClip) -> str:
    """Serialize a clip; values use shortest round-trip formatting."""
    out = ["HIERARCHY"]
    children = {i: [] for i in range(len(clip.joints))}
    for i, j in enumerate(clip.joints):
        if j.parent >= 0:
            children[j.parent].append(i)

    def emit(i, depth):
        j = clip.joints[i]
        pad = "  " * depth
        if j.end_site:
            out.append(f"{pad}End Site")
        else:
            out.append(f"{pad}{'ROOT' if j.parent < 0 else 'JOINT'} {j.name}")
        out.append(pad + "{")
        out.append(f"{pad}  OFFSET " + " ".join(repr(float(v)) for v in j.offset))
        if not j.end_site:
            out.append(f"{pad}  CHANNELS {len(j.channels)} " + " ".join(j.channels))
        for c in children[i]:
            emit(c, depth + 1)
        out.append(pad + "}")

    for i, j in enumerate(clip.joints):
        if j.parent < 0:
            emit(i, 0)
    out.append("MOTION")
    out.append(f"Frames: {clip.frame_count}")
    out.append(f"Frame Time: {clip.frame_time!r}")
    for row in clip.frames:
        out.append(" ".join(repr(float(v)) for v in row))
    return "\n".join(out) + "\n"


def load_bvh(path) -> MocapClip:
    with open(path) as f:
        return parse_bvh(f.read())


# --------------------------------------------------------------------------- retargeting

@dataclass(frozen=True)
class ChannelMapping:
    joint: str
    channel: str
    target: str        # dof name, root_alpha|beta|gamma or root_x|y|z
    sign: float = 1.0
    offset: float = 0.0   # radians for angles, meters for translation


@dataclass
class RetargetMap:
    mappings: list
    translation_scale: float = 0.01

    def __post_init__(self):
        targets = [m.target for m in self.mappings]
        dup = {t for t in targets if targets.count(t) > 1}
        if dup:
            raise RetargetError(f"target mapped more than once: {sorted(dup)[0]}")
        for m in self.mappings:
            if m.channel not in CHANNEL_NAMES:
                raise RetargetError(f"unknown channel '{m.channel}'")
            if m.sign not in (1.0, -1.0):
                raise RetargetError(f"sign must be +1 or -1 for {m.target}")


def load_retarget_map(text: str) -> RetargetMap:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise RetargetError(f"retarget map is not valid YAML: {exc}") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("channels"), list):
        raise RetargetError("retarget map needs a 'channels' list")
    maps = []
    for entry in doc["channels"]:
        try:
            target = str(entry["target"])
            is_translation = target in ("root_x", "root_y", "root_z")
            offset = float(entry.get("offset", 0.0))
            maps.append(ChannelMapping(
                str(entry["joint"]), str(entry["channel"]), target,
                float(entry.get("sign", 1.0)),
                offset if is_translation else math.radians(offset),
            ))
        except (KeyError, TypeError, ValueError) as exc:
            raise RetargetError(f"bad retarget entry {entry!r}: {exc}") from None
    return RetargetMap(maps, float(doc.get("translation_scale", 0.01)))


def default_retarget_text() -> str:
    return resources.files("avatargen").joinpath("data/cmu_retarget.yaml").read_text()


def _resolve(rmap: RetargetMap, clip: MocapClip, constraints: ConstraintMatrix):
    plan = []
    for m in rmap.mappings:
        try:
            col = clip.column(m.joint, m.channel)
        except KeyError:
            raise RetargetError(f"map references missing joint/channel {m.joint}.{m.channel}") from None
        if m.target in constraints.dof_index:
            plan.append(("theta", constraints.dof_index[m.target], col, m))
        elif m.target.startswith("root_") and m.target[5:] in ROOT_ANGLES:
            plan.append(("orient", ROOT_ANGLES.index(m.target[5:]), col, m))
        elif m.target.startswith("root_") and m.target[5:] in ROOT_AXES:
            plan.append(("trans", ROOT_AXES.index(m.target[5:]), col, m))
        else:
            raise RetargetError(f"unknown retarget target '{m.target}'")
    return plan


def mocap_pose(clip: MocapClip, rmap: RetargetMap, constraints: ConstraintMatrix, frame: int) -> PoseVector:
    """Map one clip frame onto the rig, clamping every variable into its bounds."""
    return _retarget_frames(clip, rmap, constraints, np.array([frame]))[0]


def _retarget_frames(clip, rmap, constraints, frames):
    plan = _resolve(rmap, clip, constraints)
    n = len(frames)
    theta = np.zeros((n, constraints.dof_count))
    orient = np.zeros((n, 3))
    trans = np.zeros((n, 3))
    for kind, idx, col, m in plan:
        raw = clip.frames[frames, col]
        if kind == "trans":
            trans[:, idx] = m.sign * raw * rmap.translation_scale + m.offset
        else:
            (theta if kind == "theta" else orient)[:, idx] = m.sign * np.radians(raw) + m.offset

    clamped_theta = np.clip(theta, constraints.low, constraints.high)
    clamped_orient = np.clip(orient, constraints.root_low, constraints.root_high)
    clamped_trans = np.clip(trans, constraints.translation_low, constraints.translation_high)
    if logger.isEnabledFor(logging.DEBUG):
        for f, row, crow in zip(frames, theta, clamped_theta):
            for i in np.nonzero(row != crow)[0]:
                logger.debug("frame %d: %s clamped from %.3f deg to %.3f deg", f,
                             constraints.dof_names[i], math.degrees(row[i]), math.degrees(crow[i]))
    return [PoseVector(t, o, tr) for t, o, tr in zip(clamped_theta, clamped_orient, clamped_trans)]


def retarget(clip: MocapClip, rmap: RetargetMap, constraints: ConstraintMatrix, frame_stride: int = 1) -> list:
    """One clamped pose per ``frame_stride``-th frame of ``clip``."""
    if frame_stride < 1:
        raise RetargetError("frame stride must be >= 1")
    return _retarget_frames(clip, rmap, constraints, np.arange(0, clip.frame_count, frame_stride))


def format_pose_table(poses, dof_names) -> str:
    """Poses as JSON-lines rows using the same pose columns as a dataset manifest."""
    import json

    header = {"kind": "pose-table", "columns": list(dof_names) + [f"root_{a}" for a in ROOT_ANGLES]
              + [f"root_{a}" for a in ROOT_AXES], "units": "radians/meters"}
    lines = [json.dumps(header, separators=(",", ":"))]
    for p in poses:
        row = [float(v) for v in p.theta] + [float(v) for v in p.root_orientation] + [float(v) for v in p.root_translation]
        lines.append(json.dumps(row, separators=(",", ":")))
    return "\n".join(lines) + "\n"
