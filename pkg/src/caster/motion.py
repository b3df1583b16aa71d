"""Keypoint trajectory smoothing, snapshot resampling and motion file I/O.

Camera-space trajectories arrive at the video frame rate, get smoothed by
an adaptive one-euro low-pass filter, and are then resampled onto the much
denser snapshot grid with a natural cubic spline per scalar channel.

Motion clips interchange as JSON documents versioned "caster-motion/1":

  {"format": "caster-motion/1", "fps": 30.0, "label": "push_pull",
   "intrinsics": {"focal": 1000.0, "cx": 640.0, "cy": 360.0},
   "frames": [{"t": 0.0, "pixel": [[u, v] x21], "world": [[x, y, z] x21]}]}

Frames a detector failed on may be omitted from the document; the loader
rebuilds the uniform frame grid and marks the holes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .camera import CameraIntrinsics
from .errors import FormatError, InsufficientFrames

MOTION_FORMAT = "caster-motion/1"
N_KEYPOINTS = 21


@dataclass(frozen=True)
class FilterParams:
    """One-euro filter knobs.

    min_cutoff_hz is the cutoff at rest, beta raises the cutoff with the
    smoothed speed estimate, velocity_smoothing is the fixed factor of the
    velocity low-pass.
    """

    min_cutoff_hz: float = 1.0
    beta: float = 0.5
    velocity_smoothing: float = 0.3

    def __post_init__(self):
        if not self.min_cutoff_hz > 0.0:
            raise ValueError("min_cutoff_hz must be positive")
        if self.beta < 0.0:
            raise ValueError("beta must be nonnegative")
        if not 0.0 < self.velocity_smoothing <= 1.0:
            raise ValueError("velocity_smoothing must be in (0, 1]")


@dataclass
class MotionClip:
    """Per-frame keypoint observations on a uniform time grid.

    pixels : (K, 21, 2) detector pixel coordinates
    world  : (K, 21, 3) detector hand-world coordinates, meters
    missing: (K,) mask, True where the frame had no detection (the arrays
             hold NaN placeholders there)
    """

    frame_interval: float
    label: str
    pixels: np.ndarray
    world: np.ndarray
    intrinsics: CameraIntrinsics | None = None
    missing: np.ndarray = field(default=None)

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=float)
        self.world = np.asarray(self.world, dtype=float)
        k = self.pixels.shape[0]
        if k < 2:
            raise ValueError("a clip needs at least 2 frames")
        if self.pixels.shape != (k, N_KEYPOINTS, 2):
            raise ValueError(f"pixels must be (K, {N_KEYPOINTS}, 2)")
        if self.world.shape != (k, N_KEYPOINTS, 3):
            raise ValueError(f"world must be (K, {N_KEYPOINTS}, 3)")
        if not self.frame_interval > 0.0:
            raise ValueError("frame_interval must be positive")
        if self.missing is None:
            self.missing = np.zeros(k, dtype=bool)
        else:
            self.missing = np.asarray(self.missing, dtype=bool).reshape(k)
        present = ~self.missing
        if present.sum() < 2:
            raise ValueError("a clip needs at least 2 detected frames")
        if not np.all(np.isfinite(self.pixels[present])):
            raise ValueError("detected pixel coordinates must be finite")
        if not np.all(np.isfinite(self.world[present])):
            raise ValueError("detected world coordinates must be finite")

    @property
    def n_frames(self) -> int:
        return self.pixels.shape[0]

    @property
    def timestamps(self) -> np.ndarray:
        return np.arange(self.n_frames) * self.frame_interval

    @property
    def fps(self) -> float:
        return 1.0 / self.frame_interval


@dataclass(frozen=True)
class SnapshotSequence:
    """21 keypoint positions in camera coordinates at the snapshot rate."""

    snapshot_interval: float
    positions: np.ndarray
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "positions",
                           np.asarray(self.positions, dtype=float))
        if not self.snapshot_interval > 0.0:
            raise ValueError("snapshot_interval must be positive")
        if self.positions.ndim != 3 or self.positions.shape[0] < 2 \
                or self.positions.shape[2] != 3:
            raise ValueError("positions must be (T >= 2, N, 3)")
        if not np.all(np.isfinite(self.positions)):
            raise ValueError("positions must be finite")

    @property
    def n_snapshots(self) -> int:
        return self.positions.shape[0]

    @property
    def timestamps(self) -> np.ndarray:
        return np.arange(self.n_snapshots) * self.snapshot_interval

    def translated(self, offset) -> "SnapshotSequence":
        return SnapshotSequence(self.snapshot_interval,
                                self.positions + np.asarray(offset, dtype=float),
                                self.label)


def smooth(trajectory, frame_interval: float, params: FilterParams) -> np.ndarray:
    """One-euro filter each scalar channel of a (K, 21, 3) trajectory.

    The first sample passes through unchanged and the velocity estimate
    starts from zero; every later sample blends toward the raw value with
    a factor that grows with the smoothed speed of that channel.
    """
    traj = np.asarray(trajectory, dtype=float)
    if traj.ndim != 3 or traj.shape[0] < 2:
        raise ValueError("trajectory must be (K >= 2, N, 3)")
    if not np.all(np.isfinite(traj)):
        raise ValueError("trajectory must be finite")
    k = traj.shape[0]
    flat = np.ascontiguousarray(traj.reshape(k, -1))
    out = _kernels.one_euro(flat, float(frame_interval), params.min_cutoff_hz,
                            params.beta, params.velocity_smoothing)
    return out.reshape(traj.shape)


def resample(smoothed, frame_interval: float, snapshot_interval: float,
             label: str = "") -> SnapshotSequence:
    """Resample a (K, 21, 3) trajectory onto the uniform snapshot grid.

    A natural cubic spline (zero end curvature) is fit per scalar channel
    through the frame-rate samples and evaluated at t = 0, dt_s, 2 dt_s, ...
    up to the last frame time. Clips shorter than 4 frames fall back to
    linear interpolation.
    """
    traj = np.asarray(smoothed, dtype=float)
    if traj.ndim != 3:
        raise ValueError("trajectory must be (K, N, 3)")
    k = traj.shape[0]
    if k < 2:
        raise InsufficientFrames(f"need at least 2 frames, got {k}")
    if not snapshot_interval > 0.0:
        raise ValueError("snapshot_interval must be positive")
    if snapshot_interval > frame_interval:
        raise ValueError("snapshot rate must be at least the frame rate")

    knots = np.arange(k) * frame_interval
    span = knots[-1]
    n_out = int(np.floor(span / snapshot_interval)) + 1
    grid = np.arange(n_out) * snapshot_interval

    flat = np.ascontiguousarray(traj.reshape(k, -1))
    if k >= 4:
        coeffs = _kernels.spline_coeffs(knots, flat)
        idx = np.clip(np.searchsorted(knots, grid, side="right") - 1, 0, k - 2)
        out = _kernels.spline_eval(knots, flat, coeffs, idx.astype(np.int64), grid)
    else:
        out = np.empty((n_out, flat.shape[1]))
        for c in range(flat.shape[1]):
            out[:, c] = np.interp(grid, knots, flat[:, c])
    return SnapshotSequence(snapshot_interval,
                            out.reshape(n_out, traj.shape[1], 3), label)


# ---------------------------------------------------------------------------
# caster-motion/1 files
# ---------------------------------------------------------------------------

def save_motion(clip: MotionClip, path) -> None:
    """Write a clip as a caster-motion/1 JSON document (detected frames only)."""
    frames = []
    for k in range(clip.n_frames):
        if clip.missing[k]:
            continue
        frames.append({
            "t": round(k * clip.frame_interval, 9),
            "pixel": [[float(u), float(v)] for u, v in clip.pixels[k]],
            "world": [[float(x), float(y), float(z)] for x, y, z in clip.world[k]],
        })
    doc = {
        "format": MOTION_FORMAT,
        "fps": clip.fps,
        "label": clip.label,
        "frames": frames,
    }
    if clip.intrinsics is not None:
        doc["intrinsics"] = {"focal": clip.intrinsics.focal,
                             "cx": clip.intrinsics.cx,
                             "cy": clip.intrinsics.cy}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_motion(path) -> MotionClip:
    """Read a caster-motion/1 document, rebuilding the uniform frame grid.

    Gaps left by dropped detector frames become masked (missing) frames so
    downstream code can budget and in-fill them.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot read motion file {path}: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != MOTION_FORMAT:
        raise FormatError(f"{path}: not a {MOTION_FORMAT} document")
    try:
        fps = float(doc["fps"])
        label = str(doc.get("label", ""))
        raw_frames = doc["frames"]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: malformed motion document: {exc}") from exc
    if fps <= 0.0:
        raise FormatError(f"{path}: fps must be positive")
    if not isinstance(raw_frames, list) or len(raw_frames) < 2:
        raise FormatError(f"{path}: need at least 2 frames")

    dt = 1.0 / fps
    times = []
    for fr in raw_frames:
        try:
            times.append(float(fr["t"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"{path}: frame without timestamp: {exc}") from exc
    times = np.asarray(times)
    if np.any(np.diff(times) <= 0):
        raise FormatError(f"{path}: timestamps must be strictly increasing")
    index = np.round((times - times[0]) / dt).astype(int)
    if np.any(np.abs(times - times[0] - index * dt) > 1e-6):
        raise FormatError(f"{path}: timestamps do not sit on a 1/fps grid")
    if len(np.unique(index)) != len(index):
        raise FormatError(f"{path}: duplicate frame timestamps")

    k = int(index[-1]) + 1
    pixels = np.full((k, N_KEYPOINTS, 2), np.nan)
    world = np.full((k, N_KEYPOINTS, 3), np.nan)
    missing = np.ones(k, dtype=bool)
    for slot, fr in zip(index, raw_frames):
        px = np.asarray(fr.get("pixel"), dtype=float)
        wd = np.asarray(fr.get("world"), dtype=float)
        if px.shape != (N_KEYPOINTS, 2) or wd.shape != (N_KEYPOINTS, 3):
            raise FormatError(
                f"{path}: frame {slot}: expected {N_KEYPOINTS} pixel and world points")
        pixels[slot] = px
        world[slot] = wd
        missing[slot] = False

    intr = None
    if "intrinsics" in doc:
        try:
            intr = CameraIntrinsics(float(doc["intrinsics"]["focal"]),
                                    float(doc["intrinsics"]["cx"]),
                                    float(doc["intrinsics"]["cy"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"{path}: malformed intrinsics: {exc}") from exc
    return MotionClip(frame_interval=dt, label=label, pixels=pixels,
                      world=world, intrinsics=intr, missing=missing)
