"""End-to-end orchestration: config files, fixture clips, clip and batch runs.

Pipeline per clip: per-frame pose solve -> camera-space trajectories ->
one-euro smoothing -> spline resampling to the snapshot rate -> optional
hand placement -> ray synthesis -> narrowband collapse -> clutter removal
-> spectrogram -> PNG / CSTR export.

Run configuration interchange is a JSON document versioned
"caster-scenario/1"; batch outputs get a "caster-manifest/1" manifest.
Per-clip seeds derive from the master seed as the first 8 bytes of
sha256("<master_seed>:<clip_id>"), so any subset of a batch reruns
identically.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .camera import CameraIntrinsics, Pose, project_points, solve_pnp
from .channel import (IsotropicGain, Scatterer, Scenario, TableGain,
                      collapse_clip, generate_environment)
from .dsp import (CLUTTER_MODES, Spectrogram, StftConfig, export,
                  remove_clutter, series_from_parts, stft)
from .errors import CasterError, ClipRejected, FormatError, NonConvergence
from .hand import DEFAULT_RADIUS_RATIO, SkeletonTopology, default_topology
from .motion import FilterParams, MotionClip, SnapshotSequence, resample, smooth

CONFIG_FORMAT = "caster-scenario/1"
MANIFEST_FORMAT = "caster-manifest/1"

GESTURE_KINDS = ("static", "push_pull", "beckon", "single_point_radial")

DEFAULT_INTRINSICS = CameraIntrinsics(focal=1000.0, cx=640.0, cy=360.0)

# stylized right hand, meters, wrist at the origin: thumb fans +x, fingers
# extend -y, small depth spread keeps the keypoints non-coplanar
HAND_SHAPE = np.array([
    [0.000, 0.000, 0.000],
    [0.025, -0.010, 0.006], [0.048, -0.022, 0.012],
    [0.065, -0.035, 0.016], [0.078, -0.046, 0.020],
    [0.030, -0.055, 0.002], [0.034, -0.082, 0.005],
    [0.036, -0.100, 0.008], [0.038, -0.115, 0.011],
    [0.010, -0.058, 0.000], [0.011, -0.088, 0.003],
    [0.012, -0.108, 0.006], [0.013, -0.125, 0.009],
    [-0.010, -0.055, 0.002], [-0.012, -0.083, 0.005],
    [-0.013, -0.102, 0.008], [-0.014, -0.117, 0.011],
    [-0.028, -0.048, 0.005], [-0.032, -0.070, 0.009],
    [-0.034, -0.085, 0.012], [-0.036, -0.098, 0.015],
])

# how strongly each keypoint takes part in a beckoning curl
_BECKON_WEIGHT = np.array([
    0.0,
    0.05, 0.10, 0.15, 0.20,
    0.15, 0.50, 0.80, 1.00,
    0.15, 0.50, 0.80, 1.00,
    0.15, 0.50, 0.80, 1.00,
    0.15, 0.50, 0.80, 1.00,
])


@dataclass(frozen=True)
class Placement:
    """Where the clip's mean hand center is moved before ray synthesis."""

    mode: str  # "fixed" or "uniform_axis"
    point: np.ndarray | None = None
    base: np.ndarray | None = None
    axis: np.ndarray | None = None
    low: float = 0.0
    high: float = 0.0

    def resolve(self, rng: np.random.Generator) -> np.ndarray:
        if self.mode == "fixed":
            return self.point
        u = rng.uniform(self.low, self.high)
        return self.base + u * self.axis


@dataclass
class RunConfig:
    """Everything a clip run needs besides the motion data itself."""

    scenario: Scenario
    intrinsics: CameraIntrinsics = DEFAULT_INTRINSICS
    topology: SkeletonTopology = field(default_factory=default_topology)
    radius_ratio: float = DEFAULT_RADIUS_RATIO
    filter_params: FilterParams = field(default_factory=FilterParams)
    stft_config: StftConfig = field(default_factory=StftConfig)
    snapshot_rate: float = 2000.0
    clutter_mode: str = "subtract_static"
    placement: Placement | None = None
    master_seed: int = 0
    drop_budget: float = 0.1
    max_residual_px: float = 20.0
    workers: int = 1
    _semantic: dict | None = field(default=None, repr=False)

    def __post_init__(self):
        if not self.snapshot_rate > 0.0:
            raise ValueError("snapshot_rate must be positive")
        if self.clutter_mode not in CLUTTER_MODES:
            raise ValueError(f"unknown clutter mode {self.clutter_mode!r}")
        if not 0.0 <= self.drop_budget < 1.0:
            raise ValueError("drop_budget must be in [0, 1)")

    @property
    def snapshot_interval(self) -> float:
        return 1.0 / self.snapshot_rate

    def semantic_dict(self) -> dict:
        """Normalized config content; the digest is computed over this."""
        if self._semantic is not None:
            return self._semantic
        return _config_to_dict(self)

    def digest(self) -> str:
        canon = json.dumps(self.semantic_dict(), sort_keys=True,
                           separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def _gain_to_dict(g):
    if isinstance(g, TableGain):
        return {"type": "table", "boresight": list(map(float, g.boresight)),
                "angles_deg": list(map(float, g.angles_deg)),
                "gains": list(map(float, g.gains))}
    return {"type": "isotropic"}


def _gain_from_dict(doc):
    if doc is None or doc.get("type", "isotropic") == "isotropic":
        return IsotropicGain()
    if doc["type"] == "table":
        return TableGain(doc["boresight"], doc["angles_deg"], doc["gains"])
    raise FormatError(f"unknown gain model {doc.get('type')!r}")


def _config_to_dict(cfg: RunConfig) -> dict:
    scen = cfg.scenario
    env = {"scatterers": [{"position": list(map(float, s.position)),
                           "rcs": float(s.rcs)} for s in scen.scatterers]}
    placement = None
    if cfg.placement is not None:
        if cfg.placement.mode == "fixed":
            placement = {"mode": "fixed",
                         "point": list(map(float, cfg.placement.point))}
        else:
            placement = {"mode": "uniform_axis",
                         "base": list(map(float, cfg.placement.base)),
                         "axis": list(map(float, cfg.placement.axis)),
                         "low": cfg.placement.low, "high": cfg.placement.high}
    return {
        "format": CONFIG_FORMAT,
        "scenario": {
            "tx": list(map(float, scen.tx_position)),
            "rx": list(map(float, scen.rx_position)),
            "carrier_frequency_hz": scen.carrier_frequency,
            "tx_gain": _gain_to_dict(scen.tx_gain),
            "rx_gain": _gain_to_dict(scen.rx_gain),
            "environment": env,
        },
        "intrinsics": {"focal": cfg.intrinsics.focal, "cx": cfg.intrinsics.cx,
                       "cy": cfg.intrinsics.cy},
        "topology": [list(e) for e in cfg.topology.edges],
        "radius_ratio": cfg.radius_ratio,
        "filter": {"min_cutoff_hz": cfg.filter_params.min_cutoff_hz,
                   "beta": cfg.filter_params.beta,
                   "velocity_smoothing": cfg.filter_params.velocity_smoothing},
        "stft": {"window_length": cfg.stft_config.window_length,
                 "hop": cfg.stft_config.hop,
                 "window_shape": cfg.stft_config.window_shape,
                 "fft_length": cfg.stft_config.fft_length},
        "snapshot_rate_hz": cfg.snapshot_rate,
        "clutter_mode": cfg.clutter_mode,
        "hand_center_placement": placement,
        "master_seed": cfg.master_seed,
        "pnp": {"max_residual_px": cfg.max_residual_px,
                "drop_budget": cfg.drop_budget},
        "workers": cfg.workers,
    }


def config_from_dict(doc: dict) -> RunConfig:
    """Build a RunConfig from a caster-scenario/1 document."""
    if doc.get("format") != CONFIG_FORMAT:
        raise FormatError(f"not a {CONFIG_FORMAT} document")
    try:
        sdoc = doc["scenario"]
        env = sdoc.get("environment", {})
        rx = np.asarray(sdoc["rx"], dtype=float)
        if "scatterers" in env:
            scatterers = [Scatterer(e["position"], float(e["rcs"]))
                          for e in env["scatterers"]]
        else:
            scatterers = generate_environment(int(env.get("seed", 0)),
                                              int(env.get("count", 0)), rx)
        scenario = Scenario(
            tx_position=np.asarray(sdoc["tx"], dtype=float),
            rx_position=rx,
            carrier_frequency=float(sdoc["carrier_frequency_hz"]),
            scatterers=scatterers,
            tx_gain=_gain_from_dict(sdoc.get("tx_gain")),
            rx_gain=_gain_from_dict(sdoc.get("rx_gain")),
        )
        idoc = doc.get("intrinsics")
        intrinsics = DEFAULT_INTRINSICS if idoc is None else CameraIntrinsics(
            float(idoc["focal"]), float(idoc["cx"]), float(idoc["cy"]))
        topology = default_topology() if "topology" not in doc else \
            SkeletonTopology(tuple(tuple(int(i) for i in e) for e in doc["topology"]))
        fdoc = doc.get("filter", {})
        filter_params = FilterParams(
            min_cutoff_hz=float(fdoc.get("min_cutoff_hz", 1.0)),
            beta=float(fdoc.get("beta", 0.5)),
            velocity_smoothing=float(fdoc.get("velocity_smoothing", 0.3)))
        tdoc = doc.get("stft", {})
        stft_config = StftConfig(
            window_length=int(tdoc.get("window_length", 250)),
            hop=int(tdoc.get("hop", 25)),
            window_shape=str(tdoc.get("window_shape", "hann")),
            fft_length=int(tdoc["fft_length"]) if "fft_length" in tdoc else None)
        pdoc = doc.get("hand_center_placement")
        placement = None
        if pdoc is not None:
            if pdoc["mode"] == "fixed":
                placement = Placement("fixed",
                                      point=np.asarray(pdoc["point"], dtype=float))
            elif pdoc["mode"] == "uniform_axis":
                placement = Placement("uniform_axis",
                                      base=np.asarray(pdoc["base"], dtype=float),
                                      axis=np.asarray(pdoc["axis"], dtype=float),
                                      low=float(pdoc["low"]),
                                      high=float(pdoc["high"]))
            else:
                raise FormatError(f"unknown placement mode {pdoc['mode']!r}")
        ndoc = doc.get("pnp", {})
        cfg = RunConfig(
            scenario=scenario, intrinsics=intrinsics, topology=topology,
            radius_ratio=float(doc.get("radius_ratio", DEFAULT_RADIUS_RATIO)),
            filter_params=filter_params, stft_config=stft_config,
            snapshot_rate=float(doc.get("snapshot_rate_hz", 2000.0)),
            clutter_mode=str(doc.get("clutter_mode", "subtract_static")),
            placement=placement, master_seed=int(doc.get("master_seed", 0)),
            drop_budget=float(ndoc.get("drop_budget", 0.1)),
            max_residual_px=float(ndoc.get("max_residual_px", 20.0)),
            workers=int(doc.get("workers", 1)))
    except FormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed config: {exc}") from exc
    return cfg


def load_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot read config {path}: {exc}") from exc
    return config_from_dict(doc)


def default_config(**overrides) -> RunConfig:
    """The stock 60.48 GHz desk scenario with a 20-scatterer environment."""
    rx = np.array([0.2, -0.1, 0.1])
    scenario = Scenario(
        tx_position=np.array([0.0, -0.1, -1.5]),
        rx_position=rx,
        carrier_frequency=60.48e9,
        scatterers=generate_environment(seed=2024, count=20, rx_position=rx))
    base = dict(scenario=scenario)
    base.update(overrides)
    return RunConfig(**base)


# ---------------------------------------------------------------------------
# synthetic gesture fixtures
# ---------------------------------------------------------------------------

def synth_gesture(kind: str, duration: float, fps: float, *, label: str | None = None,
                  seed: int | None = None, center=(0.0, 0.0, 0.6),
                  amplitude: float | None = None, period: float | None = None,
                  speed: float = 1.0, direction=(0.0, 0.0, -1.0),
                  intrinsics: CameraIntrinsics = DEFAULT_INTRINSICS) -> MotionClip:
    """Generate a kinematically plausible 21-keypoint clip without video.

    static              hand frozen at the center
    push_pull           rigid hand oscillating along +z (toward/away from
                        the link ends of the stock scenario)
    beckon              fingertips curling periodically, wrist fixed
    single_point_radial the whole hand shrunk to a near-point cluster
                        translating at constant `speed` along `direction`

    A seed jitters amplitude, period and phase so batches of distinct
    clips can be produced; seed=None keeps the nominal parameters.
    """
    if kind not in GESTURE_KINDS:
        raise ValueError(f"unknown gesture kind {kind!r}")
    if not duration > 0.0:
        raise ValueError("duration must be positive")
    n_frames = max(2, int(round(duration * fps)))
    dt = 1.0 / fps
    center = np.asarray(center, dtype=float)
    direction = np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)

    amp = amplitude if amplitude is not None else (0.05 if kind == "beckon" else 0.08)
    per = period if period is not None else (0.8 if kind == "beckon" else 1.0)
    phase = 0.0
    if seed is not None:
        rng = np.random.default_rng(seed)
        amp *= rng.uniform(0.8, 1.2)
        per *= rng.uniform(0.85, 1.15)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        center = center + rng.uniform(-0.02, 0.02, size=3)

    shape = HAND_SHAPE - HAND_SHAPE.mean(axis=0)
    times = np.arange(n_frames) * dt
    cam = np.empty((n_frames, 21, 3))
    if kind == "static":
        cam[:] = center + shape
    elif kind == "push_pull":
        offs = amp * np.sin(2.0 * np.pi * times / per + phase)
        cam[:] = center + shape
        cam[:, :, 2] += offs[:, None]
    elif kind == "beckon":
        curl = amp * np.sin(2.0 * np.pi * times / per + phase)
        cam[:] = center + shape
        cam[:, :, 2] += curl[:, None] * _BECKON_WEIGHT[None, :]
    else:  # single_point_radial
        cluster = 0.08 * shape  # ~1.5 cm cluster standing in for a point
        path = center + times[:, None] * (speed * direction)
        cam[:] = path[:, None, :] + cluster

    pixels = np.empty((n_frames, 21, 2))
    world = np.empty((n_frames, 21, 3))
    for k in range(n_frames):
        c = cam[k].mean(axis=0)
        world[k] = cam[k] - c
        pixels[k] = project_points(world[k], Pose(np.eye(3), c), intrinsics)
    return MotionClip(frame_interval=dt, label=label or kind, pixels=pixels,
                      world=world, intrinsics=intrinsics)


# ---------------------------------------------------------------------------
# clip and batch execution
# ---------------------------------------------------------------------------

@dataclass
class ClipResult:
    """Everything a single clip run produced."""

    spectrogram: Spectrogram
    series: np.ndarray
    static_sum: complex
    sequence: SnapshotSequence
    label: str
    seed: int | None
    n_frames: int
    bad_frames: list[int]
    placement_point: np.ndarray | None
    residual_rms_mean: float
    outputs: dict


def _solve_poses(clip: MotionClip, intrinsics, max_residual_px):
    """Per-frame camera-space keypoints; returns (camera (K,21,3), bad indices)."""
    k_frames = clip.n_frames
    cam = np.full((k_frames, 21, 3), np.nan)
    bad = []
    residuals = []
    prev_pose = None
    for k in range(k_frames):
        if clip.missing[k]:
            bad.append(k)
            continue
        try:
            pose, rms = solve_pnp(clip.pixels[k], clip.world[k], intrinsics,
                                  initial=prev_pose)
        except NonConvergence:
            bad.append(k)
            continue
        if rms > max_residual_px:
            bad.append(k)
            continue
        prev_pose = pose
        cam[k] = clip.world[k] @ pose.rotation.T + pose.translation
        residuals.append(rms)
    mean_rms = float(np.mean(residuals)) if residuals else float("nan")
    return cam, bad, mean_rms


def _infill(cam: np.ndarray, bad: list[int]) -> np.ndarray:
    """Linear in-fill of bad frames per scalar channel (ends held)."""
    if not bad:
        return cam
    k_frames = cam.shape[0]
    good = np.ones(k_frames, dtype=bool)
    good[bad] = False
    idx = np.arange(k_frames)
    flat = cam.reshape(k_frames, -1)
    for c in range(flat.shape[1]):
        flat[~good, c] = np.interp(idx[~good], idx[good], flat[good, c])
    return flat.reshape(cam.shape)


def derive_seed(master_seed: int, clip_id: str) -> int:
    digest = hashlib.sha256(f"{master_seed}:{clip_id}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def run_clip(clip: MotionClip, config: RunConfig, *, seed: int | None = None,
             out_dir=None, stem: str | None = None) -> ClipResult:
    """Run the full pipeline on one clip; optionally export PNG + CSTR."""
    intrinsics = clip.intrinsics if clip.intrinsics is not None else config.intrinsics
    cam, bad, mean_rms = _solve_poses(clip, intrinsics, config.max_residual_px)
    if len(bad) > config.drop_budget * clip.n_frames:
        raise ClipRejected(
            f"{len(bad)} of {clip.n_frames} frames unusable "
            f"(budget {config.drop_budget:.0%})")
    cam = _infill(cam, bad)

    smoothed = smooth(cam, clip.frame_interval, config.filter_params)
    seq = resample(smoothed, clip.frame_interval, config.snapshot_interval,
                   label=clip.label)

    placement_point = None
    if config.placement is not None:
        rng = np.random.default_rng(seed if seed is not None else config.master_seed)
        placement_point = config.placement.resolve(rng)
        seq = seq.translated(placement_point - seq.positions.mean(axis=(0, 1)))

    moving, static_sum = collapse_clip(seq.positions, config.scenario,
                                       config.topology, config.radius_ratio)
    series = series_from_parts(moving, static_sum, config.snapshot_rate)
    cleaned = remove_clutter(series, config.clutter_mode, static_sum)
    spec = stft(cleaned, config.stft_config, label=clip.label)

    outputs = {}
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        stem = stem or (clip.label or "clip")
        png = out_dir / f"{stem}.png"
        cstr = out_dir / f"{stem}.cstr"
        export(spec, png, "png_grayscale")
        export(spec, cstr, "binary_matrix_v1")
        outputs = {"png": png.name, "cstr": cstr.name}

    return ClipResult(
        spectrogram=spec, series=cleaned.samples, static_sum=static_sum,
        sequence=seq, label=clip.label, seed=seed, n_frames=clip.n_frames,
        bad_frames=bad, placement_point=placement_point,
        residual_rms_mean=mean_rms, outputs=outputs)


def run_batch(clips, config: RunConfig, out_dir) -> dict:
    """Run many (clip_id, MotionClip) pairs; write outputs and a manifest.

    Failures are recorded per clip and do not stop the batch. Returns the
    manifest document (also written to out_dir/manifest.json).
    """
    clips = list(clips)
    ids = [cid for cid, _ in clips]
    if len(set(ids)) != len(ids):
        raise ValueError("clip ids must be unique")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    digest = config.digest()

    def one(item):
        cid, clip = item
        seed = derive_seed(config.master_seed, cid)
        try:
            res = run_clip(clip, config, seed=seed, out_dir=out_dir, stem=cid)
        except CasterError as exc:
            return {"clip_id": cid, "label": clip.label, "seed": seed,
                    "status": "rejected", "error": str(exc), "outputs": None,
                    "config_digest": digest}
        return {"clip_id": cid, "label": res.label, "seed": seed,
                "status": "ok", "error": None, "outputs": res.outputs,
                "config_digest": digest}

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            entries = list(pool.map(one, clips))
    else:
        entries = [one(item) for item in clips]

    manifest = {"format": MANIFEST_FORMAT, "master_seed": config.master_seed,
                "config_digest": digest, "entries": entries}
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest
