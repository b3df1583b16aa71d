"""Ray-traced channel impulse responses for the moving hand.

Each snapshot's channel is a finite set of rays: 21 scattered off the hand
primitives, K off static environment scatterers and one line-of-sight path.
Every ray carries a complex field coefficient whose phase encodes the
carrier delay, so summing coefficients over snapshots yields the Doppler
structure of the motion.

Per-primitive scattering uses the bistatic geometric-optics cross section
of a prolate ellipsoid: with incident/scattered elevations th_t, th_r
measured from the long axis, azimuth separation dphi, and half-axes l, r,

              4 pi r^4 l^2 [(1 + cos th_t cos th_r) cos dphi + sin th_t sin th_r]^2
    sigma = -----------------------------------------------------------------------
            [r^2 (sin^2 th_t + sin^2 th_r + 2 sin th_t sin th_r cos dphi)
                                                 + l^2 (cos th_t + cos th_r)^2]^2

and the ray coefficient is

    a = lambda sqrt(sigma G_t G_r / ((4 pi)^3 (R_t R_r)^2)) exp(-j 2 pi f_c tau),
    tau = (R_t + R_r) / c.

The LoS path follows the free-space law lambda sqrt(G_t G_r) / (4 pi R).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DegeneratePrimitive
from .hand import (DEFAULT_RADIUS_RATIO, N_PRIMITIVES, Primitive,
                   SkeletonTopology, build_primitives, default_topology)

SPEED_OF_LIGHT = 299792458.0
FOUR_PI = 4.0 * math.pi
FOUR_PI_CUBED = FOUR_PI**3

# keypoint separations at or below this are corrupt data, not a hand
DEGENERATE_SEPARATION = 1e-9

LOS_TAG = ("los",)


@dataclass(frozen=True)
class Scatterer:
    """A static environment scatterer: position and radar cross section."""

    position: np.ndarray
    rcs: float

    def __post_init__(self):
        object.__setattr__(self, "position",
                           np.asarray(self.position, dtype=float).reshape(3))
        if self.rcs < 0.0:
            raise ValueError("rcs must be nonnegative")


class IsotropicGain:
    """Unit gain in every direction."""

    kind = "isotropic"

    def gain(self, origin, direction):
        direction = np.asarray(direction, dtype=float)
        if direction.ndim == 1:
            return 1.0
        return np.ones(direction.shape[:-1])


class TableGain:
    """Gain interpolated over the angle from a fixed boresight direction.

    angles_deg must start at 0 and increase; gains beyond the last angle
    hold the final value.
    """

    kind = "table"

    def __init__(self, boresight, angles_deg, gains):
        self.boresight = np.asarray(boresight, dtype=float)
        n = np.linalg.norm(self.boresight)
        if n == 0.0:
            raise ValueError("boresight must be a nonzero vector")
        self.boresight = self.boresight / n
        self.angles_deg = np.asarray(angles_deg, dtype=float)
        self.gains = np.asarray(gains, dtype=float)
        if self.angles_deg.ndim != 1 or self.angles_deg.shape != self.gains.shape:
            raise ValueError("angles_deg and gains must be equal-length vectors")
        if np.any(np.diff(self.angles_deg) <= 0) or self.angles_deg[0] != 0.0:
            raise ValueError("angles_deg must start at 0 and increase")
        if np.any(self.gains < 0.0):
            raise ValueError("gains must be nonnegative")

    def gain(self, origin, direction):
        direction = np.asarray(direction, dtype=float)
        norm = np.linalg.norm(direction, axis=-1)
        cosang = np.clip((direction @ self.boresight) / np.where(norm > 0, norm, 1.0),
                         -1.0, 1.0)
        ang = np.degrees(np.arccos(cosang))
        return np.interp(ang, self.angles_deg, self.gains)


@dataclass(frozen=True)
class Scenario:
    """Static description of one simulated link."""

    tx_position: np.ndarray
    rx_position: np.ndarray
    carrier_frequency: float
    scatterers: tuple = ()
    tx_gain: object = field(default_factory=IsotropicGain)
    rx_gain: object = field(default_factory=IsotropicGain)
    speed_of_light: float = SPEED_OF_LIGHT

    def __post_init__(self):
        tx = np.asarray(self.tx_position, dtype=float).reshape(3)
        rx = np.asarray(self.rx_position, dtype=float).reshape(3)
        object.__setattr__(self, "tx_position", tx)
        object.__setattr__(self, "rx_position", rx)
        object.__setattr__(self, "scatterers", tuple(self.scatterers))
        if not self.carrier_frequency > 0.0:
            raise ValueError("carrier_frequency must be positive")
        if np.array_equal(tx, rx):
            raise ValueError("transmitter and receiver must not coincide")

    @property
    def wavelength(self) -> float:
        return self.speed_of_light / self.carrier_frequency


@dataclass(frozen=True)
class BistaticGeometry:
    """Angles and ranges of one primitive relative to the link ends."""

    theta_t: float
    theta_r: float
    delta_phi: float
    range_t: float
    range_r: float


@dataclass(frozen=True)
class Ray:
    """One channel path: complex field coefficient, delay and origin tag."""

    amplitude: complex
    delay: float
    tag: tuple


@dataclass(frozen=True)
class ChannelSnapshot:
    """All rays of one quasi-static snapshot."""

    time: float
    rays: tuple

    def collapse(self) -> complex:
        return sum((r.amplitude for r in self.rays), 0j)


def _phase_coefficient(carrier_frequency: float, delay: float) -> complex:
    # phase = -2 pi f_c tau, reduced in units of carrier cycles before the
    # 2 pi multiply so huge arguments keep sub-cycle precision
    cycles = carrier_frequency * delay
    phase = -2.0 * math.pi * (cycles - math.floor(cycles))
    return complex(math.cos(phase), math.sin(phase))


def _sub3(a, b):
    return (float(a[0]) - float(b[0]), float(a[1]) - float(b[1]),
            float(a[2]) - float(b[2]))


def _dot3(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def _norm3(a):
    # plain sqrt of the component sum: keeps this path bit-compatible with
    # the compiled whole-clip kernel (BLAS norms round differently)
    return math.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])


def bistatic_geometry(primitive: Primitive, tx, rx) -> BistaticGeometry:
    """Elevations, azimuth separation and ranges for one primitive.

    Elevations are measured against the long axis; the azimuth separation
    comes from projecting both link ends on the plane through the center
    perpendicular to the axis. When an end sits exactly on the axis that
    projection vanishes and delta_phi is 0 by continuity.
    """
    v = (float(primitive.axis[0]), float(primitive.axis[1]),
         float(primitive.axis[2]))
    d_t = _sub3(primitive.center, tx)
    d_r = _sub3(primitive.center, rx)
    r_t = _norm3(d_t)
    r_r = _norm3(d_r)
    if r_t == 0.0 or r_r == 0.0:
        raise ValueError("link end coincides with a primitive center")
    ct = min(1.0, max(-1.0, _dot3(d_t, v) / r_t))
    cr = min(1.0, max(-1.0, _dot3(d_r, v) / r_r))
    perp_t = (d_t[0] - v[0] * (r_t * ct), d_t[1] - v[1] * (r_t * ct),
              d_t[2] - v[2] * (r_t * ct))
    perp_r = (d_r[0] - v[0] * (r_r * cr), d_r[1] - v[1] * (r_r * cr),
              d_r[2] - v[2] * (r_r * cr))
    n_t = _norm3(perp_t)
    n_r = _norm3(perp_r)
    if n_t * n_r > 1e-24:
        cdp = min(1.0, max(-1.0, _dot3(perp_t, perp_r) / (n_t * n_r)))
        delta_phi = math.acos(cdp)
    else:
        delta_phi = 0.0
    return BistaticGeometry(theta_t=math.acos(ct), theta_r=math.acos(cr),
                            delta_phi=delta_phi, range_t=r_t, range_r=r_r)


def ellipsoid_rcs(geometry: BistaticGeometry, half_long: float,
                  half_short: float) -> float:
    """Bistatic cross section of a prolate ellipsoid, m^2.

    Total on valid geometry; the 0/0 grazing corner case (both elevation
    terms vanish) returns 0.
    """
    if not (half_long > 0.0 and half_short > 0.0):
        raise ValueError("half axes must be positive")
    ct = math.cos(geometry.theta_t)
    st = math.sin(geometry.theta_t)
    cr = math.cos(geometry.theta_r)
    sr = math.sin(geometry.theta_r)
    cdp = math.cos(geometry.delta_phi)
    r2 = half_short * half_short
    l2 = half_long * half_long
    fac = (1.0 + ct * cr) * cdp + st * sr
    num = FOUR_PI * r2 * r2 * l2 * fac * fac
    den_in = r2 * (st * st + sr * sr + 2.0 * st * sr * cdp) + l2 * (ct + cr) ** 2
    den = den_in * den_in
    if den == 0.0:
        return 0.0
    return num / den


def ellipsoid_rcs_batch(theta_t, theta_r, delta_phi, half_long, half_short):
    """Vectorized cross section over arrays of angles and half axes."""
    ct = np.cos(theta_t)
    st = np.sin(theta_t)
    cr = np.cos(theta_r)
    sr = np.sin(theta_r)
    cdp = np.cos(delta_phi)
    return _kernels._rcs_from_angles_numpy(ct, st, cr, sr, cdp,
                                           np.asarray(half_long, dtype=float),
                                           np.asarray(half_short, dtype=float))


def primitive_ray(primitive: Primitive, scenario: Scenario,
                  tag: tuple = ("primitive", 0)) -> Ray:
    """The ray scattered off one primitive center."""
    geom = bistatic_geometry(primitive, scenario.tx_position, scenario.rx_position)
    sigma = ellipsoid_rcs(geom, primitive.half_length_long,
                          primitive.half_length_short)
    g_t = float(scenario.tx_gain.gain(scenario.tx_position,
                                      primitive.center - scenario.tx_position))
    g_r = float(scenario.rx_gain.gain(scenario.rx_position,
                                      primitive.center - scenario.rx_position))
    mag = scenario.wavelength * math.sqrt(
        sigma * g_t * g_r / (FOUR_PI_CUBED * (geom.range_t * geom.range_r) ** 2))
    delay = (geom.range_t + geom.range_r) / scenario.speed_of_light
    return Ray(amplitude=mag * _phase_coefficient(scenario.carrier_frequency, delay),
               delay=delay, tag=tag)


def target_related(primitives, scenario: Scenario) -> list[Ray]:
    """Rays off all hand primitives, in topology order."""
    return [primitive_ray(p, scenario, tag=("primitive", n))
            for n, p in enumerate(primitives)]


def environment_rays(scenario: Scenario) -> list[Ray]:
    """Time-invariant rays off the static scatterers (same law as the hand,
    with each scatterer's own cross section)."""
    rays = []
    for k, sc in enumerate(scenario.scatterers):
        d_t = sc.position - scenario.tx_position
        d_r = sc.position - scenario.rx_position
        r_t = float(np.linalg.norm(d_t))
        r_r = float(np.linalg.norm(d_r))
        g_t = float(scenario.tx_gain.gain(scenario.tx_position, d_t))
        g_r = float(scenario.rx_gain.gain(scenario.rx_position, d_r))
        mag = scenario.wavelength * math.sqrt(
            sc.rcs * g_t * g_r / (FOUR_PI_CUBED * (r_t * r_r) ** 2))
        delay = (r_t + r_r) / scenario.speed_of_light
        rays.append(Ray(
            amplitude=mag * _phase_coefficient(scenario.carrier_frequency, delay),
            delay=delay, tag=("scatterer", k)))
    return rays


def los_ray(scenario: Scenario) -> Ray:
    """Free-space direct path between the link ends."""
    d = scenario.rx_position - scenario.tx_position
    r_los = float(np.linalg.norm(d))
    g_t = float(scenario.tx_gain.gain(scenario.tx_position, d))
    g_r = float(scenario.rx_gain.gain(scenario.rx_position, -d))
    mag = scenario.wavelength * math.sqrt(g_t * g_r) / (FOUR_PI * r_los)
    delay = r_los / scenario.speed_of_light
    return Ray(amplitude=mag * _phase_coefficient(scenario.carrier_frequency, delay),
               delay=delay, tag=LOS_TAG)


def static_rays(scenario: Scenario) -> list[Ray]:
    """Everything that does not move: scatterers plus the LoS path."""
    return environment_rays(scenario) + [los_ray(scenario)]


def generate_environment(seed: int, count: int, rx_position) -> list[Scatterer]:
    """Seeded random environment: positions uniform in a 2 m cube centered
    at the receiver, cross sections normal (mean 0.005, std 0.001 m^2)
    truncated at zero."""
    if count < 0:
        raise ValueError("count must be nonnegative")
    rx = np.asarray(rx_position, dtype=float).reshape(3)
    rng = np.random.default_rng(seed)
    positions = rng.uniform(rx - 1.0, rx + 1.0, size=(count, 3))
    rcs = np.maximum(0.0, rng.normal(0.005, 0.001, size=count))
    return [Scatterer(p, float(s)) for p, s in zip(positions, rcs)]


def snapshot_channel(keypoints, scenario: Scenario, static: list[Ray],
                     topology: SkeletonTopology | None = None,
                     time: float = 0.0,
                     radius_ratio: float = DEFAULT_RADIUS_RATIO) -> ChannelSnapshot:
    """Full quasi-static channel of one snapshot: hand + environment + LoS."""
    topo = topology if topology is not None else default_topology()
    prims = build_primitives(keypoints, topo, radius_ratio)
    rays = target_related(prims, scenario)
    rays.extend(static)
    return ChannelSnapshot(time=time, rays=tuple(rays))


def clip_target_amplitudes(positions, scenario: Scenario,
                           topology: SkeletonTopology | None = None,
                           radius_ratio: float = DEFAULT_RADIUS_RATIO):
    """Hand-scattered ray coefficients for a whole snapshot sequence.

    positions : (T, 21, 3). Returns (amplitude (T, 21) complex,
    delay (T, 21) seconds). This is the hot path; it runs through the
    compiled kernel when numba is active.
    """
    pos = np.ascontiguousarray(positions, dtype=float)
    if pos.ndim != 3 or pos.shape[1:] != (21, 3):
        raise ValueError("positions must be (T, 21, 3)")
    topo = topology if topology is not None else default_topology()
    edge_i, edge_j = topo.as_arrays()

    centers = 0.5 * (pos[:, edge_i, :] + pos[:, edge_j, :])
    gain_t = np.ascontiguousarray(np.broadcast_to(
        scenario.tx_gain.gain(scenario.tx_position, centers - scenario.tx_position),
        centers.shape[:2]).astype(float))
    gain_r = np.ascontiguousarray(np.broadcast_to(
        scenario.rx_gain.gain(scenario.rx_position, centers - scenario.rx_position),
        centers.shape[:2]).astype(float))

    amp, delay, seg = _kernels.clip_rays(
        pos, edge_i, edge_j, scenario.tx_position, scenario.rx_position,
        scenario.wavelength, scenario.carrier_frequency, scenario.speed_of_light,
        radius_ratio, gain_t, gain_r)
    if np.min(seg) <= DEGENERATE_SEPARATION:
        t_bad, n_bad = np.unravel_index(int(np.argmin(seg)), seg.shape)
        raise DegeneratePrimitive(
            f"snapshot {t_bad}, edge {n_bad}: keypoints coincide "
            f"(separation {seg[t_bad, n_bad]:.3e} m)")
    return amp, delay


def collapse_clip(positions, scenario: Scenario,
                  topology: SkeletonTopology | None = None,
                  radius_ratio: float = DEFAULT_RADIUS_RATIO):
    """Narrowband complex sample per snapshot: moving part and static part.

    Returns (moving (T,) complex, static_sum complex). The overall series
    is their sum; the static part is constant across snapshots.
    """
    amp, _ = clip_target_amplitudes(positions, scenario, topology, radius_ratio)
    moving = amp.sum(axis=1)
    static_sum = sum((r.amplitude for r in static_rays(scenario)), 0j)
    return moving, static_sum
