import numpy as np
import pytest

from caster.channel import (SPEED_OF_LIGHT, ChannelSnapshot, Ray, Scatterer,
                            Scenario, bistatic_geometry,
                            clip_target_amplitudes, ellipsoid_rcs,
                            ellipsoid_rcs_batch, environment_rays,
                            generate_environment, los_ray, primitive_ray,
                            snapshot_channel, static_rays, target_related)
from caster.errors import DegeneratePrimitive
from caster.hand import Primitive, build_primitives, default_topology
from conftest import go_ellipsoid_rcs

FC = 60.48e9


def _scenario(tx=(0.0, -0.1, -1.5), rx=(0.2, -0.1, 0.1), scatterers=()):
    return Scenario(tx_position=np.asarray(tx, dtype=float),
                    rx_position=np.asarray(rx, dtype=float),
                    carrier_frequency=FC, scatterers=scatterers)


def _prim(center=(0, 0, 0), axis=(0, 0, 1.0), half_long=0.02, ratio=0.5):
    return Primitive(center=np.asarray(center, dtype=float),
                     half_length_long=half_long,
                     half_length_short=ratio * half_long,
                     axis=np.asarray(axis, dtype=float))


# ---------------------------------------------------------------------------
# bistatic geometry
# ---------------------------------------------------------------------------

def test_geometry_on_axis():
    g = bistatic_geometry(_prim(), tx=np.array([0.0, 0, -1]), rx=np.array([0.0, 0, 1]))
    assert g.theta_t == pytest.approx(0.0, abs=1e-12)
    assert g.theta_r == pytest.approx(np.pi, abs=1e-12)


def test_geometry_broadside_opposed():
    g = bistatic_geometry(_prim(), tx=np.array([-1.0, 0, 0]), rx=np.array([1.0, 0, 0]))
    assert g.theta_t == pytest.approx(np.pi / 2, abs=1e-12)
    assert g.theta_r == pytest.approx(np.pi / 2, abs=1e-12)
    assert g.delta_phi == pytest.approx(np.pi, abs=1e-12)


def test_geometry_monostatic():
    tx = np.array([0.3, 0.4, -0.8])
    g = bistatic_geometry(_prim(), tx=tx, rx=tx.copy())
    assert g.delta_phi == 0.0
    assert g.theta_r == g.theta_t
    assert g.range_r == g.range_t


def test_geometry_on_axis_degeneracy_gives_zero_dphi():
    # both ends exactly on the long axis: the projections vanish and the
    # azimuth separation is 0 by continuity, not an error
    g = bistatic_geometry(_prim(), tx=np.array([0.0, 0, -2]), rx=np.array([0.0, 0, 3]))
    assert g.delta_phi == 0.0


def test_geometry_angle_ranges():
    rng = np.random.default_rng(8)
    for _ in range(200):
        axis = rng.normal(0, 1, 3)
        prim = _prim(center=rng.normal(0, 0.3, 3), axis=axis / np.linalg.norm(axis))
        g = bistatic_geometry(prim, rng.normal(0, 2, 3), rng.normal(0, 2, 3))
        assert 0.0 <= g.theta_t <= np.pi
        assert 0.0 <= g.theta_r <= np.pi
        assert 0.0 <= g.delta_phi <= np.pi
        assert g.range_t > 0 and g.range_r > 0


# ---------------------------------------------------------------------------
# ellipsoid cross section
# ---------------------------------------------------------------------------

def test_rcs_sphere_limit():
    # r = l, on-axis monostatic: geometric-optics sphere value pi r^2
    r = 0.01
    prim = _prim(half_long=r, ratio=1.0)
    g = bistatic_geometry(prim, np.array([0.0, 0, -1]), np.array([0.0, 0, -1 + 1e-12]))
    sigma = ellipsoid_rcs(g, r, r)
    assert sigma == pytest.approx(np.pi * r * r, rel=1e-9)
    assert sigma == pytest.approx(go_ellipsoid_rcs(r, r, r, (0, 0, 1.0)), rel=1e-9)


def test_rcs_broadside_prolate_limit():
    l, r = 0.02, 0.005
    prim = _prim(half_long=l, ratio=0.25)
    g = bistatic_geometry(prim, np.array([-1.0, 0, 0]), np.array([-1.0, 1e-12, 0]))
    sigma = ellipsoid_rcs(g, l, r)
    assert sigma == pytest.approx(np.pi * l * l, rel=1e-9)
    # semi-axes (r, r, l), viewed along x
    assert sigma == pytest.approx(go_ellipsoid_rcs(r, r, l, (1.0, 0, 0)), rel=1e-9)


def test_rcs_symmetric_in_link_ends():
    rng = np.random.default_rng(12)
    t_t, t_r = rng.uniform(0, np.pi, 1000), rng.uniform(0, np.pi, 1000)
    dphi = rng.uniform(0, np.pi, 1000)
    l = rng.uniform(1e-3, 0.05, 1000)
    s1 = ellipsoid_rcs_batch(t_t, t_r, dphi, l, l / 2)
    s2 = ellipsoid_rcs_batch(t_r, t_t, dphi, l, l / 2)
    assert np.array_equal(s1, s2)


def test_rcs_positive_finite_everywhere():
    rng = np.random.default_rng(13)
    n = 10**6
    sigma = ellipsoid_rcs_batch(rng.uniform(0, np.pi, n), rng.uniform(0, np.pi, n),
                                rng.uniform(0, np.pi, n), rng.uniform(1e-4, 0.1, n),
                                rng.uniform(1e-5, 0.05, n))
    assert np.all(np.isfinite(sigma))
    assert np.all(sigma >= 0.0)


def test_rcs_degenerate_corner_returns_zero():
    # theta_t = 0, theta_r = pi collapses numerator and denominator
    from caster.channel import BistaticGeometry
    g = BistaticGeometry(theta_t=0.0, theta_r=np.pi, delta_phi=0.0,
                         range_t=1.0, range_r=1.0)
    assert ellipsoid_rcs(g, 0.02, 0.01) == 0.0


# ---------------------------------------------------------------------------
# rays
# ---------------------------------------------------------------------------

def test_primitive_ray_magnitude_and_delay():
    # independently evaluated coefficient for sigma = 1e-4 m^2,
    # R_t = 1.5 m, R_r = 0.5 m, unit gains. A sphere with both link ends
    # in one half plane through the axis has sigma = pi r^2 exactly.
    scen = _scenario(tx=(1.2, 0, -0.9), rx=(0.3, 0, 0.4))
    r = np.sqrt(1e-4 / np.pi)
    prim = _prim(center=(0, 0, 0), half_long=r, ratio=1.0)
    geom = bistatic_geometry(prim, scen.tx_position, scen.rx_position)
    assert geom.range_t == pytest.approx(1.5, rel=1e-15)
    assert geom.range_r == pytest.approx(0.5, rel=1e-15)
    assert ellipsoid_rcs(geom, r, r) == pytest.approx(1e-4, rel=1e-12)
    ray = primitive_ray(prim, scen)
    lam = scen.wavelength
    expect = lam * np.sqrt(1e-4 / ((4 * np.pi) ** 3 * (1.5 * 0.5) ** 2))
    assert abs(ray.amplitude) == pytest.approx(expect, rel=1e-12)
    assert abs(ray.amplitude) == pytest.approx(1.484e-6, rel=1e-3)
    assert ray.delay == pytest.approx(2.0 / SPEED_OF_LIGHT, rel=1e-12)
    assert ray.delay == pytest.approx(6.671e-9, rel=1e-3)


def test_primitive_ray_zero_cross_section():
    # on-axis tx with opposed rx is the 0/0 corner: zero amplitude
    scen = _scenario(tx=(0, 0, -1.0), rx=(0, 0, 1.0))
    ray = primitive_ray(_prim(), scen)
    assert ray.amplitude == 0.0


def test_primitive_ray_phase_wraps_per_wavelength():
    # stretching the receive leg by exactly one wavelength along its own
    # direction keeps the angles (hence the cross section) and shifts the
    # phase by a full turn: the complex argument is unchanged
    prim = _prim(center=(0, 0.3, 0))
    scen1 = _scenario(tx=(0, 0, -1.0), rx=(1.0, 0, 0))
    lam = scen1.wavelength
    leg = scen1.rx_position - prim.center
    rx2 = prim.center + leg * (1.0 + lam / np.linalg.norm(leg))
    scen2 = _scenario(tx=(0, 0, -1.0), rx=rx2)
    r1 = primitive_ray(prim, scen1)
    r2 = primitive_ray(prim, scen2)
    assert (r2.delay - r1.delay) * SPEED_OF_LIGHT == pytest.approx(lam, rel=1e-9)
    dphase = np.angle(r2.amplitude / r1.amplitude)
    assert dphase == pytest.approx(0.0, abs=1e-6)


def test_target_related_map_semantics(hand_points):
    scen = _scenario()
    prims = build_primitives(hand_points + [0, 0, 0.6], default_topology())
    rays = target_related(prims, scen)
    assert len(rays) == 21
    assert [r.tag for r in rays] == [("primitive", n) for n in range(21)]
    # permuting primitives permutes rays identically
    perm = list(reversed(range(21)))
    rays_p = target_related([prims[i] for i in perm], scen)
    for n, i in enumerate(perm):
        assert rays_p[n].amplitude == rays[i].amplitude
    # identical primitives give identical rays
    same = target_related([prims[0]] * 21, scen)
    assert all(r.amplitude == same[0].amplitude for r in same)


def test_los_ray_paper_scenario_value():
    scen = _scenario()
    ray = los_ray(scen)
    r_los = np.sqrt(0.2**2 + 1.6**2)
    assert r_los == pytest.approx(1.6125, abs=1e-4)
    assert abs(ray.amplitude) == pytest.approx(scen.wavelength / (4 * np.pi * r_los),
                                               rel=1e-12)
    assert abs(ray.amplitude) == pytest.approx(2.447e-4, rel=1e-3)
    assert ray.delay == pytest.approx(r_los / SPEED_OF_LIGHT, rel=1e-12)


def test_los_amplitude_inverse_range():
    s1 = _scenario(tx=(0, 0, -1.0), rx=(0, 0, 1.0))
    s2 = _scenario(tx=(0, 0, -2.0), rx=(0, 0, 2.0))
    assert abs(los_ray(s1).amplitude) == pytest.approx(
        2 * abs(los_ray(s2).amplitude), rel=1e-12)


def test_environment_rays_empty():
    scen = _scenario()
    assert environment_rays(scen) == []
    assert [r.tag for r in static_rays(scen)] == [("los",)]


def test_environment_rays_match_primitive_law():
    # a scatterer follows the same amplitude law as a primitive with the
    # same cross section at the same spot
    pos = np.array([0.5, 0.2, 0.3])
    sigma = 3e-3
    scen = _scenario(scatterers=(Scatterer(pos, sigma),))
    ray = environment_rays(scen)[0]
    r_t = np.linalg.norm(pos - scen.tx_position)
    r_r = np.linalg.norm(pos - scen.rx_position)
    expect = scen.wavelength * np.sqrt(sigma / ((4 * np.pi) ** 3 * (r_t * r_r) ** 2))
    assert abs(ray.amplitude) == pytest.approx(expect, rel=1e-12)


def test_generate_environment_contract():
    rx = np.array([0.2, -0.1, 0.1])
    scs = generate_environment(seed=99, count=10, rx_position=rx)
    assert len(scs) == 10
    for sc in scs:
        assert np.all(np.abs(sc.position - rx) <= 1.0)
        assert sc.rcs >= 0.0
    again = generate_environment(seed=99, count=10, rx_position=rx)
    for a, b in zip(scs, again):
        assert np.array_equal(a.position, b.position) and a.rcs == b.rcs


def test_generate_environment_rcs_statistics():
    scs = generate_environment(seed=1, count=10**5, rx_position=np.zeros(3))
    mean = np.mean([s.rcs for s in scs])
    assert abs(mean - 0.005) <= 3 * 0.001 / np.sqrt(10**5)


# ---------------------------------------------------------------------------
# snapshots
# ---------------------------------------------------------------------------

def test_snapshot_channel_ray_count(hand_points):
    scen = _scenario(scatterers=tuple(
        generate_environment(3, 5, np.array([0.2, -0.1, 0.1]))))
    static = static_rays(scen)
    snap = snapshot_channel(hand_points + [0, 0, 0.6], scen, static)
    assert len(snap.rays) == 21 + 5 + 1


def test_snapshot_channel_hand_removed(hand_points):
    # zero-size cross sections leave exactly the static part
    scen = _scenario(scatterers=tuple(
        generate_environment(4, 3, np.array([0.2, -0.1, 0.1]))))
    static = static_rays(scen)
    snap = snapshot_channel(hand_points + [0, 0, 0.6], scen, static)
    static_only = sum(r.amplitude for r in static)
    hand_part = sum(r.amplitude for r in snap.rays[:21])
    assert snap.collapse() == pytest.approx(static_only + hand_part, rel=1e-12)
    zeroed = ChannelSnapshot(0.0, tuple(
        Ray(0.0, r.delay, r.tag) for r in snap.rays[:21]) + tuple(static))
    assert zeroed.collapse() == pytest.approx(static_only, rel=1e-12)


def test_snapshot_channel_deterministic(hand_points):
    scen = _scenario()
    static = static_rays(scen)
    a = snapshot_channel(hand_points + [0, 0, 0.6], scen, static)
    b = snapshot_channel(hand_points + [0, 0, 0.6], scen, static)
    assert all(x.amplitude == y.amplitude and x.delay == y.delay
               for x, y in zip(a.rays, b.rays))


def test_snapshot_channel_propagates_degenerate(hand_points):
    scen = _scenario()
    pts = np.tile(np.array([0.0, 0.0, 0.6]), (21, 1))
    with pytest.raises(DegeneratePrimitive):
        snapshot_channel(pts, scen, static_rays(scen))


# ---------------------------------------------------------------------------
# whole-clip path and physics properties
# ---------------------------------------------------------------------------

def test_clip_amplitudes_match_object_path(hand_points):
    rng = np.random.default_rng(21)
    scen = _scenario()
    topo = default_topology()
    pos = np.stack([hand_points + [0, 0, 0.6] + rng.normal(0, 0.01, (21, 3))
                    for _ in range(7)])
    amp, delay = clip_target_amplitudes(pos, scen, topo)
    for t in range(7):
        rays = target_related(build_primitives(pos[t], topo), scen)
        ref_amp = np.array([r.amplitude for r in rays])
        ref_delay = np.array([r.delay for r in rays])
        assert np.allclose(amp[t], ref_amp, rtol=1e-12, atol=1e-30)
        assert np.allclose(delay[t], ref_delay, rtol=1e-15, atol=0)


def test_clip_amplitudes_degenerate_raises():
    scen = _scenario()
    pos = np.tile(np.array([0.0, 0.0, 0.6]), (3, 21, 1))
    with pytest.raises(DegeneratePrimitive):
        clip_target_amplitudes(pos, scen)


def test_reciprocity_swap_link_ends(hand_points):
    scen = _scenario()
    swapped = _scenario(tx=scen.rx_position, rx=scen.tx_position)
    prims = build_primitives(hand_points + [0, 0, 0.6], default_topology())
    for p in prims:
        g1 = bistatic_geometry(p, scen.tx_position, scen.rx_position)
        g2 = bistatic_geometry(p, swapped.tx_position, swapped.rx_position)
        s1 = ellipsoid_rcs(g1, p.half_length_long, p.half_length_short)
        s2 = ellipsoid_rcs(g2, p.half_length_long, p.half_length_short)
        assert s1 == pytest.approx(s2, rel=1e-12)
        r1 = primitive_ray(p, scen)
        r2 = primitive_ray(p, swapped)
        assert abs(r1.amplitude) == pytest.approx(abs(r2.amplitude), rel=1e-12)


def test_amplitude_range_scaling():
    # scaling both ranges by s: target rays fall as 1/s^2, LoS as 1/s
    prim = _prim(center=(0, 0, 0), axis=(0, 1.0, 0))
    s = 3.0
    near = _scenario(tx=(0, 0, -1.0), rx=(0.5, 0, 0.8))
    far = _scenario(tx=(0, 0, -s), rx=(0.5 * s, 0, 0.8 * s))
    a_near = primitive_ray(prim, near).amplitude
    a_far = primitive_ray(prim, far).amplitude
    assert abs(a_near) == pytest.approx(s**2 * abs(a_far), rel=1e-12)
    assert abs(los_ray(near).amplitude) == pytest.approx(
        s * abs(los_ray(far).amplitude), rel=1e-12)


def test_doppler_phase_increment(hand_points):
    # a primitive moving radially changes each ray's phase by
    # -2 pi f_c rdot dt / c per snapshot
    scen = _scenario(tx=(0, 0, 0), rx=(0.02, 0, 0))
    dt_s = 1.0 / 2000.0
    v = 1.0
    pos = np.stack([hand_points * 0.05 + [0, 0, 0.7 - v * k * dt_s]
                    for k in range(3)])
    amp, delay = clip_target_amplitudes(pos, scen, default_topology())
    for n in range(21):
        got = np.angle(amp[1, n] / amp[0, n])
        rdot = (delay[1, n] - delay[0, n]) * SPEED_OF_LIGHT / dt_s
        expect = -2 * np.pi * FC * rdot * dt_s / SPEED_OF_LIGHT
        expect = (expect + np.pi) % (2 * np.pi) - np.pi
        assert got == pytest.approx(expect, rel=1e-6, abs=1e-9)


def test_static_rays_invariant_across_snapshots():
    scen = _scenario(scatterers=tuple(
        generate_environment(7, 8, np.array([0.2, -0.1, 0.1]))))
    a = static_rays(scen)
    b = static_rays(scen)
    assert all(x.amplitude == y.amplitude for x, y in zip(a, b))
