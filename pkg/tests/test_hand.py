import numpy as np
import pytest

from caster.errors import DegeneratePrimitive
from caster.hand import SkeletonTopology, build_primitives, default_topology
from conftest import random_rotation


def test_default_topology_shape():
    topo = default_topology()
    assert len(topo.edges) == 21
    assert topo.edges[0] == (0, 1)
    assert all(0 <= i <= 20 and 0 <= j <= 20 for i, j in topo.edges)


def test_default_topology_connected():
    # breadth-first reachability over the undirected edge graph
    adj = {i: set() for i in range(21)}
    for i, j in default_topology().edges:
        adj[i].add(j)
        adj[j].add(i)
    seen, frontier = {0}, [0]
    while frontier:
        nxt = [n for f in frontier for n in adj[f] if n not in seen]
        seen.update(nxt)
        frontier = nxt
    assert seen == set(range(21))


@pytest.mark.parametrize("edges, err", [
    (((0, 1),) * 21, "duplicate"),
    (tuple((i, i + 1) for i in range(20)) + ((0, 25),), "outside"),
    (tuple((i, i + 1) for i in range(20)) + ((3, 3),), "self-edge"),
])
def test_topology_rejects_bad_edges(edges, err):
    with pytest.raises(ValueError, match=err):
        SkeletonTopology(edges)


def test_topology_rejects_disconnected():
    # two components: a 0..18 chain plus an isolated 19-20 pair padded
    # with extra chain edges to keep the count at 21
    edges = tuple((i, i + 1) for i in range(18)) + ((19, 20),) \
        + ((0, 2), (1, 3))
    with pytest.raises(ValueError, match="connected"):
        SkeletonTopology(edges)


def test_build_primitives_single_edge_values(hand_points):
    pts = hand_points + [0.0, 0.0, 1.5]
    pts[0] = [0.0, 0.0, 1.0]
    pts[1] = [0.0, 0.0, 1.04]
    prims = build_primitives(pts, default_topology())
    # edge 0 joins keypoints 0 and 1
    p = prims[0]
    assert np.allclose(p.center, [0.0, 0.0, 1.02], atol=1e-15)
    assert p.half_length_long == pytest.approx(0.02, abs=1e-15)
    assert p.half_length_short == pytest.approx(0.01, abs=1e-15)
    assert np.allclose(p.axis, [0.0, 0.0, -1.0], atol=1e-15)


def test_build_primitives_degenerate():
    pts = np.tile(np.array([0.1, 0.2, 0.5]), (21, 1))
    with pytest.raises(DegeneratePrimitive):
        build_primitives(pts, default_topology())


def test_build_primitives_near_degenerate_threshold(hand_points):
    pts = hand_points.copy() + [0, 0, 1.0]
    pts[1] = pts[0] + [0.0, 0.0, 0.5e-9]  # below the 1e-9 separation floor
    with pytest.raises(DegeneratePrimitive):
        build_primitives(pts, default_topology())


def test_primitive_invariants_random_sets():
    rng = np.random.default_rng(11)
    topo = default_topology()
    for _ in range(50):
        pts = rng.normal(0.0, 0.05, (21, 3)) + [0, 0, 0.6]
        for p, (i, j) in zip(build_primitives(pts, topo), topo.edges):
            assert abs(np.linalg.norm(p.axis) - 1.0) < 1e-12
            assert p.half_length_short == p.half_length_long / 2
            # center is the midpoint: equidistant from both endpoints
            da = np.linalg.norm(p.center - pts[i])
            db = np.linalg.norm(p.center - pts[j])
            assert abs(da - db) <= 1e-12 * max(da, db)


def test_translation_equivariance(hand_points):
    topo = default_topology()
    base = hand_points + [0, 0, 0.6]
    shift = np.array([0.3, -0.2, 0.15])
    for p0, p1 in zip(build_primitives(base, topo),
                      build_primitives(base + shift, topo)):
        assert np.allclose(p1.center, p0.center + shift, atol=1e-12)
        assert p1.half_length_long == pytest.approx(p0.half_length_long, rel=1e-12)
        assert p1.half_length_short == pytest.approx(p0.half_length_short, rel=1e-12)
        assert np.allclose(p1.axis, p0.axis, atol=1e-12)


def test_rotation_equivariance(hand_points):
    topo = default_topology()
    rng = np.random.default_rng(5)
    base = hand_points + [0, 0, 0.6]
    for _ in range(10):
        rot = random_rotation(rng)
        for p0, p1 in zip(build_primitives(base, topo),
                          build_primitives(base @ rot.T, topo)):
            assert np.allclose(p1.center, rot @ p0.center, atol=1e-10)
            assert np.allclose(p1.axis, rot @ p0.axis, atol=1e-10)
            assert p1.half_length_long == pytest.approx(p0.half_length_long,
                                                        rel=1e-10)
