from typing import List
import numpy as np
import pytest

from scene_recon_kit.errors import InputError
from scene_recon_kit.core.angles import angle_difference
from scene_recon_kit.core.box import local_corners
from scene_recon_kit.core.labels import default_label_system
from scene_recon_kit.core.scene import PointScene, InstanceProposal
from scene_recon_kit.clustering.config import ClusterConfig
from scene_recon_kit.clustering.components import radius_components
from scene_recon_kit.clustering.proposals import cluster_scene, dedup_proposals
from scene_recon_kit.clustering.proposals import multi_scale_cluster, point_iou
from scene_recon_kit.clustering.proposals import proposal_initial_box


def union_find_components(
    coords: np.ndarray, labels: np.ndarray, radius: float
) -> List[List[int]]:
    """Brute force components for checking the KD-tree version"""
    parent = list(range(len(coords)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(coords)):
        for j in range(i + 1, len(coords)):
            if labels[i] != labels[j]:
                continue
            if np.linalg.norm(coords[i] - coords[j]) <= radius:
                parent[find(i)] = find(j)
    groups: dict = {}
    for i in range(len(coords)):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda x: x[0])


@pytest.mark.parametrize("radius", [0.05, 0.1, 0.2])
def test_radius_components_matches_union_find(rng: np.random.Generator, radius):
    coords = rng.uniform(0, 1, size=(150, 3))
    labels = rng.integers(0, 3, size=150)
    groups = radius_components(coords, labels, radius)
    expected = union_find_components(coords, labels, radius)
    assert [x.tolist() for x in groups] == expected


def test_radius_components_empty():
    assert radius_components(np.empty((0, 3)), np.empty(0), 0.1) == []


def two_instance_scene(rng: np.random.Generator, n: int = 50) -> PointScene:
    """A chair, a table and some wall points with accurate offsets"""
    sys = default_label_system()
    centers = [np.array([0.0, 0.0, 0.5]), np.array([3.0, 0.0, 0.5])]
    points = []
    offsets = []
    categories = []
    for center, seg in zip(centers, ["chair", "table"]):
        pts = center + rng.uniform(-0.4, 0.4, size=(n, 3))
        noise = rng.normal(scale=0.001, size=(n, 3))
        points.append(pts)
        offsets.append(center - pts + noise)
        categories.append(np.full(n, sys.seg_id(seg)))
    wall = rng.uniform(-1, 1, size=(20, 3)) + np.array([1.5, 2.0, 1.0])
    points.append(wall)
    offsets.append(np.zeros((20, 3)))
    categories.append(np.full(20, sys.seg_id("wall")))
    n_total = 2 * n + 20
    return PointScene(
        np.concatenate(points),
        np.concatenate(categories),
        np.concatenate(offsets),
        np.zeros(n_total),
    )


def test_cluster_scene(rng: np.random.Generator):
    scene = two_instance_scene(rng)
    proposals = cluster_scene(scene, radius=0.03, min_points=10)
    assert len(proposals) == 2
    assert proposals[0].point_indices == list(range(50))
    assert proposals[0].category == "chair"
    assert proposals[1].point_indices == list(range(50, 100))
    assert proposals[1].category == "table"
    assert all(x.confidence == 1.0 for x in proposals)
    assert cluster_scene(scene, radius=0.03, min_points=51) == []


def test_cluster_scene_errors(rng: np.random.Generator):
    scene = two_instance_scene(rng)
    with pytest.raises(InputError):
        cluster_scene(scene, radius=0, min_points=10)
    with pytest.raises(InputError):
        cluster_scene(scene, radius=0.1, min_points=0)
    bad = PointScene(np.zeros((1, 3)), [40], np.zeros((1, 3)), [0])
    with pytest.raises(InputError):
        cluster_scene(bad, radius=0.1, min_points=1)


def test_multi_scale_cluster(rng: np.random.Generator):
    scene = two_instance_scene(rng)
    cfg = ClusterConfig(radii=[0.01, 0.03, 0.05], min_points=10)
    proposals = multi_scale_cluster(scene, cfg, default_label_system())
    assert len(proposals) == 2
    assert sorted(x.category for x in proposals) == ["chair", "table"]


def test_multi_scale_cluster_dual_set(rng: np.random.Generator):
    scene = two_instance_scene(rng)
    cfg = ClusterConfig(radii=[0.03], min_points=10, dual_set=True)
    proposals = multi_scale_cluster(scene, cfg)
    # raw points are too sparse at 3cm to form large components
    assert len(proposals) == 2


def test_dedup_subset():
    small = InstanceProposal(point_indices=list(range(8)))
    large = InstanceProposal(point_indices=list(range(10)))
    assert point_iou(small, large) == pytest.approx(0.8)
    kept = dedup_proposals([small, large], 0.75)
    assert kept == [large]
    kept = dedup_proposals([small, large], 0.85)
    assert kept == [large, small]


def test_dedup_ties():
    a = InstanceProposal(point_indices=[5, 6])
    b = InstanceProposal(point_indices=[1, 2])
    kept = dedup_proposals([a, b], 0.5)
    assert kept == [b, a]
    with pytest.raises(InputError):
        dedup_proposals([a, b], 0)


def test_default_confidence(rng: np.random.Generator):
    sys = default_label_system()
    n_a, n_b = 40, 20
    points = np.concatenate([np.zeros((n_a, 3)), np.full((n_b, 3), 5.0)])
    category = np.full(n_a + n_b, sys.seg_id("sofa"))
    scene = PointScene(points, category, np.zeros_like(points), np.zeros(n_a + n_b))
    proposals = cluster_scene(scene, radius=0.1, min_points=1)
    assert [x.confidence for x in proposals] == [1.0, 0.5]


def test_proposal_initial_box():
    corners = local_corners()
    scene = PointScene(corners, np.zeros(8, dtype=int), np.zeros((8, 3)), np.zeros(8))
    prop = InstanceProposal(point_indices=list(range(8)))
    box = proposal_initial_box(scene, prop)
    np.testing.assert_allclose(box.center, (0, 0, 0), atol=1e-12)
    np.testing.assert_allclose(box.scale, (1, 1, 1), atol=1e-12)
    assert box.z_rotation == pytest.approx(0)


def test_proposal_initial_box_angle_seam():
    corners = local_corners() * np.array([2.0, 1.0, 1.0])
    angles = np.array([np.pi - 0.1, -np.pi + 0.1] * 4)
    offsets = np.tile([1.0, 0.0, 0.0], (8, 1))
    scene = PointScene(corners, np.zeros(8, dtype=int), offsets, angles)
    prop = InstanceProposal(point_indices=list(range(8)))
    box = proposal_initial_box(scene, prop)
    assert abs(angle_difference(box.z_rotation, np.pi)) < 1e-9
    np.testing.assert_allclose(box.center, (1, 0, 0), atol=1e-12)
    np.testing.assert_allclose(box.scale, (2, 1, 1), atol=1e-9)
    arithmetic = proposal_initial_box(scene, prop, arithmetic_angle_mean=True)
    assert arithmetic.z_rotation == pytest.approx(0, abs=1e-12)


def test_proposal_initial_box_out_of_range():
    scene = PointScene(np.zeros((2, 3)), [0, 0], np.zeros((2, 3)), [0, 0])
    with pytest.raises(InputError):
        proposal_initial_box(scene, InstanceProposal(point_indices=[0, 5]))
