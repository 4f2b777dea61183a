import numpy as np
import pytest

from scene_recon_kit.errors import InputError
from scene_recon_kit.core.labels import RECON_CATEGORIES
from scene_recon_kit.core.mesh import TriMesh, box_mesh, concatenate_meshes
from scene_recon_kit.bsp.decoder import decode_planes, occupancy_many
from scene_recon_kit.metrics.bvh import MeshBvh, closest_point_sq_distances
from scene_recon_kit.metrics.distance import point_mesh_distance, pcr
from scene_recon_kit.metrics.distance import points_mesh_distances
from scene_recon_kit.metrics.sampling import sample_surface, chamfer
from scene_recon_kit.metrics.voxel import points_inside_mesh, voxel_iou
from scene_recon_kit.synth.templates import template_mesh
from scene_recon_kit.synth.generate import fixture_decoder


def square(z: float) -> TriMesh:
    vertices = np.array([[0, 0, z], [1, 0, z], [1, 1, z], [0, 1, z]], dtype=float)
    return TriMesh(vertices, np.array([[0, 1, 2], [0, 2, 3]]))


def brute_force_distances(mesh: TriMesh, points: np.ndarray) -> np.ndarray:
    tri = mesh.triangle_vertices()
    best = np.full(points.shape[0], np.inf)
    for a, b, c in tri:
        n = points.shape[0]
        sq = closest_point_sq_distances(
            points, np.tile(a, (n, 1)), np.tile(b, (n, 1)), np.tile(c, (n, 1))
        )
        best = np.minimum(best, sq)
    return np.sqrt(best)


def test_point_mesh_distance(unit_cube: TriMesh):
    assert point_mesh_distance(np.array([0.5, 0.5, 2.0]), unit_cube) == pytest.approx(1.0)
    assert point_mesh_distance(np.array([0.5, 0.5, 0.5]), unit_cube) == pytest.approx(0.5)
    assert point_mesh_distance(np.array([2.0, 2.0, 0.5]), unit_cube) == pytest.approx(
        np.sqrt(2)
    )
    assert point_mesh_distance(np.array([2.0, 2.0, 2.0]), unit_cube) == pytest.approx(
        np.sqrt(3)
    )


def test_bvh_matches_brute_force(icosphere: TriMesh, rng: np.random.Generator):
    points = rng.uniform(-2, 2, size=(300, 3))
    bvh = MeshBvh(icosphere)
    np.testing.assert_allclose(
        bvh.distances(points), brute_force_distances(icosphere, points), atol=1e-12
    )


def test_bvh_empty_mesh():
    with pytest.raises(InputError):
        MeshBvh(concatenate_meshes([]))


def test_segments_blocked(unit_cube: TriMesh):
    bvh = MeshBvh(unit_cube)
    camera = np.array([0.5, 0.5, 5.0])
    ends = np.array([[0.5, 0.5, 1.0], [0.5, 0.5, 0.0], [0.3, 0.2, 0.0], [3, 3, 0]])
    blocked = bvh.segments_blocked(np.tile(camera, (4, 1)), ends)
    np.testing.assert_array_equal(blocked, [False, True, True, False])


def test_pcr(unit_cube: TriMesh):
    points = np.array(
        [[0.5, 0.5, 1.01], [0.5, 0.5, 1.1], [0.5, 0.5, 0.99], [0.5, 0.5, 0.5]]
    )
    assert pcr(points, unit_cube, omega=0.047) == pytest.approx(0.5)
    assert pcr(points, unit_cube, omega=1.0) == pytest.approx(1.0)
    with pytest.raises(InputError):
        pcr(np.empty((0, 3)), unit_cube)


def test_pcr_samples_fully_covered(icosphere: TriMesh):
    samples = sample_surface(icosphere, 500, seed=3)
    np.testing.assert_allclose(points_mesh_distances(samples, icosphere), 0, atol=1e-9)
    assert pcr(samples, icosphere) == 1.0


def test_sample_surface(unit_cube: TriMesh):
    samples = sample_surface(unit_cube, 3000, seed=1)
    assert samples.shape == (3000, 3)
    np.testing.assert_array_equal(samples, sample_surface(unit_cube, 3000, seed=1))
    on_face = np.isclose(samples, 0) | np.isclose(samples, 1)
    assert np.all(on_face.any(axis=1))
    # faces are equally likely
    top = np.count_nonzero(np.isclose(samples[:, 2], 1))
    assert top / 3000 == pytest.approx(1 / 6, abs=0.03)
    with pytest.raises(InputError):
        sample_surface(concatenate_meshes([]), 10)


def test_chamfer_parallel_squares():
    distance = chamfer(square(0.0), square(0.2), n=2000)
    assert 0.38 <= distance <= 0.42
    assert chamfer(square(0.0), square(0.0), n=2000) == pytest.approx(0.0)


def test_pcr_grows_with_omega(icosphere: TriMesh, rng: np.random.Generator):
    directions = rng.normal(size=(400, 3))
    directions /= np.linalg.norm(directions, axis=1)[:, None]
    points = directions * rng.uniform(0.8, 1.2, size=(400, 1))
    omegas = [0.005, 0.02, 0.047, 0.1, 0.3]
    values = [pcr(points, icosphere, omega) for omega in omegas]
    assert values == sorted(values)
    assert values[0] < values[-1] == 1.0


def test_chamfer_symmetric(icosphere: TriMesh):
    chair = template_mesh("chair")
    assert chamfer(chair, icosphere, n=3000) == chamfer(icosphere, chair, n=3000)


def test_points_inside_sphere(icosphere: TriMesh, rng: np.random.Generator):
    points = rng.uniform(-1.2, 1.2, size=(2000, 3))
    radius = np.linalg.norm(points, axis=1)
    inside = points_inside_mesh(icosphere, points)
    assert np.all(inside[radius < 0.9])
    assert not np.any(inside[radius > 1.0])


@pytest.mark.parametrize("category", RECON_CATEGORIES)
def test_points_inside_matches_plane_occupancy(category: str, rng: np.random.Generator):
    """Template meshes and the fixture decoder planes agree on occupancy"""
    points = rng.uniform(-0.1, 1.1, size=(2000, 3))
    dec = fixture_decoder()
    planes = decode_planes(dec, np.zeros(dec.d_shape), category)
    np.testing.assert_array_equal(
        points_inside_mesh(template_mesh(category), points),
        occupancy_many(planes, points),
    )


def test_voxel_iou_identical(unit_cube: TriMesh):
    assert voxel_iou(unit_cube, unit_cube, voxel=0.1) == 1.0


def test_voxel_iou_half_overlap(unit_cube: TriMesh):
    shifted = box_mesh([0.5, 0, 0], [1.5, 1, 1])
    assert voxel_iou(unit_cube, shifted, voxel=0.01) == pytest.approx(1 / 3, abs=0.02)


def test_voxel_iou_whole_voxel_translation(icosphere: TriMesh):
    voxel = 0.0625
    offset = np.array([-0.37, -0.41, -0.23])
    chair = template_mesh("chair").transformed(0.9 * np.eye(3), offset)
    before = voxel_iou(icosphere, chair, voxel=voxel)
    shift = np.array([7.0, -3.0, 5.0]) * voxel
    moved_sphere = icosphere.transformed(np.eye(3), shift)
    moved_chair = chair.transformed(np.eye(3), shift)
    assert 0 < before < 1
    assert voxel_iou(moved_sphere, moved_chair, voxel=voxel) == pytest.approx(
        before, abs=1e-9
    )


def test_voxel_iou_disjoint_and_empty(unit_cube: TriMesh):
    far = box_mesh([3, 3, 3], [4, 4, 4])
    assert voxel_iou(unit_cube, far, voxel=0.1) == 0.0
    empty = concatenate_meshes([])
    assert voxel_iou(empty, empty) == 0.0
    assert voxel_iou(unit_cube, empty, voxel=0.1) == 0.0
    with pytest.raises(InputError):
        voxel_iou(unit_cube, unit_cube, voxel=0)


def test_voxel_iou_thin_shell():
    """Open surfaces still occupy voxels"""
    assert voxel_iou(square(0.0), square(0.0), voxel=0.1) == 1.0
