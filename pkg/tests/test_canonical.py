import numpy as np
import pytest

from scene_recon_kit.core.box import OrientedBox7DoF, box_corners, local_corners
from scene_recon_kit.core.mesh import TriMesh
from scene_recon_kit.canonical import CanonicalFrame, CanonicalTransform
from scene_recon_kit.canonical import canonicalize, place_mesh


@pytest.fixture
def box() -> OrientedBox7DoF:
    return OrientedBox7DoF(center=(2.0, -1.0, 0.5), z_rotation=0.7, scale=(2.0, 1.0, 0.5))


@pytest.mark.parametrize(
    "frame, lo, hi",
    [(CanonicalFrame.UNIT, 0.0, 1.0), (CanonicalFrame.CENTERED, -0.5, 0.5)],
)
def test_corners_map_to_cube(box: OrientedBox7DoF, frame, lo, hi):
    canonical, _ = canonicalize(box_corners(box), box, frame)
    expected = local_corners() + 0.5 + lo
    np.testing.assert_allclose(canonical, expected, atol=1e-12)
    assert frame.bounds() == (lo, hi)


def test_inverse(box: OrientedBox7DoF, rng: np.random.Generator):
    points = rng.normal(size=(20, 3))
    canonical, transform = canonicalize(points, box)
    np.testing.assert_allclose(transform.inverse(canonical), points, atol=1e-12)


def test_canonicalize_empty(box: OrientedBox7DoF):
    canonical, _ = canonicalize(np.empty((0, 3)), box)
    assert canonical.shape == (0, 3)


def test_transform_from_box(box: OrientedBox7DoF):
    transform = CanonicalTransform.from_box(box)
    assert transform.translation == (-2.0, 1.0, -0.5)
    assert transform.z_rotation == -0.7
    assert transform.inv_scale == (0.5, 1.0, 2.0)
    assert transform.frame == CanonicalFrame.UNIT


@pytest.mark.parametrize("frame", [CanonicalFrame.UNIT, CanonicalFrame.CENTERED])
def test_place_mesh_inverts_canonicalize(box: OrientedBox7DoF, unit_cube: TriMesh, frame):
    cube = unit_cube.with_category("cabinet")
    if frame is CanonicalFrame.CENTERED:
        cube = cube.transformed(np.eye(3), -0.5 * np.ones(3)).with_category("cabinet")
    placed = place_mesh(cube, box, frame)
    assert placed.category == "cabinet"
    assert placed.volume() == pytest.approx(box.volume())
    canonical, _ = canonicalize(placed.vertices, box, frame)
    np.testing.assert_allclose(canonical, cube.vertices, atol=1e-12)


def test_place_mesh_corners(box: OrientedBox7DoF, unit_cube: TriMesh):
    placed = place_mesh(unit_cube, box)
    # box_mesh and box corners share the same vertex order
    np.testing.assert_allclose(placed.vertices, box_corners(box), atol=1e-12)
