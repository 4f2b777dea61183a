from pathlib import Path
import numpy as np
import pytest

from scene_recon_kit.errors import InputError, DecoderFileError
from scene_recon_kit.core.labels import RECON_CATEGORIES
from scene_recon_kit.canonical import CanonicalFrame
from scene_recon_kit.bsp.decoder import DenseLayer, PlaneSet, BspDecoder
from scene_recon_kit.bsp.decoder import decode_planes, occupancy, occupancy_many
from scene_recon_kit.bsp.decoder import interpolate_latent
from scene_recon_kit.bsp.decoder import save_decoder, load_decoder
from scene_recon_kit.bsp.extract import clip_convex, cube_faces, convex_mesh
from scene_recon_kit.bsp.extract import extract_mesh
from scene_recon_kit.synth.templates import template_mesh
from scene_recon_kit.synth.generate import fixture_decoder, cube_decoder


def box_planes(lo, hi) -> np.ndarray:
    return np.array(
        [
            [-1, 0, 0, lo[0]],
            [1, 0, 0, -hi[0]],
            [0, -1, 0, lo[1]],
            [0, 1, 0, -hi[1]],
            [0, 0, -1, lo[2]],
            [0, 0, 1, -hi[2]],
        ],
        dtype=float,
    )


def two_box_planeset() -> PlaneSet:
    planes = np.concatenate(
        [box_planes((0, 0, 0), (0.5, 1, 1)), box_planes((0.5, 0, 0), (1, 0.5, 0.5))]
    )
    membership = np.zeros((12, 2), dtype=int)
    membership[:6, 0] = 1
    membership[6:, 1] = 1
    return PlaneSet(planes, membership)


def test_occupancy():
    ps = two_box_planeset()
    assert occupancy(ps, np.array([0.25, 0.5, 0.5]))
    assert occupancy(ps, np.array([0.75, 0.25, 0.25]))
    assert not occupancy(ps, np.array([0.75, 0.75, 0.75]))
    # boundary counts as inside
    assert occupancy(ps, np.array([0.5, 0.9, 0.9]))
    inside = occupancy_many(ps, np.array([[0.1, 0.1, 0.1], [2, 2, 2]]))
    np.testing.assert_array_equal(inside, [True, False])


def test_occupancy_dense_oracle(rng: np.random.Generator):
    """Compare with an explicit loop over convexes and planes"""
    planes = rng.normal(size=(20, 4))
    membership = (rng.uniform(size=(20, 4)) < 0.4).astype(int)
    ps = PlaneSet(planes, membership)
    points = rng.uniform(-1, 1, size=(200, 3))
    expected = []
    for point in points:
        inside = False
        for convex in range(4):
            member = planes[membership[:, convex] == 1]
            if np.all(member[:, :3] @ point + member[:, 3] <= 0):
                inside = True
        expected.append(inside)
    np.testing.assert_array_equal(occupancy_many(ps, points), expected)


def test_planeset_validation():
    with pytest.raises(InputError):
        PlaneSet(np.zeros((1, 4)), np.ones((1, 1)))
    with pytest.raises(InputError):
        PlaneSet(box_planes((0, 0, 0), (1, 1, 1)), np.full((6, 1), 2))


def test_clip_convex_half():
    faces = clip_convex(cube_faces(0, 1), np.array([1.0, 0, 0, -0.5]))
    vertices = np.concatenate(faces)
    assert len(faces) == 6
    assert vertices[:, 0].max() == pytest.approx(0.5)


def test_clip_convex_outside_and_inside():
    assert clip_convex(cube_faces(0, 1), np.array([1.0, 0, 0, 2.0])) == []
    faces = cube_faces(0, 1)
    assert clip_convex(faces, np.array([1.0, 0, 0, -2.0])) is faces


def test_convex_mesh_corner_cut():
    """Cutting a corner off the unit cube leaves a closed 7 faced polytope"""
    plane = np.array([1.0, 1.0, 1.0, -2.5])
    mesh = convex_mesh(plane.reshape(1, 4), 0, 1)
    assert mesh.volume() == pytest.approx(1 - 1 / 48)
    assert mesh.n_vertices == 10


def test_extract_mesh():
    mesh = extract_mesh(two_box_planeset(), category="table")
    assert mesh.category == "table"
    assert mesh.volume() == pytest.approx(0.5 + 0.125)
    np.testing.assert_allclose(mesh.bounds(), [[0, 0, 0], [1, 1, 1]])


def test_extract_mesh_clips_to_cube():
    ps = PlaneSet(box_planes((-1, -1, -1), (0.5, 2, 2)), np.ones((6, 1)))
    mesh = extract_mesh(ps)
    assert mesh.volume() == pytest.approx(0.5)
    ps = PlaneSet(box_planes((-1, -1, -1), (0.5, 2, 2)), np.ones((6, 1)), "centered")
    assert extract_mesh(ps).volume() == pytest.approx(1.0)


def test_extract_mesh_empty():
    ps = PlaneSet(box_planes((2, 2, 2), (3, 3, 3)), np.ones((6, 1)))
    assert extract_mesh(ps).is_empty()


@pytest.mark.parametrize("category", RECON_CATEGORIES)
def test_fixture_decoder_reproduces_templates(category: str):
    dec = fixture_decoder()
    ps = decode_planes(dec, np.zeros(dec.d_shape), category)
    mesh = extract_mesh(ps, category)
    template = template_mesh(category)
    assert mesh.volume() == pytest.approx(template.volume(), abs=1e-6)
    np.testing.assert_allclose(mesh.bounds(), [[0, 0, 0], [1, 1, 1]], atol=1e-6)


def test_cube_decoder():
    dec = cube_decoder(["chair", "sofa"], d_shape=4)
    ps = decode_planes(dec, np.ones(4), "sofa")
    assert ps.n_convexes == 1
    assert extract_mesh(ps).volume() == pytest.approx(1.0)


def test_decoder_validation():
    layer = DenseLayer(np.zeros((24, 5)), np.zeros(24), "identity")
    membership = np.ones((6, 1))
    dec = BspDecoder([layer], membership, 3, ["chair", "table"])
    assert dec.n_planes == 6
    with pytest.raises(InputError):
        BspDecoder([layer], membership, 4, ["chair", "table"])
    with pytest.raises(InputError):
        BspDecoder([layer], np.ones((6, 1)), 3, ["chair", "chair"])
    with pytest.raises(InputError):
        BspDecoder([layer], np.ones((3, 2)), 3, ["chair", "table"])
    with pytest.raises(InputError):
        DenseLayer(np.zeros((2, 2)), np.zeros(2), "tanh")
    with pytest.raises(InputError):
        decode_planes(dec, np.zeros(2), "chair")
    with pytest.raises(InputError):
        decode_planes(dec, np.zeros(3), "sofa")


def test_relu_layer_chain():
    hidden = DenseLayer(np.array([[1.0, 0, 0], [-1.0, 0, 0]]), np.zeros(2), "relu")
    planes = box_planes((0, 0, 0), (1, 1, 1)).reshape(-1)
    out = DenseLayer(np.zeros((24, 2)), planes, "identity")
    dec = BspDecoder([hidden, out], np.ones((6, 1)), 2, ["chair"])
    ps = decode_planes(dec, np.array([5.0, -5.0]), "chair")
    np.testing.assert_allclose(ps.planes.reshape(-1), planes)


def test_interpolate_latent():
    z_a = np.array([0.0, 2.0])
    z_b = np.array([1.0, 0.0])
    np.testing.assert_array_equal(interpolate_latent(z_a, z_b, 0), z_a)
    np.testing.assert_array_equal(interpolate_latent(z_a, z_b, 1), z_b)
    np.testing.assert_allclose(interpolate_latent(z_a, z_b, 0.25), [0.25, 1.5])
    with pytest.raises(InputError):
        interpolate_latent(z_a, z_b, 1.5)
    with pytest.raises(InputError):
        interpolate_latent(z_a, np.zeros(3), 0.5)


def test_decoder_file(tmp_path: Path):
    dec = fixture_decoder(["table", "chair"], d_shape=3)
    path = tmp_path / "decoder.srkd"
    save_decoder(dec, path)
    loaded = load_decoder(path)
    assert loaded.categories == ["table", "chair"]
    assert loaded.d_shape == 3
    assert loaded.frame == CanonicalFrame.UNIT
    np.testing.assert_array_equal(loaded.membership, dec.membership)
    z = np.array([0.3, -0.2, 1.0])
    np.testing.assert_array_equal(
        decode_planes(loaded, z, "chair").planes, decode_planes(dec, z, "chair").planes
    )


def test_decoder_file_errors(tmp_path: Path):
    with pytest.raises(DecoderFileError):
        load_decoder(tmp_path / "missing.srkd")
    path = tmp_path / "decoder.srkd"
    save_decoder(cube_decoder(["chair"], d_shape=2), path)
    data = path.read_bytes()
    truncated = tmp_path / "truncated.srkd"
    truncated.write_bytes(data[:-10])
    with pytest.raises(DecoderFileError):
        load_decoder(truncated)
    wrong_magic = tmp_path / "magic.srkd"
    wrong_magic.write_bytes(b"SRKSCENE" + data[8:])
    with pytest.raises(DecoderFileError):
        load_decoder(wrong_magic)
