from pathlib import Path
import struct
import numpy as np
import pytest

from scene_recon_kit.errors import InputError, SceneFileError, ProposalFileError
from scene_recon_kit.errors import MeshFileError, RecordsReadError
from scene_recon_kit.core.box import OrientedBox7DoF, BoxResidual
from scene_recon_kit.core.mesh import box_mesh
from scene_recon_kit.core.scene import PointScene, InstanceProposal
from scene_recon_kit.core.scene import LatentShapeDistribution
from scene_recon_kit.evaluation.records import PredictionRecord, GtRecord
from scene_recon_kit.io.container import read_container, write_container
from scene_recon_kit.io.scene import save_scene, load_scene, SCENE_MAGIC
from scene_recon_kit.io.proposals import save_proposals, load_proposals
from scene_recon_kit.io.mesh import save_mesh, load_mesh, save_points, load_points
from scene_recon_kit.io.records import save_predictions, load_predictions
from scene_recon_kit.io.records import save_ground_truth, load_ground_truth
from scene_recon_kit.io.records import load_scene_records


@pytest.fixture
def scene() -> PointScene:
    return PointScene(
        points=[[0.1, 0.2, 0.3], [1.5, -2.0, 0.25], [3.0, 3.0, 3.0]],
        category=[3, 4, 0],
        offset=[[0.5, 0.0, 0.0], [0.0, -0.25, 0.0], [0.0, 0.0, 0.0]],
        angle=[0.5, -1.25, 0.0],
        gt_instance_id=[0, 1, -1],
        label_system="office",
    )


def test_scene_file(tmp_path: Path, scene: PointScene):
    path = tmp_path / "scene.srks"
    save_scene(scene, path)
    assert path.read_bytes()[:8] == SCENE_MAGIC
    loaded = load_scene(path)
    assert loaded.n_points == 3
    assert loaded.label_system == "office"
    np.testing.assert_allclose(loaded.points, scene.points, atol=1e-6)
    np.testing.assert_array_equal(loaded.offset, scene.offset)
    np.testing.assert_array_equal(loaded.angle, scene.angle)
    np.testing.assert_array_equal(loaded.category, [3, 4, 0])
    np.testing.assert_array_equal(loaded.gt_instance_id, [0, 1, -1])


def test_scene_file_without_instances(tmp_path: Path):
    scene = PointScene(np.zeros((2, 3)), [1, 2], np.zeros((2, 3)), [0.0, 0.0])
    path = tmp_path / "scene.srks"
    save_scene(scene, path)
    header, _payload = read_container(path, SCENE_MAGIC, SceneFileError)
    assert header["fields"] == ["positions", "offsets", "angles", "categories"]
    assert header["units"] == "m"
    assert load_scene(path).gt_instance_id is None


def test_scene_file_category_overflow(tmp_path: Path):
    scene = PointScene(np.zeros((1, 3)), [70000], np.zeros((1, 3)), [0.0])
    with pytest.raises(InputError):
        save_scene(scene, tmp_path / "scene.srks")


def test_scene_file_corruption(tmp_path: Path, scene: PointScene):
    path = tmp_path / "scene.srks"
    with pytest.raises(SceneFileError):
        load_scene(path)
    save_scene(scene, path)
    data = path.read_bytes()

    path.write_bytes(data[:-2])
    with pytest.raises(SceneFileError, match="needs"):
        load_scene(path)
    path.write_bytes(data + b"\x00")
    with pytest.raises(SceneFileError, match="trailing"):
        load_scene(path)
    path.write_bytes(b"SRKPOOL0" + data[8:])
    with pytest.raises(SceneFileError, match="magic"):
        load_scene(path)
    path.write_bytes(data[:6])
    with pytest.raises(SceneFileError):
        load_scene(path)


def test_container_header_errors(tmp_path: Path):
    path = tmp_path / "bad.srks"
    path.write_bytes(SCENE_MAGIC + struct.pack("<I", 4) + b"{no}")
    with pytest.raises(SceneFileError, match="Malformed"):
        read_container(path, SCENE_MAGIC, SceneFileError)
    write_container(path, SCENE_MAGIC, {"format": "srk-scene"}, [])
    with pytest.raises(SceneFileError, match="missing"):
        load_scene(path)
    with pytest.raises(ValueError):
        write_container(path, b"SHORT", {}, [])


def test_proposal_file(tmp_path: Path):
    proposals = [
        InstanceProposal(
            point_indices=[0, 2],
            confidence=0.5,
            category="chair",
            initial_box=OrientedBox7DoF(
                center=(1.0, 2.0, 0.5), z_rotation=0.25, scale=(0.5, 0.5, 1.0)
            ),
            residual=BoxResidual(d_center=(0.1, 0.0, 0.0)),
            latent=LatentShapeDistribution(mu=[0.0, 1.0], sigma=[0.1, 0.2]),
        ),
        InstanceProposal(point_indices=[1]),
    ]
    path = tmp_path / "proposals.json"
    save_proposals(proposals, path, n_points=3)
    loaded = load_proposals(path)
    assert loaded == proposals
    assert load_proposals(path, n_points=3) == proposals


def test_proposal_file_errors(tmp_path: Path):
    path = tmp_path / "proposals.json"
    with pytest.raises(ProposalFileError):
        load_proposals(path)
    save_proposals([InstanceProposal(point_indices=[0, 5])], path, n_points=6)
    with pytest.raises(ProposalFileError, match="refers to"):
        load_proposals(path, n_points=4)
    save_proposals([InstanceProposal(point_indices=[0, 5])], path)
    with pytest.raises(ProposalFileError, match="beyond"):
        load_proposals(path, n_points=4)
    path.write_text('{"proposals": [{"point_indices": []}]}')
    with pytest.raises(ProposalFileError):
        load_proposals(path)
    path.write_text("not json")
    with pytest.raises(ProposalFileError):
        load_proposals(path)


@pytest.mark.parametrize("suffix", [".obj", ".ply"])
def test_mesh_file(tmp_path: Path, suffix: str):
    mesh = box_mesh([0, 0, 0], [1, 2, 0.5], "bookshelf")
    path = tmp_path / f"shelf{suffix}"
    save_mesh(mesh, path)
    loaded = load_mesh(path)
    assert loaded.category == "bookshelf"
    np.testing.assert_array_equal(loaded.triangles, mesh.triangles)
    np.testing.assert_allclose(loaded.vertices, mesh.vertices, atol=1e-6)
    assert loaded.volume() == pytest.approx(1.0)


def test_obj_polygons_and_references(tmp_path: Path):
    path = tmp_path / "quad.obj"
    path.write_text(
        "\n".join(
            [
                "# a quad",
                "v 0 0 0",
                "v 1 0 0 1.0",
                "v 1 1 0",
                "v 0 1 0",
                "vt 0 0",
                "f 1/1 2/1 3/1 4/1",
                "f -4 -3 -2",
                "usemtl ignored",
            ]
        )
    )
    mesh = load_mesh(path)
    np.testing.assert_array_equal(mesh.triangles, [[0, 1, 2], [0, 2, 3], [0, 1, 2]])
    assert mesh.category is None


@pytest.mark.parametrize(
    "body, match",
    [
        ("v 0 0\nf 1 2 3", "malformed vertex"),
        ("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 4", "missing vertex"),
        ("v 0 0 0\nv 1 0 0\nf 1 2", "fewer than 3"),
        ("v 0 0 0\nf a b c", "malformed face"),
    ],
)
def test_obj_errors(tmp_path: Path, body: str, match: str):
    path = tmp_path / "bad.obj"
    path.write_text(body)
    with pytest.raises(MeshFileError, match=match):
        load_mesh(path)


def test_ascii_ply_with_extras(tmp_path: Path):
    path = tmp_path / "quad.ply"
    path.write_text(
        "\n".join(
            [
                "ply",
                "format ascii 1.0",
                "comment category table",
                "element vertex 4",
                "property double x",
                "property double y",
                "property double z",
                "property uchar red",
                "element face 1",
                "property list uchar int vertex_indices",
                "end_header",
                "0 0 0 255",
                "2 0 0 255",
                "2 1 0 255",
                "0 1 0 255",
                "4 0 1 2 3",
            ]
        )
        + "\n"
    )
    mesh = load_mesh(path)
    assert mesh.category == "table"
    assert mesh.n_triangles == 2
    assert mesh.area() == pytest.approx(2.0)


def test_big_endian_ply(tmp_path: Path):
    header = "\n".join(
        [
            "ply",
            "format binary_big_endian 1.0",
            "element vertex 3",
            "property float x",
            "property float y",
            "property float z",
            "element face 1",
            "property list uchar uint vertex_indices",
            "end_header",
        ]
    )
    vertices = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], dtype=">f4")
    face = struct.pack(">BIII", 3, 0, 1, 2)
    path = tmp_path / "tri.ply"
    path.write_bytes((header + "\n").encode("ascii") + vertices.tobytes() + face)
    mesh = load_mesh(path)
    np.testing.assert_array_equal(mesh.vertices, vertices.astype(float))
    np.testing.assert_array_equal(mesh.triangles, [[0, 1, 2]])


def test_ply_errors(tmp_path: Path):
    path = tmp_path / "cube.ply"
    save_mesh(box_mesh([0, 0, 0], [1, 1, 1]), path)
    data = path.read_bytes()
    path.write_bytes(data[:-5])
    with pytest.raises(MeshFileError, match="truncated"):
        load_mesh(path)
    path.write_bytes(b"solid ascii stl")
    with pytest.raises(MeshFileError, match="Not a PLY"):
        load_mesh(path)
    path.write_bytes(data.replace(b"property float x", b"property float w"))
    with pytest.raises(MeshFileError, match="missing"):
        load_mesh(path)


def test_mesh_suffixes(tmp_path: Path):
    with pytest.raises(InputError):
        save_mesh(box_mesh([0, 0, 0], [1, 1, 1]), tmp_path / "cube.stl")
    (tmp_path / "cube.stl").write_text("solid")
    with pytest.raises(MeshFileError):
        load_mesh(tmp_path / "cube.stl")
    with pytest.raises(MeshFileError):
        load_mesh(tmp_path / "missing.obj")


def test_point_file(tmp_path: Path, rng: np.random.Generator):
    points = rng.uniform(-1, 1, size=(20, 3))
    path = tmp_path / "points.ply"
    save_points(points, path)
    np.testing.assert_allclose(load_points(path), points, atol=1e-6)
    with pytest.raises(MeshFileError):
        load_points(tmp_path / "points.obj")


def test_prediction_and_ground_truth_directories(tmp_path: Path):
    cube = box_mesh([0, 0, 0], [1, 1, 1], "cabinet")
    preds = [
        PredictionRecord(mesh=cube, confidence=0.8, category="cabinet", proposal_id=4),
        PredictionRecord(mesh=cube, confidence=0.3, category="chair"),
    ]
    gts = [
        GtRecord(
            mesh=cube, instance_points=np.array([[0.5, 0.5, 1.0]]), category="cabinet"
        )
    ]
    save_predictions(preds, tmp_path / "pred")
    save_ground_truth(gts, tmp_path / "gt")
    assert (tmp_path / "pred" / "instance_4.ply").exists()
    assert (tmp_path / "pred" / "instance_1.ply").exists()

    loaded = load_predictions(tmp_path / "pred")
    assert [(x.category, x.confidence, x.proposal_id) for x in loaded] == [
        ("cabinet", 0.8, 4),
        ("chair", 0.3, None),
    ]
    loaded_gt = load_ground_truth(tmp_path / "gt")
    assert loaded_gt[0].category == "cabinet"
    np.testing.assert_allclose(loaded_gt[0].instance_points, [[0.5, 0.5, 1.0]])

    scenes = load_scene_records(tmp_path / "gt", tmp_path / "pred")
    assert [x.name for x in scenes] == ["gt"]


def test_multi_scene_directories(tmp_path: Path):
    cube = box_mesh([0, 0, 0], [1, 1, 1])
    gt = GtRecord(mesh=cube, instance_points=np.zeros((1, 3)), category="table")
    pred = PredictionRecord(mesh=cube, confidence=1.0, category="table")
    for name in ["scene_b", "scene_a"]:
        save_ground_truth([gt], tmp_path / "gt" / name)
        save_predictions([pred], tmp_path / "pred" / name)
    scenes = load_scene_records(tmp_path / "gt", tmp_path / "pred")
    assert [x.name for x in scenes] == ["scene_a", "scene_b"]

    save_ground_truth([gt], tmp_path / "gt" / "scene_c")
    with pytest.raises(RecordsReadError):
        load_scene_records(tmp_path / "gt", tmp_path / "pred")
    with pytest.raises(InputError):
        load_scene_records(tmp_path / "missing", tmp_path / "pred")


def test_records_errors(tmp_path: Path):
    with pytest.raises(RecordsReadError):
        load_predictions(tmp_path)
    (tmp_path / "predictions.json").write_text('{"instances": [{"mesh": "x.ply"}]}')
    with pytest.raises(RecordsReadError):
        load_predictions(tmp_path)
    (tmp_path / "predictions.json").write_text(
        '{"instances": [{"mesh": "x.ply", "confidence": 1.0, "category": "bed"}]}'
    )
    with pytest.raises(RecordsReadError):
        load_predictions(tmp_path)


@pytest.mark.parametrize("suffix", [".obj", ".ply"])
def test_mesh_file_readable_by_trimesh(tmp_path: Path, suffix: str):
    trimesh = pytest.importorskip("trimesh")
    mesh = box_mesh([0, 0, 0], [1, 2, 0.5], "bookshelf")
    path = tmp_path / f"shelf{suffix}"
    save_mesh(mesh, path)
    loaded = trimesh.load(str(path), force="mesh", process=False)
    assert len(loaded.faces) == mesh.n_triangles
    assert loaded.is_watertight
    assert loaded.volume == pytest.approx(1.0, rel=1e-6)
    np.testing.assert_allclose(loaded.bounds, mesh.bounds(), atol=1e-6)
