from pathlib import Path
import json
import numpy as np
import pytest
from pydantic import ValidationError

from scene_recon_kit.errors import InputError
from scene_recon_kit.clustering.config import ClusterConfig
from scene_recon_kit.clustering.proposals import multi_scale_cluster
from scene_recon_kit.canonical import place_mesh
from scene_recon_kit.metrics.voxel import voxel_iou
from scene_recon_kit.icp import IcpConfig
from scene_recon_kit.evaluation.report import EvaluateConfig, SceneRecords
from scene_recon_kit.evaluation.report import evaluate_scenes
from scene_recon_kit.io.records import load_predictions
from scene_recon_kit.synth.generate import SceneSpec, GeneratedScene, gen_scene
from scene_recon_kit.synth.templates import template_mesh
from scene_recon_kit.synth.generate import fixture_decoder, template_pool
from scene_recon_kit.pipeline import ReconstructConfig, reconstruct_scene
from scene_recon_kit.pipeline import write_reconstruction, REPORT_FILE


@pytest.fixture(scope="module")
def generated() -> GeneratedScene:
    spec = SceneSpec(
        instances=["table", "chair", "cabinet"], points_per_instance=600, seed=5
    )
    return gen_scene(spec)


def check_against_ground_truth(generated: GeneratedScene, recon) -> None:
    assert recon.report.n_reconstructed == 3
    assert [x.proposal_id for x in recon.predictions] == [0, 1, 2]
    for pred, gt in zip(recon.predictions, generated.ground_truth):
        assert pred.category == gt.category
        np.testing.assert_allclose(pred.mesh.bounds(), gt.mesh.bounds(), atol=1e-6)
        assert pred.mesh.volume() == pytest.approx(gt.mesh.volume(), rel=1e-6)


@pytest.mark.parametrize("mode", ["generate", "project", "retrieve"])
def test_reconstruct_modes(generated: GeneratedScene, mode: str):
    cfg = ReconstructConfig(mode=mode, min_points=50)
    recon = reconstruct_scene(
        generated.scene,
        generated.proposals,
        fixture_decoder(),
        template_pool(),
        cfg,
    )
    assert recon.report.mode == mode
    assert recon.report.n_failed == 0
    check_against_ground_truth(generated, recon)
    if mode == "retrieve":
        entries = recon.report.proposals
        assert [x.retrieved_id for x in entries] == ["table", "chair", "cabinet"]
        assert all(x.retrieval_distance == pytest.approx(0.0) for x in entries)


def test_reconstruct_matches_voxels(generated: GeneratedScene):
    recon = reconstruct_scene(
        generated.scene, generated.proposals, decoder=fixture_decoder()
    )
    for pred, gt in zip(recon.predictions, generated.ground_truth):
        assert voxel_iou(pred.mesh, gt.mesh, voxel=0.05) > 0.95


def test_reconstruct_without_residual(generated: GeneratedScene):
    cfg = ReconstructConfig(use_residual=False, min_points=50)
    recon = reconstruct_scene(
        generated.scene, generated.proposals, decoder=fixture_decoder(), cfg=cfg
    )
    for pred, prop in zip(recon.predictions, generated.proposals):
        expected = place_mesh(template_mesh(prop.category), prop.initial_box)
        np.testing.assert_allclose(pred.mesh.bounds(), expected.bounds(), atol=1e-6)


def test_reconstruct_skips_and_failures(generated: GeneratedScene):
    first = generated.proposals[0]
    proposals = [
        first,
        first.copy(update={"confidence": 0.05}),
        first.copy(update={"point_indices": first.point_indices[:10]}),
        first.copy(update={"latent": None}),
        first.copy(update={"category": None}),
        first.copy(update={"category": "sofa"}),
    ]
    decoder = fixture_decoder(["table", "chair", "cabinet"])
    recon = reconstruct_scene(generated.scene, proposals, decoder)
    report = recon.report
    assert [x.status for x in report.proposals] == [
        "ok",
        "skipped",
        "skipped",
        "failed",
        "failed",
        "failed",
    ]
    assert (report.n_reconstructed, report.n_skipped, report.n_failed) == (1, 2, 3)
    assert report.has_failures()
    assert "confidence" in report.proposals[1].reason
    assert "latent" in report.proposals[3].reason
    assert "sofa" in report.proposals[5].reason
    assert [x.proposal_id for x in report.proposals] == list(range(6))


def test_reconstruct_estimates_missing_boxes(generated: GeneratedScene):
    proposals = [
        prop.copy(update={"initial_box": None}) for prop in generated.proposals
    ]
    recon = reconstruct_scene(generated.scene, proposals, decoder=fixture_decoder())
    with_boxes = reconstruct_scene(
        generated.scene, generated.proposals, decoder=fixture_decoder()
    )
    for a, b in zip(recon.predictions, with_boxes.predictions):
        np.testing.assert_allclose(a.mesh.vertices, b.mesh.vertices, atol=1e-9)


def test_reconstruct_requires_models(generated: GeneratedScene):
    with pytest.raises(InputError):
        reconstruct_scene(generated.scene, generated.proposals)
    with pytest.raises(InputError):
        reconstruct_scene(
            generated.scene,
            generated.proposals,
            decoder=fixture_decoder(),
            cfg=ReconstructConfig(mode="retrieve"),
        )
    with pytest.raises(InputError):
        reconstruct_scene(
            generated.scene,
            generated.proposals,
            pool=template_pool(),
            cfg=ReconstructConfig(mode="project"),
        )


def test_reconstruct_with_icp(generated: GeneratedScene):
    cfg = ReconstructConfig(icp=True, min_points=50)
    icp_cfg = IcpConfig(max_iterations=5, surface_samples=8000)
    recon = reconstruct_scene(
        generated.scene,
        generated.proposals,
        fixture_decoder(),
        cfg=cfg,
        icp_cfg=icp_cfg,
    )
    assert recon.report.n_reconstructed == 3
    for entry in recon.report.proposals:
        assert entry.icp_rms is not None
        assert entry.icp_rms < 0.05


def test_stochastic_codes_are_seeded(generated: GeneratedScene):
    cfg = ReconstructConfig(mode="retrieve", stochastic=True, seed=9)
    pool = template_pool()
    first = reconstruct_scene(generated.scene, generated.proposals, pool=pool, cfg=cfg)
    second = reconstruct_scene(generated.scene, generated.proposals, pool=pool, cfg=cfg)
    assert first.report.to_json() == second.report.to_json()
    distances = [x.retrieval_distance for x in first.report.proposals]
    assert all(d > 0 for d in distances)


def test_report_is_reproducible(generated: GeneratedScene, tmp_path: Path):
    recon = reconstruct_scene(
        generated.scene, generated.proposals, decoder=fixture_decoder()
    )
    assert all(x.seconds is None for x in recon.report.proposals)
    write_reconstruction(recon, tmp_path / "a")
    write_reconstruction(
        reconstruct_scene(
            generated.scene, generated.proposals, decoder=fixture_decoder()
        ),
        tmp_path / "b",
    )
    report_a = (tmp_path / "a" / REPORT_FILE).read_text()
    assert report_a == (tmp_path / "b" / REPORT_FILE).read_text()
    assert json.loads(report_a)["n_reconstructed"] == 3
    assert [x.proposal_id for x in load_predictions(tmp_path / "a")] == [0, 1, 2]

    timed = reconstruct_scene(
        generated.scene,
        generated.proposals,
        decoder=fixture_decoder(),
        cfg=ReconstructConfig(record_timing=True),
    )
    assert all(x.seconds is not None for x in timed.report.proposals)


def test_cluster_reconstruct_evaluate(generated: GeneratedScene):
    """Clustering recovers the planted instances and the reconstruction scores"""
    scene = generated.scene
    clustered = multi_scale_cluster(scene, ClusterConfig(min_points=50))
    expected = {
        frozenset(np.flatnonzero(scene.gt_instance_id == i).tolist()) for i in range(3)
    }
    assert {frozenset(x.point_indices) for x in clustered} == expected
    assert {x.category for x in clustered} == {"table", "chair", "cabinet"}

    recon = reconstruct_scene(scene, generated.proposals, decoder=fixture_decoder())
    records = SceneRecords(
        name="synthetic",
        predictions=recon.predictions,
        ground_truth=generated.ground_truth,
    )
    cfg = EvaluateConfig(metric="pcr", thresholds=[0.5, 0.9])
    report = evaluate_scenes([records], cfg)
    for result in report.results:
        assert result.map == pytest.approx(1.0)
        assert result.categories["table"].ap == pytest.approx(1.0)
        assert result.categories["sofa"].ap is None


def test_clustered_proposals_fail_without_latents(generated: GeneratedScene):
    clustered = multi_scale_cluster(generated.scene, ClusterConfig(min_points=50))
    recon = reconstruct_scene(generated.scene, clustered, decoder=fixture_decoder())
    assert recon.report.n_failed == len(clustered)


def test_reconstruct_config_validation():
    with pytest.raises(ValidationError):
        ReconstructConfig(mode="dream")
    with pytest.raises(ValidationError):
        ReconstructConfig(conf_floor=1.5)
    with pytest.raises(ValidationError):
        ReconstructConfig(k=0)
    with pytest.raises(ValidationError):
        ReconstructConfig(unknown=True)
