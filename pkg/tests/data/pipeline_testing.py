from dotenv import load_dotenv
import os
from typing import List
from pathlib import Path
import trimesh
from scene_recon_kit.clustering.config import ClusterConfig
from scene_recon_kit.clustering.proposals import multi_scale_cluster
from scene_recon_kit.bsp.decoder import load_decoder
from scene_recon_kit.latent.pool import load_pool
from scene_recon_kit.evaluation.report import EvaluateConfig, SceneRecords
from scene_recon_kit.evaluation.report import evaluate_scenes
from scene_recon_kit.evaluation.records import PredictionRecord
from scene_recon_kit.io.scene import load_scene
from scene_recon_kit.io.proposals import load_proposals
from scene_recon_kit.io.records import load_ground_truth, load_scene_records
from scene_recon_kit.pipeline import ReconstructConfig, reconstruct_scene
from scene_recon_kit.pipeline import write_reconstruction
from scene_recon_kit.synth.generate import SceneSpec, gen_scene, write_synth


load_dotenv()
data_path = Path(os.getenv("TEST_DATA_PATH_SCENES"))
synth_path = data_path / "synthetic"
scans_path = data_path / "scans"
recon_path = data_path / "reconstructions"


def show(preds: List[PredictionRecord]):
    """View placed meshes together"""
    scene = trimesh.Scene()
    for pred in preds:
        mesh = trimesh.Trimesh(pred.mesh.vertices, pred.mesh.triangles, process=False)
        scene.add_geometry(mesh, node_name=f"{pred.category}_{pred.proposal_id}")
    scene.show()


def reconstruct(scene_dir: Path, mode: str, out_dir: Path):
    """Reconstruct a scene directory written by write_synth or in that layout"""
    scene = load_scene(scene_dir / "scene.srk")
    proposals = load_proposals(scene_dir / "proposals.json", scene.n_points)
    decoder = load_decoder(scene_dir / "decoder.srkd")
    pool = load_pool(scene_dir / "pool.srkp", load_meshes=mode == "retrieve")
    cfg = ReconstructConfig(mode=mode, record_timing=True)
    recon = reconstruct_scene(scene, proposals, decoder, pool, cfg)
    write_reconstruction(recon, out_dir)
    return recon


def run_synthetic():
    """Generate, reconstruct and evaluate a noisy partially observed scene"""
    spec = SceneSpec(camera=(4.0, -6.0, 3.0), noise_sigma=0.005, code_noise=0.1)
    scene_dir = synth_path / "partial"
    write_synth(gen_scene(spec), scene_dir)
    for mode in ["generate", "project", "retrieve"]:
        recon = reconstruct(scene_dir, mode, recon_path / "partial" / mode)
        print(recon.report.to_json())
        records = SceneRecords(
            name=mode,
            predictions=recon.predictions,
            ground_truth=load_ground_truth(scene_dir / "gt"),
        )
        for metric in ["iou", "pcr"]:
            cfg = EvaluateConfig(metric=metric, thresholds=[0.25, 0.5])
            print(evaluate_scenes([records], cfg).to_dataframe())
        show(recon.predictions)


def run_clustering():
    """Compare clustered proposals to the planted instances of a scanned scene"""
    scene = load_scene(scans_path / "office" / "scene.srk")
    proposals = multi_scale_cluster(scene, ClusterConfig())
    for prop in proposals:
        print(prop.category, prop.n_points, f"{prop.confidence:.3f}")


def run_evaluation():
    """Evaluate a directory of reconstructed scans"""
    scenes = load_scene_records(scans_path / "gt", recon_path / "scans")
    for metric in ["iou", "cd", "lfd", "pcr"]:
        thresholds = [0.1, 0.2] if metric == "cd" else [0.25, 0.5]
        if metric == "lfd":
            thresholds = [2500.0, 5000.0]
        cfg = EvaluateConfig(metric=metric, thresholds=thresholds)
        report = evaluate_scenes(scenes, cfg)
        print(report.to_dataframe())


if __name__ == "__main__":
    run_synthetic()
    run_clustering()
    run_evaluation()
