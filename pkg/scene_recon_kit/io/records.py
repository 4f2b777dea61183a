"""
Prediction and ground truth directories

A prediction directory holds one mesh per reconstructed instance and a
predictions.json manifest listing, per instance, the mesh file, confidence,
category and source proposal id. A ground truth directory holds a
ground_truth.json manifest listing, per instance, the mesh file, the file of
observed instance points and the category. Paths are relative to the
manifest.

An evaluation input is either a single scene, with the manifest at the top
of the directory, or one sub-directory per scene.
"""
from loguru import logger
from typing import List, Optional, Tuple
from pathlib import Path
import json
from pydantic import BaseModel, ValidationError

from scene_recon_kit.errors import InputError, RecordsReadError, FileReadError
from scene_recon_kit.io.mesh import load_mesh, save_mesh, load_points, save_points
from scene_recon_kit.evaluation.records import PredictionRecord, GtRecord
from scene_recon_kit.evaluation.report import SceneRecords

PREDICTIONS_FILE = "predictions.json"
GROUND_TRUTH_FILE = "ground_truth.json"


class PredictionEntry(BaseModel):
    """Manifest entry of a predicted instance"""

    mesh: str
    confidence: float
    category: str
    proposal_id: Optional[int] = None


class GtEntry(BaseModel):
    """Manifest entry of a ground truth instance"""

    mesh: str
    points: str
    category: str


class PredictionManifest(BaseModel):
    instances: List[PredictionEntry]


class GtManifest(BaseModel):
    instances: List[GtEntry]


def _write_manifest(path: Path, manifest: BaseModel) -> None:
    path.write_text(json.dumps(manifest.dict(), sort_keys=True, indent=2) + "\n")


def _read_manifest(path: Path, model):
    if not path.exists():
        raise RecordsReadError(path, "Manifest does not exist")
    try:
        return model.parse_raw(path.read_text())
    except ValidationError as e:
        logger.error(f"Invalid manifest {path}")
        raise RecordsReadError(path, str(e))


def prediction_mesh_name(index: int, pred: PredictionRecord, suffix: str) -> str:
    """File name of a predicted mesh, numbered by proposal id when known"""
    number = pred.proposal_id if pred.proposal_id is not None else index
    return f"instance_{number}{suffix}"


def save_predictions(
    preds: List[PredictionRecord], out_dir: Path, suffix: str = ".ply"
) -> None:
    """
    Write predicted meshes and their manifest

    Parameters
    ----------
    preds : List[PredictionRecord]
        The predictions
    out_dir : Path
        Output directory, created if missing
    suffix : str, optional
        Mesh suffix, .ply or .obj, by default .ply
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for index, pred in enumerate(preds):
        name = prediction_mesh_name(index, pred, suffix)
        save_mesh(pred.mesh, out_dir / name)
        entries.append(
            PredictionEntry(
                mesh=name,
                confidence=pred.confidence,
                category=pred.category,
                proposal_id=pred.proposal_id,
            )
        )
    _write_manifest(out_dir / PREDICTIONS_FILE, PredictionManifest(instances=entries))
    logger.info(f"Saved {len(preds)} predictions to {out_dir}")


def load_predictions(pred_dir: Path) -> List[PredictionRecord]:
    """
    Read predictions from a directory

    Raises
    ------
    RecordsReadError
        If the manifest or a mesh cannot be read
    """
    manifest = _read_manifest(pred_dir / PREDICTIONS_FILE, PredictionManifest)
    preds = []
    for entry in manifest.instances:
        try:
            mesh = load_mesh(pred_dir / entry.mesh)
            preds.append(
                PredictionRecord(
                    mesh=mesh,
                    confidence=entry.confidence,
                    category=entry.category,
                    proposal_id=entry.proposal_id,
                )
            )
        except (FileReadError, ValidationError) as e:
            raise RecordsReadError(pred_dir, str(e))
    return preds


def save_ground_truth(gts: List[GtRecord], out_dir: Path) -> None:
    """
    Write ground truth meshes, observed points and their manifest

    Parameters
    ----------
    gts : List[GtRecord]
        The ground truth instances
    out_dir : Path
        Output directory, created if missing
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for index, gt in enumerate(gts):
        mesh_name = f"gt_{index}.ply"
        points_name = f"gt_{index}_points.ply"
        save_mesh(gt.mesh, out_dir / mesh_name)
        save_points(gt.instance_points, out_dir / points_name)
        entries.append(GtEntry(mesh=mesh_name, points=points_name, category=gt.category))
    _write_manifest(out_dir / GROUND_TRUTH_FILE, GtManifest(instances=entries))
    logger.info(f"Saved {len(gts)} ground truth instances to {out_dir}")


def load_ground_truth(gt_dir: Path) -> List[GtRecord]:
    """
    Read ground truth from a directory

    Raises
    ------
    RecordsReadError
        If the manifest, a mesh or a point file cannot be read
    """
    manifest = _read_manifest(gt_dir / GROUND_TRUTH_FILE, GtManifest)
    gts = []
    for entry in manifest.instances:
        try:
            gts.append(
                GtRecord(
                    mesh=load_mesh(gt_dir / entry.mesh),
                    instance_points=load_points(gt_dir / entry.points),
                    category=entry.category,
                )
            )
        except (FileReadError, ValidationError) as e:
            raise RecordsReadError(gt_dir, str(e))
    return gts


def scene_directories(gt_dir: Path, pred_dir: Path) -> List[Tuple[str, Path, Path]]:
    """
    Pair ground truth and prediction directories by scene

    Parameters
    ----------
    gt_dir : Path
        Ground truth root
    pred_dir : Path
        Prediction root

    Returns
    -------
    List[Tuple[str, Path, Path]]
        Scene name, ground truth and prediction directory, sorted by name

    Raises
    ------
    InputError
        If no scene is found
    RecordsReadError
        If a scene has ground truth but no predictions
    """
    if (gt_dir / GROUND_TRUTH_FILE).exists():
        return [(gt_dir.name, gt_dir, pred_dir)]
    if not gt_dir.is_dir():
        raise InputError(f"Ground truth directory {gt_dir} does not exist")
    pairs = []
    for scene_dir in sorted(p for p in gt_dir.iterdir() if p.is_dir()):
        if not (scene_dir / GROUND_TRUTH_FILE).exists():
            continue
        scene_pred = pred_dir / scene_dir.name
        if not (scene_pred / PREDICTIONS_FILE).exists():
            raise RecordsReadError(scene_pred, "No predictions for scene")
        pairs.append((scene_dir.name, scene_dir, scene_pred))
    if len(pairs) == 0:
        raise InputError(f"No {GROUND_TRUTH_FILE} found under {gt_dir}")
    return pairs


def load_scene_records(gt_dir: Path, pred_dir: Path) -> List[SceneRecords]:
    """Read the predictions and ground truth of every scene"""
    scenes = []
    for name, scene_gt, scene_pred in scene_directories(gt_dir, pred_dir):
        scenes.append(
            SceneRecords(
                name=name,
                predictions=load_predictions(scene_pred),
                ground_truth=load_ground_truth(scene_gt),
            )
        )
    logger.info(f"Loaded {len(scenes)} scenes for evaluation")
    return scenes
