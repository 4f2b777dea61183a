"""
Greedy matching of predictions to ground truth and average precision

Predictions are visited in descending confidence, equal confidences in input
order. Each prediction claims the best scoring unmatched ground truth of its
own category, the lowest index winning ties, and the claim succeeds when the
score passes the threshold. IoU and PCR pass when score >= threshold, Chamfer
and light field distances when score <= threshold. PCR scores a prediction
mesh against the observed points of a ground truth instance, the other kinds
compare meshes.

Average precision is the all-point area under the precision recall curve
after replacing precision with its monotone envelope.
"""
from loguru import logger
from typing import Dict, List, Optional, Sequence, Tuple
import numpy as np
from pydantic import BaseModel, validator

from scene_recon_kit.common import parallel_map
from scene_recon_kit.errors import InputError
from scene_recon_kit.core.mesh import TriMesh
from scene_recon_kit.metrics.distance import DEFAULT_OMEGA, pcr
from scene_recon_kit.metrics.sampling import DEFAULT_SAMPLES, chamfer
from scene_recon_kit.metrics.voxel import DEFAULT_VOXEL, voxel_iou
from scene_recon_kit.metrics.lightfield import LfdConfig, lightfield_descriptor
from scene_recon_kit.metrics.lightfield import descriptor_distance
from scene_recon_kit.evaluation.records import PredictionRecord, GtRecord

METRIC_KINDS = ("iou", "cd", "lfd", "pcr")
HIGHER_IS_BETTER = {"iou": True, "pcr": True, "cd": False, "lfd": False}


class MetricConfig(BaseModel):
    """Parameters of the scoring metrics"""

    omega: float = DEFAULT_OMEGA
    """PCR distance threshold in meters"""
    voxel: float = DEFAULT_VOXEL
    """IoU voxel size in meters"""
    samples: int = DEFAULT_SAMPLES
    """Chamfer samples per mesh"""
    seed: int = 0
    """Chamfer sampling seed"""

    class Config:
        frozen = True
        extra = "forbid"

    @validator("omega", "voxel")
    def validate_positive(cls, value: float) -> float:
        if not value > 0:
            raise ValueError(f"Value {value} must be positive")
        return value

    @validator("samples")
    def validate_samples(cls, value: int) -> int:
        if value < 1:
            raise ValueError(f"samples {value} must be at least 1")
        return value


class MatchResult(BaseModel):
    """The outcome for one prediction"""

    pred_index: int
    """Index of the prediction in the input list"""
    gt_index: Optional[int]
    """The matched ground truth, None when unmatched"""
    score: Optional[float]
    """Score of the best candidate, None when no ground truth shares the category"""

    class Config:
        frozen = True


def check_kind(metric_kind: str) -> str:
    """Raise InputError for unknown metric kinds"""
    if metric_kind not in METRIC_KINDS:
        raise InputError(f"Unknown metric '{metric_kind}', expected {METRIC_KINDS}")
    return metric_kind


def passes(metric_kind: str, score: float, threshold: float) -> bool:
    """Whether a score passes a threshold"""
    if HIGHER_IS_BETTER[check_kind(metric_kind)]:
        return bool(score >= threshold)
    return bool(score <= threshold)


def _worst(metric_kind: str) -> float:
    return 0.0 if HIGHER_IS_BETTER[metric_kind] else np.inf


def confidence_order(preds: Sequence[PredictionRecord]) -> List[int]:
    """Prediction indices by descending confidence, stable"""
    confidences = np.array([p.confidence for p in preds], dtype=float)
    return [int(i) for i in np.argsort(-confidences, kind="stable")]


def score_matrix(
    preds: Sequence[PredictionRecord],
    gts: Sequence[GtRecord],
    metric_kind: str,
    metric_cfg: MetricConfig = MetricConfig(),
    lfd_cfg: LfdConfig = LfdConfig(),
) -> np.ndarray:
    """
    Scores of every same category prediction and ground truth pair

    Pairs are scored concurrently. An empty prediction mesh receives the worst
    possible score.

    Parameters
    ----------
    preds : Sequence[PredictionRecord]
        Predictions
    gts : Sequence[GtRecord]
        Ground truth
    metric_kind : str
        One of iou, cd, lfd or pcr
    metric_cfg : MetricConfig, optional
        Metric parameters, by default MetricConfig()
    lfd_cfg : LfdConfig, optional
        Light field parameters, by default LfdConfig()

    Returns
    -------
    np.ndarray
        Matrix with shape (len(preds), len(gts)), NaN for pairs of different
        categories
    """
    check_kind(metric_kind)
    scores = np.full((len(preds), len(gts)), np.nan)
    pairs = [
        (i, j)
        for i, pred in enumerate(preds)
        for j, gt in enumerate(gts)
        if pred.category == gt.category
    ]
    if len(pairs) == 0:
        return scores

    descriptors: Dict[Tuple[str, int], np.ndarray] = {}
    if metric_kind == "lfd":
        meshes = [("p", i) for i in sorted({i for i, _ in pairs})]
        meshes += [("g", j) for j in sorted({j for _, j in pairs})]

        def describe(key: Tuple[str, int]) -> Optional[np.ndarray]:
            mesh = preds[key[1]].mesh if key[0] == "p" else gts[key[1]].mesh
            return None if mesh.is_empty() else lightfield_descriptor(mesh, lfd_cfg)

        for key, desc in zip(meshes, parallel_map(describe, meshes)):
            if desc is not None:
                descriptors[key] = desc

    def score(pair: Tuple[int, int]) -> float:
        i, j = pair
        mesh: TriMesh = preds[i].mesh
        gt = gts[j]
        if mesh.is_empty():
            return _worst(metric_kind)
        if metric_kind == "iou":
            return voxel_iou(mesh, gt.mesh, metric_cfg.voxel)
        if metric_kind == "pcr":
            if gt.instance_points.shape[0] == 0:
                return _worst(metric_kind)
            return pcr(gt.instance_points, mesh, metric_cfg.omega)
        if metric_kind == "cd":
            if gt.mesh.is_empty():
                return _worst(metric_kind)
            return chamfer(mesh, gt.mesh, metric_cfg.samples, metric_cfg.seed)
        if ("g", j) not in descriptors:
            return _worst(metric_kind)
        return descriptor_distance(descriptors[("p", i)], descriptors[("g", j)])

    for (i, j), value in zip(pairs, parallel_map(score, pairs)):
        scores[i, j] = value
    logger.debug(f"Scored {len(pairs)} pairs with {metric_kind}")
    return scores


def greedy_match(
    order: Sequence[int],
    scores: np.ndarray,
    metric_kind: str,
    threshold: float,
) -> List[MatchResult]:
    """
    Greedy matching on a precomputed score matrix

    Parameters
    ----------
    order : Sequence[int]
        Prediction indices in the order they claim ground truth
    scores : np.ndarray
        Score matrix, NaN where a pair may not match
    metric_kind : str
        The metric kind of the scores
    threshold : float
        The matching threshold

    Returns
    -------
    List[MatchResult]
        One result per prediction in claim order
    """
    higher = HIGHER_IS_BETTER[check_kind(metric_kind)]
    matched = np.zeros(scores.shape[1], dtype=bool)
    results = []
    for ipred in order:
        row = scores[ipred]
        candidates = np.flatnonzero(~np.isnan(row) & ~matched)
        if candidates.size == 0:
            results.append(MatchResult(pred_index=ipred, gt_index=None, score=None))
            continue
        values = row[candidates]
        best = candidates[np.argmax(values) if higher else np.argmin(values)]
        score = float(row[best])
        gt_index = None
        if passes(metric_kind, score, threshold):
            matched[best] = True
            gt_index = int(best)
        results.append(MatchResult(pred_index=ipred, gt_index=gt_index, score=score))
    return results


def match_predictions(
    preds: Sequence[PredictionRecord],
    gts: Sequence[GtRecord],
    metric_kind: str,
    threshold: float,
    metric_cfg: MetricConfig = MetricConfig(),
    lfd_cfg: LfdConfig = LfdConfig(),
    scores: Optional[np.ndarray] = None,
) -> List[MatchResult]:
    """
    Match predictions to ground truth within categories

    Parameters
    ----------
    preds : Sequence[PredictionRecord]
        Predictions
    gts : Sequence[GtRecord]
        Ground truth
    metric_kind : str
        One of iou, cd, lfd or pcr
    threshold : float
        The matching threshold
    metric_cfg : MetricConfig, optional
        Metric parameters, by default MetricConfig()
    lfd_cfg : LfdConfig, optional
        Light field parameters, by default LfdConfig()
    scores : Optional[np.ndarray], optional
        Precomputed score matrix, by default None to compute it

    Returns
    -------
    List[MatchResult]
        One result per prediction in descending confidence order

    Raises
    ------
    InputError
        If the metric kind is unknown
    """
    check_kind(metric_kind)
    if scores is None:
        scores = score_matrix(preds, gts, metric_kind, metric_cfg, lfd_cfg)
    return greedy_match(confidence_order(preds), scores, metric_kind, threshold)


def average_precision(match_flags: Sequence[bool], n_gt: int) -> float:
    """
    All-point average precision

    Parameters
    ----------
    match_flags : Sequence[bool]
        True positive flags in descending confidence order
    n_gt : int
        Number of ground truth instances

    Returns
    -------
    float
        AP in [0, 1]. With no ground truth, 1 when there are no predictions
        and 0 otherwise
    """
    if n_gt < 0:
        raise InputError(f"Number of ground truth instances {n_gt} is negative")
    flags = np.asarray(match_flags, dtype=bool)
    if n_gt == 0:
        return 0.0 if flags.size > 0 else 1.0
    if flags.size == 0:
        return 0.0
    tp = np.cumsum(flags)
    fp = np.cumsum(~flags)
    recall = np.concatenate([[0.0], tp / n_gt, [1.0]])
    precision = np.concatenate([[0.0], tp / (tp + fp), [0.0]])
    precision = np.maximum.accumulate(precision[::-1])[::-1]
    steps = np.flatnonzero(recall[1:] != recall[:-1])
    return float(np.sum((recall[steps + 1] - recall[steps]) * precision[steps + 1]))


def mean_ap(per_category: Dict[str, Optional[float]]) -> float:
    """
    Unweighted mean of per category AP

    Categories with a None value, those without ground truth or predictions,
    are excluded.

    Raises
    ------
    InputError
        If no category has a value
    """
    values = [ap for ap in per_category.values() if ap is not None]
    if len(values) == 0:
        raise InputError("No category has an average precision")
    return float(np.mean(values))


def recognition_precision(
    preds: Sequence[PredictionRecord],
    gts: Sequence[GtRecord],
    iou_threshold: float,
    metric_cfg: MetricConfig = MetricConfig(),
    scores: Optional[np.ndarray] = None,
) -> float:
    """
    Fraction of predictions matching a ground truth at an IoU threshold

    Parameters
    ----------
    preds : Sequence[PredictionRecord]
        Predictions
    gts : Sequence[GtRecord]
        Ground truth
    iou_threshold : float
        Threshold in (0, 1)
    metric_cfg : MetricConfig, optional
        Metric parameters, by default MetricConfig()
    scores : Optional[np.ndarray], optional
        Precomputed IoU matrix, by default None

    Returns
    -------
    float
        TP / (TP + FP), 0 when there are no predictions

    Raises
    ------
    InputError
        If the threshold is not in (0, 1)
    """
    if not 0 < iou_threshold < 1:
        raise InputError(f"IoU threshold {iou_threshold} not in (0, 1)")
    if len(preds) == 0:
        return 0.0
    matches = match_predictions(
        preds, gts, "iou", iou_threshold, metric_cfg, scores=scores
    )
    n_tp = sum(match.gt_index is not None for match in matches)
    return n_tp / len(preds)
