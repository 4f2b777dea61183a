"""
Dataset level evaluation reports

Predictions below the confidence floor are dropped. Each scene is matched on
its own, then the true positive flags of all scenes are pooled per category
in descending confidence, ties resolved by scene order and then prediction
order, to compute per category AP at every threshold. The mean AP is taken
over categories with at least one ground truth instance or prediction.
"""
from loguru import logger
from typing import Dict, List, Optional, Sequence, Tuple
import json
import numpy as np
import pandas as pd
from pydantic import BaseModel, validator

from scene_recon_kit.errors import InputError
from scene_recon_kit.core.labels import RECON_CATEGORIES
from scene_recon_kit.metrics.lightfield import LfdConfig
from scene_recon_kit.evaluation.records import PredictionRecord, GtRecord
from scene_recon_kit.evaluation.matching import METRIC_KINDS, MetricConfig
from scene_recon_kit.evaluation.matching import score_matrix, greedy_match
from scene_recon_kit.evaluation.matching import confidence_order
from scene_recon_kit.evaluation.matching import average_precision, mean_ap

DEFAULT_CONF_FLOOR = 0.09


class EvaluateConfig(BaseModel):
    """Evaluation protocol settings"""

    metric: str = "iou"
    """Matching metric, one of iou, cd, lfd or pcr"""
    thresholds: List[float] = [0.25]
    """Matching thresholds, one AP table per threshold"""
    conf_floor: float = DEFAULT_CONF_FLOOR
    """Predictions with lower confidence are dropped"""
    recognition: List[float] = []
    """IoU thresholds for recognition precision"""

    class Config:
        frozen = True
        extra = "forbid"

    @validator("metric")
    def validate_metric(cls, value: str) -> str:
        if value not in METRIC_KINDS:
            raise ValueError(f"Unknown metric '{value}', expected {METRIC_KINDS}")
        return value

    @validator("thresholds")
    def validate_thresholds(cls, value: List[float]) -> List[float]:
        if len(value) == 0:
            raise ValueError("At least one threshold is required")
        return value

    @validator("conf_floor")
    def validate_floor(cls, value: float) -> float:
        if not 0 <= value <= 1:
            raise ValueError(f"Confidence floor {value} not in [0, 1]")
        return value

    @validator("recognition")
    def validate_recognition(cls, value: List[float]) -> List[float]:
        if any(not 0 < t < 1 for t in value):
            raise ValueError(f"Recognition thresholds {value} must be in (0, 1)")
        return value


class SceneRecords(BaseModel):
    """Predictions and ground truth of one scene"""

    name: str
    predictions: List[PredictionRecord]
    ground_truth: List[GtRecord]


class CategoryResult(BaseModel):
    """AP and counts of one category"""

    ap: Optional[float]
    """AP, None without ground truth and predictions"""
    n_gt: int
    n_pred: int
    n_tp: int


class ThresholdResult(BaseModel):
    """Per category results at one threshold"""

    threshold: float
    categories: Dict[str, CategoryResult]
    map: Optional[float]
    """Mean AP, None when no category has an AP"""


class EvaluationReport(BaseModel):
    """The evaluation of a set of scenes"""

    metric: str
    conf_floor: float
    n_scenes: int
    results: List[ThresholdResult]
    recognition: Dict[str, float] = {}
    """Recognition precision keyed by IoU threshold"""

    def to_dataframe(self) -> pd.DataFrame:
        """AP table with one row per category and one column per threshold"""
        columns = {}
        for result in self.results:
            aps = {name: cat.ap for name, cat in result.categories.items()}
            aps["mAP"] = result.map
            columns[f"AP@{result.threshold:g}"] = pd.Series(aps, dtype=float)
        return pd.DataFrame(columns)

    def to_json(self) -> str:
        """Deterministic JSON serialisation"""
        return json.dumps(self.dict(), sort_keys=True, indent=2)


def _category_names(scenes: Sequence[SceneRecords]) -> List[str]:
    seen = {p.category for s in scenes for p in s.predictions}
    seen |= {g.category for s in scenes for g in s.ground_truth}
    extra = sorted(seen - set(RECON_CATEGORIES))
    return list(RECON_CATEGORIES) + extra


def evaluate_scenes(
    scenes: Sequence[SceneRecords],
    cfg: EvaluateConfig = EvaluateConfig(),
    metric_cfg: MetricConfig = MetricConfig(),
    lfd_cfg: LfdConfig = LfdConfig(),
) -> EvaluationReport:
    """
    Evaluate predictions against ground truth over several scenes

    Parameters
    ----------
    scenes : Sequence[SceneRecords]
        The scenes
    cfg : EvaluateConfig, optional
        Protocol settings, by default EvaluateConfig()
    metric_cfg : MetricConfig, optional
        Metric parameters, by default MetricConfig()
    lfd_cfg : LfdConfig, optional
        Light field parameters, by default LfdConfig()

    Returns
    -------
    EvaluationReport
        Per threshold AP tables and recognition precision
    """
    filtered = []
    for scene in scenes:
        kept = [p for p in scene.predictions if p.confidence >= cfg.conf_floor]
        if len(kept) < len(scene.predictions):
            logger.info(
                f"Scene {scene.name}: dropped {len(scene.predictions) - len(kept)}"
                f" predictions below confidence {cfg.conf_floor}"
            )
        filtered.append(kept)

    scores = []
    iou_scores = []
    for scene, preds in zip(scenes, filtered):
        scores.append(
            score_matrix(preds, scene.ground_truth, cfg.metric, metric_cfg, lfd_cfg)
        )
        if len(cfg.recognition) > 0:
            iou_scores.append(
                scores[-1]
                if cfg.metric == "iou"
                else score_matrix(preds, scene.ground_truth, "iou", metric_cfg)
            )

    categories = _category_names(scenes)
    n_gt = {name: 0 for name in categories}
    for scene in scenes:
        for gt in scene.ground_truth:
            n_gt[gt.category] += 1

    results = []
    for threshold in cfg.thresholds:
        ranked: Dict[str, List[Tuple[float, int, int, bool]]] = {
            name: [] for name in categories
        }
        for iscene, (scene, preds) in enumerate(zip(scenes, filtered)):
            order = confidence_order(preds)
            for match in greedy_match(order, scores[iscene], cfg.metric, threshold):
                pred = preds[match.pred_index]
                ranked[pred.category].append(
                    (
                        -pred.confidence,
                        iscene,
                        match.pred_index,
                        match.gt_index is not None,
                    )
                )
        per_category = {}
        for name in categories:
            entries = sorted(ranked[name], key=lambda x: x[:3])
            flags = [x[3] for x in entries]
            ap = None
            if n_gt[name] > 0 or len(flags) > 0:
                ap = average_precision(flags, n_gt[name])
            per_category[name] = CategoryResult(
                ap=ap, n_gt=n_gt[name], n_pred=len(flags), n_tp=int(np.sum(flags))
            )
        try:
            map_value: Optional[float] = mean_ap(
                {name: result.ap for name, result in per_category.items()}
            )
        except InputError:
            logger.warning(f"No category to average at threshold {threshold}")
            map_value = None
        results.append(
            ThresholdResult(threshold=threshold, categories=per_category, map=map_value)
        )

    recognition = {}
    for threshold in cfg.recognition:
        n_pred = sum(len(preds) for preds in filtered)
        n_tp = 0
        for iscene, preds in enumerate(filtered):
            order = confidence_order(preds)
            matches = greedy_match(order, iou_scores[iscene], "iou", threshold)
            n_tp += sum(match.gt_index is not None for match in matches)
        recognition[f"{threshold:g}"] = n_tp / n_pred if n_pred > 0 else 0.0

    report = EvaluationReport(
        metric=cfg.metric,
        conf_floor=cfg.conf_floor,
        n_scenes=len(scenes),
        results=results,
        recognition=recognition,
    )
    logger.info(f"Evaluation with {cfg.metric} over {len(scenes)} scenes")
    logger.info(f"\n{report.to_dataframe().to_string()}")
    return report
