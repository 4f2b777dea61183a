"""Matching, average precision and dataset evaluation reports"""
from scene_recon_kit.evaluation.records import PredictionRecord  # noqa: F401
from scene_recon_kit.evaluation.records import GtRecord  # noqa: F401
from scene_recon_kit.evaluation.matching import MetricConfig  # noqa: F401
from scene_recon_kit.evaluation.matching import match_predictions  # noqa: F401
from scene_recon_kit.evaluation.matching import average_precision  # noqa: F401
from scene_recon_kit.evaluation.matching import mean_ap  # noqa: F401
from scene_recon_kit.evaluation.matching import recognition_precision  # noqa: F401
from scene_recon_kit.evaluation.report import EvaluateConfig  # noqa: F401
from scene_recon_kit.evaluation.report import SceneRecords  # noqa: F401
from scene_recon_kit.evaluation.report import evaluate_scenes  # noqa: F401
