"""
Settings files

A settings file is TOML with one optional table per configurable stage and
an optional path to a label table, for example

.. code-block:: toml

    labels = "labels.txt"

    [cluster]
    radii = [0.01, 0.03, 0.05]
    min_points = 100

    [reconstruct]
    mode = "retrieve"
    conf_floor = 0.09

    [evaluate]
    metric = "pcr"
    thresholds = [0.5]

Unknown tables and keys are rejected. Values given on the command line
override the file, which overrides the built-in defaults.
"""
from loguru import logger
from typing import Any, Dict, Optional, Type, TypeVar
from pathlib import Path
import tomli
from pydantic import BaseModel, ValidationError

from scene_recon_kit.errors import ConfigFileError
from scene_recon_kit.core.labels import LabelSystem, default_label_system
from scene_recon_kit.core.labels import read_label_table
from scene_recon_kit.clustering.config import ClusterConfig
from scene_recon_kit.icp import IcpConfig
from scene_recon_kit.metrics.lightfield import LfdConfig
from scene_recon_kit.evaluation.matching import MetricConfig
from scene_recon_kit.evaluation.report import EvaluateConfig
from scene_recon_kit.pipeline import ReconstructConfig
from scene_recon_kit.synth.generate import SceneSpec

ModelT = TypeVar("ModelT", bound=BaseModel)


class Settings(BaseModel):
    """Settings of every stage"""

    labels: Optional[Path] = None
    """Label table replacing the built-in label system"""
    cluster: ClusterConfig = ClusterConfig()
    reconstruct: ReconstructConfig = ReconstructConfig()
    icp: IcpConfig = IcpConfig()
    metric: MetricConfig = MetricConfig()
    lfd: LfdConfig = LfdConfig()
    evaluate: EvaluateConfig = EvaluateConfig()

    class Config:
        extra = "forbid"


def read_toml(path: Path) -> Dict[str, Any]:
    """
    Read a TOML file

    Raises
    ------
    ConfigFileError
        If the file is missing or not valid TOML
    """
    if not path.exists():
        raise ConfigFileError(path, "File does not exist")
    try:
        with path.open("rb") as f:
            return tomli.load(f)
    except tomli.TOMLDecodeError as e:
        logger.error(f"Invalid TOML in {path}")
        raise ConfigFileError(path, str(e))


def _parse(path: Path, model: Type[ModelT], data: Dict[str, Any]) -> ModelT:
    try:
        return model.parse_obj(data)
    except ValidationError as e:
        logger.error(f"Invalid settings in {path}")
        raise ConfigFileError(path, str(e))


def load_settings(path: Optional[Path] = None) -> Settings:
    """
    Load settings from a TOML file

    Parameters
    ----------
    path : Optional[Path], optional
        The settings file, by default None for the built-in defaults

    Returns
    -------
    Settings
        The settings, a relative label table path is resolved against the
        directory of the settings file

    Raises
    ------
    ConfigFileError
        If the file cannot be read or holds unknown or invalid values
    """
    if path is None:
        return Settings()
    settings = _parse(path, Settings, read_toml(path))
    if settings.labels is not None and not settings.labels.is_absolute():
        settings = settings.copy(update={"labels": path.parent / settings.labels})
    logger.info(f"Loaded settings from {path}")
    return settings


def load_scene_spec(path: Optional[Path] = None) -> SceneSpec:
    """Load a synthetic scene description, the defaults when path is None"""
    if path is None:
        return SceneSpec()
    return _parse(path, SceneSpec, read_toml(path))


def load_labels(settings: Settings) -> LabelSystem:
    """The label system named by the settings or the built-in one"""
    if settings.labels is None:
        return default_label_system()
    return read_label_table(settings.labels)


def with_overrides(model: ModelT, **overrides: Any) -> ModelT:
    """
    Copy a model with the given values, ignoring None

    The result is validated, so invalid overrides raise a ValidationError.
    """
    updates = {key: value for key, value in overrides.items() if value is not None}
    if len(updates) == 0:
        return model
    return type(model).parse_obj({**model.dict(), **updates})
