"""
Observed point scenes and instance proposals

A PointScene holds per-point predictions: coordinates, segmentation category
id, offset to the instance center and rotation about the z axis. Arrays are
stored read-only so scenes can be shared between threads.
"""
from typing import List, Optional
import numpy as np
from pydantic import BaseModel, validator

from scene_recon_kit.errors import InputError
from scene_recon_kit.core.angles import wrap_angle
from scene_recon_kit.core.box import OrientedBox7DoF, BoxResidual

ANGLE_TOLERANCE = 1e-6
"""Slack on the [-pi, pi) angle range for values stored as 32 bit floats,
angles within it are wrapped back into the range"""


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


class PointScene:
    """
    Observed points with per-point category, offset and angle

    Parameters
    ----------
    points : np.ndarray
        Coordinates in meters, shape (N, 3)
    category : np.ndarray
        Segmentation category ids, shape (N,)
    offset : np.ndarray
        Predicted shift to the instance center in meters, shape (N, 3)
    angle : np.ndarray
        Rotation about z in radians in [-pi, pi), shape (N,)
    gt_instance_id : Optional[np.ndarray], optional
        Ground truth instance ids for synthetic scenes, by default None
    label_system : str, optional
        Identifier of the label system of the category ids, by default
        "default"

    Raises
    ------
    InputError
        If the arrays have inconsistent lengths, non-finite values or angles
        outside [-pi, pi)
    """

    def __init__(
        self,
        points: np.ndarray,
        category: np.ndarray,
        offset: np.ndarray,
        angle: np.ndarray,
        gt_instance_id: Optional[np.ndarray] = None,
        label_system: str = "default",
    ):
        points = np.asarray(points, dtype=float).reshape(-1, 3)
        offset = np.asarray(offset, dtype=float).reshape(-1, 3)
        angle = np.asarray(angle, dtype=float).reshape(-1)
        category = np.asarray(category).reshape(-1).astype(np.int64)
        n_points = points.shape[0]
        lengths = {len(offset), len(angle), len(category)}
        if gt_instance_id is not None:
            gt_instance_id = np.asarray(gt_instance_id).reshape(-1).astype(np.int64)
            lengths.add(len(gt_instance_id))
        if lengths != {n_points}:
            raise InputError(f"Scene arrays have inconsistent lengths {lengths}")
        if not np.all(np.isfinite(points)) or not np.all(np.isfinite(offset)):
            raise InputError("Scene coordinates or offsets are not finite")
        if not np.all(np.isfinite(angle)):
            raise InputError("Scene angles are not finite")
        if n_points > 0:
            lo, hi = angle.min(), angle.max()
            if lo < -np.pi - ANGLE_TOLERANCE or hi >= np.pi + ANGLE_TOLERANCE:
                raise InputError(f"Scene angles [{lo}, {hi}] not in [-pi, pi)")
            angle = wrap_angle(angle)
        if n_points > 0 and category.min() < 0:
            raise InputError("Scene category ids must be non-negative")
        self.points = _readonly(points)
        self.category = _readonly(category)
        self.offset = _readonly(offset)
        self.angle = _readonly(angle)
        self.gt_instance_id = (
            None if gt_instance_id is None else _readonly(gt_instance_id)
        )
        self.label_system = label_system

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    def shifted_points(self) -> np.ndarray:
        """Points shifted by their offsets towards the instance centers"""
        return self.points + self.offset

    def __len__(self) -> int:
        return self.n_points

    def __repr__(self) -> str:
        return f"PointScene(n_points={self.n_points})"


class LatentShapeDistribution(BaseModel):
    """A diagonal Gaussian over latent shape codes"""

    mu: List[float]
    """The mean code"""
    sigma: List[float]
    """The per-component standard deviation"""

    class Config:
        frozen = True

    @validator("sigma")
    def validate_sigma(cls, value: List[float], values) -> List[float]:
        """Check sigma matches mu and is non-negative"""
        if "mu" in values and len(value) != len(values["mu"]):
            raise ValueError(
                f"sigma dimension {len(value)} != mu dimension {len(values['mu'])}"
            )
        if not np.all(np.isfinite(value)) or any(x < 0 for x in value):
            raise ValueError("sigma components must be finite and non-negative")
        return value

    @validator("mu")
    def validate_mu(cls, value: List[float]) -> List[float]:
        """Check mu is finite"""
        if not np.all(np.isfinite(value)):
            raise ValueError("mu components must be finite")
        return value

    @property
    def dimension(self) -> int:
        return len(self.mu)

    @property
    def mu_array(self) -> np.ndarray:
        return np.array(self.mu, dtype=float)

    @property
    def sigma_array(self) -> np.ndarray:
        return np.array(self.sigma, dtype=float)


class InstanceProposal(BaseModel):
    """A group of scene points hypothesised to be one object instance"""

    point_indices: List[int]
    """Sorted indices into the scene points"""
    confidence: float = 1.0
    """Confidence in [0, 1]"""
    category: Optional[str] = None
    """The reconstruction category"""
    initial_box: Optional[OrientedBox7DoF] = None
    """The box estimated from the points"""
    residual: BoxResidual = BoxResidual()
    """The predicted residual to the initial box"""
    latent: Optional[LatentShapeDistribution] = None
    """The predicted latent shape distribution"""

    class Config:
        frozen = True

    @validator("point_indices")
    def validate_indices(cls, value: List[int]) -> List[int]:
        """Check indices are non-empty, non-negative and unique"""
        if len(value) == 0:
            raise ValueError("Proposal has no points")
        if min(value) < 0:
            raise ValueError("Proposal point indices must be non-negative")
        if len(set(value)) != len(value):
            raise ValueError("Proposal point indices contain duplicates")
        return value

    @validator("confidence")
    def validate_confidence(cls, value: float) -> float:
        """Check confidence is in [0, 1]"""
        if not 0 <= value <= 1:
            raise ValueError(f"Confidence {value} not in [0, 1]")
        return value

    @property
    def n_points(self) -> int:
        return len(self.point_indices)

    def indices_array(self) -> np.ndarray:
        return np.array(self.point_indices, dtype=np.int64)
