"""Clustering configuration"""
from typing import List
from pydantic import BaseModel, validator

DEFAULT_RADII = [0.01, 0.03, 0.05]


class ClusterConfig(BaseModel):
    """Parameters for grouping scene points into proposals"""

    radius: float = 0.03
    """Single scale clustering radius in meters"""
    radii: List[float] = list(DEFAULT_RADII)
    """Multi-scale clustering radii in meters"""
    multi_scale: bool = True
    """Cluster at every radius in radii, otherwise only at radius"""
    min_points: int = 100
    """Proposals with fewer points are dropped"""
    dedup_iou: float = 0.9
    """Proposals overlapping a kept proposal at this point IoU are dropped"""
    dual_set: bool = False
    """Also cluster the original, unshifted, coordinates"""
    arithmetic_angle_mean: bool = False
    """Average angles arithmetically rather than on the circle"""

    class Config:
        extra = "forbid"

    @validator("radius")
    def validate_radius(cls, value: float) -> float:
        if value <= 0:
            raise ValueError(f"Radius {value} must be positive")
        return value

    @validator("radii")
    def validate_radii(cls, value: List[float]) -> List[float]:
        if len(value) == 0:
            raise ValueError("At least one radius is required")
        if min(value) <= 0:
            raise ValueError(f"Radii {value} must be positive")
        return value

    @validator("min_points")
    def validate_min_points(cls, value: int) -> int:
        if value < 1:
            raise ValueError(f"min_points {value} must be at least 1")
        return value

    @validator("dedup_iou")
    def validate_dedup_iou(cls, value: float) -> float:
        if not 0 < value <= 1:
            raise ValueError(f"dedup_iou {value} not in (0, 1]")
        return value

    def scales(self) -> List[float]:
        """The radii to cluster at"""
        return list(self.radii) if self.multi_scale else [self.radius]
