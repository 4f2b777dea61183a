"""
Predicted and ground truth instance records used for scoring
"""
from typing import Optional
import numpy as np
from pydantic import BaseModel, validator

from scene_recon_kit.core.labels import RECON_CATEGORIES
from scene_recon_kit.core.mesh import TriMesh


class PredictionRecord(BaseModel):
    """A reconstructed instance"""

    mesh: TriMesh
    """The placed mesh in world coordinates"""
    confidence: float
    """Confidence in [0, 1]"""
    category: str
    """The reconstruction category"""
    proposal_id: Optional[int] = None
    """Id of the proposal the mesh was reconstructed from"""

    class Config:
        arbitrary_types_allowed = True
        frozen = True

    @validator("confidence")
    def validate_confidence(cls, value: float) -> float:
        if not 0 <= value <= 1:
            raise ValueError(f"Confidence {value} not in [0, 1]")
        return value


class GtRecord(BaseModel):
    """A ground truth instance"""

    mesh: TriMesh
    """The complete annotated mesh"""
    instance_points: np.ndarray
    """The observed points of the instance with shape (N, 3)"""
    category: str
    """The reconstruction category"""

    class Config:
        arbitrary_types_allowed = True
        frozen = True

    @validator("instance_points")
    def validate_points(cls, value: np.ndarray) -> np.ndarray:
        value = np.asarray(value, dtype=float)
        if value.ndim != 2 or value.shape[1] != 3:
            raise ValueError(f"Instance points have shape {value.shape}, not (N, 3)")
        return value

    @validator("category")
    def validate_category(cls, value: str) -> str:
        if value not in RECON_CATEGORIES:
            raise ValueError(f"Category '{value}' is not a reconstruction category")
        return value
