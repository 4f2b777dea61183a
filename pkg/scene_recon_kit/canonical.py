"""
Canonical instance frames

Proposal points are mapped into a per-instance canonical frame by

1. recentering on the box center
2. rotating by the negative box rotation about z
3. dividing by the box extents

The unit frame then shifts by 0.5 so the box spans [0, 1] on each axis with
its min corner at the origin. The centered frame keeps the box in
[-0.5, 0.5]. Decoders declare which frame they generate in, and placement
applies the exact inverse with the refined box.
"""
from enum import Enum
from typing import Tuple
import numpy as np
from pydantic import BaseModel, validator

from scene_recon_kit.errors import InputError
from scene_recon_kit.core.angles import rotation_z
from scene_recon_kit.core.box import OrientedBox7DoF, Vector3, as_vector3
from scene_recon_kit.core.mesh import TriMesh


class CanonicalFrame(str, Enum):
    """The canonical frame conventions"""

    UNIT = "unit"
    CENTERED = "centered"

    @property
    def origin_shift(self) -> float:
        """Amount added to every canonical coordinate"""
        return 0.5 if self is CanonicalFrame.UNIT else 0.0

    def bounds(self) -> Tuple[float, float]:
        """The canonical cube range"""
        shift = self.origin_shift
        return (-0.5 + shift, 0.5 + shift)


class CanonicalTransform(BaseModel):
    """The map from world coordinates into a canonical frame"""

    translation: Vector3
    """Translation applied first, the negative box center"""
    z_rotation: float
    """Rotation about z applied second, the negative box rotation"""
    inv_scale: Vector3
    """Reciprocal box extents applied last"""
    frame: CanonicalFrame = CanonicalFrame.UNIT
    """The frame convention"""

    class Config:
        frozen = True

    @validator("inv_scale")
    def validate_inv_scale(cls, value: Vector3) -> Vector3:
        if not np.all(np.isfinite(value)) or min(value) <= 0:
            raise ValueError(f"Inverse scale {value} must be finite and positive")
        return value

    @classmethod
    def from_box(
        cls, box: OrientedBox7DoF, frame: CanonicalFrame = CanonicalFrame.UNIT
    ) -> "CanonicalTransform":
        """The transform taking a box onto the canonical cube"""
        return cls(
            translation=as_vector3(-box.center_array),
            z_rotation=-box.z_rotation,
            inv_scale=as_vector3(1.0 / box.scale_array),
            frame=frame,
        )

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Map world points into the canonical frame"""
        points = np.asarray(points, dtype=float).reshape(-1, 3)
        rotated = (points + np.array(self.translation)) @ rotation_z(
            self.z_rotation
        ).T
        return rotated * np.array(self.inv_scale) + self.frame.origin_shift

    def inverse(self, points: np.ndarray) -> np.ndarray:
        """Map canonical points back into the world frame"""
        points = np.asarray(points, dtype=float).reshape(-1, 3)
        scaled = (points - self.frame.origin_shift) / np.array(self.inv_scale)
        return scaled @ rotation_z(-self.z_rotation).T - np.array(self.translation)


def canonicalize(
    points: np.ndarray,
    box: OrientedBox7DoF,
    frame: CanonicalFrame = CanonicalFrame.UNIT,
) -> Tuple[np.ndarray, CanonicalTransform]:
    """
    Map points into the canonical frame of a box

    Parameters
    ----------
    points : np.ndarray
        World points with shape (N, 3), N may be 0
    box : OrientedBox7DoF
        The box defining the frame
    frame : CanonicalFrame, optional
        The frame convention, by default the unit frame

    Returns
    -------
    Tuple[np.ndarray, CanonicalTransform]
        The canonical points and the transform used
    """
    transform = CanonicalTransform.from_box(box, frame)
    return transform.apply(points), transform


def place_mesh(
    mesh: TriMesh,
    refined_box: OrientedBox7DoF,
    frame: CanonicalFrame = CanonicalFrame.UNIT,
) -> TriMesh:
    """
    Place a canonical mesh into the world with a box

    Vertices are mapped by the inverse of canonicalize with the box, the
    triangles and category are kept.

    Parameters
    ----------
    mesh : TriMesh
        Mesh in the canonical frame
    refined_box : OrientedBox7DoF
        The box to place the mesh with
    frame : CanonicalFrame, optional
        The canonical frame of the mesh, by default the unit frame

    Returns
    -------
    TriMesh
        The mesh in world coordinates

    Raises
    ------
    InputError
        If a box extent is not positive
    """
    scale = np.array(refined_box.scale, dtype=float)
    if not np.all(np.isfinite(scale)) or np.any(scale <= 0):
        raise InputError(f"Box scale {refined_box.scale} must be positive")
    local = (mesh.vertices - frame.origin_shift) * scale
    vertices = local @ rotation_z(refined_box.z_rotation).T + refined_box.center_array
    return TriMesh(vertices, mesh.triangles, mesh.category)
