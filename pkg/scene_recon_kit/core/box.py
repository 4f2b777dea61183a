"""
The 7 degree of freedom oriented box and its residual algebra

A box has a center, a rotation about the vertical z axis and three positive
extents. Boxes are immutable pydantic models.

Corners are ordered z-major, then y, then x. Corner k has local coordinates

    ((k & 1) - 0.5, ((k >> 1) & 1) - 0.5, ((k >> 2) & 1) - 0.5) * scale

before rotation about the center.
"""
from typing import Tuple
import numpy as np
from pydantic import BaseModel, validator

from scene_recon_kit.errors import InputError
from scene_recon_kit.core.angles import wrap_angle, rotation_z

MIN_SCALE = 1e-4
"""The minimum box extent in meters applied when a residual would invert it"""

Vector3 = Tuple[float, float, float]


def as_vector3(values) -> Vector3:
    """Convert a length three sequence or array to a tuple of floats"""
    arr = np.asarray(values, dtype=float).reshape(-1)
    if arr.size != 3:
        raise InputError(f"Expected 3 components, received {arr.size}")
    return (float(arr[0]), float(arr[1]), float(arr[2]))


class OrientedBox7DoF(BaseModel):
    """An oriented box with rotation restricted to the z axis"""

    center: Vector3
    """The box center in meters"""
    z_rotation: float
    """Rotation about the z axis in radians, in [-pi, pi)"""
    scale: Vector3
    """The box extents along its local axes in meters"""

    class Config:
        frozen = True

    @validator("center")
    def validate_center(cls, value: Vector3) -> Vector3:
        """Check the center is finite"""
        if not np.all(np.isfinite(value)):
            raise ValueError(f"Box center {value} is not finite")
        return value

    @validator("z_rotation")
    def validate_rotation(cls, value: float) -> float:
        """Check the rotation is in [-pi, pi)"""
        if not np.isfinite(value) or value < -np.pi or value >= np.pi:
            raise ValueError(f"Box rotation {value} not in [-pi, pi)")
        return value

    @validator("scale")
    def validate_scale(cls, value: Vector3) -> Vector3:
        """Check all extents are strictly positive"""
        if not np.all(np.isfinite(value)) or min(value) <= 0:
            raise ValueError(f"Box scale {value} must be finite and positive")
        return value

    @property
    def center_array(self) -> np.ndarray:
        return np.array(self.center)

    @property
    def scale_array(self) -> np.ndarray:
        return np.array(self.scale)

    def rotation_matrix(self) -> np.ndarray:
        """The 3x3 rotation matrix of the box"""
        return rotation_z(self.z_rotation)

    def volume(self) -> float:
        """The box volume in cubic meters"""
        return float(np.prod(self.scale))


class BoxResidual(BaseModel):
    """A residual to add to an initial box"""

    d_center: Vector3 = (0.0, 0.0, 0.0)
    """Center change in meters"""
    d_rotation: float = 0.0
    """Rotation change in radians"""
    d_scale: Vector3 = (0.0, 0.0, 0.0)
    """Signed extent changes in meters"""

    class Config:
        frozen = True

    def is_finite(self) -> bool:
        """True if every component is finite"""
        values = list(self.d_center) + [self.d_rotation] + list(self.d_scale)
        return bool(np.all(np.isfinite(values)))

    @classmethod
    def between(
        cls, initial: OrientedBox7DoF, target: OrientedBox7DoF
    ) -> "BoxResidual":
        """
        Get the residual that takes one box to another

        Parameters
        ----------
        initial : OrientedBox7DoF
            The initial box
        target : OrientedBox7DoF
            The target box

        Returns
        -------
        BoxResidual
            Residual such that compose_box(initial, residual) ~ target
        """
        return cls(
            d_center=as_vector3(target.center_array - initial.center_array),
            d_rotation=float(wrap_angle(target.z_rotation - initial.z_rotation)),
            d_scale=as_vector3(target.scale_array - initial.scale_array),
        )


def compose_box(
    initial: OrientedBox7DoF, residual: BoxResidual, min_scale: float = MIN_SCALE
) -> OrientedBox7DoF:
    """
    Apply a residual to an initial box

    Centers and extents are added componentwise and the rotation is added and
    wrapped into [-pi, pi). Any extent that would become zero or negative is
    clamped to min_scale.

    Parameters
    ----------
    initial : OrientedBox7DoF
        The initial box
    residual : BoxResidual
        The residual to add
    min_scale : float, optional
        The minimum extent, by default MIN_SCALE

    Returns
    -------
    OrientedBox7DoF
        The refined box

    Raises
    ------
    InputError
        If the residual has non-finite components
    """
    if not residual.is_finite():
        raise InputError(f"Residual {residual} has non-finite components")
    center = initial.center_array + np.array(residual.d_center)
    rotation = wrap_angle(initial.z_rotation + residual.d_rotation)
    scale = initial.scale_array + np.array(residual.d_scale)
    scale = np.where(scale <= 0, min_scale, scale)
    return OrientedBox7DoF(
        center=as_vector3(center), z_rotation=rotation, scale=as_vector3(scale)
    )


def local_corners() -> np.ndarray:
    """The 8 corners of a unit box centered at the origin in corner order"""
    k = np.arange(8)
    return np.stack(
        [(k & 1) - 0.5, ((k >> 1) & 1) - 0.5, ((k >> 2) & 1) - 0.5], axis=1
    ).astype(float)


def box_corners(box: OrientedBox7DoF) -> np.ndarray:
    """
    Get the 8 corners of a box

    Parameters
    ----------
    box : OrientedBox7DoF
        The box

    Returns
    -------
    np.ndarray
        Corners with shape (8, 3), z-major then y then x ordering
    """
    local = local_corners() * box.scale_array
    return local @ box.rotation_matrix().T + box.center_array
