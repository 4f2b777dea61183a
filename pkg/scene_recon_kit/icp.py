"""
Iterative closest point refinement of placed meshes

The mesh surface is sampled once. Each iteration pairs every observed target
point with its nearest transformed surface sample, drops pairs further apart
than the correspondence limit and solves the closed form least squares rigid
or similarity transform of the pairs by singular value decomposition of
their cross-covariance.

The error tracked across iterations is the truncated RMS

    sqrt(mean(min(d^2, max_correspondence^2)))

over all target points. It cannot increase from one accepted iteration to
the next. An update that would increase it through rounding is rejected and
iteration stops.
"""
from loguru import logger
from typing import List, Tuple
import numpy as np
from pydantic import BaseModel, validator
from scipy.spatial import cKDTree

from scene_recon_kit.errors import InputError, AlignmentFailedError
from scene_recon_kit.core.box import Vector3, as_vector3
from scene_recon_kit.core.mesh import TriMesh
from scene_recon_kit.metrics.sampling import sample_surface

MIN_CORRESPONDENCES = 3
ORTHONORMAL_TOLERANCE = 1e-9

Matrix3 = Tuple[Vector3, Vector3, Vector3]


class IcpConfig(BaseModel):
    """Settings for ICP refinement"""

    max_iterations: int = 50
    """Iteration cap"""
    convergence_eps: float = 1e-5
    """Stop when the RMS error decreases by less than this, meters"""
    surface_samples: int = 4096
    """Number of mesh surface samples"""
    with_scale: bool = False
    """Also estimate a uniform scale"""
    max_correspondence: float = 0.2
    """Pairs further apart than this are dropped, meters"""
    seed: int = 0
    """Seed for surface sampling"""

    class Config:
        frozen = True
        extra = "forbid"

    @validator("max_iterations")
    def validate_iterations(cls, value: int) -> int:
        if value < 1:
            raise ValueError(f"max_iterations {value} must be at least 1")
        return value

    @validator("convergence_eps", "max_correspondence")
    def validate_positive(cls, value: float) -> float:
        if not value > 0:
            raise ValueError(f"Value {value} must be positive")
        return value

    @validator("surface_samples")
    def validate_samples(cls, value: int) -> int:
        if value < MIN_CORRESPONDENCES:
            raise ValueError(f"surface_samples {value} must be at least 3")
        return value


class RigidTransform(BaseModel):
    """A similarity transform x -> scale * rotation @ x + translation"""

    rotation: Matrix3 = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))
    """Rotation matrix rows"""
    translation: Vector3 = (0.0, 0.0, 0.0)
    """Translation in meters"""
    scale: float = 1.0
    """Uniform scale, 1 without scale estimation"""

    class Config:
        frozen = True

    @validator("rotation")
    def validate_rotation(cls, value: Matrix3) -> Matrix3:
        """Check the rotation is orthonormal with determinant +1"""
        matrix = np.array(value, dtype=float)
        if matrix.shape != (3, 3) or not np.all(np.isfinite(matrix)):
            raise ValueError("Rotation must be a finite 3x3 matrix")
        if np.abs(matrix.T @ matrix - np.eye(3)).max() > ORTHONORMAL_TOLERANCE:
            raise ValueError("Rotation is not orthonormal")
        if abs(np.linalg.det(matrix) - 1) > ORTHONORMAL_TOLERANCE:
            raise ValueError("Rotation determinant is not +1")
        return value

    @validator("scale")
    def validate_scale(cls, value: float) -> float:
        if not np.isfinite(value) or value <= 0:
            raise ValueError(f"Scale {value} must be positive")
        return value

    @classmethod
    def from_arrays(
        cls, rotation: np.ndarray, translation: np.ndarray, scale: float = 1.0
    ) -> "RigidTransform":
        rows = np.asarray(rotation, dtype=float)
        return cls(
            rotation=(as_vector3(rows[0]), as_vector3(rows[1]), as_vector3(rows[2])),
            translation=as_vector3(translation),
            scale=float(scale),
        )

    @property
    def rotation_array(self) -> np.ndarray:
        return np.array(self.rotation, dtype=float)

    @property
    def translation_array(self) -> np.ndarray:
        return np.array(self.translation, dtype=float)

    def linear(self) -> np.ndarray:
        """The linear part scale * rotation"""
        return self.scale * self.rotation_array

    def apply(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float).reshape(-1, 3)
        return points @ self.linear().T + self.translation_array

    def then(self, after: "RigidTransform") -> "RigidTransform":
        """The transform applying self first and then after"""
        rotation = after.rotation_array @ self.rotation_array
        translation = after.linear() @ self.translation_array + after.translation_array
        return RigidTransform.from_arrays(rotation, translation, after.scale * self.scale)

    def rotation_angle(self) -> float:
        """Rotation angle in radians"""
        cos = (np.trace(self.rotation_array) - 1) / 2
        return float(np.arccos(np.clip(cos, -1.0, 1.0)))


class IcpResult(BaseModel):
    """The outcome of an alignment"""

    transform: RigidTransform
    """Cumulative transform applied to the input mesh"""
    mesh: TriMesh
    """The transformed mesh"""
    rms: float
    """Final truncated RMS error in meters"""
    history: List[float]
    """Truncated RMS error before the first and after every accepted iteration"""
    n_iterations: int
    """Number of accepted iterations"""

    class Config:
        arbitrary_types_allowed = True


def rigid_fit(
    source: np.ndarray, target: np.ndarray, with_scale: bool = False
) -> RigidTransform:
    """
    Least squares rigid or similarity transform between paired points

    Minimises sum ||s R source_i + t - target_i||^2 in closed form from the
    singular value decomposition of the cross-covariance, flipping the last
    singular direction when needed so that det(R) = +1.

    Parameters
    ----------
    source : np.ndarray
        Points with shape (N, 3)
    target : np.ndarray
        Paired points with shape (N, 3)
    with_scale : bool, optional
        Estimate the scale s, by default False with s = 1

    Returns
    -------
    RigidTransform
        The transform taking source onto target

    Raises
    ------
    AlignmentFailedError
        If there are fewer than 3 pairs or the source points coincide
    """
    source = np.asarray(source, dtype=float).reshape(-1, 3)
    target = np.asarray(target, dtype=float).reshape(-1, 3)
    if source.shape != target.shape:
        raise InputError(f"Point shapes {source.shape} and {target.shape} differ")
    n_pairs = source.shape[0]
    if n_pairs < MIN_CORRESPONDENCES:
        raise AlignmentFailedError(n_pairs, "at least 3 pairs are needed")
    mean_source = source.mean(axis=0)
    mean_target = target.mean(axis=0)
    centered_source = source - mean_source
    centered_target = target - mean_target
    covariance = centered_target.T @ centered_source / n_pairs
    u, singular, vt = np.linalg.svd(covariance)
    signs = np.ones(3)
    if np.linalg.det(u) * np.linalg.det(vt) < 0:
        signs[2] = -1.0
    rotation = u @ np.diag(signs) @ vt
    scale = 1.0
    if with_scale:
        variance = np.mean(np.sum(centered_source ** 2, axis=1))
        if not variance > 0:
            raise AlignmentFailedError(n_pairs, "source points coincide")
        scale = float(np.sum(singular * signs) / variance)
    translation = mean_target - scale * rotation @ mean_source
    return RigidTransform.from_arrays(rotation, translation, scale)


def _truncated_rms(distances: np.ndarray, limit: float) -> float:
    return float(np.sqrt(np.mean(np.minimum(distances ** 2, limit ** 2))))


def icp_align(
    mesh: TriMesh, target_points: np.ndarray, cfg: IcpConfig = IcpConfig()
) -> IcpResult:
    """
    Align a mesh to observed points

    Parameters
    ----------
    mesh : TriMesh
        The placed mesh
    target_points : np.ndarray
        Observed points with shape (N, 3), N >= 3
    cfg : IcpConfig, optional
        Settings, by default IcpConfig()

    Returns
    -------
    IcpResult
        The cumulative transform, the moved mesh and the error history

    Raises
    ------
    InputError
        If there are fewer than 3 target points or the mesh has no area
    AlignmentFailedError
        If fewer than 3 pairs fall within the correspondence limit
    """
    target = np.asarray(target_points, dtype=float).reshape(-1, 3)
    if target.shape[0] < MIN_CORRESPONDENCES:
        raise InputError(f"ICP needs at least 3 target points, got {target.shape[0]}")
    samples = sample_surface(mesh, cfg.surface_samples, cfg.seed)
    limit = cfg.max_correspondence

    transform = RigidTransform()
    distances, nearest = cKDTree(samples).query(target)
    rms = _truncated_rms(distances, limit)
    history = [rms]
    n_iterations = 0
    for _iteration in range(cfg.max_iterations):
        inliers = distances <= limit
        n_inliers = int(np.count_nonzero(inliers))
        if n_inliers < MIN_CORRESPONDENCES:
            logger.warning(f"ICP found {n_inliers} correspondences within {limit}")
            raise AlignmentFailedError(n_inliers, f"limit {limit} m")
        moved = transform.apply(samples)
        step = rigid_fit(moved[nearest[inliers]], target[inliers], cfg.with_scale)
        candidate = transform.then(step)
        cand_distances, cand_nearest = cKDTree(candidate.apply(samples)).query(target)
        cand_rms = _truncated_rms(cand_distances, limit)
        if cand_rms > rms:
            break
        transform = candidate
        distances, nearest = cand_distances, cand_nearest
        n_iterations += 1
        history.append(cand_rms)
        improvement = rms - cand_rms
        rms = cand_rms
        if improvement < cfg.convergence_eps:
            break
    logger.debug(f"ICP stopped after {n_iterations} iterations with RMS {rms:.6g}")
    moved_mesh = mesh.transformed(transform.linear(), transform.translation_array)
    return IcpResult(
        transform=transform,
        mesh=moved_mesh,
        rms=rms,
        history=history,
        n_iterations=n_iterations,
    )
