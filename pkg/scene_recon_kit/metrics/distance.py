"""
Point to mesh distances and the point coverage ratio

The point coverage ratio is the fraction of observed instance points lying
strictly closer than omega to the reconstructed surface.
"""
from typing import Union
import numpy as np

from scene_recon_kit.errors import InputError
from scene_recon_kit.core.mesh import TriMesh
from scene_recon_kit.metrics.bvh import MeshBvh

DEFAULT_OMEGA = 0.047
"""Point coverage distance threshold in meters"""


def point_mesh_distance(p: np.ndarray, bvh: Union[MeshBvh, TriMesh]) -> float:
    """
    Exact Euclidean distance from a point to a mesh surface

    Parameters
    ----------
    p : np.ndarray
        The point
    bvh : Union[MeshBvh, TriMesh]
        The hierarchy, or a mesh to build one for

    Returns
    -------
    float
        The distance in meters

    Raises
    ------
    InputError
        If the mesh is empty
    """
    if isinstance(bvh, TriMesh):
        bvh = MeshBvh(bvh)
    return float(bvh.distances(np.asarray(p, dtype=float).reshape(1, 3))[0])


def points_mesh_distances(
    points: np.ndarray, bvh: Union[MeshBvh, TriMesh]
) -> np.ndarray:
    """Exact distances from many points to a mesh surface"""
    if isinstance(bvh, TriMesh):
        bvh = MeshBvh(bvh)
    return bvh.distances(points)


def pcr(
    points: np.ndarray,
    mesh: Union[MeshBvh, TriMesh],
    omega: float = DEFAULT_OMEGA,
) -> float:
    """
    Point coverage ratio of observed points by a mesh

    Parameters
    ----------
    points : np.ndarray
        Observed points with shape (N, 3), N > 0
    mesh : Union[MeshBvh, TriMesh]
        The reconstructed mesh or its hierarchy
    omega : float, optional
        Distance threshold in meters, by default 0.047

    Returns
    -------
    float
        Fraction of points with distance < omega

    Raises
    ------
    InputError
        If there are no points or the mesh is empty
    """
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    if points.shape[0] == 0:
        raise InputError("Point coverage needs at least one point")
    distances = points_mesh_distances(points, mesh)
    return float(np.count_nonzero(distances < omega) / points.shape[0])
