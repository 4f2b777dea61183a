"""
Surface sampling and the Chamfer distance

The Chamfer distance is the mean unsquared nearest neighbour distance from
the samples of one mesh to the samples of the other, summed over both
directions. Both meshes are sampled with the same seed.
"""
import numpy as np
from scipy.spatial import cKDTree

from scene_recon_kit.errors import InputError
from scene_recon_kit.core.mesh import TriMesh

DEFAULT_SAMPLES = 10_000


def sample_surface(mesh: TriMesh, n: int, seed: int = 0) -> np.ndarray:
    """
    Sample points uniformly over a mesh surface

    Triangles are chosen with probability proportional to area and points
    placed with uniform barycentric coordinates.

    Parameters
    ----------
    mesh : TriMesh
        The mesh
    n : int
        Number of points
    seed : int, optional
        Random seed, by default 0

    Returns
    -------
    np.ndarray
        Points with shape (n, 3)

    Raises
    ------
    InputError
        If the mesh has no area or n is negative
    """
    if n < 0:
        raise InputError(f"Number of samples {n} is negative")
    areas = mesh.triangle_areas() if not mesh.is_empty() else np.empty(0)
    total = areas.sum()
    if not total > 0:
        raise InputError("Cannot sample a mesh with zero surface area")
    rng = np.random.default_rng(seed)
    tri = rng.choice(areas.size, size=n, p=areas / total)
    r1 = np.sqrt(rng.random(n))
    r2 = rng.random(n)
    corners = mesh.triangle_vertices()[tri]
    u = 1 - r1
    v = r1 * (1 - r2)
    w = r1 * r2
    return (
        corners[:, 0] * u[:, None] + corners[:, 1] * v[:, None] + corners[:, 2] * w[:, None]
    )


def chamfer(
    mesh_a: TriMesh, mesh_b: TriMesh, n: int = DEFAULT_SAMPLES, seed: int = 0
) -> float:
    """
    Symmetric Chamfer distance between two mesh surfaces

    Parameters
    ----------
    mesh_a : TriMesh
        First mesh
    mesh_b : TriMesh
        Second mesh
    n : int, optional
        Samples per mesh, by default 10000
    seed : int, optional
        Seed used for both meshes, by default 0

    Returns
    -------
    float
        The distance in meters
    """
    if n < 1:
        raise InputError(f"Number of samples {n} must be at least 1")
    samples_a = sample_surface(mesh_a, n, seed)
    samples_b = sample_surface(mesh_b, n, seed)
    dist_ab, _ = cKDTree(samples_b).query(samples_a)
    dist_ba, _ = cKDTree(samples_a).query(samples_b)
    return float(dist_ab.mean() + dist_ba.mean())
