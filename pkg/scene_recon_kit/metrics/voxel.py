"""
Inside tests, voxelization and voxel IoU

Inside tests cast rays along +x and count surface crossings, odd counts are
inside. Voxelization marks a voxel when its center is inside the mesh or the
surface touches the voxel, so thin open shells still occupy voxels. Both
meshes of a comparison share one grid anchored at the min corner of their
joint bounds.
"""
from loguru import logger
from typing import Tuple
import numpy as np

from scene_recon_kit.errors import InputError
from scene_recon_kit.core.mesh import TriMesh

DEFAULT_VOXEL = 0.047
"""Voxel size in meters"""
CHUNK_ELEMENTS = 2_000_000
COLUMN_JITTER = (1.4142135e-4, 1.7320508e-4)
"""Ray offsets as fractions of the voxel size keeping rays off mesh edges"""


def _ray_x_hits(
    tri: np.ndarray, qy: np.ndarray, qz: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Intersections of lines parallel to x with triangles

    Parameters
    ----------
    tri : np.ndarray
        Triangles with shape (T, 3, 3)
    qy : np.ndarray
        Line y coordinates with shape (M,)
    qz : np.ndarray
        Line z coordinates with shape (M,)

    Returns
    -------
    Tuple[np.ndarray, np.ndarray]
        Hit mask and hit x coordinates, both with shape (M, T)
    """
    a = tri[:, 0]
    e0 = tri[:, 1] - a
    e1 = tri[:, 2] - a
    den = e0[:, 1] * e1[:, 2] - e1[:, 1] * e0[:, 2]
    valid = den != 0
    den = np.where(valid, den, 1.0)
    dy = qy[:, None] - a[None, :, 1]
    dz = qz[:, None] - a[None, :, 2]
    u = (dy * e1[None, :, 2] - e1[None, :, 1] * dz) / den
    v = (e0[None, :, 1] * dz - dy * e0[None, :, 2]) / den
    hit = valid[None, :] & (u >= 0) & (v >= 0) & (u + v <= 1)
    x_hit = a[None, :, 0] + u * e0[None, :, 0] + v * e1[None, :, 0]
    return hit, x_hit


def points_inside_mesh(mesh: TriMesh, points: np.ndarray) -> np.ndarray:
    """
    Ray parity inside test

    Parameters
    ----------
    mesh : TriMesh
        A closed mesh, or a concatenation of disjoint closed meshes
    points : np.ndarray
        Query points with shape (N, 3)

    Returns
    -------
    np.ndarray
        Boolean array, True for points inside
    """
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    inside = np.zeros(points.shape[0], dtype=bool)
    if mesh.is_empty() or points.shape[0] == 0:
        return inside
    tri = mesh.triangle_vertices()
    chunk = max(1, CHUNK_ELEMENTS // tri.shape[0])
    for first in range(0, points.shape[0], chunk):
        query = points[first : first + chunk]
        hit, x_hit = _ray_x_hits(tri, query[:, 1], query[:, 2])
        crossings = np.count_nonzero(hit & (x_hit > query[:, 0:1]), axis=1)
        inside[first : first + chunk] = crossings % 2 == 1
    return inside


class VoxelGrid:
    """
    A regular grid of cubic voxels

    Parameters
    ----------
    origin : np.ndarray
        Min corner of the grid
    voxel : float
        Voxel edge length
    dims : Tuple[int, int, int]
        Number of voxels along x, y and z
    """

    def __init__(self, origin: np.ndarray, voxel: float, dims: Tuple[int, int, int]):
        self.origin = np.asarray(origin, dtype=float)
        self.voxel = float(voxel)
        self.dims = tuple(int(x) for x in dims)

    @classmethod
    def covering(cls, lo: np.ndarray, hi: np.ndarray, voxel: float) -> "VoxelGrid":
        """Grid anchored at lo covering up to hi"""
        extent = (np.asarray(hi) - np.asarray(lo)) / voxel
        dims = np.maximum(np.ceil(extent - 1e-9), 1).astype(int)
        return cls(lo, voxel, (dims[0], dims[1], dims[2]))

    def centers(self, axis: int) -> np.ndarray:
        """Voxel center coordinates along an axis"""
        return self.origin[axis] + (np.arange(self.dims[axis]) + 0.5) * self.voxel

    def index_range(self, lo: float, hi: float, axis: int) -> Tuple[int, int]:
        """Inclusive start and exclusive end of voxels touching [lo, hi]"""
        first = int(np.floor((lo - self.origin[axis]) / self.voxel))
        last = int(np.floor((hi - self.origin[axis]) / self.voxel))
        first = max(first, 0)
        last = min(last, self.dims[axis] - 1)
        return first, last + 1


def _triangle_box_overlap(
    tri: np.ndarray, centers: np.ndarray, half: float
) -> np.ndarray:
    """
    Separating axis test of one triangle against many cubes

    Touching counts as overlapping.

    Parameters
    ----------
    tri : np.ndarray
        Triangle corners with shape (3, 3)
    centers : np.ndarray
        Cube centers with shape (K, 3)
    half : float
        Half the cube edge

    Returns
    -------
    np.ndarray
        Boolean array with shape (K,)
    """
    v = tri[None, :, :] - centers[:, None, :]
    overlap = np.ones(centers.shape[0], dtype=bool)
    for axis in range(3):
        overlap &= ~(
            (v[:, :, axis].min(axis=1) > half) | (v[:, :, axis].max(axis=1) < -half)
        )
    edges = [tri[1] - tri[0], tri[2] - tri[1], tri[0] - tri[2]]
    normal = np.cross(edges[0], edges[1])
    axes = [normal] + [np.cross(edge, unit) for edge in edges for unit in np.eye(3)]
    for sep_axis in axes:
        radius = half * np.abs(sep_axis).sum()
        proj = v @ sep_axis
        overlap &= ~((proj.min(axis=1) > radius) | (proj.max(axis=1) < -radius))
    return overlap


def _surface_voxels(mesh: TriMesh, grid: VoxelGrid) -> np.ndarray:
    """Voxels touched by the mesh surface"""
    occupied = np.zeros(grid.dims, dtype=bool)
    half = grid.voxel / 2
    for tri in mesh.triangle_vertices():
        lo = tri.min(axis=0)
        hi = tri.max(axis=0)
        ranges = [grid.index_range(lo[k], hi[k], k) for k in range(3)]
        if any(first >= last for first, last in ranges):
            continue
        ii, jj, kk = np.meshgrid(
            *[np.arange(first, last) for first, last in ranges], indexing="ij"
        )
        ii, jj, kk = ii.ravel(), jj.ravel(), kk.ravel()
        centers = grid.origin + (np.stack([ii, jj, kk], axis=1) + 0.5) * grid.voxel
        touched = _triangle_box_overlap(tri, centers, half)
        occupied[ii[touched], jj[touched], kk[touched]] = True
    return occupied


def _interior_voxels(mesh: TriMesh, grid: VoxelGrid) -> np.ndarray:
    """Voxels whose center is inside the mesh by ray parity along +x"""
    nx, ny, nz = grid.dims
    counts = np.zeros((ny, nz, nx + 1), dtype=np.int64)
    ys = grid.centers(1) + COLUMN_JITTER[0] * grid.voxel
    zs = grid.centers(2) + COLUMN_JITTER[1] * grid.voxel
    x_first = grid.centers(0)[0]
    for tri in mesh.triangle_vertices():
        j0 = int(np.searchsorted(ys, tri[:, 1].min(), side="left"))
        j1 = int(np.searchsorted(ys, tri[:, 1].max(), side="right"))
        k0 = int(np.searchsorted(zs, tri[:, 2].min(), side="left"))
        k1 = int(np.searchsorted(zs, tri[:, 2].max(), side="right"))
        if j0 >= j1 or k0 >= k1:
            continue
        qy, qz = np.meshgrid(ys[j0:j1], zs[k0:k1], indexing="ij")
        hit, x_hit = _ray_x_hits(tri[None], qy.ravel(), qz.ravel())
        hit = hit[:, 0]
        if not np.any(hit):
            continue
        # number of voxel centers strictly left of each hit
        n_left = np.ceil((x_hit[hit, 0] - x_first) / grid.voxel)
        n_left = np.clip(n_left, 0, nx).astype(np.int64)
        jj, kk = np.unravel_index(np.flatnonzero(hit), qy.shape)
        np.add.at(counts, (jj + j0, kk + k0, n_left), 1)
    right_of = np.cumsum(counts[:, :, ::-1], axis=2)[:, :, ::-1][:, :, 1:]
    return np.transpose(right_of % 2 == 1, (2, 0, 1))


def voxelize(mesh: TriMesh, grid: VoxelGrid) -> np.ndarray:
    """
    Occupancy of a mesh on a voxel grid

    Parameters
    ----------
    mesh : TriMesh
        The mesh
    grid : VoxelGrid
        The grid

    Returns
    -------
    np.ndarray
        Boolean occupancy with shape grid.dims
    """
    if mesh.is_empty():
        return np.zeros(grid.dims, dtype=bool)
    return _interior_voxels(mesh, grid) | _surface_voxels(mesh, grid)


def voxel_iou(mesh_a: TriMesh, mesh_b: TriMesh, voxel: float = DEFAULT_VOXEL) -> float:
    """
    Voxel intersection over union of two meshes

    Parameters
    ----------
    mesh_a : TriMesh
        First mesh
    mesh_b : TriMesh
        Second mesh
    voxel : float, optional
        Voxel size in meters, by default 0.047

    Returns
    -------
    float
        IoU in [0, 1], 0 when both meshes are empty

    Raises
    ------
    InputError
        If the voxel size is not positive
    """
    if not voxel > 0:
        raise InputError(f"Voxel size {voxel} must be positive")
    bounds = [mesh.bounds() for mesh in (mesh_a, mesh_b) if not mesh.is_empty()]
    if len(bounds) == 0:
        return 0.0
    lo = np.min([b[0] for b in bounds], axis=0)
    hi = np.max([b[1] for b in bounds], axis=0)
    grid = VoxelGrid.covering(lo, hi, voxel)
    logger.debug(f"Voxel grid {grid.dims} at voxel size {voxel}")
    occ_a = voxelize(mesh_a, grid)
    occ_b = voxelize(mesh_b, grid)
    union = np.count_nonzero(occ_a | occ_b)
    if union == 0:
        return 0.0
    return float(np.count_nonzero(occ_a & occ_b) / union)
