"""
Indexed triangle meshes
"""
from typing import List, Optional, Sequence
import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from scene_recon_kit.errors import InputError


class TriMesh:
    """
    An indexed triangle mesh with a category label

    Parameters
    ----------
    vertices : np.ndarray
        Vertex positions in meters, shape (V, 3)
    triangles : np.ndarray
        Vertex index triples, shape (T, 3)
    category : Optional[str], optional
        The reconstruction category, by default None

    Raises
    ------
    InputError
        If an index is out of range, a triangle repeats a vertex or vertices
        are not finite
    """

    def __init__(
        self,
        vertices: np.ndarray,
        triangles: np.ndarray,
        category: Optional[str] = None,
    ):
        vertices = np.array(vertices, dtype=float).reshape(-1, 3)
        triangles = np.array(triangles, dtype=np.int64).reshape(-1, 3)
        if not np.all(np.isfinite(vertices)):
            raise InputError("Mesh vertices are not finite")
        if triangles.size > 0:
            if triangles.min() < 0 or triangles.max() >= len(vertices):
                raise InputError(
                    f"Triangle indices outside [0, {len(vertices)}) vertices"
                )
            repeated = (
                (triangles[:, 0] == triangles[:, 1])
                | (triangles[:, 1] == triangles[:, 2])
                | (triangles[:, 0] == triangles[:, 2])
            )
            if np.any(repeated):
                raise InputError(
                    f"{int(repeated.sum())} triangles repeat a vertex index"
                )
        vertices.setflags(write=False)
        triangles.setflags(write=False)
        self.vertices = vertices
        self.triangles = triangles
        self.category = category

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    def is_empty(self) -> bool:
        return self.n_triangles == 0

    def triangle_vertices(self) -> np.ndarray:
        """Triangle corner positions with shape (T, 3, 3)"""
        return self.vertices[self.triangles]

    def triangle_areas(self) -> np.ndarray:
        tri = self.triangle_vertices()
        cross = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        return 0.5 * np.linalg.norm(cross, axis=1)

    def area(self) -> float:
        return float(self.triangle_areas().sum())

    def volume(self) -> float:
        """
        Signed enclosed volume by the divergence theorem

        Positive for closed meshes with outward facing triangles.
        """
        if self.is_empty():
            return 0.0
        tri = self.triangle_vertices()
        det = np.einsum("ij,ij->i", tri[:, 0], np.cross(tri[:, 1], tri[:, 2]))
        return float(det.sum() / 6.0)

    def bounds(self) -> np.ndarray:
        """Min and max corner of the used vertices, shape (2, 3)"""
        if self.is_empty():
            raise InputError("Empty mesh has no bounds")
        used = self.vertices[np.unique(self.triangles)]
        return np.stack([used.min(axis=0), used.max(axis=0)])

    def surface_centroid(self) -> np.ndarray:
        """Area weighted centroid of the surface"""
        areas = self.triangle_areas()
        total = areas.sum()
        if total <= 0:
            raise InputError("Mesh has zero surface area")
        centers = self.triangle_vertices().mean(axis=1)
        return (centers * areas[:, None]).sum(axis=0) / total

    def transformed(self, matrix: np.ndarray, translation: np.ndarray) -> "TriMesh":
        """
        Apply x -> matrix x + translation to the vertices

        Parameters
        ----------
        matrix : np.ndarray
            3x3 linear map
        translation : np.ndarray
            Translation in meters

        Returns
        -------
        TriMesh
            New mesh with the same triangles and category
        """
        vertices = self.vertices @ np.asarray(matrix).T + np.asarray(translation)
        return TriMesh(vertices, self.triangles, self.category)

    def with_category(self, category: Optional[str]) -> "TriMesh":
        return TriMesh(self.vertices, self.triangles, category)

    def __repr__(self) -> str:
        return (
            f"TriMesh(n_vertices={self.n_vertices}, n_triangles={self.n_triangles},"
            f" category={self.category!r})"
        )


def concatenate_meshes(
    meshes: Sequence[TriMesh], category: Optional[str] = None
) -> TriMesh:
    """
    Concatenate meshes without merging vertices

    Parameters
    ----------
    meshes : Sequence[TriMesh]
        Meshes to combine
    category : Optional[str], optional
        Category of the result, by default None

    Returns
    -------
    TriMesh
        The combined mesh
    """
    vertices: List[np.ndarray] = []
    triangles: List[np.ndarray] = []
    n_vertices = 0
    for mesh in meshes:
        vertices.append(mesh.vertices)
        triangles.append(mesh.triangles + n_vertices)
        n_vertices += mesh.n_vertices
    if n_vertices == 0:
        return TriMesh(np.empty((0, 3)), np.empty((0, 3), dtype=np.int64), category)
    return TriMesh(np.concatenate(vertices), np.concatenate(triangles), category)


def weld_vertices(mesh: TriMesh, tolerance: float) -> TriMesh:
    """
    Merge vertices closer than a tolerance

    Vertices are grouped by connected components of the tolerance graph and
    each group is represented by its lowest index vertex. Triangles that
    collapse onto a repeated vertex are removed and unused vertices dropped.

    Parameters
    ----------
    mesh : TriMesh
        The input mesh
    tolerance : float
        The merge distance in meters

    Returns
    -------
    TriMesh
        The welded mesh
    """
    n_vertices = mesh.n_vertices
    if n_vertices == 0:
        return mesh
    pairs = cKDTree(mesh.vertices).query_pairs(tolerance, output_type="ndarray")
    graph = coo_matrix(
        (np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])),
        shape=(n_vertices, n_vertices),
    )
    _, labels = connected_components(graph, directed=False)
    representative = np.full(labels.max() + 1, n_vertices, dtype=np.int64)
    np.minimum.at(representative, labels, np.arange(n_vertices))
    triangles = representative[labels][mesh.triangles]
    keep = (
        (triangles[:, 0] != triangles[:, 1])
        & (triangles[:, 1] != triangles[:, 2])
        & (triangles[:, 0] != triangles[:, 2])
    )
    triangles = triangles[keep]
    used, remap = np.unique(triangles, return_inverse=True)
    return TriMesh(
        mesh.vertices[used], remap.reshape(-1, 3), category=mesh.category
    )


def box_mesh(lo: Sequence[float], hi: Sequence[float], category=None) -> TriMesh:
    """
    Closed axis aligned box mesh with outward facing triangles

    Parameters
    ----------
    lo : Sequence[float]
        Minimum corner
    hi : Sequence[float]
        Maximum corner
    category : Optional[str], optional
        Category of the mesh, by default None

    Returns
    -------
    TriMesh
        A 12 triangle mesh
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    k = np.arange(8)
    bits = np.stack([k & 1, (k >> 1) & 1, (k >> 2) & 1], axis=1).astype(bool)
    vertices = np.where(bits, hi, lo)
    quads = [
        (0, 4, 6, 2),
        (1, 3, 7, 5),
        (0, 1, 5, 4),
        (2, 6, 7, 3),
        (0, 2, 3, 1),
        (4, 5, 7, 6),
    ]
    triangles = []
    for a, b, c, d in quads:
        triangles.append((a, b, c))
        triangles.append((a, c, d))
    return TriMesh(vertices, np.array(triangles), category=category)
