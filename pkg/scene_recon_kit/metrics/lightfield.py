"""
Light field style silhouette distance

Meshes are normalised to their bounding sphere, centred on the area weighted
surface centroid with the furthest vertex at radius one. Binary orthographic
silhouettes are rasterised from the 20 vertex directions of a regular
dodecahedron and each silhouette is described by the magnitudes of its
Zernike moments, which do not change under in-plane rotation.

Two meshes are compared under every rotation of the dodecahedral rotation
group. Each of the 60 rotations permutes the view directions, and the
distance is the smallest mean L1 difference between corresponding view
descriptors. This is a simplified light field distance. Its values are not
comparable with thresholds of the original descriptor.
"""
from loguru import logger
from typing import List, Tuple
from functools import lru_cache
from math import factorial
import numpy as np
from pydantic import BaseModel, validator

from scene_recon_kit.errors import InputError
from scene_recon_kit.core.mesh import TriMesh

VIEW_COUNT = 20
GOLDEN_RATIO = (1 + 5 ** 0.5) / 2


class LfdConfig(BaseModel):
    """Settings for the light field style distance"""

    view_count: int = VIEW_COUNT
    """Number of view directions, the dodecahedron vertices so always 20"""
    image_size: int = 128
    """Silhouette width and height in pixels"""
    zernike_order: int = 8
    """Maximum Zernike order n, moments with n <= order are used"""

    class Config:
        frozen = True
        extra = "forbid"

    @validator("view_count")
    def validate_view_count(cls, value: int) -> int:
        if value != VIEW_COUNT:
            raise ValueError(f"View count {value} must be {VIEW_COUNT}")
        return value

    @validator("image_size")
    def validate_image_size(cls, value: int) -> int:
        if value < 32:
            raise ValueError(f"Image size {value} must be at least 32")
        return value

    @validator("zernike_order")
    def validate_order(cls, value: int) -> int:
        if value < 0:
            raise ValueError(f"Zernike order {value} must be non-negative")
        return value


@lru_cache(maxsize=1)
def dodecahedron_vertices() -> np.ndarray:
    """The 20 unit view directions"""
    phi = GOLDEN_RATIO
    inv = 1 / phi
    vertices = []
    for sx in (-1, 1):
        for sy in (-1, 1):
            for sz in (-1, 1):
                vertices.append((sx, sy, sz))
    for s1 in (-1, 1):
        for s2 in (-1, 1):
            vertices.append((0, s1 * inv, s2 * phi))
            vertices.append((s1 * inv, s2 * phi, 0))
            vertices.append((s1 * phi, 0, s2 * inv))
    vertices = np.array(vertices, dtype=float)
    vertices /= np.linalg.norm(vertices, axis=1, keepdims=True)
    vertices.setflags(write=False)
    return vertices


def _neighbours(directions: np.ndarray) -> List[np.ndarray]:
    """Indices of the adjacent vertices of each vertex"""
    dots = directions @ directions.T
    np.fill_diagonal(dots, -np.inf)
    nearest = dots.max()
    return [np.flatnonzero(row > nearest - 1e-9) for row in dots]


def _frame(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Orthonormal frame with first axis a and b in the first two axes"""
    e1 = a / np.linalg.norm(a)
    e2 = b - (b @ e1) * e1
    e2 /= np.linalg.norm(e2)
    return np.stack([e1, e2, np.cross(e1, e2)], axis=1)


@lru_cache(maxsize=1)
def view_permutations() -> np.ndarray:
    """
    View permutations of the dodecahedral rotation group

    A rotation of the group is fixed by where it sends one directed edge, so
    mapping vertex 0 and its first neighbour onto every directed edge gives
    all 60 rotations.

    Returns
    -------
    np.ndarray
        Array with shape (60, 20), row g maps view i to view perm[g, i]
    """
    directions = dodecahedron_vertices()
    neighbours = _neighbours(directions)
    source = _frame(directions[0], directions[neighbours[0][0]])
    permutations = []
    for ivertex in range(VIEW_COUNT):
        for ineighbour in neighbours[ivertex]:
            target = _frame(directions[ivertex], directions[ineighbour])
            rotation = target @ source.T
            moved = directions @ rotation.T
            dist = np.linalg.norm(moved[:, None, :] - directions[None], axis=2)
            perm = np.argmin(dist, axis=1)
            if dist[np.arange(VIEW_COUNT), perm].max() > 1e-9:
                raise RuntimeError("Rotation does not preserve the view directions")
            permutations.append(perm)
    permutations = np.array(permutations, dtype=np.int64)
    permutations.setflags(write=False)
    return permutations


@lru_cache(maxsize=1)
def _view_bases() -> np.ndarray:
    """Right handed in-plane axes (u, w) for every view, shape (20, 2, 3)"""
    directions = dodecahedron_vertices()
    neighbours = _neighbours(directions)
    bases = []
    for ivertex, direction in enumerate(directions):
        frame = _frame(direction, directions[neighbours[ivertex][0]])
        bases.append(frame[:, 1:].T)
    bases = np.array(bases)
    bases.setflags(write=False)
    return bases


def normalize_to_unit_sphere(mesh: TriMesh) -> np.ndarray:
    """
    Vertices centred on the surface centroid and scaled into the unit ball

    Raises
    ------
    InputError
        If the mesh is empty or has zero extent
    """
    if mesh.is_empty():
        raise InputError("Light field distance needs a non-empty mesh")
    center = mesh.surface_centroid()
    used = mesh.vertices[np.unique(mesh.triangles)]
    radius = np.linalg.norm(used - center, axis=1).max()
    if not radius > 1e-12:
        raise InputError("Mesh has zero extent")
    return (mesh.vertices - center) / radius


def rasterize_silhouette(
    xy: np.ndarray, triangles: np.ndarray, image_size: int
) -> np.ndarray:
    """
    Rasterise projected triangles over the square [-1, 1]^2

    A pixel is set when its center is inside or on the edge of a triangle.

    Parameters
    ----------
    xy : np.ndarray
        Projected vertices with shape (V, 2)
    triangles : np.ndarray
        Vertex index triples with shape (T, 3)
    image_size : int
        Pixels per side

    Returns
    -------
    np.ndarray
        Boolean image indexed [ix, iy]
    """
    image = np.zeros((image_size, image_size), dtype=bool)
    pixel = 2.0 / image_size
    for a, b, c in xy[triangles]:
        area = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if area == 0:
            continue
        lo = np.minimum(np.minimum(a, b), c)
        hi = np.maximum(np.maximum(a, b), c)
        first = np.maximum(np.ceil((lo + 1) / pixel - 0.5), 0).astype(int)
        last = np.minimum(np.floor((hi + 1) / pixel - 0.5), image_size - 1).astype(int)
        if np.any(first > last):
            continue
        xs = -1 + (np.arange(first[0], last[0] + 1) + 0.5) * pixel
        ys = -1 + (np.arange(first[1], last[1] + 1) + 0.5) * pixel
        px, py = np.meshgrid(xs, ys, indexing="ij")
        sign = np.sign(area)
        inside = np.ones(px.shape, dtype=bool)
        for p, q in ((a, b), (b, c), (c, a)):
            edge = (q[0] - p[0]) * (py - p[1]) - (q[1] - p[1]) * (px - p[0])
            inside &= sign * edge >= 0
        image[first[0] : last[0] + 1, first[1] : last[1] + 1] |= inside
    return image


@lru_cache(maxsize=8)
def _disk_pixels(image_size: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Flat indices, radii and angles of pixel centers inside the unit disk"""
    pixel = 2.0 / image_size
    centers = -1 + (np.arange(image_size) + 0.5) * pixel
    px, py = np.meshgrid(centers, centers, indexing="ij")
    radius = np.hypot(px, py).ravel()
    theta = np.arctan2(py, px).ravel()
    index = np.flatnonzero(radius <= 1)
    return index, radius[index], theta[index]


def zernike_orders(order: int) -> List[Tuple[int, int]]:
    """The (n, m) pairs with m >= 0 and n - m even up to an order"""
    return [(n, m) for n in range(order + 1) for m in range(n % 2, n + 1, 2)]


@lru_cache(maxsize=256)
def _radial_coefficients(n: int, m: int) -> Tuple[Tuple[int, float], ...]:
    """Powers and coefficients of the Zernike radial polynomial"""
    terms = []
    for s in range((n - m) // 2 + 1):
        coef = (-1) ** s * factorial(n - s)
        coef /= factorial(s) * factorial((n + m) // 2 - s) * factorial((n - m) // 2 - s)
        terms.append((n - 2 * s, coef))
    return tuple(terms)


def zernike_magnitudes(image: np.ndarray, order: int) -> np.ndarray:
    """
    Zernike moment magnitudes of a square binary image on the unit disk

    Parameters
    ----------
    image : np.ndarray
        Boolean image covering [-1, 1]^2
    order : int
        Maximum order

    Returns
    -------
    np.ndarray
        Magnitudes ordered as zernike_orders(order)
    """
    image_size = image.shape[0]
    index, radius, theta = _disk_pixels(image_size)
    occupied = image.ravel()[index]
    radius = radius[occupied]
    theta = theta[occupied]
    pixel_area = (2.0 / image_size) ** 2
    powers = [radius ** k for k in range(order + 1)]
    magnitudes = []
    for n, m in zernike_orders(order):
        radial = sum(coef * powers[k] for k, coef in _radial_coefficients(n, m))
        real = np.sum(radial * np.cos(m * theta))
        imag = np.sum(radial * np.sin(m * theta))
        magnitudes.append((n + 1) / np.pi * pixel_area * np.hypot(real, imag))
    return np.array(magnitudes)


def lightfield_descriptor(mesh: TriMesh, cfg: LfdConfig = LfdConfig()) -> np.ndarray:
    """
    Per view Zernike descriptors of a mesh

    Parameters
    ----------
    mesh : TriMesh
        The mesh
    cfg : LfdConfig, optional
        Settings, by default LfdConfig()

    Returns
    -------
    np.ndarray
        Descriptors with shape (20, number of moments)
    """
    vertices = normalize_to_unit_sphere(mesh)
    descriptors = []
    for basis in _view_bases():
        xy = vertices @ basis.T
        image = rasterize_silhouette(xy, mesh.triangles, cfg.image_size)
        descriptors.append(zernike_magnitudes(image, cfg.zernike_order))
    return np.array(descriptors)


def descriptor_distance(desc_a: np.ndarray, desc_b: np.ndarray) -> float:
    """Minimum over the rotation group of the mean view L1 distance"""
    cost = np.abs(desc_a[:, None, :] - desc_b[None, :, :]).sum(axis=2)
    perms = view_permutations()
    per_rotation = cost[np.arange(VIEW_COUNT)[None, :], perms].mean(axis=1)
    return float(per_rotation.min())


def lightfield_distance(
    mesh_a: TriMesh, mesh_b: TriMesh, cfg: LfdConfig = LfdConfig()
) -> float:
    """
    Light field style distance between two meshes

    Parameters
    ----------
    mesh_a : TriMesh
        First mesh
    mesh_b : TriMesh
        Second mesh
    cfg : LfdConfig, optional
        Settings, by default LfdConfig()

    Returns
    -------
    float
        Non-negative distance, 0 for identical meshes

    Raises
    ------
    InputError
        If either mesh is empty or has zero extent
    """
    desc_a = lightfield_descriptor(mesh_a, cfg)
    desc_b = lightfield_descriptor(mesh_b, cfg)
    distance = descriptor_distance(desc_a, desc_b)
    logger.debug(f"Light field distance {distance:.6g}")
    return distance
