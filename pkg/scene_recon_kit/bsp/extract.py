"""
Mesh extraction from convex decompositions

Each convex is the intersection of its member half-spaces with the canonical
bounding cube. The polytope starts as the cube, stored as a list of outward
oriented planar polygons, and is clipped by every member plane in turn. A
clip keeps the part of each face on the inside of the plane and closes the
cut with a cap polygon lying on the plane. Faces are fan triangulated and the
per-convex meshes concatenated without any boolean union.
"""
from loguru import logger
from typing import List, Optional
import numpy as np

from scene_recon_kit.core.mesh import TriMesh, concatenate_meshes, weld_vertices
from scene_recon_kit.bsp.decoder import PlaneSet

CLIP_EPSILON = 1e-9
"""Absolute distance within which a vertex counts as lying on a plane"""
WELD_TOLERANCE = 1e-9

Polygon = np.ndarray


def cube_faces(lo: float, hi: float) -> List[Polygon]:
    """The six faces of a cube, counter-clockwise seen from outside"""
    k = np.arange(8)
    bits = np.stack([k & 1, (k >> 1) & 1, (k >> 2) & 1], axis=1).astype(bool)
    corners = np.where(bits, hi, lo).astype(float)
    quads = [
        (0, 4, 6, 2),
        (1, 3, 7, 5),
        (0, 1, 5, 4),
        (2, 6, 7, 3),
        (0, 2, 3, 1),
        (4, 5, 7, 6),
    ]
    return [corners[list(quad)] for quad in quads]


def _dedup_polygon(polygon: Polygon) -> Optional[Polygon]:
    """Drop consecutive repeated vertices, None if fewer than 3 remain"""
    if len(polygon) == 0:
        return None
    nxt = np.roll(polygon, -1, axis=0)
    keep = np.linalg.norm(polygon - nxt, axis=1) > CLIP_EPSILON
    polygon = polygon[keep]
    if len(polygon) < 3:
        return None
    return polygon


def _clip_polygon(polygon: Polygon, normal: np.ndarray, offset: float):
    """
    Clip a polygon to the half-space normal . x + offset <= 0

    Returns the clipped polygon and the vertices created on, or lying on, the
    plane.
    """
    dist = polygon @ normal + offset
    output = []
    on_plane = []
    n_vertices = len(polygon)
    for i in range(n_vertices):
        j = (i + 1) % n_vertices
        p, q = polygon[i], polygon[j]
        dp, dq = dist[i], dist[j]
        if dp <= CLIP_EPSILON:
            output.append(p)
            if dp >= -CLIP_EPSILON:
                on_plane.append(p)
        if (dp < -CLIP_EPSILON and dq > CLIP_EPSILON) or (
            dp > CLIP_EPSILON and dq < -CLIP_EPSILON
        ):
            t = dp / (dp - dq)
            point = p + t * (q - p)
            output.append(point)
            on_plane.append(point)
    clipped = _dedup_polygon(np.array(output)) if len(output) > 0 else None
    return clipped, on_plane


def _cap_polygon(points: List[np.ndarray], normal: np.ndarray) -> Optional[Polygon]:
    """Order points on a plane counter-clockwise around the normal"""
    if len(points) < 3:
        return None
    pts = np.array(points)
    unique = [pts[0]]
    for point in pts[1:]:
        if min(np.linalg.norm(point - u) for u in unique) > CLIP_EPSILON:
            unique.append(point)
    if len(unique) < 3:
        return None
    pts = np.array(unique)
    helper = np.array([1.0, 0.0, 0.0])
    if abs(normal[0]) > 0.9:
        helper = np.array([0.0, 1.0, 0.0])
    u = np.cross(normal, helper)
    u /= np.linalg.norm(u)
    w = np.cross(normal, u)
    centered = pts - pts.mean(axis=0)
    angles = np.arctan2(centered @ w, centered @ u)
    ordered = pts[np.argsort(angles, kind="stable")]
    return _dedup_polygon(ordered)


def clip_convex(faces: List[Polygon], plane: np.ndarray) -> List[Polygon]:
    """
    Clip a closed convex polytope by a half-space

    Parameters
    ----------
    faces : List[Polygon]
        Outward oriented faces of the polytope
    plane : np.ndarray
        Plane (a, b, c, d), the kept side is a x + b y + c z + d <= 0

    Returns
    -------
    List[Polygon]
        Faces of the clipped polytope, empty if nothing remains
    """
    norm = np.linalg.norm(plane[:3])
    normal = plane[:3] / norm
    offset = plane[3] / norm
    all_vertices = np.concatenate(faces)
    dist = all_vertices @ normal + offset
    if np.all(dist <= CLIP_EPSILON):
        return faces
    if np.all(dist >= -CLIP_EPSILON):
        return []
    clipped_faces = []
    cap_points: List[np.ndarray] = []
    for face in faces:
        clipped, on_plane = _clip_polygon(face, normal, offset)
        cap_points.extend(on_plane)
        if clipped is not None:
            clipped_faces.append(clipped)
    cap = _cap_polygon(cap_points, normal)
    if cap is not None:
        clipped_faces.append(cap)
    return clipped_faces


def triangulate_faces(faces: List[Polygon]) -> TriMesh:
    """Fan triangulate polygons into a mesh with welded vertices"""
    vertices = []
    triangles = []
    n_vertices = 0
    for face in faces:
        n_face = len(face)
        vertices.append(face)
        for i in range(1, n_face - 1):
            triangles.append((n_vertices, n_vertices + i, n_vertices + i + 1))
        n_vertices += n_face
    if len(triangles) == 0:
        return TriMesh(np.empty((0, 3)), np.empty((0, 3), dtype=np.int64))
    mesh = TriMesh(np.concatenate(vertices), np.array(triangles))
    return weld_vertices(mesh, WELD_TOLERANCE)


def convex_mesh(planes: np.ndarray, lo: float, hi: float) -> TriMesh:
    """
    Mesh of one convex bounded by the cube [lo, hi]^3

    Parameters
    ----------
    planes : np.ndarray
        Member planes with shape (K, 4)
    lo : float
        Cube minimum
    hi : float
        Cube maximum

    Returns
    -------
    TriMesh
        The closed convex mesh, empty when the convex has no interior
    """
    faces = cube_faces(lo, hi)
    for plane in planes:
        faces = clip_convex(faces, plane)
        if len(faces) == 0:
            break
    return triangulate_faces(faces)


def extract_mesh(ps: PlaneSet, category: Optional[str] = None) -> TriMesh:
    """
    Extract a polygonal mesh from planes and their convex membership

    Parameters
    ----------
    ps : PlaneSet
        The planes in their canonical frame
    category : Optional[str], optional
        Category to assign to the mesh, by default None

    Returns
    -------
    TriMesh
        Concatenated convex meshes in the canonical frame
    """
    lo, hi = ps.frame.bounds()
    meshes = []
    for convex in range(ps.n_convexes):
        mesh = convex_mesh(ps.convex_planes(convex), lo, hi)
        if not mesh.is_empty():
            meshes.append(mesh)
    logger.debug(f"Extracted {len(meshes)} non-empty convexes of {ps.n_convexes}")
    return concatenate_meshes(meshes, category=category)
