from typing import Dict, Tuple
import numpy as np
import pytest

from scene_recon_kit.core.mesh import TriMesh, box_mesh


def make_icosphere(subdivisions: int = 2, radius: float = 1.0) -> TriMesh:
    """A subdivided icosahedron centered at the origin with outward triangles"""
    t = (1 + 5 ** 0.5) / 2
    vertices = [
        (-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
        (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
        (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1),
    ]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    points = [np.array(v, dtype=float) / np.linalg.norm(v) for v in vertices]
    for _ in range(subdivisions):
        cache: Dict[Tuple[int, int], int] = {}

        def midpoint(a: int, b: int) -> int:
            key = (min(a, b), max(a, b))
            if key not in cache:
                mid = points[a] + points[b]
                points.append(mid / np.linalg.norm(mid))
                cache[key] = len(points) - 1
            return cache[key]

        refined = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            refined.extend([(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)])
        faces = refined
    vertices_arr = np.array(points) * radius
    triangles = np.array(faces)
    tri = vertices_arr[triangles]
    normals = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    inward = np.einsum("ij,ij->i", normals, tri.mean(axis=1)) < 0
    triangles[inward] = triangles[inward][:, ::-1]
    return TriMesh(vertices_arr, triangles)


@pytest.fixture
def unit_cube() -> TriMesh:
    return box_mesh([0, 0, 0], [1, 1, 1])


@pytest.fixture
def icosphere() -> TriMesh:
    return make_icosphere(subdivisions=2)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(42)
