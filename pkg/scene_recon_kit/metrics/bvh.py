"""
Bounding volume hierarchy over mesh triangles

The hierarchy is built top down by splitting triangles at the median centroid
along the longest axis of the centroid bounds until at most LEAF_SIZE
triangles remain. Nodes are stored in flat arrays. Distance queries traverse
the tree for a batch of points at once, pruning node boxes further than the
best distance found so far. Segment queries prune node boxes the segment
misses and stop at the first blocking triangle.
"""
from typing import List
import numpy as np
from scipy.spatial import cKDTree

from scene_recon_kit.errors import InputError
from scene_recon_kit.core.mesh import TriMesh

LEAF_SIZE = 4
BOX_SLACK = 1e-9
DET_EPSILON = 1e-12


def closest_point_sq_distances(
    p: np.ndarray, a: np.ndarray, b: np.ndarray, c: np.ndarray
) -> np.ndarray:
    """
    Squared distance from points to triangles

    Closest points are found by Voronoi region classification of each point
    against the vertices, edges and face of its triangle. All inputs have
    shape (N, 3) and are paired row by row.

    Parameters
    ----------
    p : np.ndarray
        Query points
    a : np.ndarray
        First triangle corners
    b : np.ndarray
        Second triangle corners
    c : np.ndarray
        Third triangle corners

    Returns
    -------
    np.ndarray
        Squared distances with shape (N,), inf where a degenerate triangle
        gives no answer
    """
    ab = b - a
    ac = c - a
    ap = p - a
    bp = p - b
    cp = p - c
    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)
    d3 = np.einsum("ij,ij->i", ab, bp)
    d4 = np.einsum("ij,ij->i", ac, bp)
    d5 = np.einsum("ij,ij->i", ab, cp)
    d6 = np.einsum("ij,ij->i", ac, cp)
    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2

    with np.errstate(divide="ignore", invalid="ignore"):
        denom = 1.0 / (va + vb + vc)
        v_face = vb * denom
        w_face = vc * denom
        closest = a + ab * v_face[:, None] + ac * w_face[:, None]

        # regions are assigned in reverse priority so the first match wins
        region_bc = (va <= 0) & ((d4 - d3) >= 0) & ((d5 - d6) >= 0)
        w_bc = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        closest = np.where(region_bc[:, None], b + (c - b) * w_bc[:, None], closest)

        region_ac = (vb <= 0) & (d2 >= 0) & (d6 <= 0)
        w_ac = d2 / (d2 - d6)
        closest = np.where(region_ac[:, None], a + ac * w_ac[:, None], closest)

        region_c = (d6 >= 0) & (d5 <= d6)
        closest = np.where(region_c[:, None], c, closest)

        region_ab = (vc <= 0) & (d1 >= 0) & (d3 <= 0)
        v_ab = d1 / (d1 - d3)
        closest = np.where(region_ab[:, None], a + ab * v_ab[:, None], closest)

        region_b = (d3 >= 0) & (d4 <= d3)
        closest = np.where(region_b[:, None], b, closest)

        region_a = (d1 <= 0) & (d2 <= 0)
        closest = np.where(region_a[:, None], a, closest)

    diff = p - closest
    sq_dist = np.einsum("ij,ij->i", diff, diff)
    return np.where(np.isfinite(sq_dist), sq_dist, np.inf)


def _box_sq_distances(points: np.ndarray, lo: np.ndarray, hi: np.ndarray):
    """Squared distances from points to boxes, paired row by row"""
    delta = np.maximum(np.maximum(lo - points, points - hi), 0.0)
    return np.einsum("ij,ij->i", delta, delta)


class MeshBvh:
    """
    Axis aligned bounding volume hierarchy over the triangles of a mesh

    Parameters
    ----------
    mesh : TriMesh
        The mesh, must have at least one triangle

    Raises
    ------
    InputError
        If the mesh is empty
    """

    def __init__(self, mesh: TriMesh):
        if mesh.is_empty():
            raise InputError("Cannot build a hierarchy over an empty mesh")
        self.mesh = mesh
        tri = mesh.triangle_vertices()
        self.a = tri[:, 0]
        self.b = tri[:, 1]
        self.c = tri[:, 2]
        tri_lo = tri.min(axis=1)
        tri_hi = tri.max(axis=1)
        centroids = tri.mean(axis=1)
        n_triangles = tri.shape[0]

        order = np.arange(n_triangles)
        node_lo: List[np.ndarray] = []
        node_hi: List[np.ndarray] = []
        left: List[int] = []
        right: List[int] = []
        start: List[int] = []
        count: List[int] = []

        def new_node() -> int:
            node_lo.append(np.zeros(3))
            node_hi.append(np.zeros(3))
            left.append(-1)
            right.append(-1)
            start.append(0)
            count.append(0)
            return len(left) - 1

        stack = [(new_node(), 0, n_triangles)]
        while len(stack) > 0:
            node, first, last = stack.pop()
            members = order[first:last]
            node_lo[node] = tri_lo[members].min(axis=0)
            node_hi[node] = tri_hi[members].max(axis=0)
            if last - first <= LEAF_SIZE:
                start[node] = first
                count[node] = last - first
                continue
            extent = centroids[members].max(axis=0) - centroids[members].min(axis=0)
            axis = int(np.argmax(extent))
            members = members[np.argsort(centroids[members, axis], kind="stable")]
            order[first:last] = members
            middle = (first + last) // 2
            left_node = new_node()
            right_node = new_node()
            left[node] = left_node
            right[node] = right_node
            stack.append((left_node, first, middle))
            stack.append((right_node, middle, last))

        self.order = order
        self.node_lo = np.array(node_lo)
        self.node_hi = np.array(node_hi)
        self.left = np.array(left, dtype=np.int64)
        self.right = np.array(right, dtype=np.int64)
        self.start = np.array(start, dtype=np.int64)
        self.count = np.array(count, dtype=np.int64)
        self.vertex_tree = cKDTree(mesh.vertices[np.unique(mesh.triangles)])

    @property
    def n_nodes(self) -> int:
        return self.left.shape[0]

    def is_leaf(self, node: int) -> bool:
        return bool(self.left[node] < 0)

    def leaf_triangles(self, node: int) -> np.ndarray:
        """Triangle indices stored in a leaf"""
        return self.order[self.start[node] : self.start[node] + self.count[node]]

    def sq_distances(self, points: np.ndarray) -> np.ndarray:
        """
        Exact squared distances from points to the mesh surface

        Parameters
        ----------
        points : np.ndarray
            Query points with shape (N, 3)

        Returns
        -------
        np.ndarray
            Squared distances with shape (N,)
        """
        points = np.asarray(points, dtype=float).reshape(-1, 3)
        n_points = points.shape[0]
        if n_points == 0:
            return np.empty(0)
        # a vertex is on the surface so its distance bounds the answer
        vertex_dist, _ = self.vertex_tree.query(points)
        best = vertex_dist ** 2
        pair_point = np.arange(n_points)
        pair_node = np.zeros(n_points, dtype=np.int64)
        while pair_point.size > 0:
            box_dist = _box_sq_distances(
                points[pair_point], self.node_lo[pair_node], self.node_hi[pair_node]
            )
            keep = box_dist <= best[pair_point]
            pair_point = pair_point[keep]
            pair_node = pair_node[keep]
            leaf = self.left[pair_node] < 0

            leaf_point = pair_point[leaf]
            leaf_node = pair_node[leaf]
            for slot in range(LEAF_SIZE):
                has = self.count[leaf_node] > slot
                if not np.any(has):
                    break
                query = leaf_point[has]
                tri = self.order[self.start[leaf_node[has]] + slot]
                sq_dist = closest_point_sq_distances(
                    points[query], self.a[tri], self.b[tri], self.c[tri]
                )
                np.minimum.at(best, query, sq_dist)

            inner_point = pair_point[~leaf]
            inner_node = pair_node[~leaf]
            pair_point = np.concatenate([inner_point, inner_point])
            pair_node = np.concatenate([self.left[inner_node], self.right[inner_node]])
        return best

    def distances(self, points: np.ndarray) -> np.ndarray:
        """Exact distances from points to the mesh surface"""
        return np.sqrt(self.sq_distances(points))

    def segments_blocked(
        self, origins: np.ndarray, ends: np.ndarray, t_tolerance: float = 1e-6
    ) -> np.ndarray:
        """
        Check which open segments cross the mesh

        A segment is blocked when it meets a triangle strictly between its
        endpoints, with t_tolerance of the segment length trimmed at each end
        so that points lying on the surface do not block themselves.

        Parameters
        ----------
        origins : np.ndarray
            Segment starts with shape (N, 3)
        ends : np.ndarray
            Segment ends with shape (N, 3)
        t_tolerance : float, optional
            Fraction of the segment ignored at both ends, by default 1e-6

        Returns
        -------
        np.ndarray
            Boolean array with shape (N,)
        """
        origins = np.asarray(origins, dtype=float).reshape(-1, 3)
        directions = np.asarray(ends, dtype=float).reshape(-1, 3) - origins
        n_segments = origins.shape[0]
        blocked = np.zeros(n_segments, dtype=bool)
        pair_seg = np.arange(n_segments)
        pair_node = np.zeros(n_segments, dtype=np.int64)
        while pair_seg.size > 0:
            keep = ~blocked[pair_seg] & _segment_box_overlap(
                origins[pair_seg],
                directions[pair_seg],
                self.node_lo[pair_node],
                self.node_hi[pair_node],
            )
            pair_seg = pair_seg[keep]
            pair_node = pair_node[keep]
            leaf = self.left[pair_node] < 0

            leaf_seg = pair_seg[leaf]
            leaf_node = pair_node[leaf]
            for slot in range(LEAF_SIZE):
                has = self.count[leaf_node] > slot
                if not np.any(has):
                    break
                query = leaf_seg[has]
                tri = self.order[self.start[leaf_node[has]] + slot]
                hit = _segment_triangle_hits(
                    origins[query],
                    directions[query],
                    self.a[tri],
                    self.b[tri],
                    self.c[tri],
                    t_tolerance,
                )
                blocked[query[hit]] = True

            inner_seg = pair_seg[~leaf]
            inner_node = pair_node[~leaf]
            pair_seg = np.concatenate([inner_seg, inner_seg])
            pair_node = np.concatenate([self.left[inner_node], self.right[inner_node]])
        return blocked


def _segment_box_overlap(
    origins: np.ndarray, directions: np.ndarray, lo: np.ndarray, hi: np.ndarray
) -> np.ndarray:
    """Slab test of segments origin + t direction, t in [0, 1], against boxes"""
    lo = lo - BOX_SLACK
    hi = hi + BOX_SLACK
    flat = directions == 0
    safe = np.where(flat, 1.0, directions)
    t1 = (lo - origins) / safe
    t2 = (hi - origins) / safe
    inside_slab = (origins >= lo) & (origins <= hi)
    t_near = np.where(flat, np.where(inside_slab, -np.inf, np.inf), np.minimum(t1, t2))
    t_far = np.where(flat, np.where(inside_slab, np.inf, -np.inf), np.maximum(t1, t2))
    enter = t_near.max(axis=1)
    leave = t_far.min(axis=1)
    return (enter <= leave) & (leave >= 0) & (enter <= 1)


def _segment_triangle_hits(
    origins: np.ndarray,
    directions: np.ndarray,
    a: np.ndarray,
    b: np.ndarray,
    c: np.ndarray,
    t_tolerance: float,
) -> np.ndarray:
    """Segment and triangle intersection, paired row by row"""
    e1 = b - a
    e2 = c - a
    pvec = np.cross(directions, e2)
    det = np.einsum("ij,ij->i", e1, pvec)
    scale = (
        np.linalg.norm(directions, axis=1)
        * np.linalg.norm(e1, axis=1)
        * np.linalg.norm(e2, axis=1)
    )
    valid = np.abs(det) > DET_EPSILON * scale
    inv_det = 1.0 / np.where(valid, det, 1.0)
    tvec = origins - a
    u = np.einsum("ij,ij->i", tvec, pvec) * inv_det
    qvec = np.cross(tvec, e1)
    v = np.einsum("ij,ij->i", directions, qvec) * inv_det
    t = np.einsum("ij,ij->i", e2, qvec) * inv_det
    return (
        valid
        & (u >= 0)
        & (v >= 0)
        & (u + v <= 1)
        & (t > t_tolerance)
        & (t < 1 - t_tolerance)
    )
