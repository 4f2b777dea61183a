"""
Connected components of radius graphs

Two points are joined when they are within the radius of each other and share
a category. Neighbour pairs come from a KD-tree, components from a sparse
graph search.
"""
from typing import List
import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree


def radius_components(
    coords: np.ndarray, labels: np.ndarray, radius: float
) -> List[np.ndarray]:
    """
    Components of the same-label radius graph

    Parameters
    ----------
    coords : np.ndarray
        Coordinates with shape (N, 3)
    labels : np.ndarray
        Per-point labels, edges only join equal labels
    radius : float
        Points with distance <= radius are neighbours

    Returns
    -------
    List[np.ndarray]
        Sorted member indices of each component, ordered by smallest member
    """
    n_points = coords.shape[0]
    if n_points == 0:
        return []
    pairs = cKDTree(coords).query_pairs(radius, output_type="ndarray")
    if len(pairs) > 0:
        pairs = pairs[labels[pairs[:, 0]] == labels[pairs[:, 1]]]
    graph = coo_matrix(
        (np.ones(len(pairs), dtype=np.int8), (pairs[:, 0], pairs[:, 1])),
        shape=(n_points, n_points),
    )
    n_components, component = connected_components(graph, directed=False)
    order = np.argsort(component, kind="stable")
    splits = np.cumsum(np.bincount(component, minlength=n_components))[:-1]
    groups = np.split(order, splits)
    groups.sort(key=lambda x: int(x[0]))
    return groups
