"""
Latent code sampling, retrieval and projection

Codes are drawn from the predicted diagonal Gaussian by reparameterisation,
z = mu + sigma * eps, with eps from the counter based generator in
scene_recon_kit.latent.prng. Retrieval finds the nearest pool code in
Euclidean distance and projection replaces a code by its orthogonal
projection onto the span of its k nearest pool codes.

Nearest neighbours are found by exact scan and ordered by distance then by
id, so results do not depend on the order of the pool entries.
"""
from loguru import logger
from typing import Optional, Tuple
import numpy as np

from scene_recon_kit.errors import InputError, NotFoundError
from scene_recon_kit.core.scene import LatentShapeDistribution
from scene_recon_kit.latent.pool import ModelPool
from scene_recon_kit.latent.prng import standard_normals

GRAM_DAMPING = 1e-10
"""Tikhonov damping relative to the mean diagonal of the Gram matrix"""


def sample_codes(dist: LatentShapeDistribution, seed: int, n: int) -> np.ndarray:
    """
    Draw codes from a latent distribution

    Component j of sample r uses normal index r * D + j, so the first row
    equals sample_code with the same seed.

    Parameters
    ----------
    dist : LatentShapeDistribution
        The distribution
    seed : int
        The seed
    n : int
        Number of samples

    Returns
    -------
    np.ndarray
        Codes with shape (n, D)
    """
    if n < 0:
        raise InputError(f"Number of samples {n} is negative")
    dimension = dist.dimension
    indices = np.arange(n * dimension, dtype=np.uint64).reshape(n, dimension)
    eps = standard_normals(seed, indices)
    return dist.mu_array + dist.sigma_array * eps


def sample_code(dist: LatentShapeDistribution, seed: int) -> np.ndarray:
    """
    Draw one code, z = mu + sigma * eps

    Parameters
    ----------
    dist : LatentShapeDistribution
        The distribution
    seed : int
        The seed

    Returns
    -------
    np.ndarray
        The code, equal to mu where sigma is 0
    """
    return sample_codes(dist, seed, 1)[0]


def expected_code(dist: LatentShapeDistribution) -> np.ndarray:
    """The mean code of a distribution"""
    return dist.mu_array


def _check_query(pool: ModelPool, z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=float).reshape(-1)
    if z.size != pool.dimension:
        raise InputError(f"Code dimension {z.size} != pool dimension {pool.dimension}")
    if not np.all(np.isfinite(z)):
        raise InputError("Query code is not finite")
    return z


def nearest_entries(
    pool: ModelPool, z: np.ndarray, category_filter: Optional[str] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Pool rows ordered by distance to a code, ties by id

    Parameters
    ----------
    pool : ModelPool
        The pool
    z : np.ndarray
        The query code
    category_filter : Optional[str], optional
        Only consider entries of this category, by default None

    Returns
    -------
    Tuple[np.ndarray, np.ndarray]
        The ordered rows and their distances

    Raises
    ------
    NotFoundError
        If no entry passes the filter
    """
    z = _check_query(pool, z)
    rows = pool.select(category_filter)
    if rows.size == 0:
        raise NotFoundError(f"No pool entries in category {category_filter!r}")
    distances = np.linalg.norm(pool.codes[rows] - z, axis=1)
    ids = np.array([pool.entries[row].id for row in rows])
    order = np.lexsort((ids, distances))
    return rows[order], distances[order]


def retrieve(
    pool: ModelPool, z: np.ndarray, category_filter: Optional[str] = None
) -> Tuple[str, float]:
    """
    Nearest pool entry to a code

    Parameters
    ----------
    pool : ModelPool
        The pool
    z : np.ndarray
        The query code
    category_filter : Optional[str], optional
        Only consider entries of this category, by default None

    Returns
    -------
    Tuple[str, float]
        The entry id and its Euclidean distance, equal distances resolve to
        the smallest id

    Raises
    ------
    NotFoundError
        If no entry passes the filter
    """
    rows, distances = nearest_entries(pool, z, category_filter)
    entry_id = pool.entries[rows[0]].id
    logger.debug(f"Retrieved {entry_id} at distance {distances[0]:.6g}")
    return entry_id, float(distances[0])


def _span_projection(basis: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Orthogonal projection of z onto the row span of basis"""
    gram = basis @ basis.T
    k = gram.shape[0]
    damping = GRAM_DAMPING * max(np.trace(gram) / k, np.finfo(float).tiny)
    weights = np.linalg.solve(gram + damping * np.eye(k), basis @ z)
    return basis.T @ weights


def project(
    pool: ModelPool,
    z: np.ndarray,
    k: int = 1,
    category_filter: Optional[str] = None,
    affine: bool = False,
) -> np.ndarray:
    """
    Project a code onto the span of its k nearest pool codes

    The linear span through the origin is used by default. With affine the
    code is projected onto the affine hull of the neighbours instead, with k
    equal to 1 returning the nearest code itself.

    Parameters
    ----------
    pool : ModelPool
        The pool
    z : np.ndarray
        The query code
    k : int, optional
        Number of neighbours, by default 1
    category_filter : Optional[str], optional
        Only consider entries of this category, by default None
    affine : bool, optional
        Project onto the affine hull, by default False

    Returns
    -------
    np.ndarray
        The projected code

    Raises
    ------
    InputError
        If k < 1 or the filtered pool has fewer than k entries
    NotFoundError
        If no entry passes the filter
    """
    if k < 1:
        raise InputError(f"Number of neighbours {k} must be at least 1")
    z = _check_query(pool, z)
    rows, _distances = nearest_entries(pool, z, category_filter)
    if k > rows.size:
        raise InputError(f"Number of neighbours {k} exceeds {rows.size} pool entries")
    neighbours = pool.codes[rows[:k]]
    if not affine:
        return _span_projection(neighbours, z)
    origin = neighbours[0]
    if k == 1:
        return origin.copy()
    return origin + _span_projection(neighbours[1:] - origin, z - origin)
