"""
Template shapes for synthetic scenes

Every reconstruction category has one template made of axis aligned boxes in
the unit canonical frame. The boxes of a template do not overlap and their
union has the bounds [0, 1]^3, so placing a template with an instance box
makes the box its tight bounding box.
"""
from typing import Dict, List, Tuple
import numpy as np

from scene_recon_kit.errors import InputError
from scene_recon_kit.core.labels import RECON_CATEGORIES
from scene_recon_kit.core.mesh import TriMesh, box_mesh, concatenate_meshes
from scene_recon_kit.latent.prng import standard_normals

Part = Tuple[Tuple[float, float, float], Tuple[float, float, float]]

CODE_DIMENSION = 8
CODE_SEED = 7919

TEMPLATE_PARTS: Dict[str, List[Part]] = {
    "table": [
        ((0.0, 0.0, 0.85), (1.0, 1.0, 1.0)),
        ((0.0, 0.0, 0.0), (0.1, 0.1, 0.85)),
        ((0.9, 0.0, 0.0), (1.0, 0.1, 0.85)),
        ((0.0, 0.9, 0.0), (0.1, 1.0, 0.85)),
        ((0.9, 0.9, 0.0), (1.0, 1.0, 0.85)),
    ],
    "chair": [
        ((0.0, 0.0, 0.45), (1.0, 1.0, 0.55)),
        ((0.0, 0.85, 0.55), (1.0, 1.0, 1.0)),
        ((0.0, 0.0, 0.0), (0.12, 0.12, 0.45)),
        ((0.88, 0.0, 0.0), (1.0, 0.12, 0.45)),
        ((0.0, 0.88, 0.0), (0.12, 1.0, 0.45)),
        ((0.88, 0.88, 0.0), (1.0, 1.0, 0.45)),
    ],
    "bookshelf": [
        ((0.0, 0.0, 0.0), (0.08, 1.0, 1.0)),
        ((0.92, 0.0, 0.0), (1.0, 1.0, 1.0)),
        ((0.08, 0.0, 0.0), (0.92, 1.0, 0.08)),
        ((0.08, 0.0, 0.46), (0.92, 1.0, 0.54)),
        ((0.08, 0.0, 0.92), (0.92, 1.0, 1.0)),
    ],
    "sofa": [
        ((0.0, 0.0, 0.0), (1.0, 1.0, 0.45)),
        ((0.0, 0.8, 0.45), (1.0, 1.0, 1.0)),
        ((0.0, 0.0, 0.45), (0.12, 0.8, 0.7)),
        ((0.88, 0.0, 0.45), (1.0, 0.8, 0.7)),
    ],
    "trash bin": [
        ((0.05, 0.05, 0.0), (0.95, 0.95, 0.9)),
        ((0.0, 0.0, 0.9), (1.0, 1.0, 1.0)),
    ],
    "cabinet": [
        ((0.0, 0.0, 0.0), (1.0, 0.95, 1.0)),
        ((0.4, 0.95, 0.6), (0.6, 1.0, 0.7)),
    ],
    "display": [
        ((0.0, 0.4, 0.3), (1.0, 0.5, 1.0)),
        ((0.45, 0.4, 0.08), (0.55, 0.6, 0.3)),
        ((0.25, 0.0, 0.0), (0.75, 1.0, 0.08)),
    ],
    "bathtub": [
        ((0.0, 0.0, 0.0), (1.0, 1.0, 0.15)),
        ((0.0, 0.0, 0.15), (0.1, 1.0, 1.0)),
        ((0.9, 0.0, 0.15), (1.0, 1.0, 1.0)),
        ((0.1, 0.0, 0.15), (0.9, 0.1, 1.0)),
        ((0.1, 0.9, 0.15), (0.9, 1.0, 1.0)),
    ],
}
"""Boxes (min corner, max corner) of every template in the unit frame"""

MAX_PARTS = max(len(parts) for parts in TEMPLATE_PARTS.values())


def template_parts(category: str) -> List[Part]:
    """The boxes of a category template"""
    if category not in TEMPLATE_PARTS:
        raise InputError(f"No template for category '{category}'")
    return TEMPLATE_PARTS[category]


def template_mesh(category: str) -> TriMesh:
    """The template of a category as a mesh in the unit frame"""
    parts = [box_mesh(lo, hi) for lo, hi in template_parts(category)]
    return concatenate_meshes(parts, category=category)


def template_code(category: str, dimension: int = CODE_DIMENSION) -> np.ndarray:
    """
    The latent code of a category template

    Codes are standard normal draws seeded by the category position, so
    every template has a distinct code.
    """
    if category not in RECON_CATEGORIES:
        raise InputError(f"No template code for category '{category}'")
    seed = CODE_SEED + RECON_CATEGORIES.index(category)
    return standard_normals(seed, np.arange(dimension))
