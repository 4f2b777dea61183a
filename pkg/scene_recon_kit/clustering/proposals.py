"""
Grouping scene points into instance proposals

Points are clustered on their offset-shifted coordinates p + o, which collapse
the points of one instance towards its center. Stuff points, whose category
maps to no reconstruction category, are excluded.

Multi-scale clustering repeats the grouping at several radii and removes
duplicates by point-set IoU, keeping larger proposals first.
"""
from loguru import logger
from typing import List, Optional, Tuple
import numpy as np

from scene_recon_kit.common import parallel_map
from scene_recon_kit.errors import InputError
from scene_recon_kit.core.angles import circular_mean, arithmetic_mean, rotation_z
from scene_recon_kit.core.box import MIN_SCALE, OrientedBox7DoF, as_vector3
from scene_recon_kit.core.labels import LabelSystem, default_label_system
from scene_recon_kit.core.scene import PointScene, InstanceProposal
from scene_recon_kit.clustering.config import ClusterConfig
from scene_recon_kit.clustering.components import radius_components


def _object_mask(
    scene: PointScene, label_system: LabelSystem
) -> Tuple[np.ndarray, List[Optional[str]]]:
    """Mask of points with a reconstruction category and the category lookup"""
    lookup = label_system.recon_lookup()
    if scene.n_points > 0 and scene.category.max() >= len(lookup):
        raise InputError(
            f"Category id {scene.category.max()} outside label system"
            f" '{label_system.name}' with {len(lookup)} categories"
        )
    is_object = np.array([x is not None for x in lookup], dtype=bool)
    return is_object[scene.category], lookup


def with_default_confidence(
    proposals: List[InstanceProposal],
) -> List[InstanceProposal]:
    """
    Set confidence to the point count relative to the largest proposal

    Parameters
    ----------
    proposals : List[InstanceProposal]
        The proposals

    Returns
    -------
    List[InstanceProposal]
        Copies with confidence |P| / max |P|
    """
    if len(proposals) == 0:
        return []
    max_points = max(x.n_points for x in proposals)
    return [x.copy(update={"confidence": x.n_points / max_points}) for x in proposals]


def cluster_scene(
    scene: PointScene,
    radius: float,
    min_points: int,
    dual_set: bool = False,
    label_system: Optional[LabelSystem] = None,
) -> List[InstanceProposal]:
    """
    Cluster a scene into proposals at a single radius

    Proposals are connected components of the radius graph over shifted
    coordinates, with edges only between points of the same segmentation
    category. With dual_set, components of the original coordinates follow
    the shifted ones. Boxes and latents are left unset.

    Parameters
    ----------
    scene : PointScene
        The scene
    radius : float
        Neighbour radius in meters
    min_points : int
        Components with fewer points are dropped
    dual_set : bool, optional
        Also cluster the original coordinates, by default False
    label_system : Optional[LabelSystem], optional
        The label system of the scene categories, by default the built-in one

    Returns
    -------
    List[InstanceProposal]
        The proposals with default confidences

    Raises
    ------
    InputError
        If radius or min_points are invalid
    """
    if radius <= 0:
        raise InputError(f"Radius {radius} must be positive")
    if min_points < 1:
        raise InputError(f"min_points {min_points} must be at least 1")
    if label_system is None:
        label_system = default_label_system()
    if scene.n_points == 0:
        return []
    mask, lookup = _object_mask(scene, label_system)
    kept = np.flatnonzero(mask)
    labels = scene.category[kept]
    coordinate_sets = [scene.shifted_points()[kept]]
    if dual_set:
        coordinate_sets.append(scene.points[kept])

    proposals = []
    for coords in coordinate_sets:
        for group in radius_components(coords, labels, radius):
            if len(group) < min_points:
                continue
            indices = kept[group]
            category = lookup[int(scene.category[indices[0]])]
            proposals.append(
                InstanceProposal(point_indices=indices.tolist(), category=category)
            )
    logger.debug(f"Radius {radius}: {len(proposals)} proposals")
    return with_default_confidence(proposals)


def point_iou(a: InstanceProposal, b: InstanceProposal) -> float:
    """Intersection over union of the point sets of two proposals"""
    set_a = set(a.point_indices)
    n_intersection = len(set_a.intersection(b.point_indices))
    n_union = len(set_a) + b.n_points - n_intersection
    return n_intersection / n_union


def dedup_proposals(
    props: List[InstanceProposal], iou_threshold: float
) -> List[InstanceProposal]:
    """
    Remove duplicate proposals by point-set IoU

    Proposals are visited by point count descending, ties broken by smallest
    first point index and then input order. A proposal is dropped if its IoU
    with any kept proposal is at least the threshold.

    Parameters
    ----------
    props : List[InstanceProposal]
        The proposals
    iou_threshold : float
        The IoU threshold in (0, 1]

    Returns
    -------
    List[InstanceProposal]
        The kept proposals in visiting order

    Raises
    ------
    InputError
        If the threshold is not in (0, 1]
    """
    if not 0 < iou_threshold <= 1:
        raise InputError(f"IoU threshold {iou_threshold} not in (0, 1]")
    order = sorted(
        range(len(props)),
        key=lambda i: (-props[i].n_points, min(props[i].point_indices), i),
    )
    kept: List[InstanceProposal] = []
    kept_sets: List[set] = []
    for idx in order:
        prop = props[idx]
        indices = set(prop.point_indices)
        duplicate = False
        for other in kept_sets:
            n_intersection = len(indices & other)
            iou = n_intersection / (len(indices) + len(other) - n_intersection)
            if iou >= iou_threshold:
                duplicate = True
                break
        if not duplicate:
            kept.append(prop)
            kept_sets.append(indices)
    logger.debug(f"Kept {len(kept)} of {len(props)} proposals after dedup")
    return kept


def multi_scale_cluster(
    scene: PointScene,
    cfg: ClusterConfig,
    label_system: Optional[LabelSystem] = None,
) -> List[InstanceProposal]:
    """
    Cluster at several radii and merge the results

    Parameters
    ----------
    scene : PointScene
        The scene
    cfg : ClusterConfig
        The clustering configuration
    label_system : Optional[LabelSystem], optional
        The label system of the scene categories, by default the built-in one

    Returns
    -------
    List[InstanceProposal]
        Deduplicated proposals with default confidences

    Raises
    ------
    InputError
        If there are no radii
    """
    radii = cfg.scales()
    if len(radii) == 0:
        raise InputError("No clustering radii given")

    def run(radius: float) -> List[InstanceProposal]:
        return cluster_scene(scene, radius, cfg.min_points, cfg.dual_set, label_system)

    per_radius = parallel_map(run, radii)
    merged = [prop for props in per_radius for prop in props]
    proposals = dedup_proposals(merged, cfg.dedup_iou)
    logger.info(f"Clustered {scene.n_points} points into {len(proposals)} proposals")
    return with_default_confidence(proposals)


def proposal_initial_box(
    scene: PointScene,
    prop: InstanceProposal,
    arithmetic_angle_mean: bool = False,
    min_scale: float = MIN_SCALE,
) -> OrientedBox7DoF:
    """
    Estimate a box from the points of a proposal

    The center is the mean shifted coordinate, the rotation the mean angle and
    the extents the range of the points after recentering and rotating by the
    negative mean angle.

    Parameters
    ----------
    scene : PointScene
        The scene
    prop : InstanceProposal
        The proposal
    arithmetic_angle_mean : bool, optional
        Use the plain mean of the angles, by default False for the circular
        mean
    min_scale : float, optional
        Floor on the extents, by default MIN_SCALE

    Returns
    -------
    OrientedBox7DoF
        The initial box

    Raises
    ------
    InputError
        If a proposal index is outside the scene
    """
    indices = prop.indices_array()
    if indices.max() >= scene.n_points:
        raise InputError(
            f"Proposal index {indices.max()} outside scene of {scene.n_points}"
        )
    points = scene.points[indices]
    center = (points + scene.offset[indices]).mean(axis=0)
    angles = scene.angle[indices]
    if arithmetic_angle_mean:
        rotation = arithmetic_mean(angles)
    else:
        rotation = circular_mean(angles)
    local = (points - center) @ rotation_z(-rotation).T
    scale = np.maximum(local.max(axis=0) - local.min(axis=0), min_scale)
    return OrientedBox7DoF(
        center=as_vector3(center), z_rotation=rotation, scale=as_vector3(scale)
    )
