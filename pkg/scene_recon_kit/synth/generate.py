"""
Synthetic scenes with known ground truth

A scene is made of template instances placed at seeded random poses on the
floor. Instance footprints never overlap. Every instance contributes points
sampled on its placed surface, optionally culled to what a single camera
sees and jittered with isotropic Gaussian noise. Per-point predictions are
the ground truth values, offsets pointing exactly at the instance center and
angles equal to the instance rotation, so clustering recovers the planted
instances.

Proposals are made from the exact instance point sets. They carry the box
estimated from the points, the residual to the true box and a latent
distribution centered on the template code.

Alongside the scene, a model pool of the templates and a fixture decoder
reproducing every template as a union of box convexes make the generate,
project and retrieve modes testable end to end.
"""
from loguru import logger
from typing import List, Optional, Tuple
from pathlib import Path
import numpy as np
from pydantic import BaseModel, validator

from scene_recon_kit.common import parallel_map
from scene_recon_kit.errors import InputError, PreconditionError
from scene_recon_kit.core.angles import wrap_angle
from scene_recon_kit.core.box import OrientedBox7DoF, BoxResidual, Vector3
from scene_recon_kit.core.box import as_vector3
from scene_recon_kit.core.labels import RECON_CATEGORIES, default_label_system
from scene_recon_kit.core.mesh import TriMesh
from scene_recon_kit.core.scene import PointScene, InstanceProposal
from scene_recon_kit.core.scene import LatentShapeDistribution
from scene_recon_kit.canonical import CanonicalFrame, place_mesh
from scene_recon_kit.clustering.proposals import proposal_initial_box
from scene_recon_kit.bsp.decoder import BspDecoder, DenseLayer, save_decoder
from scene_recon_kit.latent.pool import ModelPool, PoolEntry, save_pool
from scene_recon_kit.metrics.bvh import MeshBvh
from scene_recon_kit.metrics.sampling import sample_surface
from scene_recon_kit.evaluation.records import GtRecord
from scene_recon_kit.io.scene import save_scene
from scene_recon_kit.io.proposals import save_proposals
from scene_recon_kit.io.records import save_ground_truth
from scene_recon_kit.synth.templates import CODE_DIMENSION
from scene_recon_kit.synth.templates import template_parts, template_mesh
from scene_recon_kit.synth.templates import template_code

SCENE_FILE = "scene.srk"
PROPOSALS_FILE = "proposals.json"
GT_DIR = "gt"
POOL_FILE = "pool.srkp"
DECODER_FILE = "decoder.srkd"
PLANES_PER_BOX = 6
EMPTY_PLANE = (1.0, 0.0, 0.0, 1.0)
"""Half-space x <= -1, empty inside either canonical cube"""
DEFAULT_INSTANCES = [
    "table",
    "chair",
    "bookshelf",
    "sofa",
    "cabinet",
    "display",
    "bathtub",
]


class SceneSpec(BaseModel):
    """Description of a synthetic scene"""

    instances: List[str] = list(DEFAULT_INSTANCES)
    """Template category of every instance"""
    center_lo: Tuple[float, float] = (0.0, 0.0)
    """Minimum x and y of instance centers in meters"""
    center_hi: Tuple[float, float] = (8.0, 8.0)
    """Maximum x and y of instance centers in meters"""
    rotation_range: Tuple[float, float] = (-np.pi, np.pi)
    """Range of instance rotations about z in radians"""
    scale_lo: Vector3 = (0.6, 0.6, 0.5)
    """Minimum instance extents in meters"""
    scale_hi: Vector3 = (1.2, 1.2, 1.2)
    """Maximum instance extents in meters"""
    gap: float = 0.2
    """Minimum clearance between instance footprints in meters"""
    points_per_instance: int = 2000
    """Surface points sampled per instance before culling"""
    camera: Optional[Vector3] = None
    """Camera position for self-occlusion culling, None keeps every point"""
    noise_sigma: float = 0.0
    """Standard deviation of the point jitter in meters"""
    code_noise: float = 0.0
    """Standard deviation of the noise added to proposal codes"""
    code_sigma: float = 0.05
    """Standard deviation reported in the proposal distributions"""
    confidence: float = 0.9
    """Confidence of every proposal"""
    max_attempts: int = 1000
    """Placement attempts per instance before giving up"""
    seed: int = 0
    """Seed of every random choice"""

    class Config:
        extra = "forbid"

    @validator("instances")
    def validate_instances(cls, value: List[str]) -> List[str]:
        unknown = [name for name in value if name not in RECON_CATEGORIES]
        if len(unknown) > 0:
            raise ValueError(f"No templates for {unknown}")
        return value

    @validator("center_hi")
    def validate_center_range(cls, value, values):
        lo = values.get("center_lo")
        if lo is not None and not all(h > l for l, h in zip(lo, value)):
            raise ValueError(f"Center range {lo} to {value} is degenerate")
        return value

    @validator("rotation_range")
    def validate_rotation_range(cls, value):
        if value[1] < value[0]:
            raise ValueError(f"Rotation range {value} is reversed")
        return value

    @validator("scale_hi")
    def validate_scale_range(cls, value, values):
        lo = values.get("scale_lo")
        if lo is not None and not all(0 < l <= h for l, h in zip(lo, value)):
            raise ValueError(f"Scale range {lo} to {value} is invalid")
        return value

    @validator("gap", "noise_sigma", "code_noise", "code_sigma")
    def validate_non_negative(cls, value: float) -> float:
        if value < 0:
            raise ValueError(f"Value {value} must not be negative")
        return value

    @validator("points_per_instance", "max_attempts")
    def validate_positive(cls, value: int) -> int:
        if value < 1:
            raise ValueError(f"Value {value} must be at least 1")
        return value

    @validator("confidence")
    def validate_confidence(cls, value: float) -> float:
        if not 0 <= value <= 1:
            raise ValueError(f"Confidence {value} not in [0, 1]")
        return value


class GeneratedScene(BaseModel):
    """A synthetic scene with ground truth and proposals"""

    scene: PointScene
    ground_truth: List[GtRecord]
    proposals: List[InstanceProposal]
    boxes: List[OrientedBox7DoF]
    """True box of every instance"""

    class Config:
        arbitrary_types_allowed = True


def partialize(
    points: np.ndarray, mesh_owner: TriMesh, camera: np.ndarray
) -> np.ndarray:
    """
    Keep the points a camera sees past their own mesh

    Parameters
    ----------
    points : np.ndarray
        Points on the mesh surface with shape (N, 3)
    mesh_owner : TriMesh
        The mesh the points belong to
    camera : np.ndarray
        Camera position

    Returns
    -------
    np.ndarray
        Sorted indices of the points whose open segment to the camera crosses
        no triangle of the mesh

    Raises
    ------
    PreconditionError
        If the camera is inside the bounding box of the mesh
    """
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    camera = np.asarray(camera, dtype=float).reshape(3)
    lo, hi = mesh_owner.bounds()
    if np.all(camera >= lo) and np.all(camera <= hi):
        raise PreconditionError(f"Camera {camera.tolist()} inside the mesh bounds")
    if points.shape[0] == 0:
        return np.empty(0, dtype=np.int64)
    bvh = MeshBvh(mesh_owner)
    origins = np.broadcast_to(camera, points.shape)
    blocked = bvh.segments_blocked(origins, points)
    return np.flatnonzero(~blocked)


def place_instances(spec: SceneSpec) -> List[OrientedBox7DoF]:
    """
    Draw non-overlapping instance boxes by rejection sampling

    Instances stand on the floor, z = 0. Footprints are the circles around
    the box diagonals in the xy plane.

    Raises
    ------
    InputError
        If an instance cannot be placed within max_attempts draws
    """
    rng = np.random.default_rng(spec.seed)
    center_lo = np.array(spec.center_lo)
    center_hi = np.array(spec.center_hi)
    scale_lo = np.array(spec.scale_lo)
    scale_hi = np.array(spec.scale_hi)
    boxes: List[OrientedBox7DoF] = []
    placed: List[Tuple[np.ndarray, float]] = []
    for index, category in enumerate(spec.instances):
        for _attempt in range(spec.max_attempts):
            scale = rng.uniform(scale_lo, scale_hi)
            xy = rng.uniform(center_lo, center_hi)
            rotation = rng.uniform(*spec.rotation_range)
            radius = 0.5 * float(np.hypot(scale[0], scale[1]))
            if all(
                np.linalg.norm(xy - other) >= radius + other_radius + spec.gap
                for other, other_radius in placed
            ):
                break
        else:
            raise InputError(
                f"Could not place instance {index} ({category}) after"
                f" {spec.max_attempts} attempts"
            )
        placed.append((xy, radius))
        # the stored angle is 32 bit so the box uses the rounded value
        angle = float(np.float32(wrap_angle(rotation)))
        center = np.array([xy[0], xy[1], 0.5 * scale[2]])
        boxes.append(
            OrientedBox7DoF(
                center=as_vector3(center),
                z_rotation=float(wrap_angle(angle)),
                scale=as_vector3(scale),
            )
        )
    return boxes


def _instance_points(
    spec: SceneSpec, index: int, box: OrientedBox7DoF
) -> Tuple[TriMesh, np.ndarray]:
    """Placed template and its observed points rounded to 32 bit"""
    category = spec.instances[index]
    mesh = place_mesh(template_mesh(category), box, CanonicalFrame.UNIT)
    rng = np.random.default_rng([spec.seed, index])
    points = sample_surface(mesh, spec.points_per_instance, int(rng.integers(2**31)))
    if spec.camera is not None:
        points = points[partialize(points, mesh, np.array(spec.camera))]
    if spec.noise_sigma > 0:
        points = points + rng.normal(0.0, spec.noise_sigma, points.shape)
    points = points.astype(np.float32).astype(float)
    logger.debug(f"Instance {index} ({category}) has {points.shape[0]} points")
    return mesh, points


def gen_scene(spec: SceneSpec) -> GeneratedScene:
    """
    Generate a synthetic scene

    Parameters
    ----------
    spec : SceneSpec
        The scene description

    Returns
    -------
    GeneratedScene
        Scene, ground truth records, proposals and true boxes, in the
        order of spec.instances

    Raises
    ------
    InputError
        If the instances cannot be placed
    PreconditionError
        If the camera is inside an instance bounding box
    """
    boxes = place_instances(spec)
    labels = default_label_system()
    instances = parallel_map(
        lambda item: _instance_points(spec, item[0], item[1]), list(enumerate(boxes))
    )

    points, offsets, angles, categories, instance_ids = [], [], [], [], []
    ground_truth = []
    for index, (box, (mesh, inst_points)) in enumerate(zip(boxes, instances)):
        category = spec.instances[index]
        n_inst = inst_points.shape[0]
        offset = (box.center_array - inst_points).astype(np.float32).astype(float)
        points.append(inst_points)
        offsets.append(offset)
        angles.append(np.full(n_inst, box.z_rotation))
        categories.append(
            np.full(n_inst, labels.seg_id(labels.seg_for_recon(category)))
        )
        instance_ids.append(np.full(n_inst, index))
        ground_truth.append(
            GtRecord(mesh=mesh, instance_points=inst_points, category=category)
        )
    scene = PointScene(
        np.concatenate(points),
        np.concatenate(categories),
        np.concatenate(offsets),
        np.concatenate(angles).astype(np.float32).astype(float),
        gt_instance_id=np.concatenate(instance_ids),
        label_system=labels.name,
    )

    proposals = []
    first = 0
    for index, box in enumerate(boxes):
        category = spec.instances[index]
        n_inst = instances[index][1].shape[0]
        indices = list(range(first, first + n_inst))
        first += n_inst
        if n_inst == 0:
            logger.warning(f"Instance {index} ({category}) has no visible points")
            continue
        base = InstanceProposal(
            point_indices=indices, confidence=spec.confidence, category=category
        )
        initial = proposal_initial_box(scene, base)
        code = template_code(category)
        if spec.code_noise > 0:
            rng = np.random.default_rng([spec.seed, index, 1])
            code = code + rng.normal(0.0, spec.code_noise, code.shape)
        proposals.append(
            base.copy(
                update={
                    "initial_box": initial,
                    "residual": BoxResidual.between(initial, box),
                    "latent": LatentShapeDistribution(
                        mu=code.tolist(), sigma=[spec.code_sigma] * code.size
                    ),
                }
            )
        )
    logger.info(
        f"Generated scene with {scene.n_points} points, {len(boxes)} instances"
        f" and {len(proposals)} proposals"
    )
    return GeneratedScene(
        scene=scene, ground_truth=ground_truth, proposals=proposals, boxes=boxes
    )


def _box_planes(lo, hi) -> np.ndarray:
    """The six outward planes of an axis aligned box"""
    planes = []
    for axis in range(3):
        normal = np.zeros(3)
        normal[axis] = -1.0
        planes.append([*normal, lo[axis]])
        normal[axis] = 1.0
        planes.append([*normal, -hi[axis]])
    return np.array(planes)


def _box_decoder(
    category_boxes: List[List[Tuple]], d_shape: int, categories: List[str]
) -> BspDecoder:
    """
    Decoder whose planes are fixed boxes per category

    The bias holds the canonical cube for every convex and the one-hot
    columns switch to the boxes of a category. Categories with fewer boxes
    than convexes are padded with empty convexes. The code has no effect.
    """
    n_convexes = max(len(boxes) for boxes in category_boxes)
    n_planes = PLANES_PER_BOX * n_convexes
    lo, hi = CanonicalFrame.UNIT.bounds()
    cube = np.tile(_box_planes([lo] * 3, [hi] * 3), (n_convexes, 1)).reshape(-1)
    weight = np.zeros((4 * n_planes, d_shape + len(categories)))
    for icat, boxes in enumerate(category_boxes):
        planes = [_box_planes(box_lo, box_hi) for box_lo, box_hi in boxes]
        planes += [np.tile(EMPTY_PLANE, (PLANES_PER_BOX, 1))] * (
            n_convexes - len(boxes)
        )
        weight[:, d_shape + icat] = np.concatenate(planes).reshape(-1) - cube
    membership = np.zeros((n_planes, n_convexes), dtype=np.uint8)
    membership[np.arange(n_planes), np.arange(n_planes) // PLANES_PER_BOX] = 1
    layer = DenseLayer(weight, cube, "identity", name="planes")
    return BspDecoder([layer], membership, d_shape, categories, CanonicalFrame.UNIT)


def fixture_decoder(
    categories: Optional[List[str]] = None, d_shape: int = CODE_DIMENSION
) -> BspDecoder:
    """
    Decoder reproducing the template of every category

    Parameters
    ----------
    categories : Optional[List[str]], optional
        Categories in one-hot order, by default all reconstruction categories
    d_shape : int, optional
        Code dimension, by default the template code dimension

    Returns
    -------
    BspDecoder
        The decoder, with as many convexes as the largest template has
        boxes and six planes per convex
    """
    categories = list(RECON_CATEGORIES) if categories is None else list(categories)
    category_boxes = [list(template_parts(category)) for category in categories]
    return _box_decoder(category_boxes, d_shape, categories)


def cube_decoder(
    categories: Optional[List[str]] = None, d_shape: int = CODE_DIMENSION
) -> BspDecoder:
    """Decoder producing the canonical cube for any code and category"""
    categories = list(RECON_CATEGORIES) if categories is None else list(categories)
    lo, hi = CanonicalFrame.UNIT.bounds()
    cube = [((lo, lo, lo), (hi, hi, hi))]
    return _box_decoder([cube] * len(categories), d_shape, categories)


def template_pool(categories: Optional[List[str]] = None) -> ModelPool:
    """A pool with the template of every category, ids are category names"""
    categories = list(RECON_CATEGORIES) if categories is None else list(categories)
    entries = [PoolEntry(id=category, category=category) for category in categories]
    codes = np.stack([template_code(category) for category in categories])
    meshes = {category: template_mesh(category) for category in categories}
    return ModelPool(entries, codes, meshes, CanonicalFrame.UNIT)


def write_synth(generated: GeneratedScene, out_dir: Path) -> None:
    """
    Write a generated scene with its fixture pool and decoder

    The directory receives the scene, the proposals, a ground truth
    directory, the template pool with its meshes and the fixture decoder.

    Parameters
    ----------
    generated : GeneratedScene
        The generated scene
    out_dir : Path
        Output directory, created if missing
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    save_scene(generated.scene, out_dir / SCENE_FILE)
    save_proposals(
        generated.proposals, out_dir / PROPOSALS_FILE, generated.scene.n_points
    )
    save_ground_truth(generated.ground_truth, out_dir / GT_DIR)
    save_pool(template_pool(), out_dir / POOL_FILE)
    save_decoder(fixture_decoder(), out_dir / DECODER_FILE)
    logger.info(f"Wrote synthetic scene to {out_dir}")
