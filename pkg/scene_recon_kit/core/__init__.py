"""Shared domain types, box algebra and the label system"""
from scene_recon_kit.core.angles import wrap_angle, circular_mean  # noqa: F401
from scene_recon_kit.core.angles import rotation_z  # noqa: F401
from scene_recon_kit.core.box import MIN_SCALE, OrientedBox7DoF  # noqa: F401
from scene_recon_kit.core.box import BoxResidual, compose_box  # noqa: F401
from scene_recon_kit.core.box import box_corners  # noqa: F401
from scene_recon_kit.core.labels import LabelSystem, map_label  # noqa: F401
from scene_recon_kit.core.labels import default_label_system  # noqa: F401
from scene_recon_kit.core.labels import read_label_table  # noqa: F401
from scene_recon_kit.core.scene import PointScene, InstanceProposal  # noqa: F401
from scene_recon_kit.core.scene import LatentShapeDistribution  # noqa: F401
from scene_recon_kit.core.mesh import TriMesh, concatenate_meshes  # noqa: F401
from scene_recon_kit.core.mesh import weld_vertices, box_mesh  # noqa: F401
