"""Similarity measures between meshes and point sets"""
from scene_recon_kit.metrics.bvh import MeshBvh  # noqa: F401
from scene_recon_kit.metrics.distance import DEFAULT_OMEGA, pcr  # noqa: F401
from scene_recon_kit.metrics.distance import point_mesh_distance  # noqa: F401
from scene_recon_kit.metrics.sampling import sample_surface, chamfer  # noqa: F401
from scene_recon_kit.metrics.voxel import DEFAULT_VOXEL, voxel_iou  # noqa: F401
from scene_recon_kit.metrics.voxel import points_inside_mesh  # noqa: F401
from scene_recon_kit.metrics.lightfield import LfdConfig  # noqa: F401
from scene_recon_kit.metrics.lightfield import lightfield_distance  # noqa: F401
