"""Grouping of scene points into instance proposals"""
from scene_recon_kit.clustering.config import ClusterConfig  # noqa: F401
from scene_recon_kit.clustering.proposals import cluster_scene  # noqa: F401
from scene_recon_kit.clustering.proposals import multi_scale_cluster  # noqa: F401
from scene_recon_kit.clustering.proposals import dedup_proposals  # noqa: F401
from scene_recon_kit.clustering.proposals import proposal_initial_box  # noqa: F401
from scene_recon_kit.clustering.proposals import point_iou  # noqa: F401
