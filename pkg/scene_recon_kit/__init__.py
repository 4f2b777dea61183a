"""
A package for instance mesh reconstruction from partially observed point scenes
and for evaluating the reconstructions.

The processing chain is

- Cluster per-point predictions into instance proposals
- Estimate and refine a 7 degree of freedom box for each proposal
- Get a complete shape for each proposal by decoding a latent code into a
  convex decomposition, projecting the code onto nearby pool codes or
  retrieving the nearest model from a pool
- Place the shape in the scene with the refined box, optionally fine tuned
  with ICP

Reconstructions are scored with point coverage, Chamfer distance, voxel IoU
and a light-field style silhouette distance, and summarised as per-category
average precision.
"""
from importlib.metadata import version, PackageNotFoundError

__name__ = "scene_recon_kit"
try:
    __version__ = version("scene-recon-kit")
except PackageNotFoundError:  # pragma: no cover
    __version__ = "unknown"
