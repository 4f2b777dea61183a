"""
Subpackage with file formats, including:

- The binary container shared by scene, pool and decoder files
- Scene and proposal files
- OBJ and PLY meshes and PLY point clouds
- Prediction and ground truth directories, in scene_recon_kit.io.records
"""
from scene_recon_kit.io.scene import load_scene, save_scene  # noqa: F401
from scene_recon_kit.io.proposals import load_proposals, save_proposals  # noqa: F401
from scene_recon_kit.io.mesh import load_mesh, save_mesh  # noqa: F401
from scene_recon_kit.io.mesh import load_points, save_points  # noqa: F401
