"""Synthetic scenes, template pools and fixture decoders with known answers"""
from scene_recon_kit.synth.templates import template_mesh, template_code  # noqa: F401
from scene_recon_kit.synth.generate import SceneSpec, GeneratedScene  # noqa: F401
from scene_recon_kit.synth.generate import gen_scene, partialize  # noqa: F401
from scene_recon_kit.synth.generate import fixture_decoder, cube_decoder  # noqa: F401
from scene_recon_kit.synth.generate import template_pool, write_synth  # noqa: F401
