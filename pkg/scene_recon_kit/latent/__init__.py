"""Latent code sampling, model pools, retrieval and projection"""
from scene_recon_kit.latent.pool import PoolEntry, ModelPool  # noqa: F401
from scene_recon_kit.latent.pool import load_pool, save_pool  # noqa: F401
from scene_recon_kit.latent.ops import sample_code, sample_codes  # noqa: F401
from scene_recon_kit.latent.ops import expected_code, retrieve, project  # noqa: F401
