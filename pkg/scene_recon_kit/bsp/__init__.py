"""Plane decoders, occupancy and mesh extraction for convex decompositions"""
from scene_recon_kit.bsp.decoder import DenseLayer, BspDecoder, PlaneSet  # noqa: F401
from scene_recon_kit.bsp.decoder import decode_planes, occupancy  # noqa: F401
from scene_recon_kit.bsp.decoder import occupancy_many  # noqa: F401
from scene_recon_kit.bsp.decoder import interpolate_latent  # noqa: F401
from scene_recon_kit.bsp.decoder import load_decoder, save_decoder  # noqa: F401
from scene_recon_kit.bsp.extract import extract_mesh  # noqa: F401
