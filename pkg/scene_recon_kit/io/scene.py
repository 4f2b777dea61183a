"""
Scene files

Scenes use the shared binary container with magic SRKSCENE. The header
records the point count, the fields present, the coordinate units and the
label system of the category ids. Blocks follow in the fixed field order

- positions, 32 bit float, N x 3
- offsets, 32 bit float, N x 3
- angles, 32 bit float, N
- categories, unsigned 16 bit, N
- instance_ids, unsigned 16 bit, N, optional

Points without a ground truth instance store the id 65535.
"""
from loguru import logger
from pathlib import Path
import numpy as np

from scene_recon_kit.errors import InputError, SceneFileError
from scene_recon_kit.core.scene import PointScene
from scene_recon_kit.io.container import write_container, read_container
from scene_recon_kit.io.container import PayloadReader, require_keys

SCENE_MAGIC = b"SRKSCENE"
SCENE_FORMAT = "srk-scene"
SCENE_VERSION = 1
SCENE_UNITS = "m"
NO_INSTANCE = 65535
FIELD_LAYOUT = {
    "positions": ("<f4", 3),
    "offsets": ("<f4", 3),
    "angles": ("<f4", 1),
    "categories": ("<u2", 1),
    "instance_ids": ("<u2", 1),
}
"""Storage dtype and columns of every field in file order"""
REQUIRED_FIELDS = ["positions", "offsets", "angles", "categories"]


def save_scene(scene: PointScene, path: Path) -> None:
    """
    Write a scene file

    Coordinates, offsets and angles are stored as 32 bit floats.

    Parameters
    ----------
    scene : PointScene
        The scene
    path : Path
        Output path

    Raises
    ------
    InputError
        If category or instance ids do not fit in 16 bits
    """
    if scene.n_points > 0 and scene.category.max() >= NO_INSTANCE:
        raise InputError(f"Category id {scene.category.max()} does not fit the file")
    fields = list(REQUIRED_FIELDS)
    blocks = [
        scene.points.astype("<f4"),
        scene.offset.astype("<f4"),
        scene.angle.astype("<f4"),
        scene.category.astype("<u2"),
    ]
    if scene.gt_instance_id is not None:
        ids = scene.gt_instance_id
        if ids.size > 0 and ids.max() >= NO_INSTANCE:
            raise InputError(f"Instance id {ids.max()} does not fit the file")
        fields.append("instance_ids")
        blocks.append(np.where(ids < 0, NO_INSTANCE, ids).astype("<u2"))
    header = {
        "format": SCENE_FORMAT,
        "version": SCENE_VERSION,
        "n_points": scene.n_points,
        "fields": fields,
        "units": SCENE_UNITS,
        "label_system": scene.label_system,
    }
    write_container(path, SCENE_MAGIC, header, blocks)
    logger.info(f"Saved scene with {scene.n_points} points to {path}")


def load_scene(path: Path) -> PointScene:
    """
    Read a scene file

    Parameters
    ----------
    path : Path
        The scene file

    Returns
    -------
    PointScene
        The scene

    Raises
    ------
    SceneFileError
        If the file is missing, the header is malformed, a block is short or
        trailing bytes remain
    """
    header, payload = read_container(path, SCENE_MAGIC, SceneFileError)
    require_keys(path, header, ["format", "n_points", "fields", "units"], SceneFileError)
    if header["format"] != SCENE_FORMAT:
        raise SceneFileError(path, f"Unexpected format '{header['format']}'")
    if header["units"] != SCENE_UNITS:
        raise SceneFileError(path, f"Unsupported units '{header['units']}'")
    fields = header["fields"]
    missing = [name for name in REQUIRED_FIELDS if name not in fields]
    unknown = [name for name in fields if name not in FIELD_LAYOUT]
    if len(missing) > 0 or len(unknown) > 0:
        raise SceneFileError(path, f"Missing fields {missing}, unknown {unknown}")
    n_points = header["n_points"]
    if not isinstance(n_points, int) or n_points < 0:
        raise SceneFileError(path, f"Invalid point count {n_points}")

    reader = PayloadReader(path, payload, SceneFileError)
    arrays = {}
    for name, (dtype, columns) in FIELD_LAYOUT.items():
        if name not in fields:
            continue
        shape = (n_points, columns) if columns > 1 else (n_points,)
        arrays[name] = reader.read(name, dtype, shape)
    reader.finish()

    instance_ids = None
    if "instance_ids" in arrays:
        ids = arrays["instance_ids"].astype(np.int64)
        instance_ids = np.where(ids == NO_INSTANCE, -1, ids)
    try:
        scene = PointScene(
            arrays["positions"].astype(float),
            arrays["categories"].astype(np.int64),
            arrays["offsets"].astype(float),
            arrays["angles"].astype(float),
            gt_instance_id=instance_ids,
            label_system=header.get("label_system", "default"),
        )
    except InputError as e:
        raise SceneFileError(path, e.message)
    logger.info(f"Loaded scene with {scene.n_points} points from {path}")
    return scene
