"""
Model pools of latent codes with optional meshes

A pool holds the latent codes of a set of reference models. Retrieval only
needs the codes, the meshes are kept when the pool is used to return
existing models instead of decoding new ones.

Pool files use the shared binary container with magic SRKPOOL0. The header
declares the code dimension, the entry count, the canonical frame of the
meshes, a table of categories and one entry per model with its id, category
index and an optional mesh path relative to the pool file. The payload is the
count by dimension code matrix as 32 bit floats.
"""
from loguru import logger
from typing import Dict, List, Optional, Sequence
from pathlib import Path
import numpy as np
from pydantic import BaseModel, validator

from scene_recon_kit.errors import InputError, PoolFileError, FileReadError
from scene_recon_kit.canonical import CanonicalFrame
from scene_recon_kit.core.mesh import TriMesh
from scene_recon_kit.io.container import write_container, read_container
from scene_recon_kit.io.container import PayloadReader, require_keys
from scene_recon_kit.io.mesh import load_mesh, save_mesh

POOL_MAGIC = b"SRKPOOL0"
POOL_FORMAT = "srk-model-pool"
POOL_VERSION = 1


class PoolEntry(BaseModel):
    """A model in a pool"""

    id: str
    """Unique model id"""
    category: Optional[str] = None
    """The reconstruction category of the model"""

    class Config:
        frozen = True

    @validator("id")
    def validate_id(cls, value: str) -> str:
        if value == "":
            raise ValueError("Pool entry ids must be non-empty")
        return value


class ModelPool:
    """
    Latent codes of reference models

    Parameters
    ----------
    entries : Sequence[PoolEntry]
        The models
    codes : np.ndarray
        Codes with shape (len(entries), dimension)
    meshes : Optional[Dict[str, TriMesh]], optional
        Canonical meshes by model id, by default None
    frame : CanonicalFrame, optional
        The canonical frame of the meshes, by default the unit frame

    Raises
    ------
    InputError
        If ids repeat, codes are not finite, or the code matrix does not have
        one row per entry
    """

    def __init__(
        self,
        entries: Sequence[PoolEntry],
        codes: np.ndarray,
        meshes: Optional[Dict[str, TriMesh]] = None,
        frame: CanonicalFrame = CanonicalFrame.UNIT,
    ):
        entries = list(entries)
        codes = np.array(codes, dtype=float)
        if codes.ndim != 2 or codes.shape[0] != len(entries):
            raise InputError(
                f"Code matrix {codes.shape} does not match {len(entries)} entries"
            )
        ids = [entry.id for entry in entries]
        if len(set(ids)) != len(ids):
            raise InputError("Pool entry ids are not unique")
        if not np.all(np.isfinite(codes)):
            raise InputError("Pool codes are not finite")
        meshes = {} if meshes is None else dict(meshes)
        unknown = set(meshes) - set(ids)
        if len(unknown) > 0:
            raise InputError(f"Meshes given for unknown entries {sorted(unknown)}")
        codes.setflags(write=False)
        self.entries = entries
        self.codes = codes
        self.meshes = meshes
        self.frame = CanonicalFrame(frame)
        self._index = {entry_id: i for i, entry_id in enumerate(ids)}

    @property
    def size(self) -> int:
        return len(self.entries)

    @property
    def dimension(self) -> int:
        return self.codes.shape[1]

    def __len__(self) -> int:
        return self.size

    def ids(self) -> List[str]:
        return [entry.id for entry in self.entries]

    def categories(self) -> List[str]:
        """Sorted categories present in the pool"""
        return sorted({e.category for e in self.entries if e.category is not None})

    def index(self, entry_id: str) -> int:
        """Row of an entry, raises InputError for unknown ids"""
        if entry_id not in self._index:
            raise InputError(f"Pool has no entry '{entry_id}'")
        return self._index[entry_id]

    def code(self, entry_id: str) -> np.ndarray:
        return self.codes[self.index(entry_id)].copy()

    def mesh(self, entry_id: str) -> TriMesh:
        """
        The canonical mesh of an entry

        Raises
        ------
        InputError
            If the entry does not exist or has no mesh
        """
        self.index(entry_id)
        if entry_id not in self.meshes:
            raise InputError(f"Pool entry '{entry_id}' has no mesh")
        return self.meshes[entry_id]

    def select(self, category: Optional[str] = None) -> np.ndarray:
        """Rows of entries in a category, or all rows when category is None"""
        if category is None:
            return np.arange(self.size)
        return np.array(
            [i for i, e in enumerate(self.entries) if e.category == category],
            dtype=np.int64,
        )

    def __repr__(self) -> str:
        return (
            f"ModelPool(size={self.size}, dimension={self.dimension},"
            f" n_meshes={len(self.meshes)})"
        )


def save_pool(pool: ModelPool, path: Path, mesh_suffix: str = ".ply") -> None:
    """
    Write a pool file and the meshes of its entries

    Meshes are written to a directory next to the pool file named after the
    pool file stem, one file per entry numbered by row.

    Parameters
    ----------
    pool : ModelPool
        The pool
    path : Path
        Output pool path
    mesh_suffix : str, optional
        Mesh file suffix, by default ".ply"
    """
    categories = pool.categories()
    mesh_dir = path.parent / f"{path.stem}_meshes"
    entries = []
    for row, entry in enumerate(pool.entries):
        record = {
            "id": entry.id,
            "category": None
            if entry.category is None
            else categories.index(entry.category),
            "mesh": None,
        }
        if entry.id in pool.meshes:
            mesh_dir.mkdir(parents=True, exist_ok=True)
            mesh_path = mesh_dir / f"mesh_{row:05d}{mesh_suffix}"
            save_mesh(pool.meshes[entry.id], mesh_path)
            record["mesh"] = mesh_path.relative_to(path.parent).as_posix()
        entries.append(record)
    header = {
        "format": POOL_FORMAT,
        "version": POOL_VERSION,
        "dimension": pool.dimension,
        "count": pool.size,
        "frame": pool.frame.value,
        "categories": categories,
        "entries": entries,
    }
    write_container(path, POOL_MAGIC, header, [pool.codes.astype("<f4")])
    logger.info(f"Saved pool of {pool.size} codes to {path}")


def load_pool(path: Path, load_meshes: bool = True) -> ModelPool:
    """
    Read a pool file

    Parameters
    ----------
    path : Path
        The pool file
    load_meshes : bool, optional
        Read the referenced meshes, by default True

    Returns
    -------
    ModelPool
        The pool

    Raises
    ------
    PoolFileError
        If the file or a referenced mesh is missing or malformed
    """
    header, payload = read_container(path, POOL_MAGIC, PoolFileError)
    keys = ["format", "dimension", "count", "frame", "categories", "entries"]
    require_keys(path, header, keys, PoolFileError)
    if header["format"] != POOL_FORMAT:
        raise PoolFileError(path, f"Unexpected format '{header['format']}'")
    count = int(header["count"])
    dimension = int(header["dimension"])
    if len(header["entries"]) != count:
        raise PoolFileError(
            path, f"Header declares {count} entries, lists {len(header['entries'])}"
        )
    try:
        frame = CanonicalFrame(header["frame"])
    except ValueError:
        raise PoolFileError(path, f"Unknown frame '{header['frame']}'")
    categories = header["categories"]

    entries = []
    meshes = {}
    for row, record in enumerate(header["entries"]):
        category = record.get("category")
        if category is not None:
            if not 0 <= category < len(categories):
                raise PoolFileError(path, f"Entry {row} has bad category {category}")
            category = categories[category]
        try:
            entry = PoolEntry(id=record["id"], category=category)
        except (KeyError, ValueError) as e:
            raise PoolFileError(path, f"Entry {row} is invalid, {e}")
        entries.append(entry)
        if load_meshes and record.get("mesh") is not None:
            try:
                meshes[entry.id] = load_mesh(path.parent / record["mesh"])
            except FileReadError as e:
                logger.error(f"Pool mesh of entry {entry.id} could not be read")
                raise PoolFileError(path, str(e))

    reader = PayloadReader(path, payload, PoolFileError)
    codes = reader.read("codes", "<f4", (count, dimension))
    reader.finish()
    try:
        pool = ModelPool(entries, codes.astype(float), meshes, frame)
    except InputError as e:
        raise PoolFileError(path, e.message)
    logger.info(f"Loaded {pool} from {path}")
    return pool
