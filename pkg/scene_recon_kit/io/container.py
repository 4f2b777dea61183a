"""
The binary container shared by scene, pool and decoder files

Files are constructed from

- an 8 byte magic identifying the file kind
- the header length in bytes as a little-endian unsigned 32 bit integer
- a UTF-8 JSON header written with sorted keys and compact separators
- raw little-endian payload blocks in the order declared by the header

Blocks are read with numpy from the payload, there is no padding or
alignment between them.
"""
from loguru import logger
from typing import Any, Dict, List, Tuple, Type
from pathlib import Path
import json
import struct
import numpy as np

from scene_recon_kit.errors import FileReadError

HEADER_LENGTH_FORMAT = "<I"
MAGIC_BYTES = 8


def encode_header(header: Dict[str, Any]) -> bytes:
    """Serialise a header deterministically"""
    return json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")


def write_container(
    path: Path, magic: bytes, header: Dict[str, Any], blocks: List[np.ndarray]
) -> None:
    """
    Write a container file

    Parameters
    ----------
    path : Path
        Output path
    magic : bytes
        The 8 byte magic
    header : Dict[str, Any]
        JSON serialisable header
    blocks : List[np.ndarray]
        Payload arrays, already in their little-endian storage dtype
    """
    if len(magic) != MAGIC_BYTES:
        raise ValueError(f"Magic {magic!r} is not {MAGIC_BYTES} bytes")
    header_bytes = encode_header(header)
    with path.open("wb") as f:
        f.write(magic)
        f.write(struct.pack(HEADER_LENGTH_FORMAT, len(header_bytes)))
        f.write(header_bytes)
        for block in blocks:
            f.write(np.ascontiguousarray(block).tobytes(order="C"))


def read_container(
    path: Path, magic: bytes, error: Type[FileReadError]
) -> Tuple[Dict[str, Any], bytes]:
    """
    Read the header and payload of a container file

    Parameters
    ----------
    path : Path
        The file path
    magic : bytes
        The expected magic
    error : Type[FileReadError]
        The exception class to raise on failures

    Returns
    -------
    Tuple[Dict[str, Any], bytes]
        The header and the payload bytes

    Raises
    ------
    FileReadError
        The given error type if the file is missing or the framing is corrupt
    """
    if not path.exists():
        raise error(path, "File does not exist")
    data = path.read_bytes()
    prefix = MAGIC_BYTES + struct.calcsize(HEADER_LENGTH_FORMAT)
    if len(data) < prefix:
        raise error(path, "File is too short to hold a header")
    if data[:MAGIC_BYTES] != magic:
        logger.error(f"Unexpected magic {data[:MAGIC_BYTES]!r} in {path}")
        raise error(path, f"Expected magic {magic!r}")
    (header_length,) = struct.unpack(
        HEADER_LENGTH_FORMAT, data[MAGIC_BYTES:prefix]
    )
    if len(data) < prefix + header_length:
        raise error(path, f"Header of {header_length} bytes is truncated")
    try:
        header = json.loads(data[prefix : prefix + header_length].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise error(path, f"Malformed header, {e}")
    if not isinstance(header, dict):
        raise error(path, "Header is not a JSON object")
    return header, data[prefix + header_length :]


class PayloadReader:
    """
    Sequential reader of payload blocks

    Parameters
    ----------
    path : Path
        The file path, used in error messages
    payload : bytes
        The payload
    error : Type[FileReadError]
        The exception class to raise
    """

    def __init__(self, path: Path, payload: bytes, error: Type[FileReadError]):
        self.path = path
        self.payload = payload
        self.error = error
        self.position = 0

    def read(self, name: str, dtype: str, shape: Tuple[int, ...]) -> np.ndarray:
        """
        Read the next block

        Parameters
        ----------
        name : str
            Block name used in error messages
        dtype : str
            Little-endian numpy dtype string, e.g. "<f4"
        shape : Tuple[int, ...]
            The block shape

        Returns
        -------
        np.ndarray
            A writable copy of the block

        Raises
        ------
        FileReadError
            If the payload is too short for the block
        """
        n_items = int(np.prod(shape, dtype=np.int64))
        n_bytes = n_items * np.dtype(dtype).itemsize
        available = len(self.payload) - self.position
        if n_bytes > available:
            logger.error(f"Block {name} in {self.path} is short")
            raise self.error(
                self.path,
                f"Block '{name}' needs {n_bytes} bytes, only {available} remain",
            )
        arr = np.frombuffer(
            self.payload, dtype=dtype, count=n_items, offset=self.position
        )
        self.position += n_bytes
        return arr.reshape(shape).copy()

    def finish(self) -> None:
        """Check the whole payload has been consumed"""
        remaining = len(self.payload) - self.position
        if remaining != 0:
            raise self.error(self.path, f"{remaining} unexpected trailing bytes")


def require_keys(
    path: Path, header: Dict[str, Any], keys: List[str], error: Type[FileReadError]
) -> None:
    """Raise if any header key is missing"""
    missing = [key for key in keys if key not in header]
    if len(missing) > 0:
        raise error(path, f"Header is missing fields {missing}")
