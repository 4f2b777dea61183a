"""
Exceptions raised across scene-recon-kit

Load errors carry the offending path so that messages point straight at the
file that needs fixing. The command line maps these onto exit codes.
"""
from typing import Optional, Union
from pathlib import Path


class InputError(Exception):
    def __init__(self, message: str):
        """Exception for invalid inputs to an operation"""
        self.message = message

    def __str__(self) -> str:
        """The Exception string"""
        return f"Invalid input: {self.message}"


class PreconditionError(InputError):
    """Exception for a violated operation precondition"""

    def __str__(self) -> str:
        """The Exception string"""
        return f"Precondition failed: {self.message}"


class NotFoundError(Exception):
    def __init__(self, message: str):
        """Exception for a query that found nothing to return"""
        self.message = message

    def __str__(self) -> str:
        """The Exception string"""
        return f"Not found: {self.message}"


class AlignmentFailedError(Exception):
    def __init__(self, n_correspondences: int, message: Optional[str] = None):
        """Exception for an ICP alignment without enough correspondences"""
        self.n_correspondences = n_correspondences
        self.message = message

    def __str__(self) -> str:
        """The Exception string"""
        outstr = f"Alignment failed with {self.n_correspondences} correspondences"
        if self.message is not None:
            outstr += f", {self.message}"
        return outstr


class FileReadError(Exception):
    """Base exception for files that could not be read"""

    kind: str = "file"

    def __init__(self, path: Union[Path, str], message: str):
        self.path = path
        self.message = message

    def __str__(self) -> str:
        """The Exception string"""
        return f"Failed to read {self.kind} {self.path}: {self.message}"


class SceneFileError(FileReadError):
    kind = "scene file"


class ProposalFileError(FileReadError):
    kind = "proposal file"


class MeshFileError(FileReadError):
    kind = "mesh file"


class PoolFileError(FileReadError):
    kind = "pool file"


class DecoderFileError(FileReadError):
    kind = "decoder file"


class LabelTableError(FileReadError):
    kind = "label table"


class ConfigFileError(FileReadError):
    kind = "configuration file"


class RecordsReadError(FileReadError):
    kind = "record directory"
