"""
Proposal files

A proposal file is a JSON object with the point count of the scene the
proposals refer to, or null when unknown, and the list of proposals with
their point indices, confidence, category, boxes and latent distribution.
"""
from loguru import logger
from typing import List, Optional
from pathlib import Path
import json
from pydantic import BaseModel, ValidationError

from scene_recon_kit.errors import ProposalFileError
from scene_recon_kit.core.scene import InstanceProposal


class ProposalFile(BaseModel):
    """The contents of a proposal file"""

    n_points: Optional[int] = None
    """Point count of the referenced scene"""
    proposals: List[InstanceProposal] = []
    """The proposals"""


def save_proposals(
    proposals: List[InstanceProposal], path: Path, n_points: Optional[int] = None
) -> None:
    """
    Write a proposal file

    Parameters
    ----------
    proposals : List[InstanceProposal]
        The proposals
    path : Path
        Output path
    n_points : Optional[int], optional
        Point count of the scene, by default None
    """
    contents = ProposalFile(n_points=n_points, proposals=proposals)
    path.write_text(json.dumps(contents.dict(), sort_keys=True, indent=1) + "\n")
    logger.info(f"Saved {len(proposals)} proposals to {path}")


def load_proposals(path: Path, n_points: Optional[int] = None) -> List[InstanceProposal]:
    """
    Read a proposal file

    Parameters
    ----------
    path : Path
        The proposal file
    n_points : Optional[int], optional
        Point count of the scene to check indices against, by default None to
        use the count in the file

    Returns
    -------
    List[InstanceProposal]
        The proposals

    Raises
    ------
    ProposalFileError
        If the file is missing, malformed, or an index is out of range
    """
    if not path.exists():
        raise ProposalFileError(path, "File does not exist")
    try:
        contents = ProposalFile.parse_raw(path.read_text())
    except (ValidationError, ValueError) as e:
        logger.error(f"Invalid proposal file {path}")
        raise ProposalFileError(path, str(e))
    if n_points is None:
        n_points = contents.n_points
    elif contents.n_points is not None and contents.n_points != n_points:
        raise ProposalFileError(
            path, f"File refers to {contents.n_points} points, scene has {n_points}"
        )
    if n_points is not None:
        for iprop, prop in enumerate(contents.proposals):
            if max(prop.point_indices) >= n_points:
                raise ProposalFileError(
                    path, f"Proposal {iprop} indexes beyond {n_points} points"
                )
    logger.info(f"Loaded {len(contents.proposals)} proposals from {path}")
    return contents.proposals
