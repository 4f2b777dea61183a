"""
The label system bridging segmentation and reconstruction categories

Points are labelled with one of 25 segmentation categories. Reconstruction
works with 8 object categories. Stuff categories such as walls and floors,
and objects without a reconstruction counterpart, map to none and are never
grouped into proposals.

The built-in table can be replaced with a plain text file with one line per
segmentation category

    seg_name<TAB>recon_name_or_NONE

encoded as UTF-8 with LF line endings.
"""
from loguru import logger
from typing import Dict, List, Optional, Union
from pathlib import Path
from pydantic import BaseModel, validator, root_validator

from scene_recon_kit.errors import InputError, LabelTableError

NONE_LABEL = "NONE"

RECON_CATEGORIES = [
    "table",
    "chair",
    "bookshelf",
    "sofa",
    "trash bin",
    "cabinet",
    "display",
    "bathtub",
]

DEFAULT_MAPPING: Dict[str, Optional[str]] = {
    "wall": None,
    "floor": None,
    "cabinet": "cabinet",
    "bed": None,
    "chair": "chair",
    "sofa": "sofa",
    "table": "table",
    "door": None,
    "window": None,
    "bookshelf": "bookshelf",
    "picture": None,
    "counter": "cabinet",
    "desk": "table",
    "curtain": None,
    "refrigerator": "cabinet",
    "shower curtain": None,
    "toilet": None,
    "sink": None,
    "bathtub": "bathtub",
    "trash bin": "trash bin",
    "display": "display",
    "kitchen cabinet": "cabinet",
    "file cabinet": "cabinet",
    "stool": "chair",
    "other furniture": None,
}
"""Segmentation category to reconstruction category, None for stuff"""


class LabelSystem(BaseModel):
    """Segmentation categories, reconstruction categories and their mapping"""

    name: str = "default"
    """An identifier for the label system, stored in scene files"""
    seg_categories: List[str]
    """The segmentation categories, list position is the category id"""
    recon_categories: List[str]
    """The reconstruction categories"""
    mapping: Dict[str, Optional[str]]
    """Segmentation category to reconstruction category or None"""

    class Config:
        frozen = True

    @validator("seg_categories")
    def validate_unique(cls, value: List[str]) -> List[str]:
        """Check segmentation categories are unique"""
        if len(set(value)) != len(value):
            raise ValueError("Segmentation categories are not unique")
        return value

    @root_validator(skip_on_failure=True)
    def validate_mapping(cls, values):
        """Check the mapping is total and maps into the known categories"""
        seg = values["seg_categories"]
        recon = set(values["recon_categories"])
        mapping = values["mapping"]
        missing = [x for x in seg if x not in mapping]
        if len(missing) > 0:
            raise ValueError(f"Mapping is missing categories {missing}")
        extra = [x for x in mapping if x not in seg]
        if len(extra) > 0:
            raise ValueError(f"Mapping has unknown categories {extra}")
        unknown = {v for v in mapping.values() if v is not None and v not in recon}
        if len(unknown) > 0:
            raise ValueError(f"Mapped to unknown categories {sorted(unknown)}")
        return values

    @property
    def n_seg(self) -> int:
        return len(self.seg_categories)

    def seg_id(self, seg_category: str) -> int:
        """Get the id of a segmentation category"""
        try:
            return self.seg_categories.index(seg_category)
        except ValueError:
            raise InputError(f"Unknown segmentation category '{seg_category}'")

    def seg_name(self, seg_id: int) -> str:
        """Get the name of a segmentation category id"""
        if seg_id < 0 or seg_id >= self.n_seg:
            raise InputError(f"Segmentation id {seg_id} not in [0, {self.n_seg})")
        return self.seg_categories[seg_id]

    def recon_lookup(self) -> List[Optional[str]]:
        """Reconstruction category per segmentation id"""
        return [self.mapping[x] for x in self.seg_categories]

    def seg_for_recon(self, recon_category: str) -> str:
        """The first segmentation category mapping to a reconstruction one"""
        for seg in self.seg_categories:
            if self.mapping[seg] == recon_category:
                return seg
        raise InputError(f"No segmentation category maps to '{recon_category}'")


def default_label_system() -> LabelSystem:
    """The built-in 25 to 8 category label system"""
    return LabelSystem(
        name="default",
        seg_categories=list(DEFAULT_MAPPING.keys()),
        recon_categories=list(RECON_CATEGORIES),
        mapping=dict(DEFAULT_MAPPING),
    )


def map_label(sys: LabelSystem, seg_category: Union[str, int]) -> Optional[str]:
    """
    Map a segmentation category to a reconstruction category

    Parameters
    ----------
    sys : LabelSystem
        The label system
    seg_category : Union[str, int]
        The segmentation category name or id

    Returns
    -------
    Optional[str]
        The reconstruction category or None for stuff

    Raises
    ------
    InputError
        If the segmentation category is unknown
    """
    if isinstance(seg_category, str):
        if seg_category not in sys.mapping:
            raise InputError(f"Unknown segmentation category '{seg_category}'")
        return sys.mapping[seg_category]
    return sys.mapping[sys.seg_name(int(seg_category))]


def read_label_table(path: Path) -> LabelSystem:
    """
    Read a label system from a plain text table

    Reconstruction categories are the built-in ones followed by any new names
    in order of first appearance.

    Parameters
    ----------
    path : Path
        Path to the table file

    Returns
    -------
    LabelSystem
        The label system

    Raises
    ------
    LabelTableError
        If the file is missing or a line is malformed
    """
    if not path.exists():
        raise LabelTableError(path, "File does not exist")
    mapping: Dict[str, Optional[str]] = {}
    recon = list(RECON_CATEGORIES)
    text = path.read_bytes().decode("utf-8")
    for iline, line in enumerate(text.split("\n")):
        if line.strip() == "":
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            logger.error(f"Line {iline + 1} of {path} does not have 2 columns")
            raise LabelTableError(path, f"Line {iline + 1} needs 2 tab columns")
        seg, target = parts[0].strip(), parts[1].strip()
        if seg in mapping:
            raise LabelTableError(path, f"Duplicate category '{seg}'")
        if target == NONE_LABEL:
            mapping[seg] = None
            continue
        mapping[seg] = target
        if target not in recon:
            recon.append(target)
    if len(mapping) == 0:
        raise LabelTableError(path, "No categories found")
    logger.info(f"Read {len(mapping)} label mappings from {path}")
    return LabelSystem(
        name=path.stem,
        seg_categories=list(mapping.keys()),
        recon_categories=recon,
        mapping=mapping,
    )


def write_label_table(sys: LabelSystem, path: Path) -> None:
    """Write a label system as a plain text table"""
    lines = []
    for seg in sys.seg_categories:
        target = sys.mapping[seg]
        lines.append(f"{seg}\t{NONE_LABEL if target is None else target}\n")
    path.write_bytes("".join(lines).encode("utf-8"))
