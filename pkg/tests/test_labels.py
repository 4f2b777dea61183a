from pathlib import Path
import pytest
from pydantic import ValidationError

from scene_recon_kit.errors import InputError, LabelTableError
from scene_recon_kit.core.labels import RECON_CATEGORIES, LabelSystem
from scene_recon_kit.core.labels import default_label_system, map_label
from scene_recon_kit.core.labels import read_label_table, write_label_table


@pytest.mark.parametrize(
    "seg, expected",
    [
        ("wall", None),
        ("floor", None),
        ("refrigerator", "cabinet"),
        ("desk", "table"),
        ("stool", "chair"),
        ("trash bin", "trash bin"),
    ],
)
def test_map_label(seg: str, expected):
    sys = default_label_system()
    assert map_label(sys, seg) == expected
    assert map_label(sys, sys.seg_id(seg)) == expected


def test_default_label_system():
    sys = default_label_system()
    assert sys.n_seg == 25
    assert sys.recon_categories == RECON_CATEGORIES
    assert set(x for x in sys.recon_lookup() if x is not None) == set(RECON_CATEGORIES)
    assert sys.seg_for_recon("cabinet") == "cabinet"
    assert sys.seg_for_recon("table") == "table"


def test_unknown_labels():
    sys = default_label_system()
    with pytest.raises(InputError):
        map_label(sys, "spaceship")
    with pytest.raises(InputError):
        map_label(sys, 25)
    with pytest.raises(InputError):
        sys.seg_id("spaceship")


def test_mapping_must_be_total():
    with pytest.raises(ValidationError):
        LabelSystem(
            seg_categories=["a", "b"],
            recon_categories=["table"],
            mapping={"a": "table"},
        )
    with pytest.raises(ValidationError):
        LabelSystem(
            seg_categories=["a"],
            recon_categories=["table"],
            mapping={"a": "chair"},
        )


def test_label_table(tmp_path: Path):
    path = tmp_path / "office.txt"
    path.write_text("wall\tNONE\ndesk\ttable\n\ncouch\tsofa\nlamp\tlamp\n")
    sys = read_label_table(path)
    assert sys.name == "office"
    assert sys.seg_categories == ["wall", "desk", "couch", "lamp"]
    assert sys.recon_categories == RECON_CATEGORIES + ["lamp"]
    assert map_label(sys, "wall") is None
    assert map_label(sys, "couch") == "sofa"

    out_path = tmp_path / "office_copy.txt"
    write_label_table(sys, out_path)
    assert out_path.read_text() == "wall\tNONE\ndesk\ttable\ncouch\tsofa\nlamp\tlamp\n"


@pytest.mark.parametrize(
    "text", ["wall NONE\n", "wall\tNONE\nwall\ttable\n", "\n\n", "a\tb\tc\n"]
)
def test_label_table_errors(tmp_path: Path, text: str):
    path = tmp_path / "labels.txt"
    path.write_text(text)
    with pytest.raises(LabelTableError):
        read_label_table(path)


def test_label_table_missing(tmp_path: Path):
    with pytest.raises(LabelTableError):
        read_label_table(tmp_path / "missing.txt")
