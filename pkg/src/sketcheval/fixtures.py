"""Shipped demo pack: the water-dye diffusion item with student snapshots.

The pack doubles as the default item source for the CLI and as the worked
example exercised by the acceptance suite: a student sketch that captures
the spreading dye but misses the room-temperature dye particles, the
temperature drop, and the slower particle motion, and expresses the water
particles at a lower cognitive level than the rubric expects.
"""
from __future__ import annotations

from importlib import resources
from pathlib import Path

from .items import ItemSpec, load_dataset, load_item_dir
from .srg import Srg, parse_srg

WATER_DYE_ITEM_ID = "water-dye"


def fixture_pack_root() -> Path:
    return Path(str(resources.files(__package__) / "fixtures" / "pack"))


def load_fixture_items() -> list[ItemSpec]:
    items, _ = load_dataset(fixture_pack_root())
    return items


def water_dye_item() -> ItemSpec:
    return load_item_dir(fixture_pack_root() / WATER_DYE_ITEM_ID)


def _sample(name: str) -> Srg:
    path = fixture_pack_root() / WATER_DYE_ITEM_ID / "samples" / f"{name}.srg.json"
    return parse_srg(path.read_text())


def water_dye_student() -> Srg:
    """Perceived student graph: 4 nodes, 3 edges, one Bloom regression."""
    return _sample("student_perceived")


def water_dye_revised() -> Srg:
    """The perceived graph after one repair: the room-temperature dye node."""
    return _sample("student_revised")
