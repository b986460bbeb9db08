"""Pairing plan: which image pairs to match, plus the view-id map.

The plan is the JSON document emitted by `edgs-init --emit-plan`:

    {"pairs": [["a.png", "b.png"], ...],
     "images": [{"view_id": 1, "name": "a.png",
                 "width": 1024, "height": 768}, ...]}

Pair entries are (reference, neighbor) image names; every name must
appear in the image list, and a pair may not reference the same image
twice.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


@dataclass(frozen=True)
class PlanImage:
    view_id: int
    name: str
    width: int
    height: int


@dataclass(frozen=True)
class NeighborPlan:
    pairs: tuple[tuple[str, str], ...]
    images: dict[str, PlanImage]

    def image(self, name: str) -> PlanImage:
        try:
            return self.images[name]
        except KeyError:
            raise ValueError(f"plan has no image named {name!r}") from None

    def __len__(self) -> int:
        return len(self.pairs)


def load_plan(path) -> NeighborPlan:
    """Parse and validate a plan.json file."""
    path = Path(path)
    raw = json.loads(path.read_text())
    for key in ("pairs", "images"):
        if key not in raw:
            raise ValueError(f"{path.name}: missing {key!r} section")

    images: dict[str, PlanImage] = {}
    seen_ids: set[int] = set()
    for entry in raw["images"]:
        try:
            image = PlanImage(int(entry["view_id"]), str(entry["name"]),
                              int(entry["width"]), int(entry["height"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"{path.name}: malformed image entry {entry!r}") from exc
        if image.width < 1 or image.height < 1:
            raise ValueError(f"{path.name}: image {image.name!r} has a "
                             "non-positive size")
        if image.name in images:
            raise ValueError(f"{path.name}: duplicate image name {image.name!r}")
        if image.view_id in seen_ids:
            raise ValueError(f"{path.name}: duplicate view id {image.view_id}")
        images[image.name] = image
        seen_ids.add(image.view_id)

    pairs: list[tuple[str, str]] = []
    for entry in raw["pairs"]:
        if not isinstance(entry, (list, tuple)) or len(entry) != 2:
            raise ValueError(f"{path.name}: malformed pair {entry!r}")
        ref_name, nbr_name = (str(name) for name in entry)
        if ref_name == nbr_name:
            raise ValueError(f"{path.name}: self-pair {ref_name!r}")
        for name in (ref_name, nbr_name):
            if name not in images:
                raise ValueError(f"{path.name}: pair references unknown "
                                 f"image {name!r}")
        pairs.append((ref_name, nbr_name))
    if not pairs:
        raise ValueError(f"{path.name}: plan has no pairs")
    return NeighborPlan(tuple(pairs), images)
