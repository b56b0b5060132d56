"""Reading and writing group definition files (JSON).

Layout::

    {"name": str, "rank": int, "ambient_n": 1 | 2,
     "generators": [{"matrix": [[re, im], [re, im], [re, im], [re, im]]}, ...],
     "disks": [{"center": [re, im], "radius": float}, ...]}

Matrices are row-major ``a, b, c, d``.  Generator ``i`` maps the exterior of
disk ``2i`` onto the interior of disk ``2i+1``.
"""
from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import GeometryError
from .geometry import Isometry
from .schottky import Disk, SchottkyGroup

BUNDLED = ("pants_thin", "pants_wide")


def group_from_dict(doc: dict) -> SchottkyGroup:
    try:
        n = int(doc.get("ambient_n", 1))
        gens = []
        for g in doc["generators"]:
            e = [complex(re, im) for re, im in g["matrix"]]
            if len(e) != 4:
                raise GeometryError("generator matrix needs four entries")
            m = np.array(e).reshape(2, 2)
            gens.append(Isometry(m.real if n == 1 and not np.any(m.imag) else m, n))
        disks = [Disk(complex(*d["center"]), float(d["radius"])) for d in doc["disks"]]
    except (KeyError, TypeError) as exc:
        raise GeometryError(f"malformed group file: {exc}") from exc
    if "rank" in doc and int(doc["rank"]) != len(gens):
        raise GeometryError("rank does not match the number of generators")
    return SchottkyGroup(tuple(gens), tuple(disks), n, doc.get("name", ""))


def group_to_dict(group: SchottkyGroup) -> dict:
    def pair(z):
        return [float(np.real(z)), float(np.imag(z))]
    return {
        "name": group.name,
        "rank": group.rank,
        "ambient_n": group.ambient_n,
        "generators": [{"matrix": [pair(x) for x in g.matrix.ravel()]} for g in group.generators],
        "disks": [{"center": pair(d.center), "radius": d.radius} for d in group.disks],
    }


def load_group(path_or_name) -> SchottkyGroup:
    """Load a group file, or a bundled group by name (e.g. ``"pants_thin"``)."""
    if str(path_or_name) in BUNDLED:
        text = resources.files("wavetrace.data").joinpath(f"{path_or_name}.json").read_text()
    else:
        text = Path(path_or_name).read_text()
    return group_from_dict(json.loads(text))


def save_group(group: SchottkyGroup, path) -> None:
    Path(path).write_text(json.dumps(group_to_dict(group), indent=2) + "\n")


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("wavetrace.data").joinpath(f"{name}.json")))
