"""JSON instance and allocation files.

Both formats carry a ``version`` field.  Floats go through ``json`` at full
repr precision, so a write-then-read round trip is exact.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Union

from .allocation import Allocation
from .errors import DomainError
from .valuation import CakeInstance, from_peak_density, from_peak_slope

FORMAT_VERSION = 1
PathLike = Union[str, Path]


class FileFormatError(DomainError):
    """A file parsed as JSON but does not describe a valid object."""


def _check_version(doc: Any, what: str) -> None:
    if not isinstance(doc, dict):
        raise FileFormatError(f"{what} file must hold a JSON object")
    if doc.get("version") != FORMAT_VERSION:
        raise FileFormatError(f"unsupported {what} file version {doc.get('version')!r}")


def instance_from_dict(doc: dict, waste_tolerant: bool = False) -> CakeInstance:
    _check_version(doc, "instance")
    shared = doc.get("slope")
    agents_doc = doc.get("agents")
    if not isinstance(agents_doc, list) or not agents_doc:
        raise FileFormatError("instance file needs a non-empty 'agents' list")
    agents = []
    for idx, a in enumerate(agents_doc):
        if not isinstance(a, dict) or "peak" not in a:
            raise FileFormatError(f"agent {idx} needs a 'peak'")
        given = [key for key in ("peak_density", "slope") if key in a]
        if len(given) > 1:
            raise FileFormatError(f"agent {idx} gives both peak_density and slope")
        if given == ["peak_density"]:
            agents.append(from_peak_density(float(a["peak"]), float(a["peak_density"])))
        elif given == ["slope"]:
            agents.append(from_peak_slope(float(a["peak"]), float(a["slope"])))
        elif shared is not None:
            agents.append(from_peak_slope(float(a["peak"]), float(shared)))
        else:
            raise FileFormatError(f"agent {idx} needs peak_density or slope (or a shared slope)")
    tolerant = waste_tolerant or bool(doc.get("options", {}).get("waste_tolerant", False))
    return CakeInstance(tuple(agents), waste_tolerant=tolerant)


def instance_to_dict(instance: CakeInstance) -> dict:
    doc: dict[str, Any] = {"version": FORMAT_VERSION}
    slopes = {v.slope for v in instance.agents}
    if len(slopes) == 1:
        doc["slope"] = instance.agents[0].slope
        doc["agents"] = [{"peak": v.peak} for v in instance.agents]
    else:
        doc["agents"] = [{"peak": v.peak, "peak_density": v.peak_density} for v in instance.agents]
    doc["options"] = {"waste_tolerant": instance.waste_tolerant}
    return doc


def allocation_from_dict(doc: dict) -> Allocation:
    _check_version(doc, "allocation")
    pieces = doc.get("pieces")
    if not isinstance(pieces, list):
        raise FileFormatError("allocation file needs a 'pieces' list")
    try:
        return Allocation.from_lists(pieces)
    except (TypeError, ValueError) as exc:
        raise FileFormatError(f"bad allocation: {exc}") from exc


def allocation_to_dict(allocation: Allocation) -> dict:
    return {"version": FORMAT_VERSION, "pieces": allocation.to_lists()}


def _read_json(path: PathLike) -> Any:
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise FileFormatError(f"{path}: {exc}") from exc


def _write_json(path: PathLike, doc: dict) -> None:
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def read_instance(path: PathLike, waste_tolerant: bool = False) -> CakeInstance:
    return instance_from_dict(_read_json(path), waste_tolerant)


def write_instance(path: PathLike, instance: CakeInstance) -> None:
    _write_json(path, instance_to_dict(instance))


def read_allocation(path: PathLike) -> Allocation:
    return allocation_from_dict(_read_json(path))


def write_allocation(path: PathLike, allocation: Allocation) -> None:
    _write_json(path, allocation_to_dict(allocation))
