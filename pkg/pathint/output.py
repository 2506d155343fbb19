"""
JSON and CSV writers with run manifests.

Documents are {"manifest": ..., "result": ...}. The manifest carries the
fully resolved config and its sha256 so that every artifact can be re-run;
nothing time-dependent is written, so identical invocations produce
identical bytes.
"""

import csv
import dataclasses
import enum
import hashlib
import io
import json
import logging
import math
from collections.abc import Mapping, Sequence
from pathlib import Path
from typing import Any, TextIO

import numpy as np
import sympy

from . import __version__

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1"


def round_significant(value: float, digits: int) -> float:
    """value rounded to digits significant figures."""
    if value == 0.0 or not math.isfinite(value):
        return value
    return float(f"{value:.{digits - 1}e}")


def to_jsonable(obj: Any, precision: int | None = None) -> Any:
    """
    Recursively convert results to JSON-compatible values.

    Complex numbers become {"re", "im"}, non-finite floats None, numpy
    values plain Python, dataclasses dicts and sympy expressions strings.
    """
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, enum.Enum):
        return to_jsonable(obj.value, precision)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if not math.isfinite(value):
            return None
        return round_significant(value, precision) if precision else value
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": to_jsonable(obj.real, precision), "im": to_jsonable(obj.imag, precision)}
    if isinstance(obj, sympy.Basic):
        return str(obj)
    if isinstance(obj, np.ndarray):
        return [to_jsonable(x, precision) for x in obj.tolist()]
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {
            f.name: to_jsonable(getattr(obj, f.name), precision)
            for f in dataclasses.fields(obj)
            if f.repr
        }
    if isinstance(obj, Mapping):
        return {str(k): to_jsonable(v, precision) for k, v in obj.items()}
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = sorted(obj) if isinstance(obj, (set, frozenset)) else obj
        return [to_jsonable(x, precision) for x in items]
    raise TypeError(f"Cannot serialize {type(obj).__name__}")


def canonical_json(obj: Any) -> str:
    """Sorted-key, whitespace-free JSON used for hashing."""
    return json.dumps(to_jsonable(obj), sort_keys=True, separators=(",", ":"))


def config_hash(config: Mapping[str, Any]) -> str:
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


def build_manifest(
    subcommand: str, config: Mapping[str, Any], seed: int | None = None, **extra: Any
) -> dict[str, Any]:
    """The manifest block of every output document."""
    manifest: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "version": __version__,
        "subcommand": subcommand,
        "config": dict(config),
        "config_hash": config_hash(config),
    }
    if seed is not None:
        manifest["seed"] = seed
    manifest.update(extra)
    return manifest


def render_json(document: Mapping[str, Any], precision: int | None = None) -> str:
    return json.dumps(to_jsonable(document, precision), indent=2, allow_nan=False) + "\n"


def render_csv(
    rows: Sequence[Mapping[str, Any]], columns: Sequence[str], precision: int | None = None
) -> str:
    """One header line and one line per row; None and non-finite values are empty."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        cells = []
        for column in columns:
            value = to_jsonable(row.get(column), precision)
            if isinstance(value, dict):
                re_part, im_part = value["re"], value["im"]
                value = None if re_part is None or im_part is None else complex(re_part, im_part)
            cells.append("" if value is None else value)
        writer.writerow(cells)
    return buffer.getvalue()


def emit(text: str, path: Path | None, stream: TextIO) -> None:
    """Write text to path (creating parent directories) or to stream."""
    if path is None:
        stream.write(text)
        stream.flush()
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    logger.info("Wrote %s", path)


def sidecar_path(path: Path) -> Path:
    """<output>.manifest.json next to a CSV file."""
    return path.with_name(path.name + ".manifest.json")
