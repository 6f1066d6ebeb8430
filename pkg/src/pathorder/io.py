"""JSON/CSV/SVG serialisation with byte-stable output."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from typing import Any

import jsonschema
import numpy as np

from pathorder.ensemble import Path, PathDistribution, PathEnsemble

__all__ = [
    "PATH_DISTRIBUTION_SCHEMA",
    "PATH_ENSEMBLE_SCHEMA",
    "THERMO_ACCOUNT_SCHEMA",
    "canonical_hash",
    "distribution_from_dict",
    "distribution_to_dict",
    "dumps",
    "ensemble_from_dict",
    "ensemble_to_dict",
    "paths_csv",
    "probability_svg",
]

_number = {"type": "number"}
_number_or_special = {"oneOf": [{"type": "number"}, {"enum": ["inf", "-inf", "nan"]}]}
_signature = {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1}

PATH_ENSEMBLE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "PathEnsemble",
    "type": "object",
    "required": ["labels", "counts", "travel_times", "actions", "total", "unresolved", "metadata"],
    "properties": {
        "labels": {"type": "array", "items": _signature},
        "counts": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "travel_times": {"type": "array", "items": _number},
        "actions": {"type": "array", "items": _number_or_special},
        "total": {"type": "integer", "minimum": 1},
        "unresolved": {"type": "integer", "minimum": 0},
        "metadata": {"type": "object"},
    },
}

PATH_DISTRIBUTION_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "PathDistribution",
    "type": "object",
    "required": ["probabilities"],
    "properties": {
        "labels": {"type": "array"},
        "probabilities": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0,
                                                     "maximum": 1}, "minItems": 1},
        "actions": {"type": "array", "items": _number_or_special},
        "metadata": {"type": "object"},
    },
}

THERMO_ACCOUNT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "ThermoAccount",
    "type": "object",
    "required": ["T_r", "T_a"],
    "additionalProperties": False,
    "properties": {
        "Q_r": _number,
        "T_r": {"type": "number", "exclusiveMinimum": 0},
        "T_a": {"type": "number", "exclusiveMinimum": 0},
        "dH": _number,
        "dS_ex": _number,
        "dE_k": _number,
        "dE_g": _number,
        "W": _number,
    },
}


def _float_token(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def _encode(obj: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)) and not isinstance(obj, bool):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _float_token(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=True)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(obj[k], indent, level + 1)}"
                 for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, set, frozenset)):
        seq = sorted(obj) if isinstance(obj, (set, frozenset)) else list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in seq) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if hasattr(obj, "value"):  # enums
        return _encode(obj.value, indent, level)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj: Any, indent: int = 2) -> str:
    """Serialise with sorted keys and every float at 17 significant digits.

    Non-finite floats become the strings ``"inf"``, ``"-inf"``, ``"nan"``.
    """
    return _encode(obj, indent, 0) + "\n"


def _special_float(v) -> float:
    # float() already parses "inf", "-inf" and "nan"
    return float(v)


def canonical_hash(obj: Any) -> str:
    return hashlib.sha256(dumps(obj, indent=0).encode()).hexdigest()


def ensemble_to_dict(ens: PathEnsemble) -> dict:
    return {
        "labels": [list(p.signature) for p in ens.paths],
        "counts": list(ens.counts),
        "travel_times": [p.travel_time for p in ens.paths],
        "actions": [p.action for p in ens.paths],
        "total": ens.total,
        "unresolved": ens.unresolved,
        "metadata": dict(ens.metadata),
    }


def ensemble_from_dict(data: dict) -> PathEnsemble:
    jsonschema.validate(data, PATH_ENSEMBLE_SCHEMA)
    paths = [Path(tuple(sig), float(t), _special_float(a))
             for sig, t, a in zip(data["labels"], data["travel_times"], data["actions"])]
    return PathEnsemble(paths, [int(c) for c in data["counts"]], int(data["total"]),
                        int(data["unresolved"]), dict(data.get("metadata", {})))


def distribution_to_dict(dist: PathDistribution, metadata: dict | None = None) -> dict:
    out = {
        "labels": [list(lab) if isinstance(lab, tuple) else lab for lab in dist.labels],
        "probabilities": dist.probabilities,
        "actions": dist.actions,
    }
    if metadata:
        out["metadata"] = metadata
    return out


def distribution_from_dict(data: dict) -> PathDistribution:
    jsonschema.validate(data, PATH_DISTRIBUTION_SCHEMA)
    p = data["probabilities"]
    actions = [_special_float(a) for a in data.get("actions", [0.0] * len(p))]
    labels = tuple(tuple(lab) if isinstance(lab, list) else lab for lab in data.get("labels", ()))
    return PathDistribution(p, actions, labels)


def paths_csv(ens: PathEnsemble) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["rank", "signature", "count", "probability", "travel_time", "action"])
    resolved = ens.resolved
    for k, (path, count) in enumerate(zip(ens.paths, ens.counts)):
        prob = count / resolved if resolved else 0.0
        writer.writerow([k, "-".join(map(str, path.signature)), count, format(prob, ".17g"),
                         format(path.travel_time, ".17g"), format(path.action, ".17g")])
    return buf.getvalue()


def probability_svg(probabilities, width: int = 640, height: int = 320, max_bars: int = 50) -> str:
    """Bar chart of path probabilities, largest first."""
    p = np.sort(np.asarray(probabilities, dtype=np.float64))[::-1][:max_bars]
    margin = 40
    inner_w, inner_h = width - 2 * margin, height - 2 * margin
    bar_w = inner_w / max(len(p), 1)
    top = float(p.max()) if p.size else 1.0
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="black"/>',
        f'<text x="{margin}" y="{margin - 10}" font-size="12">max p = {top:.4g}</text>',
        f'<text x="{width // 2}" y="{height - 10}" font-size="12" text-anchor="middle">'
        f'path rank</text>',
    ]
    for k, v in enumerate(p):
        h = inner_h * float(v) / top
        x = margin + k * bar_w
        y = height - margin - h
        parts.append(f'<rect x="{x:.3f}" y="{y:.3f}" width="{0.9 * bar_w:.3f}" '
                     f'height="{h:.3f}" fill="steelblue"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
