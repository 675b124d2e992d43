"""JSON I/O for metric spaces, relations, trees and certificates.

Every document written carries ``"schema": "dsmetric/1"``. Floats are
rounded to 12 significant digits on output, except input data
(coordinates, given distance matrices), which round-trips exactly. A relation's ``space`` may be an
inline object or a path (resolved relative to the referring file).
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from . import errors
from .cantor import CantorTree, tree_from_nested
from .metric import FiniteMetricSpace, validate_metric
from .relation import DynamicalRelation, validate_relation

SCHEMA = "dsmetric/1"
SIG_DIGITS = 12


def round_sig(x: float) -> float:
    x = float(x)
    if not math.isfinite(x) or x == 0.0:
        return x + 0.0     # maps -0.0 to 0.0
    return float(f"{x:.{SIG_DIGITS}g}")


def fmt(x: float) -> str:
    """Human form of a distance, e.g. ``1.0``."""
    return repr(round_sig(x))


class Verbatim(list):
    """Input data (coordinates, given distances) that is written back at full precision."""


def verbatim(arr) -> Verbatim:
    return Verbatim(np.asarray(arr, dtype=float).tolist())


def to_plain(obj: Any) -> Any:
    """Recursively convert numpy values and tuples into JSON-ready data with rounded floats."""
    if isinstance(obj, Verbatim):
        return list(obj)
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return round_sig(obj)
    return obj


def dumps(doc: dict) -> str:
    body = {"schema": SCHEMA, **doc}
    return json.dumps(to_plain(body), sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def write(doc: dict, path) -> None:
    Path(path).write_text(dumps(doc), encoding="utf-8")


def read(path) -> dict:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise errors.SchemaError(f"cannot read {p}: {exc.strerror}", str(p)) from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise errors.SchemaError(f"invalid JSON ({exc.msg} at line {exc.lineno})", str(p)) from None
    _check_tag(doc, str(p))
    return doc


def _check_tag(doc, where):
    if isinstance(doc, dict) and "schema" in doc and doc["schema"] != SCHEMA:
        raise errors.SchemaError(f"unsupported schema tag {doc['schema']!r}", f"{where}.schema")


def require(obj, key, where):
    if not isinstance(obj, dict):
        raise errors.SchemaError("expected an object", where)
    if key not in obj:
        raise errors.SchemaError(f"missing field {key!r}", f"{where}.{key}")
    return obj[key]


def _array(value, where, ndim):
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise errors.SchemaError("expected numbers", where) from None
    if arr.ndim == 1 and ndim == 2:
        arr = arr[:, None]
    if arr.ndim != ndim:
        raise errors.SchemaError(f"expected a {ndim}-dimensional array", where)
    return arr


# metric spaces ---------------------------------------------------------
def space_from_json(obj, where: str = "$", base: Path | None = None) -> FiniteMetricSpace:
    if isinstance(obj, str):
        ref = Path(obj) if base is None else base / obj
        return space_from_json(read(ref), str(ref), ref.parent)
    kind = require(obj, "kind", where)
    labels = obj.get("labels")
    if kind == "matrix":
        m = require(obj, "dist", where)
        if not isinstance(m, list):
            raise errors.SchemaError("expected a list of rows", f"{where}.dist")
        return validate_metric(m, labels=labels)
    if kind == "euclidean":
        pts = _array(require(obj, "points", where), f"{where}.points", 2)
        return FiniteMetricSpace.euclidean(pts, labels=labels)
    if kind == "torus":
        pts = _array(require(obj, "points", where), f"{where}.points", 2)
        per = _array(require(obj, "periods", where), f"{where}.periods", 1)
        return FiniteMetricSpace.torus(pts, per, labels=labels)
    raise errors.SchemaError(f"unknown metric-space kind {kind!r}", f"{where}.kind")


def space_to_json(space: FiniteMetricSpace) -> dict:
    if space.kind == "euclidean" and space.coords is not None:
        out = {"kind": "euclidean", "points": verbatim(space.coords)}
    elif space.kind == "torus":
        out = {"kind": "torus", "points": verbatim(space.coords), "periods": verbatim(space.periods)}
    else:
        out = {"kind": "matrix", "dist": verbatim(space.dist)}
    if space.labels is not None:
        out["labels"] = list(space.labels)
    return out


def is_relation_doc(doc) -> bool:
    return isinstance(doc, dict) and ("pairs" in doc or "space" in doc)


# relations ---------------------------------------------------------------
def relation_from_json(obj, where: str = "$", base: Path | None = None) -> DynamicalRelation:
    space = space_from_json(require(obj, "space", where), f"{where}.space", base)
    pairs = require(obj, "pairs", where)
    if not isinstance(pairs, list) or any(not isinstance(p, list) or len(p) != 2 for p in pairs):
        raise errors.SchemaError("expected a list of [i, j] pairs", f"{where}.pairs")
    if any(not isinstance(v, int) or isinstance(v, bool) for p in pairs for v in p):
        raise errors.SchemaError("indices must be integers", f"{where}.pairs")
    return validate_relation(space, pairs)


def relation_to_json(f: DynamicalRelation) -> dict:
    return {"space": space_to_json(f.space), "pairs": f.pairs}


def load_relation(path) -> DynamicalRelation:
    p = Path(path)
    return relation_from_json(read(p), str(p), p.parent)


def load_space(path) -> FiniteMetricSpace:
    p = Path(path)
    return space_from_json(read(p), str(p), p.parent)


# trees -------------------------------------------------------------------
def _check_node(node, where):
    require(node, "rep", where)
    kids = node.get("children") or []
    if not isinstance(kids, list):
        raise errors.SchemaError("expected a list", f"{where}.children")
    for i, k in enumerate(kids):
        _check_node(k, f"{where}.children[{i}]")


def tree_from_json(obj, where: str = "$") -> CantorTree:
    root = obj.get("tree", obj) if isinstance(obj, dict) else obj
    _check_node(root, where)
    metric = obj.get("metric", "euclidean") if isinstance(obj, dict) else "euclidean"
    return tree_from_nested(root, metric)


def tree_to_json(T: CantorTree) -> dict:
    return {"metric": T.metric, "tree": T.to_nested()}


def load_tree(path) -> CantorTree:
    return tree_from_json(read(path), str(path))
