"""JSON map specs, report serialisation and run manifests."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .base import MapFamily
from .cantor import CantorMap, build_schedule
from .dense import DenseMap
from .folding import FoldingMap
from .maps import BallMap, RadialMap, profile_from_spec
from .regimes import RegimeParams

FAMILIES = ("radial", "ball", "folding", "cantor", "dense")


def map_from_spec(spec: dict) -> MapFamily:
    """Build a map from {"family": ..., "n": ..., "params": {...}}.

    Field names per family:
      radial  params.profile = {"kind": "power", "p", "c"}, params.side
      ball    params.q, params.a, params.beta (optional; window midpoint otherwise)
      folding params.q, params.a, params.alpha (optional; window midpoint otherwise)
      cantor  params.d, params.q, params.a, params.k
      dense   params.centers (list of points), params.radii
    """
    fam = spec.get("family")
    n = int(spec.get("n", 2))
    p = spec.get("params", {})
    strict = bool(spec.get("strict", True))
    if fam == "radial":
        return RadialMap(profile_from_spec(p.get("profile", {"kind": "power", "p": 1.0})), n, float(p.get("side", 1.0)))
    if fam == "ball":
        return BallMap(n, float(p["q"]), float(p["a"]), p.get("beta"), strict=strict)
    if fam == "folding":
        return FoldingMap(n, float(p["q"]), float(p["a"]), p.get("alpha"), strict=strict)
    if fam == "cantor":
        return CantorMap(build_schedule(RegimeParams(n, p["q"], p["a"], p["d"]), int(p["k"])))
    if fam == "dense":
        return DenseMap(np.asarray(p["centers"], dtype=float), np.asarray(p["radii"], dtype=float))
    raise ValueError(f"unknown map family {fam!r}; expected one of {FAMILIES}")


def map_to_spec(m: MapFamily) -> dict:
    spec = m.to_spec()
    if isinstance(m, CantorMap):
        spec = dict(spec, schedule=m.s.to_dict())
    return spec


def load_map(path) -> MapFamily:
    return map_from_spec(json.loads(Path(path).read_text()))


def _plain(obj):
    """Recursively convert numpy scalars/arrays and non-finite floats to JSON values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if x != x:
            return "NaN"
        if x in (float("inf"), float("-inf")):
            return "Infinity" if x > 0 else "-Infinity"
        return x
    return obj


def dumps(obj) -> str:
    """JSON text; floats use Python's shortest round-trip representation."""
    return json.dumps(_plain(obj), indent=2, sort_keys=True)


def digest(spec: dict) -> str:
    return hashlib.sha256(json.dumps(_plain(spec), sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj) + "\n")
