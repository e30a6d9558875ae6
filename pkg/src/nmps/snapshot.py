"""Pre-training snapshots and their on-disk format.

A snapshot file is a JSON document::

    {
      "format": "nmps-snapshot",
      "version": 1,
      "metadata": {...},                       # variant, rho, seed, step, config
      "feature_map": {"trainable": ..., "learning_rate": ..., "nonlinearity": ...,
                      "weights": ARRAY} | null,
      "successor": {"gamma": ..., "learning_rate": ..., "tabular": ...,
                    "psi": ARRAY} | null,
      "extras": {"<name>": ARRAY, ...}
    }

where ``ARRAY`` is ``{"dtype": "float64", "shape": [...], "data": "<numbers>"}``
with the flattened (C-order) values written as ``%.17g`` and separated by
single spaces. Seventeen significant digits make the float64 round trip exact.
Keys are written in the fixed order above.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .features import FeatureMap
from .sf_agent import SuccessorTable

__all__ = ["FORMAT_VERSION", "Snapshot", "dumps", "load", "loads", "save"]

FORMAT_VERSION = 1


@dataclass
class Snapshot:
    feature_map: FeatureMap | None
    successor: SuccessorTable | None
    metadata: dict = field(default_factory=dict)
    extras: dict[str, np.ndarray] = field(default_factory=dict)
    version: int = FORMAT_VERSION

    def equals(self, other: "Snapshot") -> bool:
        """Bit-exact comparison of every array and all metadata."""
        return dumps(self) == dumps(other)


def _array(a) -> dict:
    a = np.asarray(a, dtype=float)
    return {"dtype": "float64", "shape": list(a.shape),
            "data": " ".join("%.17g" % v for v in a.ravel())}


def _unarray(d) -> np.ndarray:
    data = d["data"].split()
    return np.array([float(v) for v in data], dtype=np.float64).reshape(d["shape"])


def dumps(snap: Snapshot) -> str:
    doc = {"format": "nmps-snapshot", "version": snap.version, "metadata": snap.metadata}
    fm = snap.feature_map
    doc["feature_map"] = None if fm is None else {
        "trainable": fm.trainable, "learning_rate": fm.learning_rate,
        "nonlinearity": fm.nonlinearity, "weights": _array(fm.weights)}
    sf = snap.successor
    doc["successor"] = None if sf is None else {
        "gamma": sf.gamma, "learning_rate": sf.learning_rate, "tabular": sf.tabular,
        "psi": _array(sf.psi)}
    doc["extras"] = {k: _array(v) for k, v in snap.extras.items()}
    return json.dumps(doc, indent=1)


def loads(text: str) -> Snapshot:
    doc = json.loads(text)
    if doc.get("format") != "nmps-snapshot":
        raise ValueError("not an nmps snapshot")
    if doc.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported snapshot version {doc.get('version')}")
    fm = doc["feature_map"]
    fmap = None if fm is None else FeatureMap(_unarray(fm["weights"]), fm["trainable"],
                                                fm["learning_rate"], fm["nonlinearity"])
    sd = doc["successor"]
    table = None
    if sd is not None:
        psi = _unarray(sd["psi"])
        rows = psi.shape[0] if sd["tabular"] else psi.shape[0] - 1
        table = SuccessorTable(rows, psi.shape[1], psi.shape[2], sd["gamma"],
                               sd["learning_rate"], sd["tabular"], psi)
    extras = {k: _unarray(v) for k, v in doc["extras"].items()}
    return Snapshot(fmap, table, doc["metadata"], extras, doc["version"])


def save(snap: Snapshot, path) -> Path:
    path = Path(path)
    path.write_text(dumps(snap))
    return path


def load(path) -> Snapshot:
    return loads(Path(path).read_text())
