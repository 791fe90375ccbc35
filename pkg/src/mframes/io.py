"""JSON and binary serialization for lattices, cubature rules and frames.

Atom matrices use a small little-endian layout::

    bytes 0-3    magic b"MFRM"
    bytes 4-7    format version (uint32, currently 1)
    bytes 8-15   rows, cols (uint32 each)
    bytes 16-    rows * cols float64 values, row-major
"""
from __future__ import annotations

import json
import math
import struct
from pathlib import Path

import numpy as np

from .cubature import CubatureRule
from .errors import ConfigInvalid
from .filterbank import FilterBank
from .frames import FrameScale, FrameSet
from .lattice import Lattice
from .manifolds import get_manifold

SCHEMA_VERSION = 1
MATRIX_MAGIC = b"MFRM"
MATRIX_VERSION = 1
_HEADER = struct.Struct("<4sIII")


def _clean(obj):
    """Replace non-finite floats by None and numpy scalars by Python ones."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if math.isfinite(value) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, allow_nan=False)


def write_json(path, obj):
    Path(path).write_text(dumps(obj) + "\n")


def read_json(path):
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def _require(data, key, where):
    if key not in data:
        raise ConfigInvalid(f"{where}: missing field {key!r}")
    return data[key]


def lattice_to_json(lattice: Lattice) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "manifold": lattice.manifold.name,
        "rho": float(lattice.rho),
        "points": lattice.points.tolist(),
    }


def lattice_from_json(data, where="lattice") -> Lattice:
    man = get_manifold(_require(data, "manifold", where))
    points = np.asarray(_require(data, "points", where), dtype=float).reshape(-1, man.coord_dim)
    return Lattice(man, float(_require(data, "rho", where)), points)


def rule_to_json(rule: CubatureRule) -> dict:
    out = lattice_to_json(rule.lattice)
    out.update(weights=rule.weights.tolist(), omega=rule.omega, residual=rule.residual,
               solver=rule.solver)
    return out


def rule_from_json(data, where="rule") -> CubatureRule:
    lattice = lattice_from_json(data, where)
    weights = np.asarray(_require(data, "weights", where), dtype=float)
    if weights.shape != (len(lattice),):
        raise ConfigInvalid(f"{where}: {weights.size} weights for {len(lattice)} points")
    return CubatureRule(lattice, weights, float(_require(data, "omega", where)),
                        float(_require(data, "residual", where)), data.get("solver", "min-norm"))


def write_matrix(path, matrix: np.ndarray):
    matrix = np.ascontiguousarray(matrix, dtype="<f8")
    rows, cols = matrix.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MATRIX_MAGIC, MATRIX_VERSION, rows, cols))
        fh.write(matrix.tobytes(order="C"))


def read_matrix(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ConfigInvalid(f"{path}: truncated header")
    magic, version, rows, cols = _HEADER.unpack_from(raw)
    if magic != MATRIX_MAGIC:
        raise ConfigInvalid(f"{path}: bad magic {magic!r}")
    if version != MATRIX_VERSION:
        raise ConfigInvalid(f"{path}: unsupported matrix version {version}")
    expected = _HEADER.size + 8 * rows * cols
    if len(raw) != expected:
        raise ConfigInvalid(f"{path}: expected {expected} bytes, found {len(raw)}")
    return np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(rows, cols).astype(float)


def save_frame(frame: FrameSet, directory):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    scales = []
    for scale in frame.scales:
        rule_name = f"rule_{scale.j}.json"
        atoms_name = f"atoms_{scale.j}.bin"
        write_json(directory / rule_name, rule_to_json(scale.rule))
        write_matrix(directory / atoms_name, scale.atoms)
        scales.append({"j": scale.j, "band": scale.band, "count": scale.count,
                       "rule": rule_name, "atoms": atoms_name})
    write_json(directory / "manifest.json", {
        "schema_version": SCHEMA_VERSION,
        "manifold": frame.manifold.name,
        "a": frame.a,
        "j_max": frame.j_max,
        "tol": frame.tol,
        "seed": frame.seed,
        "band_rule": frame.band_rule,
        "filter": frame.bank.params(),
        "scales": scales,
    })


def load_frame(directory) -> FrameSet:
    directory = Path(directory)
    manifest = read_json(directory / "manifest.json")
    where = str(directory / "manifest.json")
    man = get_manifold(_require(manifest, "manifold", where))
    scales = []
    for entry in _require(manifest, "scales", where):
        rule = rule_from_json(read_json(directory / entry["rule"]), entry["rule"])
        atoms = read_matrix(directory / entry["atoms"])
        scales.append(FrameScale(int(entry["j"]), rule, float(entry["band"]), atoms))
    bank = FilterBank(int(_require(manifest, "j_max", where)))
    return FrameSet(man, bank, float(manifest["a"]), float(manifest["tol"]), int(manifest["seed"]),
                    scales, manifest.get("band_rule", "tight"))
