"""Flat tables for distance fields and gain matrices.

CSV layout (one row per node, array, candidate)::

    node_id,array_id,candidate_id,distance_m,reachable
    node_id,array_id,candidate_id,gain_linear,gain_db,reachable

Binary layout: headerless records of five little-endian float64 values
``(node_id, array_id, candidate_id, value, reachable)`` where ``value`` is
the distance in meters or the linear gain and ``reachable`` is 0 or 1.
Unreachable distances are written as ``inf``, unreachable gains as 0.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .pathgraph import DistanceField, freeze_field
from .propagation import GainMatrix, make_gain_matrix, to_db

RECORD = np.dtype("<f8")


def _records(values, reachable, candidates, nodes, fill):
    nodes = np.asarray(nodes, dtype=np.int64)
    parts = []
    for t, cands in enumerate(candidates):
        for l in range(len(cands)):
            reach = reachable[nodes, t, l]
            vals = np.where(reach, values[nodes, t, l], fill)
            parts.append(
                np.column_stack(
                    [nodes, np.full(len(nodes), t), np.full(len(nodes), l), vals, reach]
                ).astype(np.float64)
            )
    rec = np.concatenate(parts) if parts else np.empty((0, 5))
    order = np.lexsort((rec[:, 2], rec[:, 1], rec[:, 0]))
    return rec[order]


def write_binary(path, rec: np.ndarray) -> Path:
    path = Path(path)
    path.write_bytes(np.ascontiguousarray(rec, dtype=RECORD).tobytes())
    return path


def read_binary(path, width: int = 5) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) % (width * RECORD.itemsize):
        raise ValueError(f"{path}: size is not a whole number of {width}-value records")
    return np.frombuffer(data, dtype=RECORD).reshape(-1, width)


def write_distance_table(field: DistanceField, nodes, csv_path, bin_path=None):
    rec = _records(field.values, field.reachable, field.candidates, nodes, np.inf)
    with Path(csv_path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node_id", "array_id", "candidate_id", "distance_m", "reachable"])
        for n, t, l, d, r in rec.tolist():
            w.writerow([int(n), int(t), int(l), repr(d), int(r)])
    if bin_path is not None:
        write_binary(bin_path, rec)
    return rec


def write_gain_table(gain: GainMatrix, candidates, nodes, csv_path, bin_path=None):
    rec = _records(gain.beta, gain.reachable, candidates, nodes, 0.0)
    db = to_db(rec[:, 3])
    with Path(csv_path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node_id", "array_id", "candidate_id", "gain_linear", "gain_db", "reachable"])
        for (n, t, l, g, r), g_db in zip(rec.tolist(), db.tolist()):
            w.writerow([int(n), int(t), int(l), repr(g), repr(g_db), int(r)])
    if bin_path is not None:
        write_binary(bin_path, rec)
    return rec


def _read_csv_records(path, value_column: str) -> np.ndarray:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        need = {"node_id", "array_id", "candidate_id", value_column, "reachable"}
        if reader.fieldnames is None or not need <= set(reader.fieldnames):
            raise ValueError(f"{path}: expected columns {sorted(need)}")
        rows = [
            [float(r["node_id"]), float(r["array_id"]), float(r["candidate_id"]),
             float(r[value_column]), float(r["reachable"])]
            for r in reader
        ]
    return np.array(rows, dtype=np.float64).reshape(-1, 5)


def read_records(path, value_column: str) -> np.ndarray:
    path = Path(path)
    if path.suffix == ".bin":
        return read_binary(path)
    return _read_csv_records(path, value_column)


def _scatter(rec, shape, fill):
    values = np.full(shape, fill, dtype=np.float64)
    reachable = np.zeros(shape, dtype=bool)
    n, t, l = (rec[:, k].astype(np.int64) for k in range(3))
    values[n, t, l] = rec[:, 3]
    reachable[n, t, l] = rec[:, 4] > 0
    return values, reachable


def read_distance_table(path, candidates, n_nodes: int, model: str = "table") -> DistanceField:
    rec = read_records(path, "distance_m")
    lmax = max(len(c) for c in candidates)
    values, reachable = _scatter(rec, (n_nodes, len(candidates), lmax), np.inf)
    return freeze_field(model, candidates, values, reachable)


def read_gain_table(path, shape, tag: str = "table") -> GainMatrix:
    rec = read_records(path, "gain_linear")
    beta, reachable = _scatter(rec, shape, 0.0)
    return make_gain_matrix(beta, reachable, tag)
