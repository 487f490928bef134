"""Free-space channel gains from effective distances, the Euclidean
baseline distance model, and averaging of externally simulated channel
coefficients into per-location gains."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .pathgraph import DistanceField, empty_field_arrays, freeze_field

SPEED_OF_LIGHT = 299_792_458.0

MODELS = ("euclidean", "shortest_path", "shortest_path_angular")


def dbm_to_watt(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


def watt_to_dbm(watt):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(np.asarray(watt, dtype=float)) + 30.0


def to_db(x):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class RadioConfig:
    carrier_frequency: float = 3.5e9
    antennas_per_array: int = 16
    p_r_dbm: float = -94.0
    d_min: float = 1.0

    def __post_init__(self):
        if not self.carrier_frequency > 0:
            raise ValueError("carrier frequency must be positive")
        if int(self.antennas_per_array) != self.antennas_per_array or self.antennas_per_array < 1:
            raise ValueError("antennas per array must be a positive integer")
        if not self.d_min > 0:
            raise ValueError("d_min must be positive")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_frequency

    @property
    def g_t(self) -> float:
        return float(self.antennas_per_array)

    @property
    def g_r(self) -> float:
        return 1.0

    @property
    def p_r(self) -> float:
        """Minimum received power in watts."""
        return float(dbm_to_watt(self.p_r_dbm))


@dataclass(frozen=True, eq=False)
class GainMatrix:
    """Channel gain ``beta[i, t, l]``; entries with ``reachable`` False are
    zero and ignored by every consumer."""

    beta: np.ndarray
    reachable: np.ndarray
    tag: str

    @property
    def n_nodes(self) -> int:
        return self.beta.shape[0]

    @property
    def n_arrays(self) -> int:
        return self.beta.shape[1]

    def scaled(self, factor: float) -> "GainMatrix":
        beta = self.beta * factor
        beta.setflags(write=False)
        return GainMatrix(beta=beta, reachable=self.reachable, tag=self.tag)


def make_gain_matrix(beta, reachable, tag) -> GainMatrix:
    beta = np.where(reachable, beta, 0.0)
    if np.any(beta[reachable] <= 0) or not np.all(np.isfinite(beta)):
        raise ValueError("reachable gains must be positive and finite")
    beta.setflags(write=False)
    reachable = np.array(reachable, dtype=bool)
    reachable.setflags(write=False)
    return GainMatrix(beta=beta, reachable=reachable, tag=tag)


def free_space_gain(d, cfg: RadioConfig):
    """G_T G_R lambda^2 / (16 pi^2 d^2), with d clamped below at d_min."""
    d = np.maximum(np.asarray(d, dtype=float), cfg.d_min)
    return cfg.g_t * cfg.g_r * cfg.wavelength**2 / (16.0 * math.pi**2 * d**2)


def gains_from_distances(field: DistanceField, cfg: RadioConfig) -> GainMatrix:
    d = np.where(field.reachable, field.values, 1.0)
    beta = np.where(field.reachable, free_space_gain(d, cfg), 0.0)
    return make_gain_matrix(beta, field.reachable, field.model)


def euclidean_distance_field(grid, candidates) -> DistanceField:
    """Plan distance between every lattice node and every candidate."""
    values, reachable = empty_field_arrays(grid.n_nodes, candidates)
    xy = grid.xy
    for t, cands in enumerate(candidates):
        for l, node in enumerate(cands):
            delta = xy - xy[int(node)]
            # same expression the path search uses for straight diagonals
            values[:, t, l] = np.sqrt(delta[:, 0] * delta[:, 0] + delta[:, 1] * delta[:, 1])
            reachable[:, t, l] = True
    return freeze_field("euclidean", candidates, values, reachable)


class MalformedChannelDump(ValueError):
    pass


DUMP_COLUMNS = ("user_id", "array_id", "antenna_index", "candidate_id", "subcarrier_index", "re", "im")


def read_channel_dump(path) -> np.ndarray:
    """Load a channel dump CSV into an (n, 7) float array in column order."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise MalformedChannelDump(f"{path} is empty") from None
        missing = [c for c in DUMP_COLUMNS if c not in header]
        if missing:
            raise MalformedChannelDump(f"{path} lacks columns {missing}")
        pos = [header.index(c) for c in DUMP_COLUMNS]
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                rows.append([float(row[p]) for p in pos])
            except (ValueError, IndexError) as exc:
                raise MalformedChannelDump(f"{path}:{lineno}: {exc}") from exc
    return np.array(rows, dtype=float).reshape(-1, 7)


def aggregate_channel_gains(dump, n_subcarriers: int, n_antennas: int, shape=None) -> GainMatrix:
    """Average received power over subcarriers, summed over the array's
    antennas: beta = sum_f sum_m |h|^2 / |F|.

    ``dump`` is a path or an (n, 7) array with the channel-dump columns.
    ``shape`` = (n_nodes, n_arrays, n_candidates) fixes the output size;
    by default it is inferred from the largest ids.  Any (i, t, l) not in
    the dump is unreachable.
    """
    rec = read_channel_dump(dump) if isinstance(dump, (str, Path)) else np.asarray(dump, float)
    if rec.ndim != 2 or rec.shape[1] != 7:
        raise MalformedChannelDump("channel dump must have 7 columns")
    ids = rec[:, :5]
    if rec.size and (np.any(ids < 0) or np.any(ids != np.round(ids))):
        raise MalformedChannelDump("ids must be non-negative integers")
    ids = ids.astype(np.int64)
    user, arr, ant, cand, sub = ids.T
    if np.any(ant >= n_antennas):
        raise MalformedChannelDump(f"antenna index outside 0..{n_antennas - 1}")
    if np.any(sub >= n_subcarriers):
        raise MalformedChannelDump(f"subcarrier index outside 0..{n_subcarriers - 1}")
    if shape is None:
        shape = tuple(int(c.max()) + 1 if c.size else 0 for c in (user, arr, cand))
    n_nodes, n_arrays, n_cands = shape
    if rec.size and (user.max() >= n_nodes or arr.max() >= n_arrays or cand.max() >= n_cands):
        raise MalformedChannelDump("dump ids exceed the requested shape")

    key = (user * n_arrays + arr) * n_cands + cand
    sample = (key * n_antennas + ant) * n_subcarriers + sub
    if np.unique(sample).size != sample.size:
        raise MalformedChannelDump("duplicate (user, array, antenna, candidate, subcarrier) record")
    size = n_nodes * n_arrays * n_cands
    counts = np.bincount(key, minlength=size)
    present = counts > 0
    if np.any(counts[present] != n_antennas * n_subcarriers):
        raise MalformedChannelDump(
            "inconsistent antenna or subcarrier count: every covered (user, array, candidate) "
            f"needs {n_antennas} x {n_subcarriers} records"
        )
    power = rec[:, 5] ** 2 + rec[:, 6] ** 2
    beta = np.bincount(key, weights=power, minlength=size) / n_subcarriers
    reachable = present & (beta > 0)
    return make_gain_matrix(
        beta.reshape(shape), reachable.reshape(shape), "aggregated-coefficients"
    )
