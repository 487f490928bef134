"""Transmit-power-minimizing array placement.

For a fixed placement the best power is an order statistic: with combined
gains ``g_i = sum_t beta[i, t, l_t]`` (summed in ascending order) and ``K = ceil(V_S |R|)`` users to
serve, ``p_T = P_R / g_(K)`` where ``g_(K)`` is the K-th largest gain.  The
placement problem is therefore solved exactly by scanning every tuple of
candidates.  The equivalent big-M mixed-integer model can be written out
in LP format for an external solver.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .propagation import GainMatrix, watt_to_dbm

DEFAULT_LEVELS = tuple(round(1.0 - k / 100, 2) for k in range(11))


class InfeasiblePlacement(ValueError):
    pass


def required_count(coverage: float, n_users: int) -> int:
    """ceil(V_S * |R|), robust to the float product landing a hair above an
    integer (0.07 * 100 = 7.000000000000001)."""
    return max(1, math.ceil(coverage * n_users - 1e-9 * max(n_users, 1)))


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    gain: GainMatrix
    users: np.ndarray
    candidates: tuple[tuple[int, ...], ...]
    coverage: float
    p_r: float

    def __post_init__(self):
        users = np.array(sorted(int(i) for i in self.users), dtype=np.int64)
        users.setflags(write=False)
        object.__setattr__(self, "users", users)
        object.__setattr__(
            self, "candidates", tuple(tuple(int(n) for n in c) for c in self.candidates)
        )
        if len(users) == 0:
            raise ValueError("evaluation set is empty")
        if len(set(users.tolist())) != len(users):
            raise ValueError("evaluation set has duplicate nodes")
        if not 0 < self.coverage <= 1:
            raise ValueError("coverage level must lie in (0, 1]")
        if not self.p_r > 0:
            raise ValueError("minimum received power must be positive")
        if len(self.candidates) != self.gain.n_arrays:
            raise ValueError("one candidate list per array is required")
        for t, c in enumerate(self.candidates):
            if not c:
                raise ValueError(f"array {t} has no candidate locations")
            if len(c) > self.gain.beta.shape[2]:
                raise ValueError(f"array {t} has more candidates than the gain matrix")

    @property
    def n_arrays(self) -> int:
        return len(self.candidates)

    @property
    def k(self) -> int:
        return required_count(self.coverage, len(self.users))

    def with_coverage(self, coverage: float) -> "ProblemInstance":
        return ProblemInstance(self.gain, self.users, self.candidates, coverage, self.p_r)

    def with_gain(self, gain: GainMatrix) -> "ProblemInstance":
        return ProblemInstance(gain, self.users, self.candidates, self.coverage, self.p_r)

    def user_gains(self) -> list[np.ndarray]:
        """Per array, an (|R|, |L_t|) block of gains with unreachable
        entries zeroed."""
        beta = np.where(self.gain.reachable, self.gain.beta, 0.0)[self.users]
        return [beta[:, t, : len(c)] for t, c in enumerate(self.candidates)]


@dataclass(frozen=True)
class PlacementSolution:
    placement: tuple[int, ...]
    nodes: tuple[int, ...]
    p_T: float
    y: float
    covered: tuple[int, ...]
    coverage: float

    @property
    def p_T_dbm(self) -> float:
        return float(watt_to_dbm(self.p_T))


def sum_ascending(parts: np.ndarray) -> np.ndarray:
    """Sum along the last axis after sorting it, adding left to right.

    The result depends only on the multiset of terms, so placements that
    give a user the same gains in a different array order tie exactly.
    """
    parts = np.sort(parts, axis=-1)
    total = parts[..., 0].copy()
    for k in range(1, parts.shape[-1]):
        total += parts[..., k]
    return total


def _insert_and_sum(prefix, blocks, last: np.ndarray) -> np.ndarray:
    """``sum_ascending`` of the prefix gains plus each column of ``last``,
    without a full sort: the prefix is sorted once per user and each new
    term is merged in with min/max, which selects the same values."""
    if not prefix:
        return last.copy()
    p = np.sort(np.stack([blocks[t][:, l] for t, l in enumerate(prefix)], axis=-1), axis=-1)
    p = p[:, None, :]
    d = last
    total = np.minimum(p[..., 0], d)
    for k in range(1, p.shape[-1]):
        total += np.minimum(p[..., k], np.maximum(p[..., k - 1], d))
    total += np.maximum(p[..., -1], d)
    return total


def combined_gain(inst: ProblemInstance, placement) -> np.ndarray:
    blocks = inst.user_gains()
    return sum_ascending(np.stack([blocks[t][:, l] for t, l in enumerate(placement)], axis=-1))


def evaluate_placement(inst: ProblemInstance, placement) -> PlacementSolution:
    placement = tuple(int(l) for l in placement)
    if len(placement) != inst.n_arrays:
        raise ValueError("placement must pick one candidate per array")
    for t, l in enumerate(placement):
        if not 0 <= l < len(inst.candidates[t]):
            raise ValueError(f"candidate {l} out of range for array {t}")
    g = combined_gain(inst, placement)
    k = inst.k
    order = np.argsort(-g, kind="stable")
    y = float(g[order[k - 1]])
    if not y > 0:
        raise InfeasiblePlacement(
            f"infeasible placement: fewer than {k} users receive any signal"
        )
    covered = tuple(sorted(int(inst.users[j]) for j in order[:k]))
    return PlacementSolution(
        placement=placement,
        nodes=tuple(inst.candidates[t][l] for t, l in enumerate(placement)),
        p_T=inst.p_r / y,
        y=y,
        covered=covered,
        coverage=inst.coverage,
    )


def n_tuples(inst: ProblemInstance) -> int:
    return math.prod(len(c) for c in inst.candidates)


def _best_tuples(inst: ProblemInstance, ks: list[int]) -> list[tuple | None]:
    """Best tuple for each required count in ``ks`` from one pass over all
    tuples; ties go to the lexicographically smallest tuple."""
    blocks = inst.user_gains()
    n = len(inst.users)
    kths = [n - k for k in ks]
    uniq = sorted(set(kths))
    last = blocks[-1]
    best_y = [-math.inf] * len(ks)
    best: list[tuple | None] = [None] * len(ks)
    for prefix in itertools.product(*(range(b.shape[1]) for b in blocks[:-1])):
        part = np.partition(_insert_and_sum(prefix, blocks, last), uniq, axis=0)
        for q, kth in enumerate(kths):
            y = part[kth]
            j = int(np.argmax(y))
            if y[j] > best_y[q]:
                best_y[q], best[q] = float(y[j]), prefix + (j,)
    return [b if y > 0 else None for b, y in zip(best, best_y)]


def _infeasible(inst: ProblemInstance) -> InfeasiblePlacement:
    return InfeasiblePlacement(
        f"infeasible: no placement serves {inst.k} of {len(inst.users)} users at V_S={inst.coverage}"
    )


def solve_by_enumeration(inst: ProblemInstance) -> PlacementSolution:
    """Scan all tuples; ties go to the lexicographically smallest tuple."""
    (best,) = _best_tuples(inst, [inst.k])
    if best is None:
        raise _infeasible(inst)
    return evaluate_placement(inst, best)


def sweep_coverage(inst: ProblemInstance, levels=DEFAULT_LEVELS) -> list[PlacementSolution]:
    """``solve_by_enumeration`` at every level, sharing one pass over the
    tuples."""
    levels = [float(v) for v in levels]
    if levels != sorted(levels, reverse=True):
        raise ValueError("coverage levels must be sorted in descending order")
    insts = [inst.with_coverage(v) for v in levels]
    out = []
    for sub, best in zip(insts, _best_tuples(inst, [x.k for x in insts])):
        if best is None:
            raise _infeasible(sub)
        out.append(evaluate_placement(sub, best))
    return out


# -- LP export ----------------------------------------------------------------


def big_m(inst: ProblemInstance) -> float:
    """Largest combined gain any user can see; bounds every feasible y."""
    return float(sum(b.max(axis=1) for b in inst.user_gains()).max())


def _fmt(x: float) -> str:
    return repr(float(x))


def _wrap(head: str, terms: list[str], tail: str, width: int = 8) -> list[str]:
    lines, chunk = [], [head]
    for k, term in enumerate(terms, start=1):
        chunk.append(term)
        if k % width == 0:
            lines.append(" ".join(chunk))
            chunk = ["   "]
    chunk.append(tail)
    lines.append(" ".join(chunk))
    return lines


def export_mip(inst: ProblemInstance, path, scale: float | None = None) -> Path:
    """Write the big-M model in LP format.

    Variables are ``x_<t>_<l>`` (array t at its l-th candidate), ``z_<i>``
    (user node i covered) and ``y``.  Gains are multiplied by ``scale``
    (default ``1 / M``, so the big-M constant is 1) to keep coefficients
    near unity; the optimum of the written model is ``scale * y``.  The
    scale is recorded in the header comment.
    """
    m = big_m(inst)
    if not m > 0:
        raise InfeasiblePlacement("no user receives any signal")
    scale = 1.0 / m if scale is None else float(scale)
    m_s = m * scale
    blocks = inst.user_gains()
    x_names = [[f"x_{t}_{l}" for l in range(len(c))] for t, c in enumerate(inst.candidates)]
    z_names = [f"z_{int(i)}" for i in inst.users]

    out = [
        "\\ array placement: maximize served gain threshold y",
        f"\\ gain_scale {_fmt(scale)}",
        f"\\ big_m {_fmt(m_s)}",
        f"\\ coverage {_fmt(inst.coverage)} users {len(inst.users)} required {inst.k}",
        "Maximize",
        " obj: + y",
        "Subject To",
    ]
    for t, names in enumerate(x_names):
        out += _wrap(f" place_{t}:", [f"+ {x}" for x in names], "= 1")
    out += _wrap(" coverage:", [f"+ {z}" for z in z_names], f">= {inst.k}")
    for row, i in enumerate(inst.users):
        terms = []
        for t, names in enumerate(x_names):
            for l, x in enumerate(names):
                b = blocks[t][row, l] * scale
                if b != 0:
                    terms.append(f"+ {_fmt(b)} {x}")
        terms += ["- y", f"- {_fmt(m_s)} {z_names[row]}"]
        out += _wrap(f" power_{int(i)}:", terms, f">= -{_fmt(m_s)}")
    out += ["Bounds", " y >= 0", "Binaries"]
    binaries = [x for names in x_names for x in names] + z_names
    for k in range(0, len(binaries), 10):
        out.append(" " + " ".join(binaries[k : k + 10]))
    out.append("End")

    path = Path(path)
    path.write_text("\n".join(out) + "\n")
    return path


def read_lp_scale(path) -> float:
    for line in Path(path).read_text().splitlines():
        if line.startswith("\\ gain_scale"):
            return float(line.split()[-1])
    return 1.0
