"""
Binning strategies for the slice transform

Equal width, equal frequency, exact weighted 1-D k-means and the greedy
Frobenius-alignment optimizer, together with the objectives they optimize.
All partitions are contiguous in the sorted unique values of the template.
"""

import logging
import math
from typing import Optional, Union, List

import numpy as np

from .models import (
    FullRankDecomposition,
    BinPartition,
    BinAssignment,
    CrossProductMatrix,
    GreedyConfig,
    GreedyResult,
    BinCountRules,
    BIN_RULES,
    STRATEGY_EQW,
    STRATEGY_EQF,
    STRATEGY_KMEANS,
    STRATEGY_GREEDY,
    STRATEGIES,
)
from .errors import (
    DomainError,
    InfeasibleBinningError,
    GreedyConvergenceError,
    ConfigurationError,
)

logger = logging.getLogger(__name__)

BinSpec = Union[int, str]

# Rows of interval costs evaluated at once by the k-means recursion
KMEANS_ROW_BLOCK = 64


def _check_bin_count(b: int, d_tau: int) -> None:
    if b < 1:
        raise InfeasibleBinningError(f"Number of bins must be >= 1, got {b}")
    if b > d_tau:
        raise InfeasibleBinningError(f"Cannot form {b} nonempty bins from {d_tau} unique values")


def _as_cross(cross: Union[CrossProductMatrix, np.ndarray]) -> np.ndarray:
    if isinstance(cross, CrossProductMatrix):
        return cross.entries
    return CrossProductMatrix(cross).entries


def _as_counts(n_tau: np.ndarray, dim: int) -> np.ndarray:
    n = np.asarray(n_tau, dtype=float).reshape(-1)
    if n.size != dim:
        raise DomainError(f"n_tau has length {n.size}, cross-product matrix has dimension {dim}")
    if np.any(n <= 0):
        raise DomainError("n_tau must be positive")
    return n


def eqw_binning(fr: FullRankDecomposition, b: int) -> BinPartition:
    """
    Equal-width bins over [tau[0], tau[-1]].

    Empty intervals are dropped, so the returned partition may have fewer
    than b bins; its n_bins is the effective bin count.
    """
    if b < 1:
        raise InfeasibleBinningError(f"Number of bins must be >= 1, got {b}")
    k = fr.d_tau
    if b == 1 or k == 1:
        return BinPartition([0, k])

    lo, hi = float(fr.tau[0]), float(fr.tau[-1])
    width = (hi - lo) / b
    index = np.floor((fr.tau - lo) / width).astype(np.int64)
    index = np.clip(index, 0, b - 1)
    changes = np.flatnonzero(np.diff(index)) + 1
    return BinPartition(np.concatenate(([0], changes, [k])))


def _window_min(values: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """min(values[lo[i]:hi[i] + 1]) for every i via a sparse table; inf for empty windows"""
    n = values.size
    levels = [values]
    span = 1
    while 2 * span <= n:
        prev = levels[-1]
        level = np.full(n, np.inf)
        level[: n - span] = np.minimum(prev[: n - span], prev[span:])
        levels.append(level)
        span *= 2
    table = np.stack(levels)

    length = hi - lo + 1
    empty = length <= 0
    length = np.where(empty, 1, length)
    power = np.frexp(length.astype(float))[1] - 1
    start = np.clip(lo, 0, n - 1)
    stop = np.clip(hi - (1 << power) + 1, 0, n - 1)
    out = np.minimum(table[power, start], table[power, stop])
    return np.where(empty, np.inf, out)


def _balanced_cuts(prefix: np.ndarray, targets: np.ndarray, low: int, high: int):
    """
    Cuts whose bins all hold between low and high coordinates, minimizing the
    squared distance of the cumulative counts to the targets.

    Returns (cost, cuts) or None when no such partition exists.
    """
    k = prefix.size - 1
    # boundary i may precede boundary i2 iff low <= prefix[i2] - prefix[i] <= high
    lo = np.searchsorted(prefix, prefix - high, side="left")
    hi = np.searchsorted(prefix, prefix - low, side="right") - 1

    layers = [np.full(k + 1, np.inf)]
    layers[0][0] = 0.0
    for target in targets:
        layers.append(_window_min(layers[-1], lo, hi) + (prefix - target) ** 2)

    cuts = [k]
    for layer in reversed(layers):
        end = cuts[-1]
        if lo[end] > hi[end]:
            return None
        window = layer[lo[end]:hi[end] + 1]
        pos = int(np.argmin(window))
        if not np.isfinite(window[pos]):
            return None
        cuts.append(int(lo[end]) + pos)
    cost = float(layers[-1][cuts[1]])
    return cost, cuts[::-1]


def _nearest_cuts(prefix: np.ndarray, b: int) -> List[int]:
    """Each cut independently at the boundary nearest j*d/b, keeping bins nonempty"""
    k = prefix.size - 1
    d = int(prefix[-1])
    cuts = [0]
    for j in range(1, b):
        low = cuts[-1] + 1
        high = k - (b - j)
        window = prefix[low:high + 1]
        cuts.append(low + int(np.argmin(np.abs(window - j * d / b))))
    cuts.append(k)
    return cuts


def eqf_binning(fr: FullRankDecomposition, b: int) -> BinPartition:
    """
    Equal-frequency bins over the unique values.

    Cuts fall between unique values only. They are chosen jointly: among
    the partitions whose bin counts differ by at most max(n_tau), the one
    whose cumulative counts are closest (squared distance) to j*d/b.
    """
    k = fr.d_tau
    _check_bin_count(b, k)
    if b == 1:
        return BinPartition([0, k])
    if b == k:
        return BinPartition(np.arange(k + 1))

    prefix = np.concatenate(([0], np.cumsum(fr.n_tau))).astype(np.int64)
    d = int(prefix[-1])
    slack = int(fr.n_tau.max())
    targets = np.arange(1, b) * d / b

    best = None
    # the smallest bin of a balanced partition holds between ceil(d/b) - slack and floor(d/b)
    for low in range(max(1, -(-d // b) - slack), d // b + 1):
        found = _balanced_cuts(prefix, targets, low, low + slack)
        if found is not None and (best is None or found[0] < best[0]):
            best = found
    if best is None:
        logger.debug("eqf binning: no partition within max(n_tau)=%d, using nearest cuts", slack)
        return BinPartition(_nearest_cuts(prefix, b))
    return BinPartition(best[1])


def eqf_coordinate_binning(d: int, b: int) -> BinAssignment:
    """
    Equal-frequency bins over coordinate positions: consecutive runs of
    floor(d/b) or ceil(d/b) coordinates, whatever the template values.

    Tied values may land in different bins and the template's value
    structure is ignored; the harness uses it for EQF cells by default.
    """
    if b < 1:
        raise InfeasibleBinningError(f"Number of bins must be >= 1, got {b}")
    if b > d:
        raise InfeasibleBinningError(f"Cannot form {b} nonempty bins from {d} coordinates")
    bin_of = (np.arange(d, dtype=np.int64) * b) // d
    return BinAssignment(bin_of=bin_of, bin_counts=np.bincount(bin_of, minlength=b))


def _prefix_moments(fr: FullRankDecomposition):
    weights = fr.n_tau.astype(float)
    w = np.concatenate(([0.0], np.cumsum(weights)))
    s1 = np.concatenate(([0.0], np.cumsum(weights * fr.tau)))
    s2 = np.concatenate(([0.0], np.cumsum(weights * fr.tau * fr.tau)))
    return w, s1, s2


def _interval_cost_rows(moments, rows: np.ndarray) -> np.ndarray:
    """cost[r, j]: weighted SSE of tau[rows[r]:j] around its weighted mean (inf for j <= rows[r])"""
    w, s1, s2 = moments
    dw = w[None, :] - w[rows, None]
    ds1 = s1[None, :] - s1[rows, None]
    ds2 = s2[None, :] - s2[rows, None]
    valid = np.arange(w.size)[None, :] > rows[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        cost = ds2 - ds1 * ds1 / dw
    return np.where(valid, np.maximum(cost, 0.0), np.inf)


def kmeans_binning(fr: FullRankDecomposition, b: int) -> BinPartition:
    """
    Exact weighted 1-D k-means over the unique values.

    Dynamic programming over suffixes: best[k][i] is the minimal cost of
    splitting tau[i:] into k bins. Interval costs come from prefix sums and
    are evaluated a block of rows at a time, so memory stays O(d_tau * b).
    Reconstruction takes the smallest optimal cut at every step, which
    yields the lexicographically smallest optimal cut vector.
    """
    k_total = fr.d_tau
    _check_bin_count(b, k_total)
    if b == k_total:
        return BinPartition(np.arange(k_total + 1))

    moments = _prefix_moments(fr)
    chunk = max(b, KMEANS_ROW_BLOCK)
    best = np.full((b + 1, k_total + 1), np.inf)
    best[0, k_total] = 0.0
    for k in range(1, b + 1):
        for start in range(0, k_total + 1, chunk):
            rows = np.arange(start, min(start + chunk, k_total + 1))
            best[k, rows] = np.min(_interval_cost_rows(moments, rows) + best[k - 1][None, :], axis=1)

    cuts = [0]
    start = 0
    for k in range(b, 1, -1):
        candidates = _interval_cost_rows(moments, np.array([start]))[0] + best[k - 1]
        start = int(np.argmin(candidates))
        cuts.append(start)
    cuts.append(k_total)
    logger.debug("kmeans binning: b=%d cost=%.6g", b, best[b, 0])
    return BinPartition(cuts)


def frobenius_objective(p: BinPartition, cross: Union[CrossProductMatrix, np.ndarray], n_tau: np.ndarray) -> float:
    """<A, S_tau Cross S_tau^T>_F evaluated bin by bin"""
    entries = _as_cross(cross)
    n = _as_counts(n_tau, entries.shape[0])
    if p.d_tau != entries.shape[0]:
        raise DomainError("Partition and cross-product matrix dimensions differ")
    total = 0.0
    for sl in p.bin_slices():
        nb = n[sl]
        total += float(nb @ entries[sl, sl] @ nb) / float(nb.sum())
    return total


def bin_value_counts(a: BinAssignment, index_map: np.ndarray, d_tau: int) -> np.ndarray:
    """counts[j, v]: number of coordinates in bin j holding unique value v"""
    index_map = np.asarray(index_map, dtype=np.int64)
    if index_map.size != a.d:
        raise DomainError("Assignment and index map cover different dimensions")
    flat = a.bin_of * d_tau + index_map
    return np.bincount(flat, minlength=a.n_bins * d_tau).reshape(a.n_bins, d_tau)


def assignment_objective(
    a: BinAssignment,
    index_map: np.ndarray,
    cross: Union[CrossProductMatrix, np.ndarray],
) -> float:
    """
    <A, S_tau Cross S_tau^T>_F for any slice assignment, including ones that
    split tied template values across bins. Agrees with frobenius_objective
    on assignments built from a BinPartition.
    """
    entries = _as_cross(cross)
    counts = bin_value_counts(a, index_map, entries.shape[0]).astype(float)
    per_bin = np.sum((counts @ entries) * counts, axis=1)
    return float(np.sum(per_bin / a.bin_counts))


class _GreedyState:
    """
    Incremental bookkeeping for greedy boundary moves.

    block[j] holds sum_{p,q in bin j} n_p n_q Cross[p,q] and size[j] the
    coordinate count of bin j; row prefix sums give every row-by-bin sum
    in O(1).
    """

    def __init__(self, weighted: np.ndarray, n: np.ndarray, cuts: np.ndarray):
        self.weighted = weighted
        self.n = n
        self.diag = np.diag(weighted).copy()
        self.prefix = np.concatenate(
            (np.zeros((weighted.shape[0], 1)), np.cumsum(weighted, axis=1)), axis=1
        )
        self.cuts = np.array(cuts, dtype=np.int64)
        self.block = np.array([
            weighted[a:c, a:c].sum() for a, c in zip(self.cuts[:-1], self.cuts[1:])
        ])
        self.size = np.array([n[a:c].sum() for a, c in zip(self.cuts[:-1], self.cuts[1:])])
        self.objective = float(np.sum(self.block / self.size))

    def _row_sum(self, rows: np.ndarray, start: np.ndarray, stop: np.ndarray) -> np.ndarray:
        return self.prefix[rows, stop] - self.prefix[rows, start]

    def move_gains(self):
        """Gains of every boundary move, ordered by boundary then left-shrink, right-shrink"""
        q = self.cuts
        i = np.arange(1, q.size - 1)
        left, right = i - 1, i
        s_left, s_right = self.block[left], self.block[right]
        n_left, n_right = self.size[left], self.size[right]
        base = s_left / n_left + s_right / n_right

        # left bin shrinks: element q[i]-1 joins the right bin
        e = q[i] - 1
        out = self._row_sum(e, q[i - 1], q[i])
        into = self._row_sum(e, q[i], q[i + 1])
        shrink_left = (
            s_left - (2.0 * out - self.diag[e]),
            s_right + (2.0 * into + self.diag[e]),
            n_left - self.n[e],
            n_right + self.n[e],
        )
        ok_left = (q[i] - q[i - 1]) > 1

        # right bin shrinks: element q[i] joins the left bin
        e = q[i]
        out = self._row_sum(e, q[i], q[i + 1])
        into = self._row_sum(e, q[i - 1], q[i])
        shrink_right = (
            s_left + (2.0 * into + self.diag[e]),
            s_right - (2.0 * out - self.diag[e]),
            n_left + self.n[e],
            n_right - self.n[e],
        )
        ok_right = (q[i + 1] - q[i]) > 1

        gains = np.full((i.size, 2), -np.inf)
        updates = []
        for col, (move, ok) in enumerate(((shrink_left, ok_left), (shrink_right, ok_right))):
            new_left, new_right, new_nl, new_nr = move
            with np.errstate(divide="ignore", invalid="ignore"):
                delta = new_left / new_nl + new_right / new_nr - base
            gains[:, col] = np.where(ok, delta, -np.inf)
            updates.append(move)
        return gains, updates

    def apply(self, boundary_pos: int, col: int, updates, gain: float) -> None:
        i = boundary_pos + 1
        new_left, new_right, new_nl, new_nr = (arr[boundary_pos] for arr in updates[col])
        self.block[i - 1], self.block[i] = new_left, new_right
        self.size[i - 1], self.size[i] = new_nl, new_nr
        self.cuts[i] += -1 if col == 0 else 1
        self.objective += gain


def _random_cuts(rng: np.random.Generator, k: int, b: int) -> np.ndarray:
    inner = np.sort(rng.choice(np.arange(1, k), size=b - 1, replace=False)) if b > 1 else np.array([], dtype=np.int64)
    return np.concatenate(([0], inner, [k])).astype(np.int64)


def _greedy_pass(weighted: np.ndarray, n: np.ndarray, b: int, rng: np.random.Generator, max_iterations: int):
    k = n.size
    state = _GreedyState(weighted, n, _random_cuts(rng, k, b))
    trace = [state.objective]
    if b == 1:
        return state, trace

    iterations = 0
    while True:
        gains, updates = state.move_gains()
        flat = gains.reshape(-1)
        best = int(np.argmax(flat))
        gain = float(flat[best])
        # strict improvement, with a relative guard against round-off plateaus
        if not gain > 1e-12 * max(1.0, abs(state.objective)):
            break
        iterations += 1
        if iterations > max_iterations:
            raise GreedyConvergenceError(
                f"Greedy binning exceeded {max_iterations} iterations; incremental update is inconsistent"
            )
        state.apply(best // 2, best % 2, updates, gain)
        trace.append(state.objective)
    return state, trace


def greedy_binning(
    cross: Union[CrossProductMatrix, np.ndarray],
    n_tau: np.ndarray,
    b: int,
    cfg: Optional[GreedyConfig] = None,
) -> GreedyResult:
    """
    Greedy maximization of the Frobenius alignment <A, S_tau Cross S_tau^T>_F.

    Starting from a uniformly random partition into b nonempty bins, the
    boundary move (one unique value to the left or right) with the largest
    positive gain is applied until no move improves the objective. With
    several restarts, restart r is seeded with cfg.seed XOR r and the best
    result wins (lowest restart index on ties).

    Returns:
        GreedyResult; unpacks as (partition, objective)
    """
    cfg = cfg or GreedyConfig()
    entries = _as_cross(cross)
    n = _as_counts(n_tau, entries.shape[0])
    k = n.size
    _check_bin_count(b, k)

    if b == k:
        partition = BinPartition(np.arange(k + 1))
        objective = frobenius_objective(partition, entries, n)
        return GreedyResult(partition, objective, [objective], 0, 0, [objective])

    weighted = entries * np.outer(n, n)
    best: Optional[GreedyResult] = None
    objectives: List[float] = []
    for restart in range(cfg.restarts):
        rng = np.random.Generator(np.random.Philox(int(cfg.seed) ^ restart))
        state, trace = _greedy_pass(weighted, n, b, rng, cfg.max_iterations)
        objectives.append(state.objective)
        logger.debug("greedy restart %d: %d moves, objective %.10g", restart, len(trace) - 1, state.objective)
        if best is None or state.objective > best.objective:
            best = GreedyResult(
                partition=BinPartition(state.cuts.copy()),
                objective=state.objective,
                trace=trace,
                restart=restart,
                iterations=len(trace) - 1,
            )
    best.restart_objectives = objectives
    return best


def bin_count_rules(d_tau: int) -> BinCountRules:
    """
    Sturges ceil(log2 d)+1, Rice ceil(2 d^(1/3)) and square-root ceil(sqrt d),
    each clamped to d_tau. Integer arithmetic keeps perfect powers exact.
    """
    if d_tau < 1:
        raise DomainError(f"d_tau must be >= 1, got {d_tau}")
    sturges = (d_tau - 1).bit_length() + 1
    rice = max(1, math.ceil(2 * d_tau ** (1.0 / 3.0)) - 2)
    while rice ** 3 < 8 * d_tau:
        rice += 1
    root = math.isqrt(d_tau - 1) + 1
    return BinCountRules(
        sturges=min(sturges, d_tau),
        rice=min(rice, d_tau),
        sqrt=min(root, d_tau),
    )


def resolve_bin_count(spec: BinSpec, d_tau: int) -> int:
    """
    Integer spec or rule token -> bin count.

    Rule tokens are clamped to d_tau; an explicit integer must satisfy
    1 <= b <= d_tau.
    """
    token = str(spec).strip().lower()
    if token in BIN_RULES:
        return bin_count_rules(d_tau).get(token)
    try:
        b = int(token)
    except ValueError:
        raise ConfigurationError(f"Invalid bin spec: {spec!r}") from None
    _check_bin_count(b, d_tau)
    return b


def make_partition(
    strategy: str,
    fr: FullRankDecomposition,
    b: int,
    cross: Optional[Union[CrossProductMatrix, np.ndarray]] = None,
    greedy_config: Optional[GreedyConfig] = None,
) -> BinPartition:
    """Dispatch to one of the four strategies; greedy needs cross"""
    if strategy == STRATEGY_EQW:
        return eqw_binning(fr, b)
    if strategy == STRATEGY_EQF:
        return eqf_binning(fr, b)
    if strategy == STRATEGY_KMEANS:
        return kmeans_binning(fr, b)
    if strategy == STRATEGY_GREEDY:
        if cross is None:
            raise ConfigurationError("Greedy binning requires a cross-product matrix")
        return greedy_binning(cross, fr.n_tau, b, greedy_config).partition
    raise ConfigurationError(f"Unknown strategy: {strategy!r}; expected one of {STRATEGIES}")
