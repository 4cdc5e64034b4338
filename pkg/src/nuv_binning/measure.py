"""
The normalized unexplained variance (nUV) measure

Slice transform, within-bin conditional means and the dissimilarity
D(t, w) = ||Aw - w||^2 / (d var(w)). The hat matrix A is never built:
(Aw)_i is the mean of the w values sharing the bin of t_i, so every
evaluation is O(d).
"""

import logging
from typing import Optional, Union, Sequence

import numpy as np

from .models import Template, FullRankDecomposition, BinPartition, BinAssignment
from .errors import DomainError, DegenerateVarianceError, InvariantViolationError

logger = logging.getLogger(__name__)

VectorLike = Union[np.ndarray, Sequence[float]]


def _as_vector(v: VectorLike, name: str = "vector") -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1:
        arr = arr.reshape(-1)
    if arr.size == 0:
        raise DomainError(f"{name} must not be empty")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    return arr


def _grouped_sum(labels: np.ndarray, weights: np.ndarray, n_groups: int) -> np.ndarray:
    # sums run over (label, value)-sorted input, so reordering the
    # coordinates never changes a single bit of the result
    order = np.lexsort((weights, labels))
    starts = np.searchsorted(labels[order], np.arange(n_groups))
    return np.add.reduceat(weights[order], starts)


def _sorted_total(values: np.ndarray) -> float:
    return float(np.add.reduce(np.sort(values)))


def population_variance(v: VectorLike) -> float:
    """Variance with divisor d; zero for constant vectors"""
    arr = _as_vector(v, "v")
    if np.ptp(arr) == 0:
        return 0.0
    return float(np.var(arr))


def full_rank_decompose(t: Union[Template, VectorLike], round_digits: Optional[int] = None) -> FullRankDecomposition:
    """
    Factor t as S_tau tau.

    Args:
        t: Template or array of template values
        round_digits: Optional number of decimals (round half to even) applied
            before the unique values are taken

    Returns:
        FullRankDecomposition with tau strictly increasing
    """
    template = t if isinstance(t, Template) else Template(t)
    values = np.asarray(template.values, dtype=float)
    if round_digits is not None:
        values = np.round(values, int(round_digits))
    tau, index_map, n_tau = np.unique(values, return_inverse=True, return_counts=True)
    return FullRankDecomposition(tau=tau, n_tau=n_tau, index_map=np.asarray(index_map).reshape(-1))


def assign_bins(fr: FullRankDecomposition, p: BinPartition) -> BinAssignment:
    """Coordinate i goes to bin j iff index_map[i] lies in [cuts[j], cuts[j+1])"""
    if p.d_tau != fr.d_tau:
        raise InvariantViolationError(
            f"Partition covers {p.d_tau} unique values, template has {fr.d_tau}"
        )
    bin_of = p.unique_bin_index()[fr.index_map]
    counts = np.bincount(bin_of, minlength=p.n_bins)
    if np.any(counts == 0):
        raise InvariantViolationError("Partition leaves a bin without coordinates")
    return BinAssignment(bin_of=bin_of, bin_counts=counts)


def bin_means(a: BinAssignment, w: VectorLike) -> np.ndarray:
    """Least-squares coefficients of the piecewise-constant fit: one mean per bin"""
    w = _as_vector(w, "w")
    if w.size != a.d:
        raise DomainError(f"Window length {w.size} does not match template length {a.d}")
    return _grouped_sum(a.bin_of, w, a.n_bins) / a.bin_counts


def conditional_means(a: BinAssignment, w: VectorLike) -> np.ndarray:
    """Aw: every element replaced by the mean of w over its bin"""
    return bin_means(a, w)[a.bin_of]


def nuv(a: BinAssignment, w: VectorLike) -> float:
    """
    Normalized unexplained variance D(t, w) in [0, 1].

    Raises:
        DomainError: length mismatch
        DegenerateVarianceError: w is constant
    """
    w = _as_vector(w, "w")
    if w.size != a.d:
        raise DomainError(f"Window length {w.size} does not match template length {a.d}")
    if np.ptp(w) == 0:
        raise DegenerateVarianceError("Window has zero variance; nUV is undefined")

    residual = w - conditional_means(a, w)
    global_mean = _grouped_sum(np.zeros(w.size, dtype=np.int64), w, 1)[0] / w.size
    centered = w - global_mean
    numerator = _sorted_total(residual * residual)
    denominator = _sorted_total(centered * centered)
    if denominator <= 0:
        raise DegenerateVarianceError("Window has zero variance; nUV is undefined")
    # rounding can push the ratio a few ulps outside [0, 1]
    return min(max(numerator / denominator, 0.0), 1.0)


def explained_variance(a: BinAssignment, w: VectorLike) -> float:
    """r^2 of the piecewise-constant regression of w on t"""
    return 1.0 - nuv(a, w)


def representation_error(
    fr: FullRankDecomposition,
    p: Union[BinPartition, BinAssignment],
    t: Optional[Union[Template, VectorLike]] = None,
) -> float:
    """
    ||At - t||^2: n_tau-weighted within-bin sum of squared deviations of tau.

    Args:
        fr: Full-rank decomposition of the template
        p: Partition over the unique values, or a coordinate-level assignment
        t: Optional template, only checked for consistency with fr
    """
    if t is not None:
        values = t.values if isinstance(t, Template) else _as_vector(t, "t")
        if np.asarray(values).size != fr.d:
            raise DomainError("Template length does not match its decomposition")
    if isinstance(p, BinAssignment):
        if p.d != fr.d:
            raise InvariantViolationError("Assignment does not match the decomposition")
        values = fr.reconstruct()
        residual = values - conditional_means(p, values)
        return _sorted_total(residual * residual)
    if p.d_tau != fr.d_tau:
        raise InvariantViolationError("Partition does not match the decomposition")

    labels = p.unique_bin_index()
    weights = fr.n_tau.astype(float)
    totals = np.bincount(labels, weights=weights, minlength=p.n_bins)
    means = np.bincount(labels, weights=weights * fr.tau, minlength=p.n_bins) / totals
    deviations = fr.tau - means[labels]
    return float(np.sum(weights * deviations * deviations))


def hat_matrix(a: BinAssignment) -> np.ndarray:
    """Dense A = S (S^T S)^-1 S^T; for diagnostics on small d only"""
    same_bin = a.bin_of[:, None] == a.bin_of[None, :]
    return np.where(same_bin, 1.0 / a.bin_counts[a.bin_of][:, None], 0.0)
