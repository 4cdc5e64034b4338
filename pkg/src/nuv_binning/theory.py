"""
First-order predictors of the expected nUV dissimilarity

Expectations of the ratio are approximated by the ratio of expectations.
Every predictor takes the effective bin count, i.e. the number of nonempty
slices of the partition actually used.
"""

import logging
from typing import Optional, Union

import numpy as np

from .models import (
    Template,
    FullRankDecomposition,
    BinPartition,
    BinAssignment,
    CrossProductMatrix,
    NoiseModel,
    Prediction,
)
from .errors import DomainError, InfeasibleParameterError, DegenerateModelError
from .measure import full_rank_decompose, representation_error, population_variance
from .binning import frobenius_objective, assignment_objective

logger = logging.getLogger(__name__)

PROP_NOISE = "noise"
PROP_DISTORTED = "distorted"
PROP_LOCALIZED = "localized"
PROP_SPHERICAL = "spherical"
PROP_COROLLARY = "corollary"

MatrixLike = Union[CrossProductMatrix, np.ndarray]
TemplateLike = Union[Template, FullRankDecomposition, np.ndarray]
Slicing = Union[BinPartition, BinAssignment]


def _entries(matrix: MatrixLike) -> np.ndarray:
    if isinstance(matrix, CrossProductMatrix):
        return matrix.entries
    return CrossProductMatrix(matrix).entries


def _decomposition(t: TemplateLike) -> FullRankDecomposition:
    if isinstance(t, FullRankDecomposition):
        return t
    return full_rank_decompose(t)


def _resolve_db(p: Slicing, n_tau: np.ndarray, d: Optional[int], b: Optional[int]):
    total = int(np.sum(n_tau))
    if isinstance(p, BinAssignment) and p.d != total:
        raise DomainError(f"Assignment covers {p.d} coordinates, n_tau sums to {total}")
    d = total if d is None else int(d)
    b = p.n_bins if b is None else int(b)
    if d != total:
        raise DomainError(f"d={d} does not match sum(n_tau)={total}")
    if b != p.n_bins:
        raise DomainError(f"b={b} is not the effective bin count {p.n_bins} of the partition")
    if not 1 <= b <= d:
        raise InfeasibleParameterError(f"Need 1 <= b <= d, got b={b}, d={d}")
    return d, b


def _ratio(numerator: float, denominator: float, proposition: str, d: int, b: int, **components: float) -> Prediction:
    if not denominator > 0 or not np.isfinite(denominator):
        raise DegenerateModelError(
            f"Prediction denominator is not positive ({denominator!r}); the model is degenerate"
        )
    value = numerator / denominator
    if not np.isfinite(value):
        raise DegenerateModelError("Prediction is not finite")
    parts = {"numerator": float(numerator), "denominator": float(denominator)}
    parts.update({k: float(v) for k, v in components.items()})
    return Prediction(value=float(value), proposition=proposition, d=d, b=b, components=parts)


def _alignment(p: Slicing, entries: np.ndarray, n: np.ndarray, index_map: Optional[np.ndarray]) -> float:
    if isinstance(p, BinAssignment):
        if index_map is None:
            raise DomainError("A coordinate-level assignment needs the template index map")
        return assignment_objective(p, index_map, entries)
    return frobenius_objective(p, entries, n)


def predict_noise(d: int, b: int) -> Prediction:
    """E D(t, xi) ~ (d - b) / (d - 1) for a window of pure white noise"""
    d, b = int(d), int(b)
    if b < 1 or b >= d:
        raise InfeasibleParameterError(f"Noise prediction needs 1 <= b < d, got b={b}, d={d}")
    return _ratio(float(d - b), float(d - 1), PROP_NOISE, d, b)


def predict_distorted(
    p: Slicing,
    cross: MatrixLike,
    n_tau: np.ndarray,
    noise: NoiseModel,
    d: Optional[int] = None,
    b: Optional[int] = None,
    index_map: Optional[np.ndarray] = None,
) -> Prediction:
    """
    Expected dissimilarity of the template from S_tau m + zeta.

    p is a partition of the unique values or, together with index_map, a
    coordinate-level assignment.

    numerator   = <n_tau, E m^2> - <A, S_tau Cross S_tau^T>_F + sigma^2 (d - b)
    denominator = <n_tau, E m^2> - n_tau Cross n_tau^T / d + sigma^2 (d - 1)
    """
    entries = _entries(cross)
    n = np.asarray(n_tau, dtype=float)
    if n.size != entries.shape[0]:
        raise DomainError("n_tau and cross-product matrix dimensions differ")
    d, b = _resolve_db(p, n, d, b)

    second_moment = float(n @ np.diag(entries))
    alignment = _alignment(p, entries, n, index_map)
    quadratic = float(n @ entries @ n) / d
    numerator = second_moment - alignment + noise.sigma2 * (d - b)
    denominator = second_moment - quadratic + noise.sigma2 * (d - 1)
    return _ratio(
        numerator, denominator, PROP_DISTORTED, d, b,
        second_moment=second_moment,
        frobenius=alignment,
        quadratic=quadratic,
        noise_numerator=noise.sigma2 * (d - b),
        noise_denominator=noise.sigma2 * (d - 1),
    )


def predict_localized(
    p: Slicing,
    t: TemplateLike,
    cov_mprime: MatrixLike,
    noise: NoiseModel,
    n_tau: Optional[np.ndarray] = None,
    d: Optional[int] = None,
    b: Optional[int] = None,
) -> Prediction:
    """
    Distortion centered on the template (E m = tau), Cov(m') with m' = m - tau.

    The representation error ||At - t||^2 joins the numerator and d var(t)
    the denominator; the cross terms use Cov(m') in place of Cross(m).
    """
    fr = _decomposition(t)
    if n_tau is not None and not np.array_equal(np.asarray(n_tau), fr.n_tau):
        raise DomainError("n_tau does not match the template")
    entries = _entries(cov_mprime)
    if entries.shape[0] != fr.d_tau:
        raise DomainError("Covariance dimension does not match the number of unique values")
    n = fr.n_tau.astype(float)
    d, b = _resolve_db(p, n, d, b)

    rep_error = representation_error(fr, p)
    total_variance = d * population_variance(fr.reconstruct())
    second_moment = float(n @ np.diag(entries))
    alignment = _alignment(p, entries, n, fr.index_map)
    quadratic = float(n @ entries @ n) / d
    numerator = rep_error + second_moment - alignment + noise.sigma2 * (d - b)
    denominator = total_variance + second_moment - quadratic + noise.sigma2 * (d - 1)
    return _ratio(
        numerator, denominator, PROP_LOCALIZED, d, b,
        representation_error=rep_error,
        total_variance=total_variance,
        second_moment=second_moment,
        frobenius=alignment,
        quadratic=quadratic,
    )


def predict_spherical(
    p: Slicing,
    t: TemplateLike,
    sigma2_mprime: float,
    noise: NoiseModel,
    d: Optional[int] = None,
    b: Optional[int] = None,
) -> Prediction:
    """
    Centered spherical distortion on a template with unique values:

        (||At - t||^2 + s'(d - b) + sigma^2(d - b)) / (d var(t) + s'(d - 1) + sigma^2(d - 1))

    Only the representation error depends on the partition, so the k-means
    partition minimizes this prediction.
    """
    fr = _decomposition(t)
    if not fr.is_unique:
        raise DomainError(
            f"Spherical prediction needs unique template values ({fr.d_tau} unique of {fr.d})"
        )
    if sigma2_mprime < 0:
        raise DomainError("sigma2_mprime must be nonnegative")
    d, b = _resolve_db(p, fr.n_tau, d, b)

    rep_error = representation_error(fr, p)
    total_variance = d * population_variance(fr.reconstruct())
    numerator = rep_error + sigma2_mprime * (d - b) + noise.sigma2 * (d - b)
    denominator = total_variance + sigma2_mprime * (d - 1) + noise.sigma2 * (d - 1)
    return _ratio(
        numerator, denominator, PROP_SPHERICAL, d, b,
        representation_error=rep_error,
        total_variance=total_variance,
    )


def predict_corollary(d: int, b: int, sigma2_m: float, sigma2: float) -> Prediction:
    """Spherical distortion around the origin: every b-bin partition scores the same"""
    d, b = int(d), int(b)
    if not 1 <= b < d:
        raise InfeasibleParameterError(f"Need 1 <= b < d, got b={b}, d={d}")
    if sigma2_m < 0 or sigma2 <= 0:
        raise DomainError("Variances must be sigma2_m >= 0 and sigma2 > 0")
    numerator = sigma2_m * (d - b) + sigma2 * (d - b)
    denominator = sigma2_m * (d - 1) + sigma2 * (d - 1)
    return _ratio(numerator, denominator, PROP_COROLLARY, d, b)


def discrimination_power(noise_pred: Prediction, distorted_pred: Prediction) -> float:
    """Expected D(t, noise) minus expected D(t, distorted template)"""
    return noise_pred.value - distorted_pred.value


def expected_discrimination_power(
    p: BinPartition,
    cross: MatrixLike,
    n_tau: np.ndarray,
    noise: NoiseModel,
) -> float:
    """Predicted discrimination power of a concrete partition"""
    n = np.asarray(n_tau)
    d = int(np.sum(n))
    return discrimination_power(
        predict_noise(d, p.n_bins),
        predict_distorted(p, cross, n, noise),
    )
