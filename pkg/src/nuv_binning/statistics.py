"""
AUC estimates and McNemar significance tests for paired recognition outcomes
"""

import logging
import math
from typing import Dict, Sequence, Tuple, List

import numpy as np
from scipy import stats, special

from .models import MCNEMAR_AUTO, MCNEMAR_EXACT, MCNEMAR_CHI2, MCNEMAR_CONFIG
from .errors import DomainError, ConfigurationError

logger = logging.getLogger(__name__)


def _paired_arrays(d_noise: Sequence[float], d_distorted: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    noise = np.asarray(d_noise, dtype=float).reshape(-1)
    distorted = np.asarray(d_distorted, dtype=float).reshape(-1)
    if noise.size != distorted.size:
        raise DomainError("Paired samples must have equal length")
    if noise.size == 0:
        raise DomainError("AUC needs at least one pair")
    return noise, distorted


def paired_auc(d_noise: Sequence[float], d_distorted: Sequence[float]) -> float:
    """(#recognized + 0.5 #ties) / n over paired trials; recognized means D_distorted < D_noise"""
    noise, distorted = _paired_arrays(d_noise, d_distorted)
    wins = np.count_nonzero(distorted < noise)
    ties = np.count_nonzero(distorted == noise)
    return (wins + 0.5 * ties) / noise.size


def mann_whitney_auc(negatives: Sequence[float], positives: Sequence[float]) -> float:
    """
    Unpaired AUC over all (negative, positive) pairs via mid-ranks.

    A positive scores when its dissimilarity is below the negative's,
    ties count one half.
    """
    neg = np.asarray(negatives, dtype=float).reshape(-1)
    pos = np.asarray(positives, dtype=float).reshape(-1)
    if neg.size == 0 or pos.size == 0:
        raise DomainError("AUC needs at least one sample of each population")
    ranks = stats.rankdata(np.concatenate((pos, neg)))
    u = ranks[pos.size:].sum() - neg.size * (neg.size + 1) / 2.0
    return float(u / (neg.size * pos.size))


def mcnemar(
    n01: int,
    n10: int,
    method: str = MCNEMAR_CONFIG["method"],
    exact_threshold: int = MCNEMAR_CONFIG["exact_threshold"],
) -> float:
    """
    Two-sided McNemar p-value from the discordant counts.

    Args:
        n01: Pairs where only the first strategy recognized
        n10: Pairs where only the second strategy recognized
        method: "auto" (exact below exact_threshold discordant pairs),
            "exact" (binomial at 1/2) or "chi2" (continuity corrected)
        exact_threshold: Discordant count from which "auto" switches to chi2
    """
    n01, n10 = int(n01), int(n10)
    if n01 < 0 or n10 < 0:
        raise DomainError("Discordant counts must be nonnegative")
    n = n01 + n10
    if n == 0:
        return 1.0

    if method == MCNEMAR_AUTO:
        method = MCNEMAR_EXACT if n < exact_threshold else MCNEMAR_CHI2
    if method == MCNEMAR_EXACT:
        p = stats.binomtest(min(n01, n10), n, 0.5).pvalue
    elif method == MCNEMAR_CHI2:
        statistic = (abs(n01 - n10) - 1) ** 2 / n
        # chi-square(1) survival function
        p = special.erfc(math.sqrt(statistic / 2.0))
    else:
        raise ConfigurationError(f"Unknown McNemar method: {method}")
    return float(min(max(p, 0.0), 1.0))


def discordant_counts(first: np.ndarray, second: np.ndarray) -> Tuple[int, int]:
    a = np.asarray(first, dtype=bool)
    b = np.asarray(second, dtype=bool)
    if a.shape != b.shape:
        raise DomainError("Paired recognition vectors must have equal length")
    return int(np.count_nonzero(a & ~b)), int(np.count_nonzero(~a & b))


def mcnemar_matrix(
    bits: Dict[str, np.ndarray],
    method: str = MCNEMAR_CONFIG["method"],
    exact_threshold: int = MCNEMAR_CONFIG["exact_threshold"],
) -> Tuple[List[str], np.ndarray]:
    """Symmetric p-value matrix over strategies with unit diagonal"""
    names = list(bits)
    size = len(names)
    matrix = np.ones((size, size))
    for i in range(size):
        for j in range(i + 1, size):
            n01, n10 = discordant_counts(bits[names[i]], bits[names[j]])
            p = mcnemar(n01, n10, method, exact_threshold)
            matrix[i, j] = matrix[j, i] = p
            logger.debug("McNemar %s vs %s: n01=%d n10=%d p=%.3g", names[i], names[j], n01, n10, p)
    return names, matrix
