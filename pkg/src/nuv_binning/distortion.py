"""
Distortion models over the unique-value coordinates

A distortion m = M[tau] is modelled as a Gaussian vector; the binning
theory only needs its cross-product matrix Cross(m) = Cov(m) + E[m] E[m]^T,
which can also be estimated by sampling a family of tone mappings.
"""

import hashlib
import logging
from typing import Union

import numpy as np

from .models import (
    DistortionModel,
    CrossProductMatrix,
    FunctionFamilySample,
)
from .errors import DomainError, DegenerateModelError

logger = logging.getLogger(__name__)

# Cholesky retry schedule: jitter = JITTER_SCALE * 10**attempt * trace / d_tau
JITTER_SCALE = 1e-10
JITTER_RETRIES = 3


def cross_from_model(model: DistortionModel) -> CrossProductMatrix:
    """Cross(m) = Cov(m) + mu mu^T"""
    entries = model.cov + np.outer(model.mu, model.mu)
    return CrossProductMatrix((entries + entries.T) / 2.0)


def estimate_cross(samples: Union[FunctionFamilySample, np.ndarray]) -> CrossProductMatrix:
    """Empirical Cross(m) ~ sum_i m_i m_i^T / N"""
    if not isinstance(samples, FunctionFamilySample):
        samples = FunctionFamilySample(samples)
    m = samples.vectors
    if not np.all(np.isfinite(m)):
        raise DomainError("Function family samples must be finite")
    entries = m.T @ m / samples.n_samples
    return CrossProductMatrix((entries + entries.T) / 2.0)


def _cholesky(cov: np.ndarray) -> np.ndarray:
    """Lower factor of cov with escalating diagonal jitter"""
    k = cov.shape[0]
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        pass

    base = JITTER_SCALE * max(float(np.trace(cov)), np.finfo(float).tiny) / k
    for attempt in range(JITTER_RETRIES):
        jitter = base * 10 ** attempt
        try:
            factor = np.linalg.cholesky(cov + jitter * np.eye(k))
        except np.linalg.LinAlgError:
            continue
        logger.warning("Covariance factorised with diagonal jitter %.3g", jitter)
        return factor
    raise DegenerateModelError(
        f"Covariance is not positive semi-definite; factorisation failed after {JITTER_RETRIES} jitter retries"
    )


def sample_distortion(model: DistortionModel, rng: np.random.Generator) -> np.ndarray:
    """One draw m ~ N(mu, cov); cov = 0 returns mu exactly"""
    if not np.any(model.cov):
        return np.array(model.mu, dtype=float)
    factor = _cholesky(model.cov)
    z = rng.standard_normal(model.dim)
    return model.mu + factor @ z


def random_general_model(d_tau: int, rng: np.random.Generator) -> DistortionModel:
    """
    mu ~ N(0, I) and a Wishart-style covariance G G^T / d_tau with iid
    standard-normal G, so the mean eigenvalue is 1.
    """
    if d_tau < 1:
        raise DomainError(f"d_tau must be >= 1, got {d_tau}")
    mu = rng.standard_normal(d_tau)
    g = rng.standard_normal((d_tau, d_tau))
    cov = g @ g.T / d_tau
    return DistortionModel(mu=mu, cov=(cov + cov.T) / 2.0)


def spherical_model(tau: np.ndarray, sigma2_m: float) -> DistortionModel:
    """Distortion centered on the template: mu = tau, cov = sigma2_m I"""
    tau = np.asarray(tau, dtype=float).reshape(-1)
    if not sigma2_m > 0:
        raise DomainError(f"sigma2_m must be positive, got {sigma2_m}")
    return DistortionModel(mu=tau, cov=sigma2_m * np.eye(tau.size))


def gamma_family_sample(
    tau: np.ndarray,
    n_samples: int,
    rng: np.random.Generator,
    gamma_low: float = 1.0,
    gamma_high: float = 10.0,
) -> FunctionFamilySample:
    """Over-exposure family m_i = tau ** gamma_i with gamma_i ~ U(gamma_low, gamma_high)"""
    tau = np.asarray(tau, dtype=float).reshape(-1)
    if np.any(tau < 0):
        raise DomainError("Gamma family needs nonnegative template values")
    if n_samples < 1:
        raise DomainError("n_samples must be >= 1")
    if not 0 < gamma_low <= gamma_high:
        raise DomainError("Gamma range must satisfy 0 < low <= high")
    gammas = rng.uniform(gamma_low, gamma_high, size=n_samples)
    return FunctionFamilySample(np.power(tau[None, :], gammas[:, None]))


def model_fingerprint(model: DistortionModel) -> str:
    """First 16 hex digits of the SHA-256 over little-endian mu and cov bytes"""
    digest = hashlib.sha256()
    digest.update(np.ascontiguousarray(model.mu, dtype="<f8").tobytes())
    digest.update(np.ascontiguousarray(model.cov, dtype="<f8").tobytes())
    return digest.hexdigest()[:16]


def trial_generator(master_seed: int, trial_index: int) -> np.random.Generator:
    """Counter-based generator owned by one trial"""
    seq = np.random.SeedSequence([int(master_seed), int(trial_index)])
    return np.random.Generator(np.random.Philox(seq))
