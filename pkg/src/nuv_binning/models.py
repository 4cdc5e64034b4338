"""
Data models and types for nuv-binning
"""

from dataclasses import dataclass, field, asdict
from typing import Optional, List, Dict, Any, Tuple, Iterator

import numpy as np

from .errors import (
    DomainError,
    InvariantViolationError,
    ConfigurationError,
)

# Binning strategies
STRATEGY_EQW = "eqw"
STRATEGY_EQF = "eqf"
STRATEGY_KMEANS = "kmeans"
STRATEGY_GREEDY = "greedy"

STRATEGIES = (STRATEGY_EQW, STRATEGY_EQF, STRATEGY_KMEANS, STRATEGY_GREEDY)

# How the Monte-Carlo harness forms EQF bins: equal coordinate runs in
# template order, or balanced cuts between unique values (eqf_binning)
EQF_COORDINATES = "coordinates"
EQF_VALUES = "values"

EQF_CONVENTIONS = (EQF_COORDINATES, EQF_VALUES)

# Bin-count rule tokens
RULE_STURGES = "sturges"
RULE_RICE = "rice"
RULE_SQRT = "sqrt"

BIN_RULES = (RULE_STURGES, RULE_RICE, RULE_SQRT)

# Experiment regimes
REGIME_GENERAL = "general"
REGIME_SPHERICAL = "spherical"

REGIMES = (REGIME_GENERAL, REGIME_SPHERICAL)

# Template distributions
DIST_NORMAL = "normal"
DIST_UNIFORM = "uniform"
DIST_BIMODAL = "bimodal"

TEMPLATE_DISTRIBUTIONS = (DIST_NORMAL, DIST_UNIFORM, DIST_BIMODAL)

# Trial status
STATUS_OK = "ok"
STATUS_FAILED = "failed"

# McNemar variants
MCNEMAR_AUTO = "auto"
MCNEMAR_EXACT = "exact"
MCNEMAR_CHI2 = "chi2"

MCNEMAR_CONFIG = {
    "method": MCNEMAR_AUTO,
    "exact_threshold": 25,
}

DEFAULT_GREEDY_CONFIG = {
    "restarts": 1,
    "seed": 0,
    "max_iterations": 100_000,
}

# Protocol defaults of the Monte-Carlo experiments
DEFAULT_EXPERIMENT_CONFIG = {
    "trials": 500,
    "master_seed": 42,
    "regime": REGIME_GENERAL,
    "d_range": (100, 1000),
    "gamma_set": (1.0 / 3.0, 0.5, 1.0, 2.0, 3.0),
    "sigma_range": (0.1, 2.0),
    "sigma2_m_range": (0.1, 2.0),
    "bin_specs": ("2", "5", RULE_STURGES, RULE_RICE, RULE_SQRT),
    "strategies": STRATEGIES,
    "eqf_convention": EQF_COORDINATES,
    "greedy_restarts": 1,
    "mcnemar_method": MCNEMAR_CONFIG["method"],
    "mcnemar_exact_threshold": MCNEMAR_CONFIG["exact_threshold"],
    "max_template_attempts": 100,
}

REGIME_ROUND_DIGITS = {
    REGIME_GENERAL: 3,
    REGIME_SPHERICAL: None,
}

EXIT_CODES = {
    "success": 0,
    "io_or_parse": 2,
    "infeasible": 3,
    "degenerate": 4,
}

OUTPUT_DIR_ENV = "NUV_BINNING_OUTPUT_DIR"

# round_digits left unset: taken from the regime preset
ROUND_BY_REGIME = "regime"


def _frozen_array(values: Any, dtype: Any = float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


# Measure data structures

@dataclass
class Template:
    """A template vector t of dimension d >= 2"""
    values: np.ndarray

    def __post_init__(self):
        self.values = _frozen_array(self.values).reshape(-1)
        if self.values.size < 2:
            raise DomainError(f"Template needs at least 2 values, got {self.values.size}")
        if not np.all(np.isfinite(self.values)):
            raise DomainError("Template values must be finite")

    @property
    def d(self) -> int:
        return int(self.values.size)


@dataclass
class FullRankDecomposition:
    """Sorted unique values tau, their multiplicities and the coordinate map"""
    tau: np.ndarray
    n_tau: np.ndarray
    index_map: np.ndarray

    def __post_init__(self):
        self.tau = _frozen_array(self.tau).reshape(-1)
        self.n_tau = _frozen_array(self.n_tau, dtype=np.int64).reshape(-1)
        self.index_map = _frozen_array(self.index_map, dtype=np.int64).reshape(-1)
        if self.tau.size == 0 or self.tau.size != self.n_tau.size:
            raise InvariantViolationError("tau and n_tau must be nonempty and of equal length")
        if np.any(np.diff(self.tau) <= 0):
            raise InvariantViolationError("tau must be strictly increasing")
        if np.any(self.n_tau <= 0) or int(self.n_tau.sum()) != self.index_map.size:
            raise InvariantViolationError("n_tau must be positive and sum to d")

    @property
    def d(self) -> int:
        return int(self.index_map.size)

    @property
    def d_tau(self) -> int:
        return int(self.tau.size)

    @property
    def is_unique(self) -> bool:
        """True when every template value occurs exactly once"""
        return self.d_tau == self.d

    def reconstruct(self) -> np.ndarray:
        """t = S_tau tau"""
        return self.tau[self.index_map]


@dataclass
class BinPartition:
    """b contiguous bins over unique-value indices, stored as b+1 cuts"""
    cuts: np.ndarray

    def __post_init__(self):
        self.cuts = _frozen_array(self.cuts, dtype=np.int64).reshape(-1)
        if self.cuts.size < 2:
            raise InvariantViolationError("A partition needs at least one bin")
        if self.cuts[0] != 0:
            raise InvariantViolationError("cuts[0] must be 0")
        if np.any(np.diff(self.cuts) <= 0):
            raise InvariantViolationError(f"Empty bin in partition {self.cuts.tolist()}")

    @property
    def n_bins(self) -> int:
        return int(self.cuts.size - 1)

    @property
    def d_tau(self) -> int:
        return int(self.cuts[-1])

    def bin_slices(self) -> List[slice]:
        return [slice(int(a), int(c)) for a, c in zip(self.cuts[:-1], self.cuts[1:])]

    def unique_bin_index(self) -> np.ndarray:
        """Bin index of every unique value"""
        return np.repeat(np.arange(self.n_bins), np.diff(self.cuts))

    def cut_values(self, tau: np.ndarray) -> List[float]:
        """Lower boundary of every bin in template units"""
        tau = np.asarray(tau, dtype=float)
        return [float(tau[c]) for c in self.cuts[:-1]]

    def bin_counts(self, n_tau: np.ndarray) -> np.ndarray:
        """Number of template coordinates in every bin"""
        return np.add.reduceat(np.asarray(n_tau, dtype=np.int64), self.cuts[:-1])


@dataclass
class BinAssignment:
    """Implicit slice matrix S: the bin of every coordinate"""
    bin_of: np.ndarray
    bin_counts: np.ndarray

    def __post_init__(self):
        self.bin_of = _frozen_array(self.bin_of, dtype=np.int64).reshape(-1)
        self.bin_counts = _frozen_array(self.bin_counts, dtype=np.int64).reshape(-1)
        if np.any(self.bin_counts <= 0):
            raise InvariantViolationError("Every bin must contain at least one coordinate")
        if int(self.bin_counts.sum()) != self.bin_of.size:
            raise InvariantViolationError("bin_counts must sum to d")

    @property
    def d(self) -> int:
        return int(self.bin_of.size)

    @property
    def n_bins(self) -> int:
        return int(self.bin_counts.size)


# Binning data structures

@dataclass
class CrossProductMatrix:
    """Cross(m) = E[m m^T] over the unique-value coordinates"""
    entries: np.ndarray

    def __post_init__(self):
        entries = np.array(self.entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise DomainError(f"Cross-product matrix must be square, got shape {entries.shape}")
        if not np.all(np.isfinite(entries)):
            raise DomainError("Cross-product matrix must be finite")
        scale = max(1.0, float(np.max(np.abs(entries))) if entries.size else 1.0)
        if np.max(np.abs(entries - entries.T)) > 1e-9 * scale:
            raise DomainError("Cross-product matrix must be symmetric")
        if np.any(np.diag(entries) < -1e-9 * scale):
            raise DomainError("Cross-product matrix diagonal must be nonnegative")
        self.entries = _frozen_array(entries)

    @property
    def dim(self) -> int:
        return int(self.entries.shape[0])


@dataclass
class GreedyConfig:
    """Settings of the greedy Frobenius-alignment optimizer"""
    restarts: int = DEFAULT_GREEDY_CONFIG["restarts"]
    seed: int = DEFAULT_GREEDY_CONFIG["seed"]
    max_iterations: int = DEFAULT_GREEDY_CONFIG["max_iterations"]

    def __post_init__(self):
        if self.restarts < 1:
            raise ConfigurationError("restarts must be >= 1")
        if self.max_iterations < 1:
            raise ConfigurationError("max_iterations must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigurationError("seed must be a 64-bit unsigned integer")


@dataclass
class GreedyResult:
    """Outcome of greedy binning; unpacks as (partition, objective)"""
    partition: BinPartition
    objective: float
    trace: List[float] = field(default_factory=list)
    restart: int = 0
    iterations: int = 0
    restart_objectives: List[float] = field(default_factory=list)

    def __iter__(self) -> Iterator[Any]:
        yield self.partition
        yield self.objective


@dataclass
class BinCountRules:
    """Rule-of-thumb bin counts for d_tau unique values"""
    sturges: int
    rice: int
    sqrt: int

    def get(self, rule: str) -> int:
        return int(getattr(self, rule))


# Theory data structures

@dataclass
class NoiseModel:
    """White noise with variance sigma2"""
    sigma2: float

    def __post_init__(self):
        if not np.isfinite(self.sigma2) or self.sigma2 <= 0:
            raise DomainError(f"Noise variance must be positive, got {self.sigma2}")


@dataclass
class Prediction:
    """First-order prediction of an expected dissimilarity"""
    value: float
    proposition: str
    d: int
    b: int
    components: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "proposition": self.proposition,
            "value": self.value,
            "d": self.d,
            "b": self.b,
            "components": dict(self.components),
        }


# Distortion data structures

@dataclass
class DistortionModel:
    """Gaussian distortion over unique values: mean mu and covariance cov"""
    mu: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        self.mu = _frozen_array(self.mu).reshape(-1)
        cov = np.array(self.cov, dtype=float)
        k = self.mu.size
        if cov.shape != (k, k):
            raise DomainError(f"Covariance shape {cov.shape} does not match mean length {k}")
        if not (np.all(np.isfinite(self.mu)) and np.all(np.isfinite(cov))):
            raise DomainError("Distortion model must be finite")
        scale = max(1.0, float(np.max(np.abs(cov))) if cov.size else 1.0)
        if np.max(np.abs(cov - cov.T)) > 1e-9 * scale:
            raise DomainError("Covariance must be symmetric")
        self.cov = _frozen_array(cov)

    @property
    def dim(self) -> int:
        return int(self.mu.size)

    def is_psd(self) -> bool:
        """Numerical positive semi-definiteness (O(d^3), not run on construction)"""
        if self.dim == 0:
            return True
        tol = 1e-9 * max(float(np.trace(self.cov)), 0.0) / self.dim
        return bool(np.min(np.linalg.eigvalsh(self.cov)) >= -max(tol, 1e-12))


@dataclass
class FunctionFamilySample:
    """N realizations m_i = M_i[tau] of a random tone mapping"""
    vectors: np.ndarray

    def __post_init__(self):
        vectors = np.array(self.vectors, dtype=float)
        if vectors.ndim == 1:
            vectors = vectors.reshape(1, -1)
        if vectors.ndim != 2 or vectors.shape[0] < 1 or vectors.shape[1] < 1:
            raise DomainError("Function family sample needs N >= 1 vectors of equal length")
        self.vectors = _frozen_array(vectors)

    @property
    def n_samples(self) -> int:
        return int(self.vectors.shape[0])


# Experiment data structures

@dataclass
class ExperimentConfig:
    """Monte-Carlo protocol; defaults follow the reference protocol"""
    trials: int = DEFAULT_EXPERIMENT_CONFIG["trials"]
    master_seed: int = DEFAULT_EXPERIMENT_CONFIG["master_seed"]
    regime: str = DEFAULT_EXPERIMENT_CONFIG["regime"]
    d_range: Tuple[int, int] = DEFAULT_EXPERIMENT_CONFIG["d_range"]
    gamma_set: Tuple[float, ...] = DEFAULT_EXPERIMENT_CONFIG["gamma_set"]
    sigma_range: Tuple[float, float] = DEFAULT_EXPERIMENT_CONFIG["sigma_range"]
    sigma2_m_range: Tuple[float, float] = DEFAULT_EXPERIMENT_CONFIG["sigma2_m_range"]
    bin_specs: Tuple[str, ...] = DEFAULT_EXPERIMENT_CONFIG["bin_specs"]
    strategies: Tuple[str, ...] = DEFAULT_EXPERIMENT_CONFIG["strategies"]
    round_digits: Optional[int] = ROUND_BY_REGIME  # type: ignore[assignment]
    eqf_convention: str = DEFAULT_EXPERIMENT_CONFIG["eqf_convention"]
    greedy_restarts: int = DEFAULT_EXPERIMENT_CONFIG["greedy_restarts"]
    mcnemar_method: str = DEFAULT_EXPERIMENT_CONFIG["mcnemar_method"]
    mcnemar_exact_threshold: int = DEFAULT_EXPERIMENT_CONFIG["mcnemar_exact_threshold"]
    max_template_attempts: int = DEFAULT_EXPERIMENT_CONFIG["max_template_attempts"]

    def __post_init__(self):
        self.d_range = tuple(int(x) for x in self.d_range)
        self.gamma_set = tuple(float(x) for x in self.gamma_set)
        self.sigma_range = tuple(float(x) for x in self.sigma_range)
        self.sigma2_m_range = tuple(float(x) for x in self.sigma2_m_range)
        self.bin_specs = tuple(str(x).strip().lower() for x in self.bin_specs)
        self.strategies = tuple(str(x).strip().lower() for x in self.strategies)
        if self.round_digits == ROUND_BY_REGIME:
            if self.regime not in REGIMES:
                raise ConfigurationError(f"Unknown regime: {self.regime}")
            self.round_digits = REGIME_ROUND_DIGITS[self.regime]
        self.validate()

    @classmethod
    def for_regime(cls, regime: str, **overrides: Any) -> "ExperimentConfig":
        """Preset for a regime: 3-digit rounding for general, none for spherical"""
        if regime not in REGIMES:
            raise ConfigurationError(f"Unknown regime: {regime}")
        return cls(regime=regime, **overrides)

    def validate(self) -> None:
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1")
        if not 0 <= int(self.master_seed) < 2 ** 64:
            raise ConfigurationError("master_seed must be a 64-bit unsigned integer")
        if self.regime not in REGIMES:
            raise ConfigurationError(f"Unknown regime: {self.regime}")
        lo, hi = self.d_range
        if not (2 <= lo <= hi <= 10 ** 6):
            raise ConfigurationError(f"d_range must lie within [2, 1e6], got {self.d_range}")
        if not self.gamma_set or any(g <= 0 for g in self.gamma_set):
            raise ConfigurationError("gamma_set must contain positive exponents")
        for name in ("sigma_range", "sigma2_m_range"):
            a, c = getattr(self, name)
            if not 0 < a <= c:
                raise ConfigurationError(f"{name} must satisfy 0 < low <= high")
        if not self.bin_specs:
            raise ConfigurationError("bin_specs must not be empty")
        for spec in self.bin_specs:
            if spec not in BIN_RULES and not (spec.isdigit() and int(spec) >= 1):
                raise ConfigurationError(f"Invalid bin spec: {spec}")
        if not self.strategies:
            raise ConfigurationError("strategies must not be empty")
        for strategy in self.strategies:
            if strategy not in STRATEGIES:
                raise ConfigurationError(f"Unknown strategy: {strategy}")
        if len(set(self.strategies)) != len(self.strategies):
            raise ConfigurationError("strategies must be distinct")
        if self.round_digits is not None and (not isinstance(self.round_digits, int) or self.round_digits < 0):
            raise ConfigurationError("round_digits must be nonnegative")
        if self.greedy_restarts < 1:
            raise ConfigurationError("greedy_restarts must be >= 1")
        if self.mcnemar_method not in (MCNEMAR_AUTO, MCNEMAR_EXACT, MCNEMAR_CHI2):
            raise ConfigurationError(f"Unknown McNemar method: {self.mcnemar_method}")
        if self.max_template_attempts < 1:
            raise ConfigurationError("max_template_attempts must be >= 1")
        if self.eqf_convention not in EQF_CONVENTIONS:
            raise ConfigurationError(f"Unknown EQF convention: {self.eqf_convention}")

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        for key in ("d_range", "gamma_set", "sigma_range", "sigma2_m_range", "bin_specs", "strategies"):
            data[key] = list(data[key])
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"Unknown config fields: {sorted(unknown)}")
        return cls(**data)


@dataclass
class CellResult:
    """Measurements of one (strategy, bin spec) cell inside a trial"""
    strategy: str
    bin_spec: str
    b_requested: int
    b_effective: int
    d_noise: float
    d_distorted: float
    prediction_noise: float
    prediction_distorted: float

    @property
    def recognized(self) -> bool:
        return self.d_distorted < self.d_noise

    @property
    def tie(self) -> bool:
        return self.d_distorted == self.d_noise

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["recognized"] = self.recognized
        return data


@dataclass
class TrialRecord:
    """One Monte-Carlo test case and its per-cell outcomes"""
    trial_index: int
    status: str = STATUS_OK
    error: Optional[str] = None
    d: int = 0
    d_tau: int = 0
    distribution: str = ""
    gamma: float = 0.0
    sigma2: float = 0.0
    sigma2_m: Optional[float] = None
    model_hash: Optional[str] = None
    cells: List[CellResult] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.status == STATUS_OK

    def cell(self, strategy: str, bin_spec: str) -> CellResult:
        for c in self.cells:
            if c.strategy == strategy and c.bin_spec == bin_spec:
                return c
        raise KeyError((strategy, bin_spec))

    def header(self) -> Dict[str, Any]:
        return {
            "trial_index": self.trial_index,
            "status": self.status,
            "error": self.error or "",
            "d": self.d,
            "d_tau": self.d_tau,
            "distribution": self.distribution,
            "gamma": self.gamma,
            "sigma2": self.sigma2,
            "sigma2_m": self.sigma2_m,
            "model_hash": self.model_hash or "",
        }

    def to_dict(self) -> Dict[str, Any]:
        data = self.header()
        data["cells"] = [c.to_dict() for c in self.cells]
        return data


@dataclass
class AggregateResult:
    """AUC table, prediction alignment and McNemar matrix of a run"""
    regime: str
    trials: int
    usable_trials: int
    failed_trials: int
    cells: List[Dict[str, Any]] = field(default_factory=list)
    strategies: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    alignment: Dict[str, Any] = field(default_factory=dict)
    mcnemar: Dict[str, Any] = field(default_factory=dict)

    def auc(self, strategy: str) -> float:
        return float(self.strategies[strategy]["auc"])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "regime": self.regime,
            "trials": self.trials,
            "usable_trials": self.usable_trials,
            "failed_trials": self.failed_trials,
            "cells": self.cells,
            "strategies": self.strategies,
            "alignment": self.alignment,
            "mcnemar": self.mcnemar,
        }


@dataclass
class RunManifest:
    """Everything needed to reproduce a simulate run"""
    config: Dict[str, Any]
    master_seed: int
    version: str
    timestamp: str
    threads: int = 1

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)
