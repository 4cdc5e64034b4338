"""
Monte-Carlo harness comparing binning strategies

Every trial samples a template, a white-noise window and a distorted copy
of the template, then scores both windows with every (strategy, bin spec)
cell. Recognition means the distorted copy is less dissimilar than the
noise window. Trials own their random generator, so results do not depend
on scheduling.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, Iterable, List, Optional, Tuple, Union

import numpy as np

from .models import (
    Template,
    FullRankDecomposition,
    BinAssignment,
    NoiseModel,
    GreedyConfig,
    ExperimentConfig,
    CellResult,
    TrialRecord,
    AggregateResult,
    TEMPLATE_DISTRIBUTIONS,
    DIST_NORMAL,
    DIST_UNIFORM,
    DIST_BIMODAL,
    REGIME_GENERAL,
    REGIME_SPHERICAL,
    STRATEGY_EQF,
    STRATEGY_GREEDY,
    EQF_COORDINATES,
    STATUS_FAILED,
    MCNEMAR_CONFIG,
)
from .errors import DomainError, DegenerateModelError, ConfigurationError
from .measure import full_rank_decompose, assign_bins, nuv
from .binning import make_partition, resolve_bin_count, eqf_coordinate_binning
from .theory import predict_noise, predict_distorted, predict_spherical, predict_localized
from .distortion import (
    cross_from_model,
    random_general_model,
    spherical_model,
    sample_distortion,
    model_fingerprint,
    trial_generator,
)
from .statistics import paired_auc, mann_whitney_auc, mcnemar, mcnemar_matrix, discordant_counts

logger = logging.getLogger(__name__)

__all__ = [
    "sample_template",
    "run_trial",
    "run_experiment",
    "aggregate",
    "mcnemar",
]

# Second mode of the bimodal template distribution
BIMODAL_SHIFT = 2.0


def _draw_raw(rng: np.random.Generator, distribution: str, d: int) -> np.ndarray:
    if distribution == DIST_NORMAL:
        return rng.standard_normal(d)
    if distribution == DIST_UNIFORM:
        return rng.uniform(0.0, 1.0, size=d)
    if distribution == DIST_BIMODAL:
        shift = np.where(rng.random(d) < 0.5, 0.0, BIMODAL_SHIFT)
        return rng.standard_normal(d) + shift
    raise ConfigurationError(f"Unknown template distribution: {distribution}")


def sample_template(
    rng: np.random.Generator,
    cfg: Union[ExperimentConfig, str],
    d: Optional[int] = None,
) -> Tuple[Template, Dict[str, Any]]:
    """
    Draw a template following the experiment protocol.

    Args:
        rng: Trial generator
        cfg: Experiment config, or a regime name for the regime's defaults
        d: Fixed dimension; drawn uniformly from cfg.d_range when omitted

    Returns:
        (Template, metadata with distribution, gamma, d and attempts)

    Raises:
        ConfigurationError: no non-constant template within max_template_attempts
    """
    if isinstance(cfg, str):
        cfg = ExperimentConfig.for_regime(cfg)
    if d is None:
        lo, hi = cfg.d_range
        d = int(rng.integers(lo, hi + 1))
    if d < 2:
        raise DomainError(f"Template dimension must be >= 2, got {d}")

    for attempt in range(1, cfg.max_template_attempts + 1):
        distribution = TEMPLATE_DISTRIBUTIONS[int(rng.integers(len(TEMPLATE_DISTRIBUTIONS)))]
        gamma = cfg.gamma_set[int(rng.integers(len(cfg.gamma_set)))]
        raw = _draw_raw(rng, distribution, d)
        span = np.ptp(raw)
        if span == 0:
            continue
        values = np.power((raw - raw.min()) / span, gamma)
        if cfg.round_digits is not None:
            values = np.round(values, cfg.round_digits)
        if np.ptp(values) == 0:
            continue
        meta = {"distribution": distribution, "gamma": gamma, "d": d, "attempts": attempt}
        return Template(values), meta

    raise ConfigurationError(
        f"No non-constant template after {cfg.max_template_attempts} attempts"
    )


def _slices(cfg: ExperimentConfig, strategy: str, fr: FullRankDecomposition, b: int, cross, greedy_seed: int) -> BinAssignment:
    if strategy == STRATEGY_EQF and cfg.eqf_convention == EQF_COORDINATES:
        return eqf_coordinate_binning(fr.d, b)
    greedy_cfg = None
    if strategy == STRATEGY_GREEDY:
        greedy_cfg = GreedyConfig(restarts=cfg.greedy_restarts, seed=greedy_seed)
    return assign_bins(fr, make_partition(strategy, fr, b, cross, greedy_cfg))


def _distorted_prediction(regime: str, slices: BinAssignment, fr: FullRankDecomposition, cross, sigma2_m, noise):
    if regime == REGIME_SPHERICAL:
        if fr.is_unique:
            return predict_spherical(slices, fr, sigma2_m, noise)
        return predict_localized(slices, fr, sigma2_m * np.eye(fr.d_tau), noise)
    return predict_distorted(slices, cross, fr.n_tau, noise, index_map=fr.index_map)


def run_trial(cfg: ExperimentConfig, trial_index: int) -> TrialRecord:
    """
    Run one test case of the protocol.

    All cells of a trial share the same noise window, distortion and additive
    noise, which makes the recognition bits paired across strategies.
    Degenerate inputs mark the whole trial as failed instead of raising.
    """
    rng = trial_generator(cfg.master_seed, trial_index)
    record = TrialRecord(trial_index=trial_index)
    try:
        template, meta = sample_template(rng, cfg)
        fr = full_rank_decompose(template)
        record.d, record.d_tau = fr.d, fr.d_tau
        record.distribution, record.gamma = meta["distribution"], meta["gamma"]

        sigma = float(rng.uniform(*cfg.sigma_range))
        record.sigma2 = sigma * sigma
        noise = NoiseModel(record.sigma2)

        sigma2_m = None
        if cfg.regime == REGIME_GENERAL:
            model = random_general_model(fr.d_tau, rng)
            record.model_hash = model_fingerprint(model)
        else:
            sigma2_m = float(rng.uniform(*cfg.sigma2_m_range))
            record.sigma2_m = sigma2_m
            model = spherical_model(fr.tau, sigma2_m)
        cross = cross_from_model(model)

        m = sample_distortion(model, rng)
        xi = rng.normal(0.0, sigma, fr.d)
        zeta = rng.normal(0.0, sigma, fr.d)
        window = m[fr.index_map] + zeta
        greedy_seed = int(rng.integers(0, 2 ** 63))

        for spec in cfg.bin_specs:
            b_requested = resolve_bin_count(spec, fr.d_tau)
            for strategy in cfg.strategies:
                assignment = _slices(cfg, strategy, fr, b_requested, cross, greedy_seed)
                record.cells.append(CellResult(
                    strategy=strategy,
                    bin_spec=spec,
                    b_requested=b_requested,
                    b_effective=assignment.n_bins,
                    d_noise=nuv(assignment, xi),
                    d_distorted=nuv(assignment, window),
                    prediction_noise=predict_noise(fr.d, assignment.n_bins).value,
                    prediction_distorted=_distorted_prediction(
                        cfg.regime, assignment, fr, cross, sigma2_m, noise
                    ).value,
                ))
    except (DomainError, DegenerateModelError) as e:
        logger.warning("Trial %d excluded: %s", trial_index, e)
        record.status = STATUS_FAILED
        record.error = str(e)
        record.cells = []
    return record


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> List[TrialRecord]:
    """
    Run cfg.trials trials, in parallel when threads > 1.

    Records come back in trial-index order, so the output does not depend on
    the thread count.
    """
    if threads < 1:
        raise ConfigurationError("threads must be >= 1")
    total = cfg.trials
    step = max(1, total // 10)
    records: List[TrialRecord] = []

    def _collect(results: Iterable[TrialRecord]) -> None:
        for record in results:
            records.append(record)
            done = len(records)
            if done % step == 0 or done == total:
                logger.info("trial %d/%d", done, total)

    logger.info("Running %d %s trials on %d thread(s)", total, cfg.regime, threads)
    indices = range(total)
    if threads == 1:
        _collect(run_trial(cfg, i) for i in indices)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            _collect(pool.map(lambda i: run_trial(cfg, i), indices))
    return records


def _summary(values: np.ndarray) -> Tuple[float, float]:
    return float(np.mean(values)), float(np.std(values))


def _relative_gap(measured: float, predicted: float) -> Optional[float]:
    if predicted == 0:
        return None
    return abs(measured - predicted) / abs(predicted)


def _population_stats(cells: List[CellResult]) -> Dict[str, Any]:
    dn = np.array([c.d_noise for c in cells])
    dd = np.array([c.d_distorted for c in cells])
    pn = np.array([c.prediction_noise for c in cells])
    pd = np.array([c.prediction_distorted for c in cells])
    mean_dn, std_dn = _summary(dn)
    mean_dd, std_dd = _summary(dd)
    mean_pn, std_pn = _summary(pn)
    mean_pd, std_pd = _summary(pd)
    return {
        "n": len(cells),
        "auc": paired_auc(dn, dd),
        "mann_whitney_auc": mann_whitney_auc(dn, dd),
        "mean_measured_noise": mean_dn,
        "std_measured_noise": std_dn,
        "mean_predicted_noise": mean_pn,
        "std_predicted_noise": std_pn,
        "mean_measured_distorted": mean_dd,
        "std_measured_distorted": std_dd,
        "mean_predicted_distorted": mean_pd,
        "std_predicted_distorted": std_pd,
        "relative_gap_noise": _relative_gap(mean_dn, mean_pn),
        "relative_gap_distorted": _relative_gap(mean_dd, mean_pd),
    }


def aggregate(records: List[TrialRecord], cfg: Optional[ExperimentConfig] = None) -> AggregateResult:
    """
    Fold index-ordered trial records into AUCs, prediction alignment and the
    McNemar matrix.

    Pooled figures treat every (trial, bin spec) pair of a strategy as one
    paired observation; the mean of the per-spec AUCs is reported next to it.

    Raises:
        DomainError: no usable trial
    """
    records = sorted(records, key=lambda r: r.trial_index)
    usable = [r for r in records if r.ok]
    if not usable:
        raise DomainError("No usable trials to aggregate")

    keys: List[Tuple[str, str]] = []
    for c in usable[0].cells:
        keys.append((c.strategy, c.bin_spec))
    strategy_names = list(dict.fromkeys(s for s, _ in keys))

    by_cell: Dict[Tuple[str, str], List[CellResult]] = {k: [] for k in keys}
    for record in usable:
        for c in record.cells:
            if (c.strategy, c.bin_spec) not in by_cell:
                raise DomainError("Trial records come from inconsistent configs")
            by_cell[(c.strategy, c.bin_spec)].append(c)

    cells = []
    for (strategy, spec), cell_list in by_cell.items():
        row = {"strategy": strategy, "bin_spec": spec}
        row["mean_b_effective"] = float(np.mean([c.b_effective for c in cell_list]))
        row.update(_population_stats(cell_list))
        cells.append(row)

    strategies: Dict[str, Dict[str, Any]] = {}
    bits: Dict[str, np.ndarray] = {}
    for strategy in strategy_names:
        pooled = [c for (s, _), cl in by_cell.items() if s == strategy for c in cl]
        summary = _population_stats(pooled)
        summary["mean_spec_auc"] = float(np.mean([
            row["auc"] for row in cells if row["strategy"] == strategy
        ]))
        strategies[strategy] = summary
        bits[strategy] = np.array([c.recognized for c in pooled], dtype=bool)

    all_cells = [c for cl in by_cell.values() for c in cl]
    overall = _population_stats(all_cells)
    alignment = {
        key: overall[key]
        for key in (
            "mean_measured_noise", "mean_predicted_noise", "relative_gap_noise",
            "mean_measured_distorted", "mean_predicted_distorted", "relative_gap_distorted",
        )
    }
    alignment["per_strategy"] = {
        s: {k: strategies[s][k] for k in ("relative_gap_noise", "relative_gap_distorted")}
        for s in strategy_names
    }

    method = cfg.mcnemar_method if cfg else MCNEMAR_CONFIG["method"]
    threshold = cfg.mcnemar_exact_threshold if cfg else MCNEMAR_CONFIG["exact_threshold"]
    names, matrix = mcnemar_matrix(bits, method, threshold)
    discordant = {}
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            n01, n10 = discordant_counts(bits[a], bits[b])
            discordant[f"{a}|{b}"] = {"n01": n01, "n10": n10}

    if cfg is not None:
        regime = cfg.regime
    else:
        regime = REGIME_SPHERICAL if usable[0].sigma2_m is not None else REGIME_GENERAL
    return AggregateResult(
        regime=regime,
        trials=len(records),
        usable_trials=len(usable),
        failed_trials=len(records) - len(usable),
        cells=cells,
        strategies=strategies,
        alignment=alignment,
        mcnemar={
            "method": method,
            "exact_threshold": threshold,
            "strategies": names,
            "p_values": matrix.tolist(),
            "discordant": discordant,
        },
    )
