"""
Command-line interface for nuv-binning
"""

import argparse
import json
import logging
import os
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from . import __version__
from .models import (
    BinPartition,
    GreedyConfig,
    NoiseModel,
    ExperimentConfig,
    RunManifest,
    STRATEGIES,
    STRATEGY_GREEDY,
    REGIMES,
    REGIME_GENERAL,
    EQF_CONVENTIONS,
    MCNEMAR_AUTO,
    MCNEMAR_EXACT,
    MCNEMAR_CHI2,
    DEFAULT_GREEDY_CONFIG,
    OUTPUT_DIR_ENV,
    EXIT_CODES,
)
from .errors import NuvError, ConfigurationError, DomainError
from .measure import full_rank_decompose, assign_bins, nuv, representation_error
from .binning import make_partition, greedy_binning, resolve_bin_count, frobenius_objective
from .theory import (
    predict_noise,
    predict_distorted,
    predict_localized,
    predict_spherical,
    predict_corollary,
)
from .distortion import estimate_cross, gamma_family_sample
from .experiments import run_experiment, aggregate
from .reporting import ReportGenerator
from .vector_io import (
    read_vector,
    read_matrix,
    write_matrix,
    write_json,
    write_trials_csv,
    write_figure_series_csv,
)

logger = logging.getLogger("nuv_binning.cli")

DEFAULT_OUTPUT_DIR = "results"


def _add_binning_args(parser: argparse.ArgumentParser, default_strategy: str = "kmeans") -> None:
    parser.add_argument("--strategy", choices=STRATEGIES, default=default_strategy, help="Binning strategy")
    parser.add_argument("-b", "--bins", default="sturges",
                        help="Number of bins or one of sturges|rice|sqrt (default: sturges)")
    parser.add_argument("--round-digits", type=int, default=None,
                        help="Round template values to this many decimals first")
    parser.add_argument("--seed", type=int, default=DEFAULT_GREEDY_CONFIG["seed"], help="Greedy seed")
    parser.add_argument("--restarts", type=int, default=DEFAULT_GREEDY_CONFIG["restarts"],
                        help="Greedy random restarts")
    parser.add_argument("--max-iterations", type=int, default=DEFAULT_GREEDY_CONFIG["max_iterations"],
                        help="Greedy iteration cap")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nuv-binning",
        description="Binning strategies for the normalized unexplained variance template matching measure",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="Debug logging on stderr")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="Only warnings and errors on stderr")
    commands = parser.add_subparsers(dest="command", required=True)

    p_bin = commands.add_parser("bin", help="Bin a template")
    p_bin.add_argument("template", help="Template vector file")
    _add_binning_args(p_bin)
    p_bin.add_argument("--cross", help="Cross-product matrix CSV (required by greedy)")
    p_bin.add_argument("--json", action="store_true", help="JSON output")

    p_nuv = commands.add_parser("nuv", help="Dissimilarity of a window from a template")
    p_nuv.add_argument("template", help="Template vector file")
    p_nuv.add_argument("window", help="Window vector file")
    _add_binning_args(p_nuv)
    p_nuv.add_argument("--cuts", help="Explicit comma-separated cuts over unique-value indices")
    p_nuv.add_argument("--cross", help="Cross-product matrix CSV (greedy only)")
    p_nuv.add_argument("--json", action="store_true", help="JSON output")

    p_pred = commands.add_parser("predict", help="First-order expected dissimilarity")
    modes = p_pred.add_subparsers(dest="mode", required=True)

    m_noise = modes.add_parser("noise", help="Pure white-noise window")
    m_noise.add_argument("-d", type=int, required=True, help="Dimension")
    m_noise.add_argument("-b", type=int, required=True, help="Effective bin count")

    m_cor = modes.add_parser("corollary", help="Spherical distortion around the origin")
    m_cor.add_argument("-d", type=int, required=True, help="Dimension")
    m_cor.add_argument("-b", type=int, required=True, help="Effective bin count")
    m_cor.add_argument("--sigma2m", type=float, required=True, help="Distortion variance")
    m_cor.add_argument("--sigma2", type=float, required=True, help="Noise variance")

    m_dist = modes.add_parser("distorted", help="General distortion given Cross(m)")
    m_dist.add_argument("template", help="Template vector file")
    _add_binning_args(m_dist)
    m_dist.add_argument("--cross", required=True, help="Cross-product matrix CSV")
    m_dist.add_argument("--sigma2", type=float, required=True, help="Noise variance")

    m_loc = modes.add_parser("localized", help="Distortion centered on the template given Cov(m')")
    m_loc.add_argument("template", help="Template vector file")
    _add_binning_args(m_loc, default_strategy="kmeans")
    m_loc.add_argument("--cov", required=True, help="Covariance matrix CSV of the centered distortion")
    m_loc.add_argument("--sigma2", type=float, required=True, help="Noise variance")

    m_sph = modes.add_parser("spherical", help="Centered spherical distortion on a unique template")
    m_sph.add_argument("template", help="Template vector file")
    _add_binning_args(m_sph)
    m_sph.add_argument("--sigma2m", type=float, required=True, help="Distortion variance")
    m_sph.add_argument("--sigma2", type=float, required=True, help="Noise variance")

    for mode in (m_noise, m_cor, m_dist, m_loc, m_sph):
        mode.add_argument("--json", action="store_true", help="JSON output")

    p_cross = commands.add_parser("cross", help="Estimate Cross(m) from a gamma tone-mapping family")
    p_cross.add_argument("template", help="Template vector file")
    p_cross.add_argument("-o", "--output", required=True, help="Output matrix CSV")
    p_cross.add_argument("--gamma-low", type=float, default=1.0, help="Lowest gamma (default: 1)")
    p_cross.add_argument("--gamma-high", type=float, default=10.0, help="Highest gamma (default: 10)")
    p_cross.add_argument("--samples", type=int, default=1000, help="Number of sampled functions")
    p_cross.add_argument("--seed", type=int, default=0, help="Sampling seed")
    p_cross.add_argument("--round-digits", type=int, default=None, help="Round template values first")

    p_sim = commands.add_parser("simulate", help="Run the Monte-Carlo strategy comparison")
    p_sim.add_argument("--config", help="JSON file with experiment config fields")
    p_sim.add_argument("--regime", choices=REGIMES, help="Distortion regime (default: general)")
    p_sim.add_argument("--trials", type=int, help="Number of trials")
    p_sim.add_argument("--seed", type=int, help="Master seed")
    p_sim.add_argument("--strategies", help="Comma-separated strategies")
    p_sim.add_argument("--bin-specs", help="Comma-separated bin specs, e.g. 2,5,sturges,rice,sqrt")
    p_sim.add_argument("--d-min", type=int, help="Smallest template dimension")
    p_sim.add_argument("--d-max", type=int, help="Largest template dimension")
    rounding = p_sim.add_mutually_exclusive_group()
    rounding.add_argument("--round-digits", type=int, help="Template rounding digits")
    rounding.add_argument("--no-rounding", action="store_true", help="Leave templates unrounded")
    p_sim.add_argument("--restarts", type=int, help="Greedy random restarts")
    p_sim.add_argument("--eqf-convention", choices=EQF_CONVENTIONS,
                       help="EQF bins over coordinate runs or between unique values (default: coordinates)")
    p_sim.add_argument("--mcnemar-method", choices=(MCNEMAR_AUTO, MCNEMAR_EXACT, MCNEMAR_CHI2),
                       help="McNemar variant")
    p_sim.add_argument("--threads", type=int, default=1, help="Parallel trials (default: 1)")
    p_sim.add_argument("-o", "--output", help=f"Output directory (default: ${OUTPUT_DIR_ENV} or {DEFAULT_OUTPUT_DIR})")
    p_sim.add_argument("--json", action="store_true", help="Print the aggregate as JSON")
    return parser


def _setup_logging(args: argparse.Namespace) -> None:
    level = logging.INFO
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger("nuv_binning")
    root.handlers[:] = [handler]
    root.setLevel(level)
    root.propagate = False


def _reporter(args: argparse.Namespace) -> ReportGenerator:
    return ReportGenerator("json" if getattr(args, "json", False) else "text")


def _load_cross(path: Optional[str], d_tau: int) -> Optional[np.ndarray]:
    if path is None:
        return None
    matrix = read_matrix(path)
    if matrix.shape[0] != d_tau:
        raise DomainError(f"Matrix in {path} is {matrix.shape[0]}x{matrix.shape[0]}, template has {d_tau} unique values")
    return matrix


def _partition(args: argparse.Namespace, fr, cross: Optional[np.ndarray]):
    """Partition and greedy details for the binning flags of a subcommand"""
    if args.strategy == STRATEGY_GREEDY and cross is None:
        raise ConfigurationError("Greedy binning requires --cross")
    b = resolve_bin_count(args.bins, fr.d_tau)
    if args.strategy == STRATEGY_GREEDY:
        cfg = GreedyConfig(restarts=args.restarts, seed=args.seed, max_iterations=args.max_iterations)
        result = greedy_binning(cross, fr.n_tau, b, cfg)
        return result.partition, b, result
    return make_partition(args.strategy, fr, b), b, None


def cmd_bin(args: argparse.Namespace) -> int:
    fr = full_rank_decompose(read_vector(args.template), args.round_digits)
    cross = _load_cross(args.cross, fr.d_tau)
    if cross is not None and args.strategy != STRATEGY_GREEDY:
        raise ConfigurationError("--cross is only used by the greedy strategy")
    partition, b, greedy = _partition(args, fr, cross)

    data: Dict[str, Any] = {
        "strategy": args.strategy,
        "b_requested": b,
        "b_effective": partition.n_bins,
        "d": fr.d,
        "d_tau": fr.d_tau,
        "cuts": partition.cuts.tolist(),
        "cut_values": partition.cut_values(fr.tau),
        "bin_counts": partition.bin_counts(fr.n_tau).tolist(),
        "representation_error": representation_error(fr, partition),
    }
    if cross is not None:
        data["frobenius_objective"] = frobenius_objective(partition, cross, fr.n_tau)
    if greedy is not None:
        data["trace_length"] = len(greedy.trace)
        data["restart"] = greedy.restart
        data["restart_objectives"] = greedy.restart_objectives
    print(_reporter(args).partition_report(data))
    return EXIT_CODES["success"]


def cmd_nuv(args: argparse.Namespace) -> int:
    template = read_vector(args.template)
    window = read_vector(args.window)
    if template.size != window.size:
        raise DomainError(f"Template has {template.size} values, window has {window.size}")
    fr = full_rank_decompose(template, args.round_digits)
    if args.cuts:
        try:
            cuts = [int(c) for c in args.cuts.split(",")]
        except ValueError:
            raise ConfigurationError(f"Invalid cuts: {args.cuts!r}") from None
        partition = BinPartition(cuts)
        strategy = "cuts"
    else:
        partition, _, _ = _partition(args, fr, _load_cross(args.cross, fr.d_tau))
        strategy = args.strategy
    value = nuv(assign_bins(fr, partition), window)
    print(_reporter(args).nuv_report(value, strategy, partition.n_bins, fr.d))
    return EXIT_CODES["success"]


def cmd_predict(args: argparse.Namespace) -> int:
    if args.mode == "noise":
        prediction = predict_noise(args.d, args.b)
    elif args.mode == "corollary":
        prediction = predict_corollary(args.d, args.b, args.sigma2m, args.sigma2)
    else:
        fr = full_rank_decompose(read_vector(args.template), args.round_digits)
        noise = NoiseModel(args.sigma2)
        if args.mode == "distorted":
            cross = _load_cross(args.cross, fr.d_tau)
            partition, _, _ = _partition(args, fr, cross)
            prediction = predict_distorted(partition, cross, fr.n_tau, noise)
        else:
            # centered distortions: Cross(m) = Cov(m') + tau tau^T
            tau_outer = np.outer(fr.tau, fr.tau)
            if args.mode == "localized":
                cov = _load_cross(args.cov, fr.d_tau)
                partition, _, _ = _partition(args, fr, cov + tau_outer)
                prediction = predict_localized(partition, fr, cov, noise)
            else:
                cov = args.sigma2m * np.eye(fr.d_tau)
                partition, _, _ = _partition(args, fr, cov + tau_outer)
                prediction = predict_spherical(partition, fr, args.sigma2m, noise)
    print(_reporter(args).prediction_report(prediction))
    return EXIT_CODES["success"]


def cmd_cross(args: argparse.Namespace) -> int:
    fr = full_rank_decompose(read_vector(args.template), args.round_digits)
    rng = np.random.Generator(np.random.Philox(args.seed))
    samples = gamma_family_sample(fr.tau, args.samples, rng, args.gamma_low, args.gamma_high)
    cross = estimate_cross(samples)
    write_matrix(args.output, cross.entries)
    logger.info("Wrote %dx%d cross-product matrix to %s", cross.dim, cross.dim, args.output)
    return EXIT_CODES["success"]


def _split(text: str) -> List[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def experiment_config(args: argparse.Namespace) -> ExperimentConfig:
    """Config file first, then regime preset, then explicit flags"""
    params: Dict[str, Any] = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as f:
            try:
                params = json.load(f)
            except json.JSONDecodeError as e:
                raise ConfigurationError(f"Invalid JSON in {args.config}: {e}") from e
        if not isinstance(params, dict):
            raise ConfigurationError(f"{args.config} must contain a JSON object")

    regime = args.regime or params.get("regime", REGIME_GENERAL)
    if regime not in REGIMES:
        raise ConfigurationError(f"Unknown regime: {regime}")
    params["regime"] = regime

    flags = {
        "trials": args.trials,
        "master_seed": args.seed,
        "greedy_restarts": args.restarts,
        "mcnemar_method": args.mcnemar_method,
        "eqf_convention": args.eqf_convention,
        "round_digits": args.round_digits,
        "strategies": _split(args.strategies) if args.strategies else None,
        "bin_specs": _split(args.bin_specs) if args.bin_specs else None,
    }
    params.update({k: v for k, v in flags.items() if v is not None})
    if args.no_rounding:
        params["round_digits"] = None
    if args.d_min is not None or args.d_max is not None:
        lo, hi = params.get("d_range", ExperimentConfig.__dataclass_fields__["d_range"].default)
        params["d_range"] = (args.d_min if args.d_min is not None else lo,
                             args.d_max if args.d_max is not None else hi)
    return ExperimentConfig.from_dict(params)


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch:
        return datetime.fromtimestamp(int(epoch), tz=timezone.utc).isoformat()
    return datetime.now(timezone.utc).isoformat()


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = experiment_config(args)
    out_dir = Path(args.output or os.environ.get(OUTPUT_DIR_ENV) or DEFAULT_OUTPUT_DIR)
    out_dir.mkdir(parents=True, exist_ok=True)

    records = run_experiment(cfg, threads=args.threads)
    result = aggregate(records, cfg)
    manifest = RunManifest(
        config=cfg.to_dict(),
        master_seed=cfg.master_seed,
        version=__version__,
        timestamp=_timestamp(),
        threads=args.threads,
    )

    write_trials_csv(out_dir / "trials.csv", records)
    write_json(out_dir / "aggregate.json", result)
    write_json(out_dir / "manifest.json", manifest)
    write_figure_series_csv(out_dir / "figure_series.csv", result)
    logger.info("Results written to %s", out_dir)
    if result.failed_trials:
        logger.warning("%d of %d trials excluded", result.failed_trials, result.trials)

    print(_reporter(args).aggregate_report(result))
    return EXIT_CODES["success"]


COMMANDS = {
    "bin": cmd_bin,
    "nuv": cmd_nuv,
    "predict": cmd_predict,
    "cross": cmd_cross,
    "simulate": cmd_simulate,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point; returns the process exit code"""
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args)
    try:
        return COMMANDS[args.command](args)
    except NuvError as e:
        logger.error("%s", e)
        return e.exit_code
    except OSError as e:
        logger.error("I/O error: %s", e)
        return EXIT_CODES["io_or_parse"]


if __name__ == "__main__":
    sys.exit(main())
