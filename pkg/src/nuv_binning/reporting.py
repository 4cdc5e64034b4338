"""
Report generation for nuv-binning
"""

import json
from typing import Any, Dict, List, Optional

from .models import AggregateResult, Prediction

BOX_WIDTH = 50


def _banner(title: str) -> str:
    inner = BOX_WIDTH - 2
    return (
        "╔" + "═" * inner + "╗\n"
        "║" + title.center(inner) + "║\n"
        "╚" + "═" * inner + "╝\n"
    )


def _tree(items: List[tuple]) -> str:
    lines = []
    for i, (label, value) in enumerate(items):
        branch = "└─" if i == len(items) - 1 else "├─"
        lines.append(f"{branch} {label}: {value}")
    return "\n".join(lines) + "\n"


def _g(value: Optional[float], digits: int = 6) -> str:
    if value is None:
        return "n/a"
    return f"{value:.{digits}g}"


class ReportGenerator:
    """Renders partition, measure, prediction and experiment reports as text or JSON"""

    def __init__(self, format: str = "text"):
        if format not in ("text", "json"):
            raise ValueError(f"Unsupported format: {format}")
        self.format = format

    def _json(self, data: Dict[str, Any]) -> str:
        return json.dumps(data, indent=2, allow_nan=False)

    def partition_report(self, data: Dict[str, Any]) -> str:
        """
        Args:
            data: strategy, b_requested, b_effective, d, d_tau, cuts,
                cut_values, bin_counts, representation_error and optionally
                frobenius_objective, trace_length, restart
        """
        if self.format == "json":
            return self._json(data)
        items = [
            ("Strategy", data["strategy"]),
            ("Bins requested / effective", f"{data['b_requested']} / {data['b_effective']}"),
            ("Dimension d / unique d_tau", f"{data['d']} / {data['d_tau']}"),
            ("Representation error", _g(data["representation_error"], 12)),
        ]
        if data.get("frobenius_objective") is not None:
            items.append(("Frobenius objective", _g(data["frobenius_objective"], 12)))
        if data.get("trace_length") is not None:
            items.append(("Greedy moves / best restart", f"{data['trace_length'] - 1} / {data['restart']}"))

        report = _banner("NUV BINNING PARTITION") + "\n" + _tree(items) + "\n"
        report += "BINS\n" + "=" * BOX_WIDTH + "\n"
        for j, (lower, count) in enumerate(zip(data["cut_values"], data["bin_counts"])):
            report += f"  [{j}] from {lower:.12g}  ({count} coordinates)\n"
        return report

    def nuv_report(self, value: float, strategy: str, b: int, d: int) -> str:
        data = {"nuv": value, "explained_variance": 1.0 - value, "strategy": strategy, "b": b, "d": d}
        if self.format == "json":
            return self._json(data)
        return _tree([
            ("D(t, w)", f"{value:.12g}"),
            ("1 - D (r^2)", f"{1.0 - value:.12g}"),
            ("Binning", f"{strategy}, b={b}, d={d}"),
        ])

    def prediction_report(self, prediction: Prediction) -> str:
        if self.format == "json":
            return self._json(prediction.to_dict())
        items = [("Expected D", f"{prediction.value:.12g}"), ("d / b", f"{prediction.d} / {prediction.b}")]
        items += [(name, _g(value, 12)) for name, value in prediction.components.items()]
        return _banner(f"PREDICTION: {prediction.proposition.upper()}") + "\n" + _tree(items)

    def aggregate_report(self, result: AggregateResult) -> str:
        if self.format == "json":
            return self._json(result.to_dict())

        report = _banner(f"SIMULATION: {result.regime.upper()} REGIME") + "\n"
        report += "SUMMARY\n" + _tree([
            ("Trials", result.trials),
            ("Usable", result.usable_trials),
            ("Excluded", result.failed_trials),
            ("Noise D measured / predicted", f"{_g(result.alignment['mean_measured_noise'])} / "
                                             f"{_g(result.alignment['mean_predicted_noise'])}"),
            ("Distorted D measured / predicted", f"{_g(result.alignment['mean_measured_distorted'])} / "
                                                 f"{_g(result.alignment['mean_predicted_distorted'])}"),
        ]) + "\n"

        report += "AUC BY STRATEGY\n" + "=" * BOX_WIDTH + "\n"
        for name, summary in result.strategies.items():
            report += f"  {name:<8} pooled {summary['auc']:.3f}   mean of specs {summary['mean_spec_auc']:.3f}\n"

        specs = list(dict.fromkeys(c["bin_spec"] for c in result.cells))
        report += "\nAUC BY BIN SPEC\n" + "=" * BOX_WIDTH + "\n"
        report += "  " + " " * 8 + "".join(f"{s:>9}" for s in specs) + "\n"
        for name in result.strategies:
            row = {c["bin_spec"]: c["auc"] for c in result.cells if c["strategy"] == name}
            report += f"  {name:<8}" + "".join(f"{row[s]:>9.3f}" for s in specs) + "\n"

        names = result.mcnemar["strategies"]
        report += "\nMCNEMAR P-VALUES\n" + "=" * BOX_WIDTH + "\n"
        report += "  " + " " * 8 + "".join(f"{n:>10}" for n in names) + "\n"
        for name, row in zip(names, result.mcnemar["p_values"]):
            report += f"  {name:<8}" + "".join(f"{p:>10.2g}" for p in row) + "\n"
        return report
