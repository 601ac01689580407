"""Seed-averaged comparisons between experiment configurations."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import ExperimentConfig
from .metrics import average_power, convergence_slot, final_window_mean, moving_average
from .run import RunTrace, run


@dataclass
class ConfigSummary:
    name: str
    seeds: tuple
    final_sinr: np.ndarray
    convergence: list
    avg_power: np.ndarray
    final_power: np.ndarray
    curve: np.ndarray
    traces: list = field(default_factory=list, repr=False)

    @property
    def final_mean(self) -> float:
        return float(self.final_sinr.mean())

    @property
    def final_std(self) -> float:
        return float(self.final_sinr.std(ddof=1)) if len(self.final_sinr) > 1 else 0.0

    @property
    def convergence_median(self) -> float:
        """Median over seeds; runs that never converge count as ``len(curve)``."""
        slots = [len(self.curve) if c is None else c for c in self.convergence]
        return float(np.median(slots))

    def convergence_filled(self) -> np.ndarray:
        return np.array([len(self.curve) if c is None else c for c in self.convergence], dtype=float)


def summarize(name: str, config: ExperimentConfig, traces: Sequence[RunTrace]) -> ConfigSummary:
    sinr = np.array([t.sinr for t in traces])
    return ConfigSummary(
        name=name,
        seeds=tuple(t.seed for t in traces),
        final_sinr=np.array([final_window_mean(s, config.final_window) for s in sinr]),
        convergence=[
            convergence_slot(s, config.convergence_fraction, config.convergence_window) for s in sinr
        ],
        avg_power=np.array([average_power(t.column("power_index"), t.sender_powers) for t in traces]),
        final_power=np.array(
            [average_power(t.column("power_index")[-config.final_window:], t.sender_powers) for t in traces]
        ),
        curve=moving_average(sinr.mean(axis=0), config.smoothing_window),
        traces=list(traces),
    )


def compare(configs: Sequence, seeds: Sequence[int], out_dir=None, keep_traces: bool = True) -> list:
    """Run every ``(name, config)`` pair over ``seeds`` and summarise.

    Seeds are sorted first so the result does not depend on their order.
    With ``out_dir`` set, ``curves.csv`` and ``summary.csv`` are written there.
    """
    named = [(c.label(), c) if isinstance(c, ExperimentConfig) else tuple(c) for c in configs]
    if len(named) < 2:
        raise ValueError("compare needs at least two configurations")
    slot_counts = {cfg.slots for _, cfg in named}
    if len(slot_counts) != 1:
        raise ValueError(f"configurations disagree on slot count: {sorted(slot_counts)}")
    seeds = sorted(int(s) for s in seeds)
    if not seeds:
        raise ValueError("need at least one seed")
    for _, cfg in named:
        cfg.validate()
    summaries = []
    for name, cfg in named:
        s = summarize(name, cfg, [run(cfg, seed) for seed in seeds])
        if not keep_traces:
            s.traces = []
        summaries.append(s)
    if out_dir is not None:
        write_comparison(summaries, out_dir)
    return summaries


SUMMARY_COLUMNS = (
    "name", "seeds", "final_sinr_mean", "final_sinr_std", "convergence_median", "avg_power_mean",
    "final_power_mean",
)


def write_comparison(summaries, out_dir) -> tuple:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    curves = out / "curves.csv"
    with open(curves, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["slot"] + [s.name for s in summaries])
        for i in range(len(summaries[0].curve)):
            w.writerow([i + 1] + [repr(float(s.curve[i])) for s in summaries])
    summary = out / "summary.csv"
    with open(summary, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for s in summaries:
            w.writerow([
                s.name, len(s.seeds), repr(s.final_mean), repr(s.final_std),
                repr(s.convergence_median), repr(float(s.avg_power.mean())),
                repr(float(s.final_power.mean())),
            ])
    return curves, summary


def format_table(summaries) -> str:
    width = max(len(s.name) for s in summaries)
    lines = [f"{'config':<{width}}  {'final SINR':>16}  {'conv. slot':>10}  {'avg P (W)':>9}"]
    for s in summaries:
        lines.append(
            f"{s.name:<{width}}  {s.final_mean:8.3f} ± {s.final_std:5.3f}  "
            f"{s.convergence_median:10.1f}  {s.avg_power.mean():9.2f}"
        )
    return "\n".join(lines)


def power_study(config: ExperimentConfig, seeds: Sequence[int], out_dir=None) -> dict:
    """Variable-power run against every constant-power baseline.

    Returns ``{"variable": summary, "constant": {power_watts: summary}}``.
    Each baseline still learns its channel; only the power is pinned.
    """
    variants = [("variable", config.with_overrides(constant_power_index=None))]
    for i, p in enumerate(config.sender_powers):
        variants.append((f"constant-{p:g}W", config.with_overrides(constant_power_index=i)))
    summaries = compare(variants, seeds, out_dir)
    return {
        "variable": summaries[0],
        "constant": {p: s for p, s in zip(config.sender_powers, summaries[1:])},
    }
