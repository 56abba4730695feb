"""Experiment orchestration: seeded trials, efficiency tables, unmet-demand series.

A run realizes the instance once per trial, scores every configured strategy
on the same realization against the offline maximum matching, and aggregates
the per-trial efficiency ratios into mean and 95% confidence halfwidth rows.
Guided strategies share fractional weights learned once per experiment from a
dedicated substream, so the whole run is reproducible from (config, seed) and
independent of trial scheduling.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from datetime import datetime, timedelta
from typing import Sequence

import numpy as np

from .generators import FAMILIES, EmptyWindow, TripRecord, ZoneModel, build_nyc_instance
from .instance import StochasticInstance, realize
from .matching import full_edge_list, max_matching
from .rng import RngStream
from .strategies import StrategyConfig, run_strategy
from .weights import (
    CopyMarginals,
    FractionalSolution,
    monte_carlo_weights,
    per_copy_marginals,
    solution_from_json,
    solve_expected_lp,
)

log = logging.getLogger(__name__)

WEIGHT_SOURCES = ("lp", "montecarlo", "file")
INTERVAL = timedelta(minutes=10)


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run needs: instance source, strategies, trial counts, seed."""

    strategies: tuple[StrategyConfig, ...]
    family: str | None = None
    n: int | None = None
    instance_path: str | None = None
    trials: int = 100
    mc: int = 100
    seed: int = 0
    weights_in: str | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.mc < 1:
            raise ConfigError("Monte Carlo simulation count must be >= 1")
        if not self.strategies:
            raise ConfigError("at least one strategy is required")
        for cfg in self.strategies:
            if cfg.weights is not None and cfg.weights not in WEIGHT_SOURCES:
                raise ConfigError(f"unknown weight source {cfg.weights!r}")
        labels = [cfg.label for cfg in self.strategies]
        if len(set(labels)) != len(labels):
            raise ConfigError("duplicate strategy entries in the configuration")
        if self.family is not None and self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r} (choose from {sorted(FAMILIES)})")


@dataclass(frozen=True)
class EfficiencySummary:
    """Mean per-trial efficiency of one strategy with its 95% CI halfwidth."""

    strategy: str
    k: int | None
    mean: float
    ci95: float
    trials: int

    @property
    def label(self) -> str:
        return self.strategy if self.k is None else f"{self.strategy} k={self.k}"


@dataclass(frozen=True)
class UnmetDemandSeries:
    """Cumulative unmatched riders per strategy across simulation intervals."""

    timestamps: tuple[datetime, ...]
    cumulative: dict[str, tuple[float, ...]]


def ci95(samples: Sequence[float]) -> tuple[float, float]:
    """Sample mean and 1.96 * std / sqrt(T); a single sample has halfwidth 0."""
    if len(samples) == 0:
        raise ValueError("ci95 needs at least one sample")
    arr = np.asarray(samples, dtype=float)
    if len(arr) == 1:
        return float(arr[0]), 0.0
    return float(arr.mean()), float(1.96 * arr.std(ddof=1) / math.sqrt(len(arr)))


def resolve_instance(config: ExperimentConfig) -> StochasticInstance:
    from .instance import instance_from_json

    if config.instance_path is not None:
        with open(config.instance_path) as fh:
            return instance_from_json(fh.read())
    if config.family is None or config.n is None:
        raise ConfigError("either an instance file or family + n is required")
    return FAMILIES[config.family](config.n)


@dataclass(frozen=True)
class LearnedWeights:
    """Everything strategies may consume: one solution per source, plus the
    positional copy marginals the two-suggestion baseline is guided by."""

    solutions: dict[str, FractionalSolution]
    mgs_guidance: CopyMarginals | None = None

    def solution_for(self, cfg: StrategyConfig) -> FractionalSolution | None:
        return self.solutions.get(cfg.weights) if cfg.weights else None


def learn_weight_sources(
    instance: StochasticInstance, config: ExperimentConfig, base: RngStream
) -> LearnedWeights:
    """Learn each weight source any strategy asks for, once per experiment.

    The two-suggestion baseline configured with Monte Carlo weights is guided
    by per-copy marginals estimated with deterministic tie-breaking: the
    spread-promoting shuffle belongs to the guided sparsifier's weight
    construction, not to that baseline.
    """
    solutions: dict[str, FractionalSolution] = {}
    guidance = None
    for cfg in config.strategies:
        source = cfg.weights
        if source is None:
            continue
        if cfg.strategy == "mgs" and source == "montecarlo":
            if guidance is None:
                guidance = per_copy_marginals(instance, config.mc, base.substream("weights", "mgs"))
            continue
        if source in solutions:
            continue
        if source == "lp":
            solutions[source] = solve_expected_lp(instance)
        elif source == "montecarlo":
            solutions[source] = monte_carlo_weights(instance, config.mc, base.substream("weights"))
        elif source == "file":
            if config.weights_in is None:
                raise ConfigError("weight source 'file' needs --weights-in")
            with open(config.weights_in) as fh:
                solutions[source] = solution_from_json(instance, fh.read())
    return LearnedWeights(solutions=solutions, mgs_guidance=guidance)


def run_experiment(
    config: ExperimentConfig, instance: StochasticInstance | None = None
) -> list[EfficiencySummary]:
    """Score every configured strategy over seeded trials of one instance."""
    if instance is None:
        instance = resolve_instance(config)
    base = RngStream(config.seed)
    learned = learn_weight_sources(instance, config, base)

    ratios: dict[str, list[float]] = {cfg.label: [] for cfg in config.strategies}
    degenerate = 0
    for t in range(config.trials):
        graph = realize(instance, base.substream("realize", t))
        offline = max_matching(full_edge_list(graph))
        if offline.size == 0:
            degenerate += 1
            continue
        for cfg in config.strategies:
            if cfg.strategy == "offline":
                matched = offline.size
            else:
                outcome = run_strategy(
                    graph,
                    cfg,
                    base.substream("strategy", t, cfg.label),
                    x=learned.solution_for(cfg),
                    mgs_guidance=learned.mgs_guidance,
                )
                matched = outcome.matched
            ratios[cfg.label].append(matched / offline.size)
    if degenerate:
        log.warning("%d trials had an empty offline matching and were skipped", degenerate)
    if degenerate == config.trials:
        raise ConfigError("every trial had an empty offline matching; nothing to score")

    summaries = []
    for cfg in sorted(config.strategies, key=lambda c: (c.strategy, c.k if c.k is not None else -1)):
        mean, halfwidth = ci95(ratios[cfg.label])
        summaries.append(
            EfficiencySummary(
                strategy=cfg.strategy,
                k=cfg.k,
                mean=mean,
                ci95=halfwidth,
                trials=len(ratios[cfg.label]),
            )
        )
    return summaries


def default_interval_starts(trips: Sequence[TripRecord]) -> list[datetime]:
    """10-minute grid covering the trip data, offset so windows align with events."""
    if not trips:
        return []
    earliest = min(min(t.pickup_time, t.dropoff_time) for t in trips)
    latest = max(max(t.pickup_time, t.dropoff_time) for t in trips)
    floor = earliest.replace(minute=earliest.minute - earliest.minute % 10, second=0, microsecond=0)
    start = floor + INTERVAL / 2
    out = []
    t = start
    while t - INTERVAL / 2 <= latest:
        out.append(t)
        t += INTERVAL
    return out


def run_nyc_day(
    trips: Sequence[TripRecord],
    zones: ZoneModel,
    config: ExperimentConfig,
    start: datetime | None = None,
    intervals: int | None = None,
) -> UnmetDemandSeries:
    """Replay trip data in 10-minute intervals and accumulate unmet demand.

    Each interval builds its own instance and fractional weights; unmatched
    riders per strategy are averaged over ``config.trials`` realizations and
    accumulated.  Intervals with an empty half-window contribute zero.
    """
    if start is not None and intervals is not None:
        times = [start + j * INTERVAL for j in range(intervals)]
    else:
        times = default_interval_starts(list(trips))
        if intervals is not None:
            times = times[:intervals]
    if not times:
        raise ConfigError("no simulation intervals: trip data is empty")

    base = RngStream(config.seed)
    totals = {cfg.label: 0.0 for cfg in config.strategies}
    timestamps = []
    series: dict[str, list[float]] = {cfg.label: [] for cfg in config.strategies}
    for j, t in enumerate(times):
        timestamps.append(t)
        try:
            instance, _ = build_nyc_instance(list(trips), zones, t, base.substream("supply", j))
        except EmptyWindow as exc:
            log.info("interval %s skipped: %s", t.isoformat(), exc)
            for cfg in config.strategies:
                series[cfg.label].append(totals[cfg.label])
            continue
        learned = learn_weight_sources(instance, config, base.substream("interval", j))
        unmet = {cfg.label: 0.0 for cfg in config.strategies}
        for r in range(config.trials):
            graph = realize(instance, base.substream("nyc-realize", j, r))
            offline = max_matching(full_edge_list(graph))
            for cfg in config.strategies:
                if cfg.strategy == "offline":
                    matched = offline.size
                else:
                    outcome = run_strategy(
                        graph,
                        cfg,
                        base.substream("nyc-strategy", j, r, cfg.label),
                        x=learned.solution_for(cfg),
                        mgs_guidance=learned.mgs_guidance,
                    )
                    matched = outcome.matched
                unmet[cfg.label] += (graph.n - matched) / config.trials
        for cfg in config.strategies:
            totals[cfg.label] += unmet[cfg.label]
            series[cfg.label].append(totals[cfg.label])
    return UnmetDemandSeries(
        timestamps=tuple(timestamps),
        cumulative={label: tuple(values) for label, values in series.items()},
    )


def _fmt(value: float) -> str:
    return format(value, ".12g")


def render_results(results: list[EfficiencySummary] | UnmetDemandSeries, fmt: str) -> str:
    """Serialize summaries or a series as CSV or JSON text with bit-stable ordering."""
    if fmt not in ("csv", "json"):
        raise ConfigError(f"unknown output format {fmt!r}")
    if isinstance(results, UnmetDemandSeries):
        labels = sorted(results.cumulative)
        if fmt == "csv":
            lines = ["timestamp,strategy,cumulative_unmet"]
            for idx, t in enumerate(results.timestamps):
                for label in labels:
                    lines.append(f"{t.isoformat()},{label},{_fmt(results.cumulative[label][idx])}")
            payload = "\n".join(lines) + "\n"
        else:
            payload = json.dumps(
                {
                    "timestamps": [t.isoformat() for t in results.timestamps],
                    "cumulative_unmet": {label: list(results.cumulative[label]) for label in labels},
                },
                indent=2,
            )
    else:
        rows = sorted(results, key=lambda s: (s.strategy, s.k if s.k is not None else -1))
        if fmt == "csv":
            lines = ["strategy,k,mean,ci95,trials"]
            for s in rows:
                k = "" if s.k is None else str(s.k)
                lines.append(f"{s.strategy},{k},{_fmt(s.mean)},{_fmt(s.ci95)},{s.trials}")
            payload = "\n".join(lines) + "\n"
        else:
            payload = json.dumps(
                [
                    {"strategy": s.strategy, "k": s.k, "mean": s.mean, "ci95": s.ci95, "trials": s.trials}
                    for s in rows
                ],
                indent=2,
            )
    return payload


def emit_results(
    results: list[EfficiencySummary] | UnmetDemandSeries, path: str, fmt: str
) -> None:
    """Write summaries or a series to ``path``.

    Raises:
        OSError: if the path cannot be written.
    """
    payload = render_results(results, fmt)
    with open(path, "w") as fh:
        fh.write(payload)
