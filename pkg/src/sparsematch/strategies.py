"""The evaluated matching strategies.

Local sparsifiers (guided fixed-size sampling and uniform random subsets)
prune each arrival's edges independently before a central maximum matching;
online baselines (ranking, two-suggestion guidance) commit irrevocably per
arrival; the offline optimum sees the whole realization.  Per-arrival
randomness is drawn from substreams keyed by arrival index, so one arrival's
selection never depends on the other arrivals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .instance import RealizedGraph
from .matching import BipartiteEdgeList, full_edge_list, max_matching
from .rng import RngStream
from .varopt import VarOptSampler
from .weights import CopyMarginals, FractionalSolution

STRATEGY_NAMES = ("offline", "kvv", "random", "mgs", "varopt")


class UnknownStrategy(ValueError):
    """Strategy name outside the supported set."""


@dataclass(frozen=True)
class SparsifierReport:
    """Edges one arrival reports to the coordinator, with sampling metadata."""

    arrival_index: int
    selected: tuple[int, ...]
    inclusion_probs: tuple[float, ...]
    ipw_weights: tuple[float, ...] | None


@dataclass(frozen=True)
class StrategyOutcome:
    """Matched count, number of reported/committed edges, per-arrival indicator."""

    matched: int
    sparsified_edges: int
    matched_arrivals: tuple[bool, ...]


@dataclass(frozen=True)
class StrategyConfig:
    """One strategy plus its parameters (budget k, weight source for guided ones)."""

    strategy: str
    k: int | None = None
    weights: str | None = None

    def __post_init__(self):
        if self.strategy not in STRATEGY_NAMES:
            raise UnknownStrategy(f"unknown strategy {self.strategy!r}")
        if self.strategy in ("random", "varopt"):
            if self.k is None or self.k < 1:
                raise ValueError(f"strategy {self.strategy!r} needs a budget k >= 1")

    @property
    def label(self) -> str:
        return self.strategy if self.k is None else f"{self.strategy} k={self.k}"


def varopt_sparsify(
    graph: RealizedGraph, x: FractionalSolution, k: int, rng: RngStream
) -> list[SparsifierReport]:
    """Guided local sparsifier: per-arrival fixed-size draws weighted by x.

    Each arrival of type t samples min(k, support size) of its compatible
    resources with probabilities proportional (after thresholding) to the
    fractional values x_tj.  Types whose fractional row is all zero fall back
    to uniform weights over the full compatibility set.
    """
    if k < 1:
        raise ValueError(f"budget k must be >= 1, got {k}")
    samplers: dict[int, VarOptSampler | None] = {}
    reports = []
    for i, type_id in graph.arrivals:
        if type_id not in samplers:
            ids, values = x.support_of(type_id)
            if ids:
                samplers[type_id] = VarOptSampler(ids, values, k)
            else:
                compatible = graph.instance.compatible_of(type_id)
                if compatible:
                    uniform = [1.0 / len(compatible)] * len(compatible)
                    samplers[type_id] = VarOptSampler(compatible, uniform, k)
                else:
                    samplers[type_id] = None
        sampler = samplers[type_id]
        if sampler is None:
            reports.append(SparsifierReport(i, (), (), ()))
            continue
        sample = sampler.draw(rng.substream("arrival", i))
        reports.append(
            SparsifierReport(
                arrival_index=i,
                selected=sample.included,
                inclusion_probs=tuple(sample.inclusion_prob[r] for r in sample.included),
                ipw_weights=tuple(sample.ipw_weight[r] for r in sample.included),
            )
        )
    return reports


def random_subgraph(graph: RealizedGraph, k: int, rng: RngStream) -> list[SparsifierReport]:
    """Naive sparsifier: a uniform subset of at most k compatible edges per arrival."""
    if k < 1:
        raise ValueError(f"budget k must be >= 1, got {k}")
    reports = []
    for i, _ in graph.arrivals:
        compatible = graph.edges_for(i)
        degree = len(compatible)
        if degree <= k:
            selected = compatible
            prob = 1.0
        else:
            gen = rng.substream("arrival", i).generator
            picks = gen.choice(degree, size=k, replace=False)
            selected = tuple(compatible[p] for p in sorted(picks))
            prob = k / degree
        reports.append(
            SparsifierReport(
                arrival_index=i,
                selected=selected,
                inclusion_probs=(prob,) * len(selected),
                ipw_weights=None,
            )
        )
    return reports


def kvv_ranking(graph: RealizedGraph, rng: RngStream) -> StrategyOutcome:
    """Classic online ranking: arrivals greedily take their best-ranked free neighbor."""
    rank = rng.generator.permutation(graph.instance.resource_count)
    taken = np.zeros(graph.instance.resource_count, dtype=bool)
    matched_flags = []
    matched = 0
    for i, _ in graph.arrivals:
        best = -1
        best_rank = None
        for r in graph.edges_for(i):
            if not taken[r] and (best_rank is None or rank[r] < best_rank):
                best = r
                best_rank = rank[r]
        if best >= 0:
            taken[best] = True
            matched += 1
            matched_flags.append(True)
        else:
            matched_flags.append(False)
    return StrategyOutcome(matched, matched, tuple(matched_flags))


def _sample_weighted(ids, values, gen, exclude: int | None = None) -> int | None:
    pairs = [(i, v) for i, v in zip(ids, values) if i != exclude]
    if not pairs:
        return None
    probs = np.asarray([v for _, v in pairs], dtype=float)
    probs = probs / probs.sum()
    return int(pairs[gen.choice(len(pairs), p=probs)][0])


def mgs(
    graph: RealizedGraph,
    x: FractionalSolution | None,
    rng: RngStream,
    guidance: CopyMarginals | None = None,
) -> StrategyOutcome:
    """Two-suggestion online baseline guided by offline marginals.

    Per type, a first-choice resource is sampled proportionally to the
    marginals and an independent second choice from the renormalized
    remainder.  The c-th realized copy of a type commits to its c-th
    suggestion if that resource is still free; copies beyond the second go
    unmatched (both suggestions are necessarily taken by then).

    With ``guidance`` the two choices come from the positional marginals of
    the first and second copy (the faithful form); otherwise both are drawn
    from ``x``.  Types without marginal support fall back to a uniform first
    choice over their compatibility set.
    """
    if x is None and guidance is None:
        raise ValueError("mgs needs marginals: a fractional solution or copy guidance")
    gen = rng.substream("guidance").generator
    suggestions: dict[int, tuple[int | None, int | None]] = {}
    for j in range(graph.instance.type_count):
        if guidance is not None:
            first_ids, first_vals = guidance.first.get(j, ((), ()))
            second_ids, second_vals = guidance.second.get(j, ((), ()))
        else:
            first_ids, first_vals = x.support_of(j)
            second_ids, second_vals = first_ids, first_vals
        first = _sample_weighted(first_ids, first_vals, gen)
        if first is None:
            compatible = graph.instance.compatible_of(j)
            if compatible:
                first = int(compatible[gen.choice(len(compatible))])
        second = _sample_weighted(second_ids, second_vals, gen, exclude=first)
        suggestions[j] = (first, second)

    taken = np.zeros(graph.instance.resource_count, dtype=bool)
    copies_seen: dict[int, int] = {}
    matched_flags = []
    matched = 0
    for _, type_id in graph.arrivals:
        copy = copies_seen.get(type_id, 0) + 1
        copies_seen[type_id] = copy
        choice = suggestions[type_id][copy - 1] if copy <= 2 else None
        hit = choice is not None and not taken[choice]
        if hit:
            taken[choice] = True
            matched += 1
        matched_flags.append(hit)
    return StrategyOutcome(matched, matched, tuple(matched_flags))


def _coordinate(graph: RealizedGraph, reports: list[SparsifierReport]) -> StrategyOutcome:
    """Central matching on the union of reported edges."""
    edges = tuple((rep.arrival_index, r) for rep in reports for r in rep.selected)
    subgraph = BipartiteEdgeList(graph.n, graph.instance.resource_count, edges)
    result = max_matching(subgraph)
    flags = [True] * graph.n
    for i in result.unmatched_left:
        flags[i] = False
    return StrategyOutcome(result.size, len(edges), tuple(flags))


def run_strategy(
    graph: RealizedGraph,
    config: StrategyConfig,
    rng: RngStream,
    x: FractionalSolution | None = None,
    mgs_guidance: CopyMarginals | None = None,
) -> StrategyOutcome:
    """Run one configured strategy on a realization.

    Sparsifier strategies report edges and are scored by the maximum matching
    of the reported subgraph; online strategies are scored by their own
    irrevocable matches; offline is the full-information maximum matching.
    """
    if config.strategy == "offline":
        result = max_matching(full_edge_list(graph))
        flags = [True] * graph.n
        for i in result.unmatched_left:
            flags[i] = False
        return StrategyOutcome(result.size, graph.edge_count, tuple(flags))
    if config.strategy == "kvv":
        return kvv_ranking(graph, rng)
    if config.strategy == "mgs":
        return mgs(graph, x, rng, guidance=mgs_guidance)
    if config.strategy == "random":
        return _coordinate(graph, random_subgraph(graph, config.k, rng))
    if config.strategy == "varopt":
        if x is None:
            raise ValueError("varopt needs a fractional solution")
        return _coordinate(graph, varopt_sparsify(graph, x, config.k, rng))
    raise UnknownStrategy(f"unknown strategy {config.strategy!r}")
