"""Variance-optimal fixed-size weighted sampling.

Given items with nonnegative weights and a budget ``k``, a single threshold
multiplier ``tau`` assigns each item the inclusion probability
``min(1, tau * weight)`` so that the probabilities sum to ``min(k, |E+|)``
over the positively weighted items ``E+``.  Items at probability one are
included deterministically; the rest are drawn by systematic probability-
proportional sampling over a randomly permuted order, which keeps the sample
size exact and pairwise inclusion correlations non-positive.  Included items
carry inverse-probability weights ``weight / prob`` whose sum equals the total
input weight on every single draw, not just in expectation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .rng import RngStream


class AllZeroWeights(ValueError):
    """Every supplied weight is zero; the caller must fall back to other weights."""


@dataclass(frozen=True)
class WeightedItem:
    item_id: int
    weight: float

    def __post_init__(self):
        if self.weight < 0:
            raise ValueError(f"item {self.item_id}: negative weight {self.weight}")


@dataclass(frozen=True)
class VarOptSample:
    """One fixed-size draw: members, their inclusion probabilities and IPW weights."""

    included: tuple[int, ...]
    inclusion_prob: dict[int, float]
    ipw_weight: dict[int, float]
    threshold: float


class VarOptSampler:
    """Threshold solution for a fixed (items, k), reusable across many draws.

    Solving for the threshold costs a sort; drawing costs a permutation plus a
    single uniform.  Callers that repeatedly sample the same weight vector
    (one per demand type, say) should build the sampler once.
    """

    def __init__(self, item_ids: Sequence[int], weights: Sequence[float], k: int):
        if k < 1:
            raise ValueError(f"budget k must be >= 1, got {k}")
        ids = [int(i) for i in item_ids]
        if len(set(ids)) != len(ids):
            raise ValueError("item ids must be unique")
        w = np.asarray(weights, dtype=float)
        if w.shape != (len(ids),):
            raise ValueError("weights must align with item ids")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        positive = w > 0
        if not positive.any():
            raise AllZeroWeights("all item weights are zero")

        self.k = k
        self._zero_ids = [i for i, keep in zip(ids, positive) if not keep]
        pos_ids = np.asarray([i for i, keep in zip(ids, positive) if keep])
        pos_w = w[positive]
        # Sort descending by weight, ties by id, so the threshold is deterministic.
        order = np.lexsort((pos_ids, -pos_w))
        pos_ids = pos_ids[order]
        pos_w = pos_w[order]

        npos = len(pos_ids)
        self.sample_size = min(k, npos)
        if k >= npos:
            # Budget covers the support: everything is deterministic.
            self.threshold = 1.0 / float(pos_w[-1])
            probs = np.ones(npos)
        else:
            # Find how many leading items cap at probability one: the split is
            # the smallest h with (k - h) * w[h] <= sum(w[h:]).
            suffix = np.cumsum(pos_w[::-1])[::-1]
            h = 0
            while (k - h) * pos_w[h] > suffix[h]:
                h += 1
            self.threshold = (k - h) / float(suffix[h])
            probs = np.minimum(1.0, self.threshold * pos_w)

        self._pos_ids = pos_ids
        self._pos_w = pos_w
        self._probs = probs
        deterministic = probs >= 1.0
        self._det_ids = pos_ids[deterministic]
        self._det_w = pos_w[deterministic]
        self._light_ids = pos_ids[~deterministic]
        self._light_probs = probs[~deterministic]
        self._light_w = pos_w[~deterministic]
        self._light_draws = self.sample_size - len(self._det_ids)

    def probabilities(self) -> dict[int, float]:
        """Inclusion probability per item id, zero-weight items included at 0."""
        out = {int(i): float(p) for i, p in zip(self._pos_ids, self._probs)}
        out.update({i: 0.0 for i in self._zero_ids})
        return out

    def draw(self, rng: RngStream) -> VarOptSample:
        chosen_ids = list(self._det_ids)
        chosen_w = list(self._det_w)
        m = self._light_draws
        if m > 0:
            gen = rng.generator
            perm = gen.permutation(len(self._light_ids))
            cum = np.cumsum(self._light_probs[perm])
            # Light probabilities sum to m by construction; rescale away float
            # residue so the systematic point set always lands inside.
            cum *= m / cum[-1]
            points = gen.random() + np.arange(m)
            picks = np.unique(np.searchsorted(cum, points, side="left"))
            picks = picks[picks < len(cum)]
            if len(picks) < m:
                # Sub-ulp boundary collision; complete the sample greedily.
                chosen = set(picks.tolist())
                missing = [i for i in np.argsort(-self._light_probs[perm]) if i not in chosen]
                picks = np.sort(np.concatenate([picks, missing[: m - len(picks)]]).astype(int))
            sel = perm[picks]
            chosen_ids.extend(self._light_ids[sel])
            chosen_w.extend(self._light_w[sel])

        prob_map = self.probabilities()
        order = np.argsort(chosen_ids)
        included = tuple(int(chosen_ids[i]) for i in order)
        ipw = {int(chosen_ids[i]): float(chosen_w[i]) / prob_map[int(chosen_ids[i])] for i in order}
        return VarOptSample(
            included=included,
            inclusion_prob=prob_map,
            ipw_weight=ipw,
            threshold=self.threshold,
        )


def compute_threshold(items: Sequence[WeightedItem], k: int) -> tuple[float, dict[int, float]]:
    """Threshold multiplier and inclusion probabilities for all items.

    Probabilities are ``min(1, tau * weight)`` and sum to ``min(k, |E+|)``;
    zero-weight items get probability 0 and are never selected.

    Raises:
        AllZeroWeights: if no item has positive weight.
    """
    sampler = VarOptSampler([it.item_id for it in items], [it.weight for it in items], k)
    return sampler.threshold, sampler.probabilities()


def draw(items: Sequence[WeightedItem], k: int, rng: RngStream) -> VarOptSample:
    """One fixed-size dependent draw of ``min(k, |E+|)`` items."""
    sampler = VarOptSampler([it.item_id for it in items], [it.weight for it in items], k)
    return sampler.draw(rng)


def estimate_subset_sum(sample: VarOptSample, subset: Iterable[int]) -> float:
    """Unbiased estimate of the total weight of ``subset`` from one sample."""
    wanted = set(subset)
    return float(sum(w for item, w in sample.ipw_weight.items() if item in wanted))
