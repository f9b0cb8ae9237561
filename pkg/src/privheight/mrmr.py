"""Minimum-redundancy maximum-relevance feature selection, MID scheme.

Continuous features and target are discretized by equal-frequency
binning, then selection proceeds greedily: the first pick maximizes
relevance I(f; y); every later pick maximizes

    I(f; y) - (1/|S|) * sum_{s in S} I(f; s)

over the unselected features, S being the already-selected set.  Ties
break toward the lower feature index, making selection deterministic.
Mutual information is in nats.  The greedy rule scores features one at
a time, never groups, so sweeping the number of selected features can
fluctuate; that is inherent, not a bug.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class MrmrError(ValueError):
    pass


@dataclass(frozen=True)
class DiscretizationConfig:
    n_bins: int = 10

    def __post_init__(self) -> None:
        if self.n_bins < 2:
            raise MrmrError(f"n_bins must be >= 2, got {self.n_bins}")


@dataclass
class SelectionResult:
    selected_indices: list[int]
    relevance_scores: np.ndarray           # I(f; y) for every feature
    mid_scores_at_selection: np.ndarray    # score of each pick at its step

    def to_dict(self) -> dict:
        return {
            "selected_indices": [int(i) for i in self.selected_indices],
            "relevance_scores": self.relevance_scores.tolist(),
            "mid_scores_at_selection": self.mid_scores_at_selection.tolist(),
        }

    @staticmethod
    def from_dict(d: dict) -> "SelectionResult":
        return SelectionResult(
            selected_indices=[int(i) for i in d["selected_indices"]],
            relevance_scores=np.asarray(d["relevance_scores"], dtype=float),
            mid_scores_at_selection=np.asarray(d["mid_scores_at_selection"], dtype=float),
        )


def mutual_information(a, b) -> float:
    """I(a; b) in nats over the empirical joint distribution of two discrete vectors."""
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    if a.size != b.size:
        raise MrmrError(f"length mismatch: {a.size} vs {b.size}")
    if a.size == 0:
        raise MrmrError("empty input")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    n_a, n_b = ai.max() + 1, bi.max() + 1
    joint = np.zeros((n_a, n_b))
    np.add.at(joint, (ai, bi), 1.0)
    joint /= a.size
    pa = joint.sum(axis=1)
    pb = joint.sum(axis=0)
    nz = joint > 0
    ratio = joint[nz] / (pa[:, None] * pb[None, :])[nz]
    return float(np.sum(joint[nz] * np.log(ratio)))


def discretize(values, config: DiscretizationConfig = DiscretizationConfig()) -> np.ndarray:
    """Equal-frequency bin labels in [0, n_bins); tied values share the lower bin."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise MrmrError("empty input")
    if not np.all(np.isfinite(v)):
        raise MrmrError("values must be finite")
    n = v.size
    order = np.argsort(v, kind="stable")
    ranks = np.empty(n, dtype=int)
    ranks[order] = np.arange(n)
    bins = (ranks * config.n_bins) // n
    # ties: the whole group takes the bin of its first-ranked member
    sorted_vals = v[order]
    sorted_bins = bins[order]
    group_start = 0
    for i in range(1, n):
        if sorted_vals[i] != sorted_vals[group_start]:
            group_start = i
        else:
            sorted_bins[i] = sorted_bins[group_start]
    out = np.empty(n, dtype=int)
    out[order] = sorted_bins
    return out


def select_mid(features, target, k, config: DiscretizationConfig = DiscretizationConfig()) -> SelectionResult:
    """Greedy MID forward selection of k features against a continuous target."""
    X = np.atleast_2d(np.asarray(features, dtype=float))
    y = np.asarray(target, dtype=float).ravel()
    n, p = X.shape
    if n != y.size:
        raise MrmrError(f"{n} feature rows vs {y.size} targets")
    if n < 2:
        raise MrmrError("need at least 2 samples")
    if k > p:
        raise MrmrError(f"cannot select {k} of {p} features")
    if k < 0:
        raise MrmrError("k must be nonnegative")

    cols = [discretize(X[:, j], config) for j in range(p)]
    y_disc = discretize(y, config)
    relevance = np.array([mutual_information(c, y_disc) for c in cols])

    if k == 0:
        return SelectionResult([], relevance, np.zeros(0))

    selected = [int(np.argmax(relevance))]
    scores = [float(relevance[selected[0]])]
    redundancy_sum = np.zeros(p)
    pairwise_cache = {}

    def pair_mi(i, j):
        key = (min(i, j), max(i, j))
        if key not in pairwise_cache:
            pairwise_cache[key] = mutual_information(cols[key[0]], cols[key[1]])
        return pairwise_cache[key]

    while len(selected) < k:
        last = selected[-1]
        remaining = [j for j in range(p) if j not in selected]
        for j in remaining:
            redundancy_sum[j] += pair_mi(j, last)
        mid = relevance[remaining] - redundancy_sum[remaining] / len(selected)
        best_pos = int(np.argmax(mid))   # argmax takes the first (lowest index) tie
        selected.append(remaining[best_pos])
        scores.append(float(mid[best_pos]))

    return SelectionResult(selected, relevance, np.array(scores))
