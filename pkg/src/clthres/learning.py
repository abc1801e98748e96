"""CLThres: Chow-Liu tree learning followed by mutual-information thresholding."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .core import Edge, ForestModel, NodeDist, PairwiseDist
from .estimation import SampleMatrix, mi_from_counts, pair_counts


@dataclass(frozen=True)
class EdgeRanking:
    """Spanning-tree edges in the order Kruskal accepted them (MI descending)."""

    edges: tuple[Edge, ...]
    scores: tuple[float, ...]

    def __len__(self):
        return len(self.edges)

    @property
    def total_weight(self) -> float:
        return float(sum(self.scores))


def kruskal_mwst(mi) -> EdgeRanking:
    """Maximum-weight spanning tree of a complete graph with weights ``mi``.

    Ties are broken by the lexicographic order of ``(min(i,j), max(i,j))``.
    """
    w = np.asarray(mi, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValueError("weight matrix must be square")
    d = w.shape[0]
    if d < 2:
        raise ValueError("need at least two nodes")
    iu, ju = np.triu_indices(d, 1)
    scores = w[iu, ju]
    if not np.all(np.isfinite(scores)):
        raise ValueError("weights must be finite")
    # lexsort: last key is primary
    order = np.lexsort((ju, iu, -scores))
    parent = list(range(d))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    edges, kept = [], []
    for k in order:
        i, j = int(iu[k]), int(ju[k])
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            edges.append((i, j))
            kept.append(float(scores[k]))
            if len(edges) == d - 1:
                break
    return EdgeRanking(tuple(edges), tuple(kept))


def threshold_estimate(scores, eps: float) -> int:
    """Number of scores strictly above ``eps``; ties at ``eps`` are dropped."""
    if not eps > 0:
        raise ValueError("threshold must be positive")
    return int(sum(1 for s in scores if s > eps))


@dataclass(frozen=True)
class RegSchedule:
    """Regularisation threshold eps_n as a function of the sample size.

    Use :meth:`power`, :meth:`oracle` or :meth:`explicit` to construct.
    """

    kind: str
    beta: float | None = None
    eps: float | None = None
    table: Mapping[int, float] | Callable[[int], float] | None = None

    @classmethod
    def power(cls, beta: float) -> RegSchedule:
        beta = float(beta)
        if not 0.0 < beta < 1.0:
            raise ValueError("beta must lie in the open interval (0, 1)")
        return cls("power", beta=beta)

    @classmethod
    def oracle(cls, eps: float) -> RegSchedule:
        eps = float(eps)
        if not eps > 0:
            raise ValueError("oracle threshold must be positive")
        return cls("oracle", eps=eps)

    @classmethod
    def explicit(cls, table) -> RegSchedule:
        return cls("explicit", table=table)

    def __call__(self, n: int) -> float:
        if self.kind == "power":
            return float(n) ** (-self.beta)
        if self.kind == "oracle":
            return self.eps
        if self.kind == "explicit":
            try:
                eps = self.table(n) if callable(self.table) else self.table[n]
            except KeyError:
                raise ValueError(f"explicit schedule has no threshold for n={n}") from None
            if not eps > 0:
                raise ValueError(f"explicit threshold for n={n} is not positive")
            return float(eps)
        raise ValueError(f"unknown schedule kind {self.kind!r}")

    def describe(self) -> str:
        if self.kind == "power":
            return f"power(beta={self.beta})"
        if self.kind == "oracle":
            return f"oracle(eps={self.eps})"
        return "explicit"


@dataclass(frozen=True)
class LearnedModel:
    ranking: EdgeRanking
    k_hat: int
    eps: float
    model: ForestModel

    @property
    def edge_set(self) -> tuple[Edge, ...]:
        return self.ranking.edges[: self.k_hat]


def _types_model(counts: np.ndarray, n: int, r: int, edges) -> ForestModel:
    d = counts.shape[0]
    nodes = [NodeDist(np.diagonal(counts[i, i]) / n) for i in range(d)]
    tables = {(i, j): PairwiseDist(counts[i, j] / n) for i, j in edges}
    return ForestModel(d, r, tuple(edges), tuple(nodes), tables)


def chow_liu(s: SampleMatrix) -> EdgeRanking:
    return kruskal_mwst(mi_from_counts(pair_counts(s), s.n))


def clthres(s: SampleMatrix, sched: RegSchedule) -> LearnedModel:
    """Learn a forest: Chow-Liu ranking, threshold at ``sched(n)``, prune, project.

    The returned model keeps the empirical node types and the empirical
    pairwise types of the retained edges, which is the reverse I-projection
    of the joint type onto the learned forest.
    """
    counts = pair_counts(s)
    ranking = kruskal_mwst(mi_from_counts(counts, s.n))
    eps = sched(s.n)
    k_hat = threshold_estimate(ranking.scores, eps)
    model = _types_model(counts, s.n, s.r, ranking.edges[:k_hat])
    return LearnedModel(ranking, k_hat, eps, model)


def learn_path(s: SampleMatrix, betas) -> dict[float, LearnedModel]:
    """CLThres at several power schedules sharing one pass over the samples."""
    counts = pair_counts(s)
    ranking = kruskal_mwst(mi_from_counts(counts, s.n))
    out = {}
    for beta in betas:
        eps = RegSchedule.power(beta)(s.n)
        k_hat = threshold_estimate(ranking.scores, eps)
        out[beta] = LearnedModel(
            ranking, k_hat, eps, _types_model(counts, s.n, s.r, ranking.edges[:k_hat])
        )
    return out


def min_true_mi(model: ForestModel) -> float:
    """Smallest edge MI of a model; ``inf`` for the empty forest."""
    mis = model.edge_mi().values()
    return min(mis) if mis else math.inf
