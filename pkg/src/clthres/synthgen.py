"""Synthetic forest models and exact ancestral sampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import (
    ForestModel,
    NodeDist,
    PairwiseDist,
    directed_decomposition,
    mutual_information,
    orient,
)
from .estimation import SampleMatrix


@dataclass(frozen=True)
class SeededRng:
    """Counter-based RNG stream: ``(seed, stream)`` fully determines the output.

    ``stream`` may be an int or a tuple of ints (a hierarchical stream key).
    """

    seed: int
    stream: int | tuple[int, ...] = 0

    def generator(self) -> np.random.Generator:
        key = self.stream if isinstance(self.stream, tuple) else (self.stream,)
        ss = np.random.SeedSequence(self.seed, spawn_key=tuple(int(k) for k in key))
        return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class StarForestSpec:
    """Binary star: hub 0 joined to nodes 1..k, remaining nodes isolated."""

    d: int
    k: int
    crossover: float = 0.3

    def __post_init__(self):
        if self.d < 2 or not 0 <= self.k <= self.d - 1:
            raise ValueError(f"need 0 <= k <= d-1, got d={self.d}, k={self.k}")
        if not 0.0 < self.crossover < 0.5:
            raise ValueError("crossover must lie in (0, 0.5)")


def build_star_forest(spec: StarForestSpec) -> ForestModel:
    uniform = NodeDist(np.full(2, 0.5))
    edge = PairwiseDist.binary_symmetric(spec.crossover)
    edges = tuple((0, j) for j in range(1, spec.k + 1))
    return ForestModel(
        spec.d, 2, edges, (uniform,) * spec.d, {e: edge for e in edges}, positive=True
    )


def uniform_spanning_tree(d: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    """Wilson's loop-erased random walk on the complete graph K_d."""
    in_tree = [False] * d
    nxt = [-1] * d
    root = int(rng.integers(d))
    in_tree[root] = True
    for start in rng.permutation(d):
        u = int(start)
        while not in_tree[u]:
            # uniform neighbour on K_d: any vertex other than u
            v = int(rng.integers(d - 1))
            nxt[u] = v if v < u else v + 1
            u = nxt[u]
        u = int(start)
        while not in_tree[u]:
            in_tree[u] = True
            u = nxt[u]
    return sorted((min(v, nxt[v]), max(v, nxt[v])) for v in range(d) if v != root)


def _positive_simplex(r, kappa, rng):
    return kappa + (1.0 - r * kappa) * rng.dirichlet(np.ones(r))


def build_random_forest(
    d: int,
    k: int,
    r: int,
    rng: np.random.Generator,
    kappa: float = 0.02,
    min_mi: float = 0.01,
    max_tries: int = 10_000,
) -> ForestModel:
    """Random forest model with ``k`` edges and strictly positive tables.

    The skeleton is a uniform spanning tree with ``d - 1 - k`` uniformly
    chosen edges deleted (not exactly uniform over k-edge forests). Root
    marginals and conditional rows have every entry at least ``kappa``;
    conditionals are redrawn until the edge MI reaches ``min_mi``.
    """
    if not 0 <= k <= d - 1:
        raise ValueError(f"infeasible forest: k={k} edges on d={d} nodes")
    if not 0 < kappa < 1.0 / r:
        raise ValueError("kappa must lie in (0, 1/r)")
    tree = uniform_spanning_tree(d, rng) if d > 1 else []
    keep = sorted(rng.choice(len(tree), size=k, replace=False)) if k else []
    edges = [tree[i] for i in keep]
    directed = orient(d, edges)
    marg: list = [None] * d
    tables = {}
    for i in directed.order:
        pa = directed.parent[i]
        if pa is None:
            marg[i] = _positive_simplex(r, kappa, rng)
            continue
        for _ in range(max_tries):
            cond = np.array([_positive_simplex(r, kappa, rng) for _ in range(r)])
            joint = marg[pa][:, None] * cond
            if mutual_information(PairwiseDist(joint / joint.sum())) >= min_mi:
                break
        else:
            raise ValueError(f"could not reach edge MI {min_mi} in {max_tries} draws")
        # child marginal is induced by the edge table, keeping them consistent
        marg[i] = joint.sum(axis=0)
        tables[(pa, i)] = PairwiseDist(joint)
    nodes = [NodeDist(m) for m in marg]
    return ForestModel(d, r, tuple(edges), tuple(nodes), tables, positive=True)


def sampling_tables(m: ForestModel):
    """Order, parent array and cumulative conditional tables for sampling."""
    directed = directed_decomposition(m)
    cdf = np.zeros((m.d, m.r, m.r))
    parent = np.full(m.d, -1, dtype=np.intp)
    for i in range(m.d):
        cond = directed.conditional(m, i)
        cdf[i] = np.cumsum(cond, axis=1)
        if directed.parent[i] is not None:
            parent[i] = directed.parent[i]
    return np.array(directed.order, dtype=np.intp), parent, cdf


def sample(m: ForestModel, n: int, rng, backend=None) -> SampleMatrix:
    """``n`` i.i.d. draws from ``m`` by ancestral sampling.

    ``rng`` may be a :class:`SeededRng` or a numpy Generator.
    """
    gen = rng.generator() if isinstance(rng, SeededRng) else rng
    order, parent, cdf = sampling_tables(m)
    u = gen.random((int(n), m.d))
    return SampleMatrix(kernels.ancestral_sample(order, parent, cdf, u, backend=backend), m.r)
