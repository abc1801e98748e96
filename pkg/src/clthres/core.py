"""Discrete distributions, information measures and forest-structured models.

All quantities are in nats. Divergences that are infinite because of an
absolute-continuity failure are reported as ``math.inf`` rather than raised.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import deque
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

# Tolerances for normalisation at construction, marginal consistency between
# node and edge tables, and agreement with brute-force oracles.
NORMALIZATION_TOL = 1e-12
CONSISTENCY_TOL = 1e-10
ORACLE_TOL = 1e-9
# Mutual information this far below zero is round-off and clamped.
MI_CLAMP_TOL = 1e-12

Edge = tuple[int, int]


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=np.float64)
    arr.setflags(write=False)
    return arr


def _xlogy_ratio(p: np.ndarray, q: np.ndarray) -> float:
    """Sum of p*log(p/q) with 0*log(0/.) = 0; inf if p > 0 where q = 0."""
    mask = p > 0
    if np.any(q[mask] <= 0):
        return math.inf
    # fsum is correctly rounded, so the result does not depend on term order
    return math.fsum((p[mask] * np.log(p[mask] / q[mask])).tolist())


def canonical_edge(i: int, j: int) -> Edge:
    i, j = int(i), int(j)
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class NodeDist:
    """Distribution of a single variable over ``range(r)``."""

    probs: np.ndarray

    def __post_init__(self):
        p = _frozen(self.probs)
        if p.ndim != 1 or p.size < 2:
            raise ValueError("NodeDist needs a 1-d array with at least 2 entries")
        if np.any(p < 0) or abs(p.sum() - 1.0) > NORMALIZATION_TOL:
            raise ValueError(f"not a probability vector: {p}")
        object.__setattr__(self, "probs", p)

    @property
    def r(self) -> int:
        return self.probs.size

    def entropy(self) -> float:
        p = self.probs[self.probs > 0]
        return float(-np.sum(p * np.log(p)))


@dataclass(frozen=True)
class PairwiseDist:
    """Joint distribution of a pair of variables, rows index the first one."""

    table: np.ndarray

    def __post_init__(self):
        t = _frozen(self.table)
        if t.ndim != 2 or t.shape[0] != t.shape[1] or t.shape[0] < 2:
            raise ValueError("PairwiseDist needs a square r x r table with r >= 2")
        if np.any(t < 0) or abs(t.sum() - 1.0) > NORMALIZATION_TOL:
            raise ValueError(f"not a joint probability table: {t}")
        object.__setattr__(self, "table", t)

    @property
    def r(self) -> int:
        return self.table.shape[0]

    def row_marginal(self) -> NodeDist:
        return NodeDist(self.table.sum(axis=1))

    def col_marginal(self) -> NodeDist:
        return NodeDist(self.table.sum(axis=0))

    def transpose(self) -> PairwiseDist:
        return PairwiseDist(self.table.T)

    @classmethod
    def product(cls, px, py) -> PairwiseDist:
        px = px.probs if isinstance(px, NodeDist) else np.asarray(px, dtype=float)
        py = py.probs if isinstance(py, NodeDist) else np.asarray(py, dtype=float)
        return cls(np.outer(px, py))

    @classmethod
    def binary_symmetric(cls, crossover: float) -> PairwiseDist:
        """Uniform input through a binary symmetric channel."""
        c = float(crossover)
        return cls([[(1 - c) / 2, c / 2], [c / 2, (1 - c) / 2]])


def mutual_information(p: PairwiseDist) -> float:
    t = p.table
    mi = _xlogy_ratio(t, np.outer(t.sum(axis=1), t.sum(axis=0)))
    if -MI_CLAMP_TOL <= mi < 0:
        return 0.0
    return mi


def kl_divergence(p: PairwiseDist, q: PairwiseDist) -> float:
    if p.r != q.r:
        raise ValueError("alphabet sizes differ")
    return _xlogy_ratio(p.table, q.table)


def conditional_kl(p: PairwiseDist, q: PairwiseDist) -> float:
    """D(p_{X|Y} || q_{X|Y} | p_Y): divergence of the column-conditionals.

    Columns index Y. Columns where ``p_Y`` vanishes carry no weight.
    """
    if p.r != q.r:
        raise ValueError("alphabet sizes differ")
    py = p.table.sum(axis=0)
    qy = q.table.sum(axis=0)
    total = 0.0
    for y in np.nonzero(py > 0)[0]:
        if qy[y] <= 0:
            return math.inf
        term = _xlogy_ratio(p.table[:, y] / py[y], q.table[:, y] / qy[y])
        if math.isinf(term):
            return math.inf
        total += py[y] * term
    return total


def _find(parent: list[int], a: int) -> int:
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a


def is_forest(d: int, edges: Iterable[Edge]) -> bool:
    """True when ``edges`` is an acyclic simple graph on ``range(d)``."""
    parent = list(range(d))
    for i, j in edges:
        if not (0 <= i < d and 0 <= j < d) or i == j:
            return False
        ri, rj = _find(parent, i), _find(parent, j)
        if ri == rj:
            return False
        parent[ri] = rj
    return True


def components(d: int, edges: Iterable[Edge]) -> list[list[int]]:
    """Connected components as sorted node lists, ordered by smallest node."""
    parent = list(range(d))
    for i, j in edges:
        ri, rj = _find(parent, i), _find(parent, j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    groups: dict[int, list[int]] = {}
    for v in range(d):
        groups.setdefault(_find(parent, v), []).append(v)
    return sorted(groups.values(), key=lambda g: g[0])


@dataclass(frozen=True)
class ForestModel:
    """A distribution that factorises over the nodes and edges of a forest.

    ``edge_marginals`` is keyed by canonical ``(i, j)`` with ``i < j``; the
    table rows index node ``i``. Set ``positive=True`` to additionally assert
    that every stored probability is strictly positive.
    """

    d: int
    r: int
    edges: tuple[Edge, ...]
    node_marginals: tuple[NodeDist, ...]
    edge_marginals: Mapping[Edge, PairwiseDist]
    positive: bool = False
    _adj: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        edges = tuple(sorted(canonical_edge(i, j) for i, j in self.edges))
        if len(set(edges)) != len(edges) or not is_forest(self.d, edges):
            raise ValueError(f"edges do not form a forest on {self.d} nodes: {edges}")
        nodes = tuple(
            m if isinstance(m, NodeDist) else NodeDist(m) for m in self.node_marginals
        )
        if len(nodes) != self.d or any(m.r != self.r for m in nodes):
            raise ValueError("need one node marginal of size r per node")
        tables = {}
        for (i, j), pd in self.edge_marginals.items():
            e = canonical_edge(i, j)
            pd = pd if isinstance(pd, PairwiseDist) else PairwiseDist(pd)
            if (i, j) != e:
                pd = pd.transpose()
            tables[e] = pd
        if set(tables) != set(edges):
            raise ValueError("edge_marginals keys must match edges")
        for (i, j), pd in tables.items():
            if pd.r != self.r:
                raise ValueError(f"edge ({i},{j}) has wrong alphabet size")
            if (
                np.max(np.abs(pd.table.sum(axis=1) - nodes[i].probs)) > CONSISTENCY_TOL
                or np.max(np.abs(pd.table.sum(axis=0) - nodes[j].probs)) > CONSISTENCY_TOL
            ):
                raise ValueError(f"edge ({i},{j}) marginals disagree with node marginals")
        if self.positive:
            if any(np.any(m.probs <= 0) for m in nodes) or any(
                np.any(pd.table <= 0) for pd in tables.values()
            ):
                raise ValueError("model declared positive has a zero probability")
        adj: list[list[int]] = [[] for _ in range(self.d)]
        for i, j in edges:
            adj[i].append(j)
            adj[j].append(i)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "node_marginals", nodes)
        object.__setattr__(self, "edge_marginals", MappingProxyType(tables))
        object.__setattr__(self, "_adj", tuple(tuple(sorted(a)) for a in adj))

    @classmethod
    def product(cls, node_marginals: Sequence) -> ForestModel:
        nodes = [m if isinstance(m, NodeDist) else NodeDist(m) for m in node_marginals]
        return cls(len(nodes), nodes[0].r, (), tuple(nodes), {})

    def neighbors(self, i: int) -> tuple[int, ...]:
        return self._adj[i]

    def edge_table(self, i: int, j: int) -> np.ndarray:
        """Joint table of (X_i, X_j) for an edge, rows indexing ``i``."""
        t = self.edge_marginals[canonical_edge(i, j)].table
        return t if i < j else t.T

    def edge_mi(self) -> dict[Edge, float]:
        return {e: mutual_information(pd) for e, pd in self.edge_marginals.items()}

    def joint(self) -> np.ndarray:
        """Full joint table of shape ``(r,) * d``; only for small ``d``."""
        if self.r**self.d > 2**24:
            raise ValueError("joint table too large to materialise")
        states = np.array(list(itertools.product(range(self.r), repeat=self.d)))
        return np.exp(log_likelihood(self, states)).reshape((self.r,) * self.d)

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "r": self.r,
            "edges": [list(e) for e in self.edges],
            "node_marginals": [m.probs.tolist() for m in self.node_marginals],
            "edge_marginals": {
                f"{i}-{j}": pd.table.tolist() for (i, j), pd in self.edge_marginals.items()
            },
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> ForestModel:
        edge_tables = {}
        for key, table in doc["edge_marginals"].items():
            i, j = (int(v) for v in key.split("-"))
            edge_tables[(i, j)] = PairwiseDist(table)
        return cls(
            int(doc["d"]),
            int(doc["r"]),
            tuple(tuple(e) for e in doc["edges"]),
            tuple(NodeDist(m) for m in doc["node_marginals"]),
            edge_tables,
        )

    def to_json(self, **kwargs) -> str:
        # json writes floats with repr(), which round-trips exactly
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text: str) -> ForestModel:
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class DirectedForest:
    """Rooted orientation of a forest. ``parent[i]`` is None for roots."""

    roots: tuple[int, ...]
    parent: tuple[int | None, ...]
    order: tuple[int, ...]

    def conditional(self, m: ForestModel, i: int) -> np.ndarray:
        """Rows of P(X_i | X_parent); a root gets one row, its marginal."""
        pa = self.parent[i]
        if pa is None:
            return m.node_marginals[i].probs[None, :]
        joint = m.edge_table(pa, i)
        pm = joint.sum(axis=1)
        cond = np.empty_like(joint)
        for a in range(m.r):
            # parent values of probability zero never occur; any row will do
            cond[a] = joint[a] / pm[a] if pm[a] > 0 else m.node_marginals[i].probs
        return cond

    def log_likelihood(self, m: ForestModel, x) -> np.ndarray | float:
        """Log-probability from the product of conditionals in root-to-leaf order."""
        x = np.asarray(x, dtype=np.intp)
        single = x.ndim == 1
        x = np.atleast_2d(x)
        out = np.zeros(x.shape[0])
        with np.errstate(divide="ignore"):
            for i in self.order:
                cond = self.conditional(m, i)
                pa = self.parent[i]
                rows = x[:, pa] if pa is not None else np.zeros(x.shape[0], dtype=np.intp)
                out += np.log(cond[rows, x[:, i]])
        return float(out[0]) if single else out


def orient(d: int, edges: Sequence[Edge], roots: Sequence[int] | None = None) -> DirectedForest:
    """Root each component of the forest ``(range(d), edges)`` and orient it."""
    comps = components(d, edges)
    if roots is None:
        roots = [c[0] for c in comps]
    else:
        roots = [int(v) for v in roots]
        owner = {v: k for k, c in enumerate(comps) for v in c}
        if len(roots) != len(comps) or sorted(owner.get(v, -1) for v in roots) != list(
            range(len(comps))
        ):
            raise ValueError("roots must contain exactly one node per component")
    adj: list[list[int]] = [[] for _ in range(d)]
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    parent: list[int | None] = [None] * d
    order: list[int] = []
    seen = [False] * d
    for root in roots:
        seen[root] = True
        queue = deque([root])
        while queue:
            v = queue.popleft()
            order.append(v)
            for w in sorted(adj[v]):
                if not seen[w]:
                    seen[w] = True
                    parent[w] = v
                    queue.append(w)
    return DirectedForest(tuple(roots), tuple(parent), tuple(order))


def directed_decomposition(m: ForestModel, roots: Sequence[int] | None = None) -> DirectedForest:
    return orient(m.d, m.edges, roots)


def _path(m: ForestModel, i: int, j: int) -> list[int] | None:
    prev = {i: None}
    queue = deque([i])
    while queue:
        v = queue.popleft()
        if v == j:
            break
        for w in m.neighbors(v):
            if w not in prev:
                prev[w] = v
                queue.append(w)
    if j not in prev:
        return None
    path = [j]
    while path[-1] != i:
        path.append(prev[path[-1]])
    return path[::-1]


def _transition(m: ForestModel, a: int, b: int) -> np.ndarray:
    joint = m.edge_table(a, b)
    pa = joint.sum(axis=1, keepdims=True)
    return np.divide(joint, pa, out=np.zeros_like(joint), where=pa > 0)


def pairwise_marginal(m: ForestModel, i: int, j: int) -> PairwiseDist:
    """Exact joint of (X_i, X_j) under ``m``, rows indexing ``i``."""
    if i == j:
        raise ValueError("pairwise_marginal needs two distinct nodes")
    e = canonical_edge(i, j)
    if e in m.edge_marginals:
        return PairwiseDist(m.edge_table(i, j))
    path = _path(m, i, j)
    if path is None:
        return PairwiseDist.product(m.node_marginals[i], m.node_marginals[j])
    acc = np.diag(m.node_marginals[i].probs)
    for a, b in zip(path, path[1:]):
        acc = acc @ _transition(m, a, b)
    # renormalise away accumulated round-off
    return PairwiseDist(acc / acc.sum())


def log_likelihood(m: ForestModel, x) -> np.ndarray | float:
    """Log-probability of one state (1-d) or each row of a 2-d array.

    Configurations of zero probability give ``-inf``.
    """
    x = np.asarray(x, dtype=np.intp)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != m.d:
        raise ValueError(f"expected {m.d} symbols per state, got {x.shape[1]}")
    out = np.zeros(x.shape[0])
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = [np.log(nd.probs) for nd in m.node_marginals]
        for i in range(m.d):
            out += logs[i][x[:, i]]
        for (i, j), pd in m.edge_marginals.items():
            t = pd.table
            out += np.log(t[x[:, i], x[:, j]]) - logs[i][x[:, i]] - logs[j][x[:, j]]
    out[np.isnan(out)] = -np.inf
    return float(out[0]) if single else out


def _expected_log(p_tab: np.ndarray, q_tab: np.ndarray) -> float:
    """E_p[log q] with 0*log(.) = 0; -inf when p > 0 where q = 0."""
    mask = p_tab > 0
    if np.any(q_tab[mask] <= 0):
        return -math.inf
    return float(np.sum(p_tab[mask] * np.log(q_tab[mask])))


def forest_kl(p: ForestModel, q: ForestModel) -> float:
    """Exact D(p || q) for two forest models on the same nodes."""
    if p.d != q.d or p.r != q.r:
        raise ValueError("models must share d and r")
    neg_entropy = -sum(nd.entropy() for nd in p.node_marginals)
    neg_entropy += sum(p.edge_mi().values())
    cross = 0.0
    for i in range(p.d):
        term = _expected_log(p.node_marginals[i].probs, q.node_marginals[i].probs)
        if math.isinf(term):
            return math.inf
        cross += term
    for (i, j), qd in q.edge_marginals.items():
        pij = pairwise_marginal(p, i, j).table
        if _expected_log(pij, qd.table) == -math.inf:
            return math.inf
        qi = q.node_marginals[i].probs
        qj = q.node_marginals[j].probs
        mask = pij > 0
        ratio = qd.table / np.outer(qi, qj)
        cross += float(np.sum(pij[mask] * np.log(ratio[mask])))
    return max(neg_entropy - cross, 0.0)


def _joint_marginals(joint: np.ndarray):
    d = joint.ndim
    nodes = [joint.sum(axis=tuple(a for a in range(d) if a != i)) for i in range(d)]

    def pair(i, j):
        t = joint.sum(axis=tuple(a for a in range(d) if a not in (i, j)))
        return t if i < j else t.T

    return nodes, pair


def _check_joint(joint) -> np.ndarray:
    joint = np.asarray(joint, dtype=np.float64)
    r = joint.shape[0]
    if joint.ndim < 2 or any(s != r for s in joint.shape):
        raise ValueError("joint must have shape (r,) * d with d >= 2")
    if np.any(joint < 0) or abs(joint.sum() - 1.0) > 1e-9:
        raise ValueError("joint is not a probability table")
    return joint


def project_onto_structure(p, t: Iterable[Edge]) -> ForestModel:
    """Reverse I-projection of ``p`` onto distributions Markov on forest ``t``.

    ``p`` is a ForestModel or an exact joint table of shape ``(r,) * d``. The
    minimiser of D(p || .) keeps p's node and pairwise marginals on ``t``.
    """
    t = tuple(canonical_edge(i, j) for i, j in t)
    if isinstance(p, ForestModel):
        nodes = list(p.node_marginals)
        tables = {e: pairwise_marginal(p, *e) for e in t}
        return ForestModel(p.d, p.r, t, tuple(nodes), tables)
    joint = _check_joint(p)
    nodes, pair = _joint_marginals(joint)
    tables = {}
    for i, j in t:
        tab = pair(i, j)
        tables[(i, j)] = PairwiseDist(tab / tab.sum())
    nodes = [NodeDist(nd / nd.sum()) for nd in nodes]
    return ForestModel(joint.ndim, joint.shape[0], t, tuple(nodes), tables)


def joint_kl(joint: np.ndarray, q: ForestModel) -> float:
    """D(joint || q) by enumerating every state of the joint table."""
    joint = np.asarray(joint, dtype=np.float64)
    states = np.array(list(itertools.product(range(q.r), repeat=q.d)))
    logq = log_likelihood(q, states)
    pj = joint.reshape(-1)
    mask = pj > 0
    if np.any(np.isinf(logq[mask])):
        return math.inf
    return float(np.sum(pj[mask] * (np.log(pj[mask]) - logq[mask])))


MAX_PROJECTION_NODES = 12


def forest_projection(joint) -> ForestModel:
    """Forest-structured distribution closest in KL to an arbitrary joint.

    Max-weight spanning tree over exact pairwise mutual informations, keeping
    only edges with MI above 1e-12 so the result has the fewest edges among
    the optimal forests.
    """
    joint = _check_joint(joint)
    d = joint.ndim
    if d > MAX_PROJECTION_NODES:
        raise ValueError(f"exact forest projection limited to d <= {MAX_PROJECTION_NODES}")
    from .learning import kruskal_mwst

    _, pair = _joint_marginals(joint)
    mi = np.zeros((d, d))
    for i, j in itertools.combinations(range(d), 2):
        tab = pair(i, j)
        mi[i, j] = mi[j, i] = mutual_information(PairwiseDist(tab / tab.sum()))
    ranking = kruskal_mwst(mi)
    kept = [e for e, s in zip(ranking.edges, ranking.scores) if s > MI_CLAMP_TOL]
    return project_onto_structure(joint, kept)
