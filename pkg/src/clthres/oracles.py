"""Brute-force reference computations used to cross-check the fast paths.

Everything here enumerates explicitly and is only meant for small sizes.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .core import ForestModel, log_likelihood


def all_states(d: int, r: int) -> np.ndarray:
    return np.array(list(itertools.product(range(r), repeat=d)), dtype=np.intp)


def enumerate_kl(p: ForestModel, q: ForestModel) -> float:
    """D(p || q) by summing over all r**d states."""
    states = all_states(p.d, p.r)
    lp = log_likelihood(p, states)
    lq = log_likelihood(q, states)
    w = np.exp(lp)
    mask = w > 0
    if np.any(np.isinf(lq[mask])):
        return math.inf
    return float(np.sum(w[mask] * (lp[mask] - lq[mask])))


def enumerate_pair_marginal(m: ForestModel, i: int, j: int) -> np.ndarray:
    states = all_states(m.d, m.r)
    w = np.exp(log_likelihood(m, states))
    out = np.zeros((m.r, m.r))
    np.add.at(out, (states[:, i], states[:, j]), w)
    return out


def prufer_trees(d: int):
    """Every labelled tree on ``range(d)``, decoded from Pruefer sequences."""
    if d == 2:
        yield ((0, 1),)
        return
    for seq in itertools.product(range(d), repeat=d - 2):
        degree = [1] * d
        for v in seq:
            degree[v] += 1
        edges = []
        for v in seq:
            leaf = min(u for u in range(d) if degree[u] == 1)
            edges.append((min(leaf, v), max(leaf, v)))
            degree[leaf] -= 1
            degree[v] -= 1
        u, w = (x for x in range(d) if degree[x] == 1)
        edges.append((u, w))
        yield tuple(sorted(edges))


def best_spanning_tree_weight(w) -> float:
    w = np.asarray(w)
    return max(sum(w[i, j] for i, j in t) for t in prufer_trees(w.shape[0]))


def count_forests(d: int) -> list[int]:
    """Number of labelled forests on ``d`` nodes, indexed by edge count."""
    pairs = list(itertools.combinations(range(d), 2))
    counts = [0] * d
    parent = list(range(d))

    def find(a):
        while parent[a] != a:
            a = parent[a]
        return a

    def extend(start, k):
        counts[k] += 1
        for idx in range(start, len(pairs)):
            i, j = pairs[idx]
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[ri] = rj
                extend(idx + 1, k + 1)
                parent[ri] = ri

    extend(0, 0)
    return counts


def enumerate_forests(d: int):
    """Every labelled forest on ``range(d)`` as a sorted edge tuple."""
    pairs = list(itertools.combinations(range(d), 2))
    for k in range(d):
        for subset in itertools.combinations(pairs, k):
            parent = list(range(d))
            ok = True
            for i, j in subset:
                ri, rj = i, j
                while parent[ri] != ri:
                    ri = parent[ri]
                while parent[rj] != rj:
                    rj = parent[rj]
                if ri == rj:
                    ok = False
                    break
                parent[ri] = rj
            if ok:
                yield subset


def _xlogx(a):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(a > 0, a * np.log(a), 0.0)


def grid_underestimation_rate(table, step: float = 1e-3, zoom_levels: int = 3) -> float:
    """min over binary product Q of D(Q || p) on a dense (s, t) grid."""
    p = np.asarray(table, dtype=np.float64)
    logp = np.log(p)

    def evaluate(s, t):
        S, T = np.meshgrid(s, t, indexing="ij")
        q = [S * T, S * (1 - T), (1 - S) * T, (1 - S) * (1 - T)]
        lp = [logp[0, 0], logp[0, 1], logp[1, 0], logp[1, 1]]
        return sum(_xlogx(qi) - qi * li for qi, li in zip(q, lp)), S, T

    grid = np.linspace(0.0, 1.0, int(round(1 / step)) + 1)
    vals, S, T = evaluate(grid, grid)
    k = np.unravel_index(np.argmin(vals), vals.shape)
    best, s0, t0 = vals[k], S[k], T[k]
    h = step
    for _ in range(zoom_levels):
        s = np.clip(np.linspace(s0 - 2 * h, s0 + 2 * h, 41), 0, 1)
        t = np.clip(np.linspace(t0 - 2 * h, t0 + 2 * h, 41), 0, 1)
        vals, S, T = evaluate(s, t)
        k = np.unravel_index(np.argmin(vals), vals.shape)
        if vals[k] < best:
            best, s0, t0 = vals[k], S[k], T[k]
        h /= 10
    return float(best)


def _binary_grid_eval(q00, q01, q10, logp, b):
    q11 = 1.0 - q00 - q01 - q10
    ok = q11 >= -1e-15
    q11 = np.clip(q11, 0, None)
    qs = [q00, q01, q10, q11]
    rx0, rx1 = q00 + q01, q10 + q11
    cy0, cy1 = q00 + q10, q01 + q11
    xl = sum(_xlogx(q) for q in qs)
    mi = xl - _xlogx(rx0) - _xlogx(rx1) - _xlogx(cy0) - _xlogx(cy1)
    lp = [logp[0, 0], logp[0, 1], logp[1, 0], logp[1, 1]]
    kl = xl - sum(q * l for q, l in zip(qs, lp))
    return np.where(ok & (mi >= b), kl, np.inf)


def grid_overestimation_rate(table, b: float, step: float = 0.01, keep: int = 20,
                             zoom_levels: int = 5) -> float:
    """min D(Q || p) s.t. I(Q) >= b over binary Q, by a zooming simplex grid."""
    p = np.asarray(table, dtype=np.float64)
    logp = np.log(p)
    g = np.arange(0.0, 1.0 + step / 2, step)
    A, B, C = np.meshgrid(g, g, g, indexing="ij")
    vals = _binary_grid_eval(A, B, C, logp, b)
    flat = np.argsort(vals, axis=None)[:keep]
    seeds = [(A.flat[i], B.flat[i], C.flat[i], vals.flat[i]) for i in flat]
    best = min(s[3] for s in seeds)
    for a0, b0, c0, v0 in seeds:
        if not np.isfinite(v0):
            continue
        h = step
        for _ in range(zoom_levels):
            axes = [np.clip(np.linspace(x - 2 * h, x + 2 * h, 41), 0, 1) for x in (a0, b0, c0)]
            A2, B2, C2 = np.meshgrid(*axes, indexing="ij")
            v = _binary_grid_eval(A2, B2, C2, logp, b)
            k = np.argmin(v)
            if v.flat[k] <= v0:
                a0, b0, c0, v0 = A2.flat[k], B2.flat[k], C2.flat[k], v.flat[k]
            h /= 10
        best = min(best, v0)
    return float(best)
