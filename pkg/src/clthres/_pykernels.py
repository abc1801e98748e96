"""Numpy implementations of the hot loops, used when the extension is absent."""

import numpy as np


def pair_counts(data, r):
    n, d = data.shape
    onehot = np.zeros((n, d * r))
    onehot[np.arange(n)[:, None], np.arange(d) * r + data] = 1.0
    # counts stay below 2**53 so the float product is exact
    gram = onehot.T @ onehot
    return np.rint(gram).astype(np.int64).reshape(d, r, d, r).transpose(0, 2, 1, 3).copy()


def ancestral_sample(order, parent, cdf, u):
    n, d = u.shape
    r = cdf.shape[2]
    out = np.zeros((n, d), dtype=np.intp)
    for i in order:
        p = parent[i]
        rows = out[:, p] if p >= 0 else np.zeros(n, dtype=np.intp)
        c = cdf[i][rows]
        out[:, i] = np.minimum((u[:, i, None] >= c[:, : r - 1]).sum(axis=1), r - 1)
    return out
