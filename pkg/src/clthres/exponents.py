"""Error-exponent calculators for thresholded Chow-Liu learning.

Distributions on pairs are flattened column-major, so entry ``(x, y)`` of an
``r x r`` table sits at index ``x + r * y``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import linalg, optimize

from .core import PairwiseDist, kl_divergence, mutual_information

PRODUCT_TOL = 1e-10
N_STARTS = 20


def vec(table) -> np.ndarray:
    return np.asarray(table, dtype=np.float64).reshape(-1, order="F")


def unvec(v, r: int) -> np.ndarray:
    return np.asarray(v, dtype=np.float64).reshape(r, r, order="F")


def mi_of_vec(v) -> float:
    """MI as a function of the flattened table with induced marginals.

    On the simplex this is the mutual information; off it, it is the smooth
    extension ``sum q log q - sum q_x log q_x - sum q_y log q_y``.
    """
    r = math.isqrt(len(v))
    q = unvec(v, r)
    qx, qy = q.sum(axis=1), q.sum(axis=0)

    def xlogx(a):
        a = a[a > 0]
        return float(np.sum(a * np.log(a)))

    return xlogx(q.ravel()) - xlogx(qx) - xlogx(qy)


def _mi_grad(v) -> np.ndarray:
    r = math.isqrt(len(v))
    q = unvec(v, r)
    qx, qy = q.sum(axis=1), q.sum(axis=0)
    return vec(np.log(q) - np.log(qx)[:, None] - np.log(qy)[None, :] - 1.0)


@dataclass(frozen=True)
class LocalCurvature:
    pi_e: np.ndarray
    h_e: np.ndarray


def mi_hessian(p: PairwiseDist) -> LocalCurvature:
    """Diagonal KL metric and MI Hessian at ``p`` in flattened coordinates."""
    t = p.table
    if np.any(t <= 0):
        raise ValueError("mi_hessian needs a strictly positive table")
    r = p.r
    v = vec(t)
    px, py = t.sum(axis=1), t.sum(axis=0)
    rows = np.tile(np.arange(r), r)  # x index of each flattened entry
    cols = np.repeat(np.arange(r), r)  # y index
    same_x = rows[:, None] == rows[None, :]
    same_y = cols[:, None] == cols[None, :]
    h = np.diag(1.0 / v) - same_x / px[rows][:, None] - same_y / py[cols][:, None]
    return LocalCurvature(np.diag(1.0 / v), h)


def normalized_curvature(p: PairwiseDist) -> np.ndarray:
    """``Pi^{-1/2} H Pi^{-1/2}`` for the table ``p``."""
    lc = mi_hessian(p)
    s = np.sqrt(vec(p.table))
    return s[:, None] * lc.h_e * s[None, :]


def _require_product(p: PairwiseDist):
    if mutual_information(p) >= PRODUCT_TOL:
        raise ValueError("expected a product distribution (zero mutual information)")


def mu_star(p: PairwiseDist) -> float:
    """Largest mu with Pi >= mu H, i.e. the reciprocal of the top eigenvalue."""
    _require_product(p)
    top = np.linalg.eigvalsh(normalized_curvature(p))[-1]
    return float(1.0 / top)


def tangent_basis(m: int) -> np.ndarray:
    """Orthonormal basis of the zero-sum subspace of R^m, shape ``(m, m-1)``."""
    return linalg.null_space(np.ones((1, m)))


def quadratic_surrogate(p: PairwiseDist, b: float) -> float:
    """min 1/2 z'Pi z  s.t.  1/2 z'H z >= b, z'1 = 0, via a generalised eigenproblem."""
    lc = mi_hessian(p)
    n = tangent_basis(p.r**2)
    top = linalg.eigh(n.T @ lc.h_e @ n, n.T @ lc.pi_e @ n, eigvals_only=True)[-1]
    if top <= 0:
        return math.inf
    return float(b / top)


@dataclass(frozen=True)
class RateFunctionResult:
    value: float
    argmin: PairwiseDist
    iterations: int
    grad_norm: float
    certified: bool = False
    surrogate: float | None = None
    extra: dict = field(default_factory=dict)


def _product_kl(qx, qy, logp):
    """D(qx (x) qy || p) for the table with elementwise log ``logp``."""
    q = np.outer(qx, qy)
    with np.errstate(divide="ignore", invalid="ignore"):
        ent = np.where(q > 0, q * np.log(q), 0.0)
    return float(ent.sum() - np.sum(q * logp))


def _alternating_product(logp, qy, max_iter=10_000, tol=1e-15):
    prev = math.inf
    for it in range(1, max_iter + 1):
        a = logp @ qy
        qx = np.exp(a - a.max())
        qx /= qx.sum()
        b = qx @ logp
        qy = np.exp(b - b.max())
        qy /= qy.sum()
        val = _product_kl(qx, qy, logp)
        if prev - val < tol:
            break
        prev = val
    return qx, qy, val, it


def underestimation_rate(p: PairwiseDist, a: float = 0.0, starts: int = N_STARTS, seed: int = 0) -> RateFunctionResult:
    """min D(Q || p) over Q with I(Q) <= a.

    For ``a = 0`` the feasible set is the product distributions and the
    problem is solved by alternating exact minimisation over each factor.
    """
    t = p.table
    if np.any(t <= 0):
        raise ValueError("underestimation_rate needs a strictly positive table")
    if mutual_information(p) <= a:
        return RateFunctionResult(0.0, p, 0, 0.0, certified=True)
    if a > 0:
        return _constrained_search(p, a, upper=True, starts=starts, seed=seed)
    rng = np.random.default_rng(seed)
    logp = np.log(t)
    best = None
    total_iter = 0
    for s in range(starts):
        qy0 = t.sum(axis=0) if s == 0 else rng.dirichlet(np.ones(p.r))
        qx, qy, val, it = _alternating_product(logp, qy0)
        total_iter += it
        if best is None or val < best[0] - 1e-15:
            best = (val, qx, qy)
    val, qx, qy = best
    # stationarity residual of each block update
    ax = logp @ qy
    gx = np.log(qx) - ax
    by = qx @ logp
    gy = np.log(qy) - by
    grad = math.hypot(np.ptp(gx), np.ptp(gy))
    return RateFunctionResult(
        max(val, 0.0), PairwiseDist(np.outer(qx, qy)), total_iter, float(grad),
        certified=p.r == 2,
    )


def _constrained_search(p: PairwiseDist, level: float, upper: bool, starts: int, seed: int):
    """Multi-start SLSQP on the zero-sum tangent coordinates around ``p``."""
    r2 = p.r**2
    pv = vec(p.table)
    basis = tangent_basis(r2)
    rng = np.random.default_rng(seed)
    floor = 1e-12
    sign = -1.0 if upper else 1.0

    def qof(y):
        return pv + basis @ y

    def obj(y):
        q = np.maximum(qof(y), floor)
        return float(np.sum(q * np.log(q / pv)))

    def obj_grad(y):
        q = np.maximum(qof(y), floor)
        return basis.T @ (np.log(q / pv) + 1.0)

    def con(y):
        return sign * (mi_of_vec(np.maximum(qof(y), floor)) - level)

    def con_grad(y):
        return sign * (basis.T @ _mi_grad(np.maximum(qof(y), floor)))

    constraints = [
        {"type": "ineq", "fun": con, "jac": con_grad},
        {"type": "ineq", "fun": lambda y: qof(y) - floor, "jac": lambda y: basis},
    ]
    best = None
    total_iter = 0
    for s in range(starts):
        if s % 2 == 0:
            q0 = rng.dirichlet(np.ones(r2))
        else:
            q0 = pv + 0.2 * basis @ rng.normal(size=r2 - 1) * pv.min()
            q0 = np.clip(q0, floor, None)
            q0 /= q0.sum()
        y0 = basis.T @ (q0 - pv)
        res = optimize.minimize(
            obj, y0, jac=obj_grad, constraints=constraints, method="SLSQP",
            options={"maxiter": 500, "ftol": 1e-14},
        )
        total_iter += int(res.nit)
        q = qof(res.x)
        if np.min(q) < -1e-10 or con(res.x) < -1e-9:
            continue
        val = obj(res.x)
        if best is None or val < best[0] - 1e-15:
            best = (val, res.x)
    if best is None:
        raise RuntimeError("no start reached a feasible point")
    val, y = best
    q = np.clip(qof(y), 0.0, None)
    q /= q.sum()
    gf, gc = obj_grad(y), con_grad(y)
    if np.dot(gc, gc) > 0:
        gf = gf - (np.dot(gf, gc) / np.dot(gc, gc)) * gc
    return RateFunctionResult(
        max(val, 0.0), PairwiseDist(unvec(q, p.r)), total_iter, float(np.linalg.norm(gf)),
        certified=False,
    )


def overestimation_rate(p: PairwiseDist, b: float, starts: int = N_STARTS, seed: int = 0) -> RateFunctionResult:
    """min D(Q || p) over Q with I(Q) >= b, for a product distribution ``p``.

    Also reports the quadratic surrogate in ``surrogate``. Results for
    ``r > 2`` are local optima (``certified`` is False).
    """
    _require_product(p)
    if np.any(p.table <= 0):
        raise ValueError("overestimation_rate needs a strictly positive table")
    if not b > 0:
        raise ValueError("b must be positive")
    res = _constrained_search(p, b, upper=False, starts=starts, seed=seed)
    return RateFunctionResult(
        res.value, res.argmin, res.iterations, res.grad_norm,
        certified=False, surrogate=quadratic_surrogate(p, b),
    )


class EuclideanApprox(NamedTuple):
    exact: float
    approx: float
    gap: float


def euclidean_kl_approx(p: PairwiseDist, q: PairwiseDist) -> EuclideanApprox:
    """D(q || p) against its weighted-Euclidean surrogate 1/2 sum (p-q)^2/p."""
    if np.any(p.table <= 0):
        raise ValueError("p must be strictly positive")
    exact = kl_divergence(q, p)
    approx = 0.5 * float(np.sum((p.table - q.table) ** 2 / p.table))
    return EuclideanApprox(exact, approx, exact - approx)


class ConverseBounds(NamedTuple):
    fixed_k: float
    all_forests: float


def converse_sample_bound(d: int, k: int, r: int, rho: float = 1.0) -> ConverseBounds:
    """Sample sizes below which every estimator fails w.p. -> 1 (uniform prior).

    ``fixed_k`` is for forests with exactly ``k`` edges, ``all_forests`` for
    the union over all edge counts.
    """
    if d < 2 or not 0 <= k <= d - 1 or r < 2 or not 0 < rho <= 1:
        raise ValueError("need d >= 2, 0 <= k <= d-1, r >= 2, 0 < rho <= 1")
    fixed = rho * (k - 1) * math.log(d) / (d * math.log(r))
    return ConverseBounds(max(fixed, 0.0), rho * math.log(d) / math.log(r))


class ForestCountBounds(NamedTuple):
    log_fixed_k_lower: float
    log_all_lower: float
    log_all_upper: float


def forest_count_bounds(d: int, k: int) -> ForestCountBounds:
    """Log-scale bounds on the number of labelled forests.

    ``(d-k) d^(k-1)`` lower-bounds the forests with ``k`` edges, and
    ``[(d-2) log d, (d-1) log(d+1)]`` brackets the log of all forests.
    """
    if d < 2 or not 0 <= k <= d - 1:
        raise ValueError("need d >= 2 and 0 <= k <= d-1")
    return ForestCountBounds(
        math.log(d - k) + (k - 1) * math.log(d),
        (d - 2) * math.log(d),
        (d - 1) * math.log(d + 1),
    )
