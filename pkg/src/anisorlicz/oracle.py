"""
Brute-force references for the fast paths.

Everything here is deliberately naive: exhaustive subset enumeration for
the convex minorant, exhaustive pair enumeration for almost convexity, and
a grid scan for the Luxemburg norm. None of it shares code with the hull,
gauge or bisection routines it is used to check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .phi_core import (INF, PhiFunction, SpatialPhiFunction, VectorField, exceeds, ext_mul,
                       modular)

SUPPORT_CAPS = {1: 5000, 2: 400, 3: 120}
PIVOT = 1e-12


@dataclass
class Representation:
    """Best convex combination found for one query point."""

    value: float
    in_hull: bool
    indices: tuple = ()
    weights: tuple = ()


def _subsets(n: int, k: int, chunk: int):
    it = combinations(range(n), k)
    while True:
        block = np.fromiter((i for c in _take(it, chunk) for i in c), dtype=np.int64)
        if block.size == 0:
            return
        yield block.reshape(-1, k)


def _take(it, n):
    for _, item in zip(range(n), it):
        yield item


def _weighted(alpha, vals, tol):
    # Σ α_k v_k with weights |α_k| ≤ tol treated as exact zeros (0·∞ = 0)
    with np.errstate(invalid="ignore"):
        terms = np.where(alpha > tol, alpha * vals, 0.0)
    return np.sum(terms, axis=1)


def _simplex_pass(pts, vals, queries, tol, chunk=20000):
    """Minimum over (m+1)-subsets of Σ α_k v_k for each query."""
    n, m = pts.shape
    scale = max(float(np.max(np.abs(pts))), 1.0)
    best = np.full(len(queries), INF)
    arg_idx = np.full((len(queries), m + 1), -1)
    arg_w = np.zeros((len(queries), m + 1))
    rhs = np.vstack([queries.T, np.ones(len(queries))])          # (m+1, Q)
    for sub in _subsets(n, m + 1, chunk):
        A = np.concatenate([pts[sub].transpose(0, 2, 1),
                            np.ones((len(sub), 1, m + 1))], axis=1)  # (S, m+1, m+1)
        det = np.linalg.det(A)
        ok = np.abs(det) > PIVOT * scale ** m
        if not np.any(ok):
            continue
        sub, A = sub[ok], A[ok]
        alpha = np.linalg.solve(A, np.broadcast_to(rhs, (len(A),) + rhs.shape))  # (S, m+1, Q)
        feasible = np.all(alpha >= -tol, axis=1)                  # (S, Q)
        v = vals[sub][:, :, None]
        with np.errstate(invalid="ignore"):
            terms = np.where(alpha > tol, alpha * v, 0.0)
        cost = np.where(feasible, np.sum(terms, axis=1), INF)     # (S, Q)
        j = np.argmin(cost, axis=0)
        c = cost[j, np.arange(len(queries))]
        better = c < best
        best[better] = c[better]
        arg_idx[better] = sub[j[better]]
        arg_w[better] = alpha[j[better], :, np.flatnonzero(better)]
    return best, arg_idx, arg_w


def _segment_pass(pts, vals, queries, tol, chunk=20000):
    """Minimum over (m+2)-subsets: the feasible weights form a segment."""
    n, m = pts.shape
    best = np.full(len(queries), INF)
    for sub in _subsets(n, m + 2, chunk):
        A = np.concatenate([pts[sub].transpose(0, 2, 1),
                            np.ones((len(sub), 1, m + 2))], axis=1)  # (S, m+1, m+2)
        _, sv, vt = np.linalg.svd(A)
        full = sv[:, -1] > PIVOT
        if not np.any(full):
            continue
        sub, A, null = sub[full], A[full], vt[full, -1, :]          # null: (S, m+2)
        pinv = np.linalg.pinv(A)                                    # (S, m+2, m+1)
        v = vals[sub]
        for q, xi in enumerate(queries):
            b = np.append(xi, 1.0)
            a0 = pinv @ b                                           # (S, m+2)
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = -a0 / null
            lo = np.max(np.where(null > PIVOT, ratio, -INF), axis=1)
            hi = np.min(np.where(null < -PIVOT, ratio, INF), axis=1)
            feasible = (lo <= hi + tol) & np.isfinite(lo) & np.isfinite(hi)
            if not np.any(feasible):
                continue
            ends = []
            for t in (lo, hi):
                alpha = a0 + np.where(np.isfinite(t), t, 0.0)[:, None] * null
                ok = feasible & np.all(alpha >= -tol, axis=1)
                ends.append(np.where(ok, _weighted(alpha, v, tol), INF))
            best[q] = min(best[q], float(np.min(np.minimum(*ends))))
    return best


def caratheodory_representation(support, values, xi, tol: float = 1e-12,
                                subset_size: int | None = None):
    """Minimise Σ α_k Φ(ξ_k) over convex combinations of ``subset_size``
    support points that reproduce ξ (default m + 1 points).

    Returns one :class:`Representation` per query (a list for a batch).
    Infinite support values enter only with zero weight.
    """
    pts = np.asarray(support, dtype=float)
    vals = np.asarray(values, dtype=float).ravel()
    pts = pts.reshape(len(vals), -1)
    m = pts.shape[1]
    cap = SUPPORT_CAPS.get(m)
    if cap is None or len(pts) > cap:
        raise ValueError(f"support of {len(pts)} points in dimension {m} exceeds the enumeration cap")
    q = np.asarray(xi, dtype=float)
    single = q.ndim == 1
    q = q.reshape(-1, m)
    k = m + 1 if subset_size is None else subset_size
    if k == m + 1:
        best, idx, w = _simplex_pass(pts, vals, q, tol)
        reps = [Representation(float(b), bool(np.isfinite(b)),
                               tuple(int(t) for t in i) if i[0] >= 0 else (),
                               tuple(float(t) for t in a) if i[0] >= 0 else ())
                for b, i, a in zip(best, idx, w)]
    elif k == m + 2:
        best = _segment_pass(pts, vals, q, tol)
        reps = [Representation(float(b), bool(np.isfinite(b))) for b in best]
    else:
        raise ValueError("subset_size must be m + 1 or m + 2")
    return reps[0] if single else reps


def caratheodory_envelope(support, values, xi, tol: float = 1e-12,
                          subset_size: int | None = None):
    """Value of the greatest convex minorant of the finite restriction at ξ.

    ∞ when ξ lies outside the hull of the finite-valued support; use
    :func:`caratheodory_representation` for the hull flag and weights.
    """
    reps = caratheodory_representation(support, values, xi, tol, subset_size)
    if isinstance(reps, Representation):
        return reps.value
    return np.array([r.value for r in reps])


@dataclass
class BruteForceResult:
    passed: bool
    beta: float
    witness: dict | None = None
    checked: int = 0


def almost_convex_bruteforce(phi: PhiFunction, grid, alphas, beta: float,
                             tol: float = 1e-9) -> BruteForceResult:
    """Test Φ(β(αξ + (1−α)ξ′)) ≤ αΦ(ξ) + (1−α)Φ(ξ′) on all ordered grid pairs.

    Enumeration order: α in the given order, then pairs (i, j)
    lexicographically in grid order; the first violation is returned.
    """
    pts = np.asarray(grid, dtype=float).reshape(-1, phi.dim)
    vals = phi.values(pts)
    n = len(pts)
    i, j = np.divmod(np.arange(n * n), n)
    checked = 0
    for a in alphas:
        a = float(a)
        mix = beta * (a * pts[i] + (1 - a) * pts[j])
        lhs = phi.values(mix)
        rhs = ext_mul(a, vals[i]) + ext_mul(1 - a, vals[j])
        bad = exceeds(lhs, rhs, tol)
        checked += n * n
        if np.any(bad):
            k = int(np.argmax(bad))
            return BruteForceResult(False, beta, {
                "xi": pts[i[k]].tolist(), "xi2": pts[j[k]].tolist(), "alpha": a,
                "lhs": float(lhs[k]), "rhs": float(rhs[k])}, checked)
    return BruteForceResult(True, beta, None, checked)


def largest_bruteforce_beta(phi: PhiFunction, grid, alphas, betas, tol: float = 1e-9):
    """Largest β in ``betas`` (scanned in decreasing order) passing the brute force."""
    for b in sorted(betas, reverse=True):
        if almost_convex_bruteforce(phi, grid, alphas, b, tol).passed:
            return b
    return None


def norm_dense_scan(Phi: SpatialPhiFunction, f: VectorField, lambda_grid) -> float:
    """Smallest λ in an increasing grid with ϱ_Φ(f/λ) ≤ 1.

    Zero fields return 0; ∞ is returned when no grid value qualifies.
    """
    if not np.any(f.values):
        return 0.0
    for lam in lambda_grid:
        if modular(Phi, f.scaled(1.0 / lam)) <= 1.0:
            return float(lam)
    return math.inf
