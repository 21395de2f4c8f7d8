"""Weighted one-dimensional K-median clustering (Lloyd iteration).

Clustering the magnitudes of a proxy vector over grid positions gives the
support of its EMD-optimal K-sparse approximation; the grid values at the
medians are the parameter estimates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._seeding import as_seed_sequence

DEFAULT_MAX_ITER = 100
DEFAULT_RESTARTS = 5


class KMedianError(ValueError):
    pass


def weighted_median(indices, weights) -> int:
    """Smallest index satisfying both balance inequalities of a weighted median.

    That is the first ``m`` (in sorted order) with
    ``sum(w[idx <= m]) >= sum(w[idx > m])``; the second inequality
    ``sum(w[idx < m]) <= sum(w[idx >= m])`` then holds automatically. All-zero
    weights return the middle index.
    """
    indices = np.asarray(indices)
    weights = np.abs(np.asarray(weights, dtype=float))
    if indices.size == 0 or indices.shape != weights.shape:
        raise KMedianError("need equally many (nonempty) indices and weights")
    order = np.argsort(indices, kind="stable")
    indices, weights = indices[order], weights[order]
    total = weights.sum()
    if total == 0:
        return int(indices[(indices.size - 1) // 2])
    cum = np.cumsum(weights)
    m = int(np.searchsorted(2.0 * cum, total, side="left"))
    return int(indices[min(m, indices.size - 1)])


def _assign(positions, medians):
    # medians sorted and distinct; ties between neighbours go to the lower one
    mids = (medians[:-1] + medians[1:]) / 2.0
    return np.searchsorted(mids, positions, side="left")


def _update(positions, weights, cum, labels, K):
    """Weighted medians of contiguous clusters (positions sorted)."""
    bounds = np.searchsorted(labels, np.arange(K + 1), side="left")
    medians = np.empty(K, dtype=positions.dtype)
    for j in range(K):
        lo, hi = bounds[j], bounds[j + 1]
        if hi <= lo:
            medians[j] = -1  # empty cluster, re-seeded by the caller
            continue
        before = cum[lo - 1] if lo > 0 else 0.0
        total = cum[hi - 1] - before
        if total <= 0:
            medians[j] = positions[lo + (hi - lo - 1) // 2]
            continue
        m = lo + int(np.searchsorted(2.0 * (cum[lo:hi] - before), total, side="left"))
        medians[j] = positions[min(m, hi - 1)]
    return medians


def _objective(positions, weights, medians):
    labels = _assign(positions, medians)
    return float(np.sum(weights * np.abs(positions - medians[labels])))


def _reseed(medians, positions, weights):
    """Replace empty (-1) or duplicated medians by the heaviest unclaimed points."""
    medians = medians.copy()
    seen = set()
    bad = []
    for j, m in enumerate(medians):
        if m < 0 or m in seen:
            bad.append(j)
        else:
            seen.add(int(m))
    if bad:
        for p in positions[np.argsort(-weights, kind="stable")]:
            if not bad:
                break
            if int(p) not in seen:
                medians[bad.pop(0)] = p
                seen.add(int(p))
    return np.sort(medians)


@dataclass
class LloydTrace:
    """Per-iteration record of one Lloyd run (for diagnostics and tests)."""

    objectives: list = field(default_factory=list)
    iterations: int = 0


def lloyd(positions, weights, init, max_iter: int = DEFAULT_MAX_ITER,
          trace: Optional[LloydTrace] = None):
    """Lloyd-style K-median from the given initial medians.

    ``positions`` must be sorted integers; ``init`` a subset of them. Stops
    when the medians do not change or after ``max_iter`` updates.
    """
    positions = np.asarray(positions)
    weights = np.abs(np.asarray(weights, dtype=float))
    medians = _reseed(np.sort(np.asarray(init, dtype=positions.dtype)), positions, weights)
    K = medians.size
    cum = np.cumsum(weights)
    if trace is not None:
        trace.objectives.append(_objective(positions, weights, medians))
    it = 0
    for it in range(1, max_iter + 1):
        labels = _assign(positions, medians)
        new = _reseed(_update(positions, weights, cum, labels, K), positions, weights)
        if trace is not None:
            trace.objectives.append(_objective(positions, weights, new))
        if np.array_equal(new, medians):
            break
        medians = new
    if trace is not None:
        trace.iterations = it
    return medians


def _seed_medians(positions, weights, K, rng):
    """K distinct starting medians drawn with probability proportional to mass
    times the distance to the closest median drawn so far (the first by mass).
    """
    chosen = np.zeros(positions.size, dtype=bool)
    dist = np.ones(positions.size)
    for _ in range(K):
        p = np.where(chosen, 0.0, weights * dist)
        if p.sum() <= 0 or not np.all(np.isfinite(p)):
            p = (~chosen).astype(float)
        i = rng.choice(positions.size, p=p / p.sum())
        chosen[i] = True
        d = np.abs(positions - positions[i]).astype(float)
        dist = d if _ == 0 else np.minimum(dist, d)
    return positions[chosen]


def kmedian_points(positions, weights, K: int, rng_seed=None,
                   max_iter: int = DEFAULT_MAX_ITER, restarts: int = DEFAULT_RESTARTS,
                   init=None):
    """K-median of weighted points on a line; returns sorted medians (positions).

    Each restart starts from ``K`` distinct points drawn one at a time with
    probability proportional to weight times distance to the points already
    drawn (``init`` overrides the first restart). The run
    with the lowest objective wins; ties keep the earliest restart.
    """
    positions = np.asarray(positions)
    weights = np.abs(np.asarray(weights, dtype=float))
    if positions.shape != weights.shape or positions.ndim != 1:
        raise KMedianError("positions and weights must be equal-length 1-D arrays")
    if K < 1:
        raise KMedianError("K must be positive")
    if max_iter < 1:
        raise KMedianError("max_iter must be positive")
    order = np.argsort(positions, kind="stable")
    positions, weights = positions[order], weights[order]
    nonzero = np.flatnonzero(weights > 0)
    if nonzero.size == 0:
        raise KMedianError("proxy is empty (all weights are zero)")
    if K > nonzero.size:
        raise KMedianError(
            f"K={K} exceeds the number of nonzero proxy entries ({nonzero.size})")

    seeds = as_seed_sequence(rng_seed).spawn(max(restarts, 1))
    best, best_obj = None, np.inf
    for r, seed in enumerate(seeds):
        if r == 0 and init is not None:
            start = np.asarray(init)
        else:
            start = _seed_medians(positions[nonzero], weights[nonzero], K,
                                  np.random.default_rng(seed))
        med = lloyd(positions, weights, start, max_iter=max_iter)
        obj = _objective(positions, weights, med)
        if obj < best_obj:
            best, best_obj = med, obj
    return best


def kmedian(v, grid, K: int, rng_seed=None, max_iter: int = DEFAULT_MAX_ITER,
            restarts: int = DEFAULT_RESTARTS, init=None):
    """Cluster ``|v|`` over grid indices into ``K`` medians.

    Returns ``(theta_hat, S)`` with ``S`` the sorted 0-based median indices
    and ``theta_hat`` the grid values there.
    """
    w = np.abs(np.asarray(v)).reshape(-1)
    if w.size != grid.L:
        raise KMedianError(f"proxy length {w.size} does not match grid size {grid.L}")
    S = kmedian_points(np.arange(w.size), w, K, rng_seed=rng_seed, max_iter=max_iter,
                       restarts=restarts, init=init)
    return grid.value(S), S


def kmedian_objective(v, S, grid=None) -> float:
    """Sum of ``|v_j| * |j - s|`` over each index and its nearest median ``s``."""
    w = np.abs(np.asarray(v)).reshape(-1)
    S = np.sort(np.asarray(S, dtype=int))
    return _objective(np.arange(w.size), w, S)


def satisfies_balance(indices, weights, m, tol: float = 1e-12) -> bool:
    """Both weighted-median balance inequalities at ``m``."""
    indices = np.asarray(indices)
    weights = np.abs(np.asarray(weights, dtype=float))
    scale = tol * max(weights.sum(), 1.0)
    le = weights[indices <= m].sum() >= weights[indices > m].sum() - scale
    ge = weights[indices < m].sum() <= weights[indices >= m].sum() + scale
    return bool(le and ge)
