"""Earth mover's distance on the index line and the parameter estimation error."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

ORACLE_MAX_SUPPORT = 8


@dataclass(frozen=True)
class SparseCoefVector:
    """Nonnegative sparse vector of length ``L`` given by support and weights.

    Indices are 0-based and strictly increasing; weights are positive.
    """

    L: int
    support: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        support = np.asarray(self.support, dtype=int).reshape(-1)
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if support.shape != weights.shape:
            raise ValueError("support and weights must have equal length")
        if support.size and (support[0] < 0 or support[-1] >= self.L):
            raise ValueError("support index out of range")
        if np.any(np.diff(support) <= 0):
            raise ValueError("support must be strictly increasing")
        if np.any(weights <= 0):
            raise ValueError("weights must be positive")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_dense(cls, v) -> "SparseCoefVector":
        v = np.abs(np.asarray(v))
        idx = np.flatnonzero(v)
        return cls(v.size, idx, v[idx])

    @classmethod
    def from_entries(cls, L, indices, weights) -> "SparseCoefVector":
        """Build from possibly unsorted/repeated indices; repeats are summed."""
        dense = np.zeros(L)
        np.add.at(dense, np.asarray(indices, dtype=int), np.abs(np.asarray(weights, dtype=float)))
        return cls.from_dense(dense)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.L)
        out[self.support] = self.weights
        return out

    @property
    def mass(self) -> float:
        return float(self.weights.sum())

    def __len__(self):
        return self.support.size


@dataclass(frozen=True)
class FlowPlan:
    """Transport plan as parallel arrays of (source index, sink index, mass)."""

    sources: np.ndarray
    sinks: np.ndarray
    mass: np.ndarray

    def cost(self) -> float:
        return float(np.sum(self.mass * np.abs(self.sources - self.sinks)))


def _check_pair(c: SparseCoefVector, chat: SparseCoefVector):
    if c.L != chat.L:
        raise ValueError(f"length mismatch: {c.L} vs {chat.L}")
    if len(c) == 0 or len(chat) == 0:
        raise ValueError("EMD needs nonempty vectors")


def _north_west_plan(c: SparseCoefVector, chat: SparseCoefVector) -> FlowPlan:
    # the monotone (sorted) coupling is optimal for the absolute-distance cost on a line
    i = j = 0
    a, b = c.weights.copy(), chat.weights.copy()
    src, snk, mass = [], [], []
    while i < a.size and j < b.size:
        f = min(a[i], b[j])
        if f > 0:
            src.append(c.support[i])
            snk.append(chat.support[j])
            mass.append(f)
        a[i] -= f
        b[j] -= f
        if a[i] <= b[j]:
            i += 1
        else:
            j += 1
    return FlowPlan(np.array(src, dtype=int), np.array(snk, dtype=int), np.array(mass))


def _cdf_cost(c: SparseCoefVector, chat: SparseCoefVector) -> float:
    pos = np.union1d(c.support, chat.support)
    diff = np.zeros(pos.size)
    diff[np.searchsorted(pos, c.support)] += c.weights
    diff[np.searchsorted(pos, chat.support)] -= chat.weights
    running = np.cumsum(diff)[:-1]
    return float(np.sum(np.abs(running) * np.diff(pos)))


def _partial_transport(c: SparseCoefVector, chat: SparseCoefVector):
    """Optimal transport of ``min(mass)`` units with free disposal of the excess."""
    a, b = c.weights, chat.weights
    m, n = a.size, b.size
    D = np.abs(c.support[:, None] - chat.support[None, :]).astype(float)
    moved = min(a.sum(), b.sum())
    A_ub = np.zeros((m + n, m * n))
    for i in range(m):
        A_ub[i, i * n:(i + 1) * n] = 1.0
    for j in range(n):
        A_ub[m + j, j::n] = 1.0
    A_eq = np.ones((1, m * n))
    res = linprog(D.ravel(), A_ub=A_ub, b_ub=np.concatenate([a, b]),
                  A_eq=A_eq, b_eq=[moved], bounds=(0, None), method="highs")
    if not res.success:  # pragma: no cover - LP is always feasible
        raise RuntimeError(res.message)
    F = res.x.reshape(m, n)
    ii, jj = np.nonzero(F > 1e-15)
    plan = FlowPlan(c.support[ii], chat.support[jj], F[ii, jj])
    return float(res.fun), plan


def emd(c: SparseCoefVector, chat: SparseCoefVector, rtol: float = 1e-12):
    """Earth mover's distance between two nonnegative sparse vectors.

    Ground distance is the index difference. Equal masses use the exact 1-D
    CDF formula. Unequal masses transport the smaller mass optimally and add
    ``|mass(c) - mass(chat)| * L`` as mismatch penalty.

    Returns
    -------
    cost : float
    plan : FlowPlan
    """
    _check_pair(c, chat)
    mc, mh = c.mass, chat.mass
    if abs(mc - mh) <= rtol * max(mc, mh):
        return _cdf_cost(c, chat), _north_west_plan(c, chat)
    cost, plan = _partial_transport(c, chat)
    return cost + abs(mc - mh) * c.L, plan


def emd_value(c: SparseCoefVector, chat: SparseCoefVector) -> float:
    return emd(c, chat)[0]


def emd_lp_oracle(c: SparseCoefVector, chat: SparseCoefVector) -> float:
    """Transportation LP solved by a generic LP solver (test-scale oracle)."""
    _check_pair(c, chat)
    m, n = len(c), len(chat)
    if m > ORACLE_MAX_SUPPORT or n > ORACLE_MAX_SUPPORT:
        raise ValueError(f"oracle limited to supports of size <= {ORACLE_MAX_SUPPORT}")
    a, b = c.weights, chat.weights
    D = np.abs(c.support[:, None] - chat.support[None, :]).astype(float)
    rows = np.zeros((m, m * n))
    cols = np.zeros((n, m * n))
    for i in range(m):
        rows[i, i * n:(i + 1) * n] = 1.0
    for j in range(n):
        cols[j, j::n] = 1.0
    penalty = 0.0
    if np.isclose(a.sum(), b.sum(), rtol=1e-12, atol=0):
        # rescale so both sides carry exactly the same mass
        b = b * (a.sum() / b.sum())
        res = linprog(D.ravel(), A_eq=np.vstack([rows, cols])[:-1],
                      b_eq=np.concatenate([a, b])[:-1], bounds=(0, None), method="highs")
    else:
        moved = min(a.sum(), b.sum())
        res = linprog(D.ravel(), A_ub=np.vstack([rows, cols]), b_ub=np.concatenate([a, b]),
                      A_eq=np.ones((1, m * n)), b_eq=[moved], bounds=(0, None),
                      method="highs")
        penalty = abs(a.sum() - b.sum()) * c.L
    if not res.success:  # pragma: no cover
        raise RuntimeError(res.message)
    return float(res.fun) + penalty


def pee(theta, theta_hat) -> float:
    """Parameter estimation error: optimal assignment cost under ``|a - b|``.

    Sorting both sets and matching in order is optimal on the line.
    """
    theta = np.sort(np.asarray(theta, dtype=float).reshape(-1))
    theta_hat = np.sort(np.asarray(theta_hat, dtype=float).reshape(-1))
    if theta.size != theta_hat.size:
        raise ValueError(f"cardinality mismatch: {theta.size} vs {theta_hat.size}")
    if theta.size == 0:
        raise ValueError("need at least one parameter")
    return float(np.sum(np.abs(theta - theta_hat)))


def max_matched_error(theta, theta_hat) -> float:
    """Largest per-component error under the sorted (PEE-optimal) matching."""
    theta = np.sort(np.asarray(theta, dtype=float).reshape(-1))
    theta_hat = np.sort(np.asarray(theta_hat, dtype=float).reshape(-1))
    if theta.size != theta_hat.size:
        raise ValueError(f"cardinality mismatch: {theta.size} vs {theta_hat.size}")
    return float(np.max(np.abs(theta - theta_hat)))


def pee_bruteforce(theta, theta_hat) -> float:
    """Minimum over all K! assignments; for testing small K only."""
    theta = np.asarray(theta, dtype=float)
    theta_hat = np.asarray(theta_hat, dtype=float)
    if theta.size != theta_hat.size:
        raise ValueError("cardinality mismatch")
    return min(float(np.sum(np.abs(theta - theta_hat[list(p)])))
               for p in itertools.permutations(range(theta.size)))


def nearest_support_labels(L: int, support) -> np.ndarray:
    """Label of the nearest support element for each index; ties go lower."""
    support = np.asarray(support, dtype=int)
    mids = (support[:-1] + support[1:]) / 2.0
    return np.searchsorted(mids, np.arange(L), side="left")


def emd_sparse_approx(v, support) -> SparseCoefVector:
    """EMD-optimal approximation of ``|v|`` supported on ``support``.

    Every index sends its mass to the nearest support element, so the total
    mass of ``v`` is preserved.
    """
    w = np.abs(np.asarray(v)).reshape(-1)
    support = np.asarray(support, dtype=int).reshape(-1)
    if support.size == 0:
        raise ValueError("support must be nonempty")
    if np.any(np.diff(support) <= 0) or support[0] < 0 or support[-1] >= w.size:
        raise ValueError("support must be strictly increasing indices inside the vector")
    labels = nearest_support_labels(w.size, support)
    agg = np.bincount(labels, weights=w, minlength=support.size)
    keep = agg > 0
    return SparseCoefVector(w.size, support[keep], agg[keep])


@dataclass(frozen=True)
class Theorem1Check:
    lhs: float
    rhs: float
    holds: bool


def theorem1_check(c: SparseCoefVector, chat: SparseCoefVector, delta: float,
                   theta_min: float = 0.0, slack: float = 1e-9) -> Theorem1Check:
    """Check ``PEE <= (delta / c_min) * EMD`` for two equal-sparsity vectors."""
    if len(c) != len(chat):
        raise ValueError("both vectors must have the same sparsity")
    if delta <= 0:
        raise ValueError("delta must be positive")
    lhs = pee(theta_min + delta * c.support, theta_min + delta * chat.support)
    c_min = min(c.weights.min(), chat.weights.min())
    rhs = delta / c_min * emd_value(c, chat)
    return Theorem1Check(lhs, rhs, lhs <= rhs + slack)
