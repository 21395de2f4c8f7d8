"""Compressive measurements and greedy parameter recovery.

``csp`` is subspace pursuit with both hard-thresholding steps replaced by
K-median clustering (clustering subspace pursuit). ``bsp`` is the
band-excluded subspace pursuit baseline.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from ._seeding import as_seed_sequence
from .clustering import KMedianError, kmedian, kmedian_points
from .signal_models import Dictionary


class OperatorKind(str, Enum):
    IDENTITY = "identity"
    GAUSSIAN = "gaussian"
    SUBSAMPLE = "subsample"


@dataclass(frozen=True, eq=False)
class MeasurementOperator:
    kind: OperatorKind
    M: int
    N: int
    seed: Optional[int]
    matrix: np.ndarray = field(repr=False)

    @classmethod
    def identity(cls, N: int) -> "MeasurementOperator":
        return cls(OperatorKind.IDENTITY, N, N, None, np.eye(N))

    @classmethod
    def gaussian(cls, M: int, N: int, seed=None) -> "MeasurementOperator":
        """i.i.d. real normal entries with variance ``1/M``."""
        if not 1 <= M:
            raise ValueError("M must be positive")
        rng = np.random.default_rng(seed)
        return cls(OperatorKind.GAUSSIAN, M, N, seed,
                   rng.standard_normal((M, N)) / np.sqrt(M))

    @classmethod
    def subsample(cls, M: int, N: int, seed=None) -> "MeasurementOperator":
        """``M`` distinct rows of the identity, in increasing order."""
        if not 1 <= M <= N:
            raise ValueError("need 1 <= M <= N for row subsampling")
        rng = np.random.default_rng(seed)
        rows = np.sort(rng.choice(N, size=M, replace=False))
        return cls(OperatorKind.SUBSAMPLE, M, N, seed, np.eye(N)[rows])

    @classmethod
    def from_rate(cls, kind, kappa: float, N: int, seed=None) -> "MeasurementOperator":
        kind = OperatorKind(kind)
        if kind is OperatorKind.IDENTITY:
            return cls.identity(N)
        M = int(round(kappa * N))
        return cls.gaussian(M, N, seed) if kind is OperatorKind.GAUSSIAN \
            else cls.subsample(M, N, seed)


def measure(op: MeasurementOperator, x) -> np.ndarray:
    x = np.asarray(x)
    if x.shape[0] != op.N:
        raise ValueError(f"signal length {x.shape[0]} does not match operator width {op.N}")
    if op.kind is OperatorKind.IDENTITY:
        return x.astype(complex)
    return op.matrix @ x


def add_awgn(y, snr_db: float, rng_seed=None) -> np.ndarray:
    """Add circular complex white noise at the given measurement SNR (dB).

    ``snr_db = inf`` returns ``y`` unchanged.
    """
    y = np.asarray(y, dtype=complex)
    if np.isinf(snr_db) and snr_db > 0:
        return y.copy()
    power = np.vdot(y, y).real
    if power == 0:
        raise ValueError("cannot set an SNR for a zero signal")
    var = power / (y.size * 10 ** (snr_db / 10))
    rng = np.random.default_rng(rng_seed)
    noise = rng.standard_normal(y.size) + 1j * rng.standard_normal(y.size)
    return y + np.sqrt(var / 2) * noise


def sensing_matrix(op: MeasurementOperator, dictionary: Dictionary) -> np.ndarray:
    if op.N != dictionary.N:
        raise ValueError(f"operator width {op.N} does not match signal length {dictionary.N}")
    if op.kind is OperatorKind.IDENTITY:
        return dictionary.atoms
    return op.matrix @ dictionary.atoms


def proxy(y, op: MeasurementOperator, dictionary: Dictionary) -> np.ndarray:
    """Correlation of the measurements with every compressed atom."""
    y = np.asarray(y)
    if y.shape[0] != op.M:
        raise ValueError(f"measurement length {y.shape[0]} does not match M={op.M}")
    return sensing_matrix(op, dictionary).conj().T @ y


def hard_threshold(v, t: float) -> np.ndarray:
    """Keep entries with magnitude strictly above ``t``."""
    if t < 0:
        raise ValueError("threshold must be nonnegative")
    v = np.asarray(v)
    return np.where(np.abs(v) > t, v, 0)


class Algorithm(str, Enum):
    CSP = "CSP"
    BSP = "BSP"
    KMEDIAN_ONLY = "KMedianOnly"
    THRESHOLD_ONLY = "ThresholdOnly"


@dataclass(frozen=True)
class RecoveryConfig:
    K: int
    t: float = 0.0
    max_outer_iter: int = 20
    nu: float = 1.0
    algorithm: Algorithm = Algorithm.CSP
    restarts: int = 5
    max_iter: int = 100
    rtol: float = 1e-6
    ridge: float = 1e-10

    def __post_init__(self):
        object.__setattr__(self, "algorithm", Algorithm(self.algorithm))
        if self.K < 1:
            raise ValueError("K must be positive")
        if self.t < 0:
            raise ValueError("threshold must be nonnegative")
        if not 0 <= self.nu <= 1:
            raise ValueError("nu must lie in [0, 1]")
        if self.max_outer_iter < 1:
            raise ValueError("max_outer_iter must be positive")


@dataclass
class EstimationResult:
    theta_hat: np.ndarray
    support: np.ndarray
    coefs: np.ndarray
    residual_norm: float
    iterations: int
    residual_history: list = field(default_factory=list)


def least_squares(A, y, ridge: float = 1e-10) -> np.ndarray:
    """Ridge-stabilized least squares through the normal equations."""
    G = A.conj().T @ A
    scale = max(float(np.max(np.abs(np.diag(G)))), 1e-300)
    G = G + ridge * scale * np.eye(G.shape[0])
    return np.linalg.solve(G, A.conj().T @ y)


def band_excluded_select(v, dictionary: Dictionary, K: int, nu: float,
                         candidates=None) -> np.ndarray:
    """Greedy largest-magnitude selection under a pairwise coherence cap ``nu``.

    An index is admissible while its atom's normalized coherence with every
    selected atom is at most ``nu``. Raises ``ValueError`` when fewer than
    ``K`` indices can be selected.
    """
    if not 0 <= nu <= 1:
        raise ValueError("nu must lie in [0, 1]")
    mag = np.abs(np.asarray(v)).reshape(-1)
    cand = np.arange(mag.size) if candidates is None \
        else np.asarray(candidates, dtype=int).reshape(-1)
    order = cand[np.argsort(-mag[cand], kind="stable")]
    atoms = dictionary.normalized_atoms[:, order]
    admissible = np.ones(order.size, dtype=bool)
    chosen = []
    for pos in range(order.size):
        if not admissible[pos]:
            continue
        chosen.append(order[pos])
        if len(chosen) == K:
            break
        admissible[pos] = False
        row = np.abs(atoms[:, pos].conj() @ atoms)
        admissible &= row <= nu + 1e-12
    if len(chosen) < K:
        raise ValueError(f"only {len(chosen)} admissible indices for K={K} at nu={nu}")
    return np.sort(np.asarray(chosen, dtype=int))


def _prune_band(c_full, dictionary, K, nu, union):
    try:
        return band_excluded_select(c_full, dictionary, K, nu, candidates=union)
    except ValueError:
        # fill with the heaviest remaining candidates so K estimates survive
        mag = np.abs(c_full)
        order = union[np.argsort(-mag[union], kind="stable")]
        chosen = []
        atoms = dictionary.normalized_atoms
        for idx in order:
            if all(abs(np.vdot(atoms[:, j], atoms[:, idx])) <= nu + 1e-12 for j in chosen):
                chosen.append(idx)
        for idx in order:
            if len(chosen) >= K:
                break
            if idx not in chosen:
                chosen.append(idx)
        return np.sort(np.asarray(chosen[:K], dtype=int))


def _prune_cluster(c_full, K, union, seed, cfg):
    weights = np.abs(c_full[union])
    if np.count_nonzero(weights) < K:
        keep = union[np.argsort(-weights, kind="stable")[:K]]
        return np.sort(keep)
    return kmedian_points(union, weights, K, rng_seed=seed, max_iter=cfg.max_iter,
                          restarts=cfg.restarts)


def _subspace_pursuit(y, op, dictionary, cfg: RecoveryConfig, rng_seed, clustering: bool):
    A = sensing_matrix(op, dictionary)
    y = np.asarray(y, dtype=complex)
    grid = dictionary.grid
    K = cfg.K
    y_norm = float(np.linalg.norm(y))
    seeds = as_seed_sequence(rng_seed).spawn(2 * cfg.max_outer_iter)

    S = np.empty(0, dtype=int)
    residual = y
    prev = y_norm
    history = []
    best = None
    it = 0
    for it in range(1, cfg.max_outer_iter + 1):
        v = hard_threshold(A.conj().T @ residual, cfg.t)
        nnz = int(np.count_nonzero(v))
        if S.size and nnz == 0:
            break
        if clustering:
            k_new = K if S.size == 0 else min(K, nnz)
            _, new = kmedian(v, grid, k_new, rng_seed=seeds[2 * it - 2],
                             max_iter=cfg.max_iter, restarts=cfg.restarts)
        else:
            k_new = K if S.size == 0 else min(K, nnz)
            new = band_excluded_select(v, dictionary, k_new, cfg.nu)
        union = np.union1d(S, new)
        c = least_squares(A[:, union], y, cfg.ridge)
        if union.size > K:
            c_full = np.zeros(grid.L, dtype=complex)
            c_full[union] = c
            if clustering:
                S = _prune_cluster(c_full, K, union, seeds[2 * it - 1], cfg)
            else:
                S = _prune_band(c_full, dictionary, K, cfg.nu, union)
        else:
            S = union
        coefs = least_squares(A[:, S], y, cfg.ridge)
        residual = y - A[:, S] @ coefs
        rn = float(np.linalg.norm(residual))
        history.append(rn)
        if best is None or rn < best[3]:
            best = (S.copy(), coefs, it, rn)
        if rn <= 1e-12 * y_norm or rn > prev * (1 - cfg.rtol):
            break
        prev = rn

    S, coefs, _, rn = best
    return EstimationResult(grid.value(S), S, coefs, rn, it, history)


def csp(y, op: MeasurementOperator, dictionary: Dictionary, config: RecoveryConfig,
        rng_seed=None) -> EstimationResult:
    """Clustering subspace pursuit.

    Each pass thresholds the residual proxy, adds the K-median support of
    what survives, refits by least squares on the union, and clusters the
    fitted magnitudes back down to ``K`` grid positions. The pass with the
    smallest residual is returned.
    """
    return _subspace_pursuit(y, op, dictionary, config, rng_seed, clustering=True)


def bsp(y, op: MeasurementOperator, dictionary: Dictionary, config: RecoveryConfig,
        rng_seed=None) -> EstimationResult:
    """Band-excluded subspace pursuit (no proxy threshold)."""
    cfg = RecoveryConfig(**{**config.__dict__, "t": 0.0})
    return _subspace_pursuit(y, op, dictionary, cfg, rng_seed, clustering=False)


def kmedian_estimate(y, op, dictionary, config: RecoveryConfig, rng_seed=None):
    """One-shot estimator: K-median of the thresholded proxy plus a LS fit."""
    A = sensing_matrix(op, dictionary)
    v = hard_threshold(A.conj().T @ np.asarray(y), config.t)
    _, S = kmedian(v, dictionary.grid, config.K, rng_seed=rng_seed,
                   max_iter=config.max_iter, restarts=config.restarts)
    coefs = least_squares(A[:, S], y, config.ridge)
    rn = float(np.linalg.norm(y - A[:, S] @ coefs))
    return EstimationResult(dictionary.grid.value(S), S, coefs, rn, 1, [rn])


def threshold_estimate(y, op, dictionary, config: RecoveryConfig, rng_seed=None):
    """One-shot estimator: the K largest proxy magnitudes plus a LS fit."""
    A = sensing_matrix(op, dictionary)
    v = np.abs(A.conj().T @ np.asarray(y))
    S = np.sort(np.argsort(-v, kind="stable")[:config.K])
    coefs = least_squares(A[:, S], y, config.ridge)
    rn = float(np.linalg.norm(y - A[:, S] @ coefs))
    return EstimationResult(dictionary.grid.value(S), S, coefs, rn, 1, [rn])


def estimate(y, op, dictionary, config: RecoveryConfig, rng_seed=None) -> EstimationResult:
    runner = {
        Algorithm.CSP: csp,
        Algorithm.BSP: bsp,
        Algorithm.KMEDIAN_ONLY: kmedian_estimate,
        Algorithm.THRESHOLD_ONLY: threshold_estimate,
    }[config.algorithm]
    return runner(y, op, dictionary, config, rng_seed=rng_seed)


__all__ = [
    "Algorithm", "EstimationResult", "KMedianError", "MeasurementOperator", "OperatorKind",
    "RecoveryConfig", "add_awgn", "band_excluded_select", "bsp", "csp", "estimate",
    "hard_threshold", "kmedian_estimate", "least_squares", "measure", "proxy",
    "sensing_matrix", "threshold_estimate",
]
