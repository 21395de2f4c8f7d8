"""Parametric signal models, parametric dictionaries and correlation profiles.

Two models are provided: a sampled windowed chirp for time-delay estimation
(parameter in seconds) and unit-norm complex exponentials for frequency
estimation (parameter in hertz).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Optional

import numpy as np

# Default cap on dictionary size (number of complex entries, N * L).
MAX_DICTIONARY_ENTRIES = 40_000_000

# Relative tolerance (in sampling periods) for the chirp support edges.
_EDGE_TOL = 1e-9


_WINDOW_SIGN = {"hann": -1.0, "edge": 1.0}


class ModelKind(str, Enum):
    CHIRP_TDE = "chirp"
    FOURIER_FE = "fourier"


@dataclass(frozen=True)
class ParameterGrid:
    """Uniform sampling ``theta_min + i * delta`` of a 1-D parameter interval."""

    theta_min: float
    theta_max: float
    delta: float

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError(f"grid spacing must be positive, got {self.delta}")
        if self.theta_max < self.theta_min:
            raise ValueError("theta_max must not be below theta_min")

    @property
    def L(self) -> int:
        return int(round((self.theta_max - self.theta_min) / self.delta)) + 1

    @property
    def points(self) -> np.ndarray:
        return self.theta_min + np.arange(self.L) * self.delta

    def value(self, index):
        """Parameter value(s) of 0-based grid index(es)."""
        return self.theta_min + np.asarray(index) * self.delta

    def nearest_index(self, theta):
        idx = np.rint((np.asarray(theta, dtype=float) - self.theta_min) / self.delta)
        return np.clip(idx, 0, self.L - 1).astype(int)


def build_grid(theta_min: float, theta_max: float, delta: float) -> ParameterGrid:
    if not delta > 0:
        raise ValueError(f"grid spacing must be positive, got {delta}")
    # a relative slack absorbs float noise such as 10e-6 - 0 vs 1e-9
    if theta_max - theta_min < delta * (1 - 1e-9):
        raise ValueError("parameter range must span at least one grid step")
    return ParameterGrid(float(theta_min), float(theta_max), float(delta))


@dataclass(frozen=True)
class ParametricModel:
    """Signal model ``theta -> psi(theta)`` in C^N.

    For the chirp model ``T``, ``f_c``, ``f_a`` and ``f_s`` are the chirp
    length, start frequency, frequency sweep and sampling rate. ``window``
    selects the amplitude taper ``1 - cos(2 pi u / T)`` ("hann", vanishing at
    the chirp edges) or ``1 + cos(2 pi u / T)`` ("edge", peaking at them);
    both have unit mean square so the atoms keep unit norm. The Fourier model
    only uses ``N``.
    """

    kind: ModelKind
    N: int
    T: float = 1e-6
    f_c: float = 1e6
    f_a: float = 20e6
    f_s: float = 50e6
    window: str = "hann"

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        if self.N < 1:
            raise ValueError("signal length N must be positive")
        if self.window not in _WINDOW_SIGN:
            raise ValueError(f"unknown chirp window {self.window!r}")

    @classmethod
    def chirp(cls, N=500, T=1e-6, f_c=1e6, f_a=20e6, f_s=50e6,
              window="hann") -> "ParametricModel":
        return cls(ModelKind.CHIRP_TDE, N, T, f_c, f_a, f_s, window)

    @classmethod
    def fourier(cls, N=1000) -> "ParametricModel":
        return cls(ModelKind.FOURIER_FE, N)

    def atoms(self, thetas) -> np.ndarray:
        """Matrix whose columns are ``psi(theta)`` for each entry of ``thetas``."""
        thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
        n = np.arange(self.N)[:, None]
        if self.kind is ModelKind.FOURIER_FE:
            return np.exp(2j * np.pi * thetas[None, :] * n / self.N) / np.sqrt(self.N)

        Ts = 1.0 / self.f_s
        u = n * Ts - thetas[None, :]
        tol = _EDGE_TOL * Ts
        inside = (u >= -tol) & (u <= self.T + tol)
        u = np.clip(u, 0.0, self.T)
        amp = np.sqrt(2.0 / (3.0 * self.T * self.f_s))
        phase = 2 * np.pi * (self.f_c + u / self.T * self.f_a) * u
        window = 1.0 + _WINDOW_SIGN[self.window] * np.cos(2 * np.pi * u / self.T)
        return np.where(inside, amp * np.exp(1j * phase) * window, 0.0)


def synthesize_atom(model: ParametricModel, theta: float) -> np.ndarray:
    return model.atoms([theta])[:, 0]


@dataclass(frozen=True, eq=False)
class Dictionary:
    """Parametric dictionary: columns are atoms at the grid points (read-only)."""

    model: ParametricModel
    grid: ParameterGrid
    atoms: np.ndarray = field(repr=False)

    @property
    def N(self) -> int:
        return self.atoms.shape[0]

    @property
    def L(self) -> int:
        return self.atoms.shape[1]

    @cached_property
    def column_norms(self) -> np.ndarray:
        return np.linalg.norm(self.atoms, axis=0)

    @cached_property
    def normalized_atoms(self) -> np.ndarray:
        norms = self.column_norms
        safe = np.where(norms > 0, norms, 1.0)
        return self.atoms / safe


def build_dictionary(model: ParametricModel, grid: ParameterGrid,
                     max_entries: int = MAX_DICTIONARY_ENTRIES) -> Dictionary:
    if model.N * grid.L > max_entries:
        raise MemoryError(
            f"dictionary of {model.N}x{grid.L} exceeds the cap of {max_entries} entries")
    atoms = model.atoms(grid.points)
    atoms.setflags(write=False)
    return Dictionary(model, grid, atoms)


def coherence(dictionary) -> float:
    """Largest normalized inner-product magnitude between distinct columns.

    Accepts a :class:`Dictionary` or a plain 2-D array.
    """
    A = dictionary.atoms if isinstance(dictionary, Dictionary) else np.asarray(dictionary)
    if A.shape[1] < 2:
        raise ValueError("coherence needs at least two columns")
    norms = np.linalg.norm(A, axis=0)
    if np.any(norms == 0):
        raise ValueError("dictionary has a zero-norm column")
    An = A / norms
    best = 0.0
    # blocked Gram to bound memory on large dictionaries
    step = 2048
    for start in range(0, An.shape[1], step):
        G = np.abs(An[:, start:start + step].conj().T @ An)
        rows = np.arange(G.shape[0])
        G[rows, start + rows] = 0.0
        best = max(best, float(G.max()))
    return min(best, 1.0)


@dataclass(frozen=True)
class CorrelationProfile:
    """Correlation magnitudes at offsets ``k * delta`` and their cumulative sum.

    ``cumulative`` is the midpoint running sum: every sample counts fully once
    it is strictly left of the evaluation offset and half at the offset
    itself. This keeps ``Lambda(theta) + Lambda(-theta) == total`` and
    ``Lambda(0) == total / 2`` exact on the discrete grid.
    """

    offsets: np.ndarray
    lam: np.ndarray
    cumulative: np.ndarray
    total: float
    delta: float

    @classmethod
    def from_lambda(cls, offsets, lam) -> "CorrelationProfile":
        offsets = np.asarray(offsets, dtype=float)
        lam = np.abs(np.asarray(lam))
        if offsets.ndim != 1 or offsets.shape != lam.shape or offsets.size < 2:
            raise ValueError("offsets and lambda must be equal-length 1-D arrays")
        steps = np.diff(offsets)
        if np.any(steps <= 0):
            raise ValueError("offsets must be strictly increasing")
        cum = np.cumsum(lam) - 0.5 * lam
        return cls(offsets, lam, cum, float(lam.sum()), float(steps[0]))

    @property
    def center(self) -> int:
        return int(np.argmin(np.abs(self.offsets)))

    @property
    def peak(self) -> float:
        return float(self.lam[self.center])

    def at(self, theta):
        """Cumulative correlation at arbitrary offsets (linear interpolation).

        Offsets beyond the last sample evaluate to ``total``, offsets before
        the first to 0.
        """
        theta = np.asarray(theta, dtype=float)
        xs = np.concatenate(([self.offsets[0] - self.delta], self.offsets,
                             [self.offsets[-1] + self.delta]))
        ys = np.concatenate(([0.0], self.cumulative, [self.total]))
        return np.interp(theta, xs, ys)

    @property
    def at_zero(self) -> float:
        return float(self.at(0.0))


def correlation_profile(model: ParametricModel, grid: ParameterGrid,
                        op=None, theta_ref: Optional[float] = None,
                        chunk: int = 2048) -> CorrelationProfile:
    """Correlation ``|psi(ref)^H Phi^H Phi psi(ref + k delta)|`` for |k| < L.

    ``op`` is an optional measurement operator (anything with a ``matrix``
    attribute, or a plain array) whose column count must equal ``model.N``.
    """
    L = grid.L
    if theta_ref is None:
        theta_ref = grid.theta_min + (L - 1) // 2 * grid.delta
    k = np.arange(-(L - 1), L)
    offsets = k * grid.delta

    Phi = None
    if op is not None:
        Phi = np.asarray(getattr(op, "matrix", op))
        if Phi.ndim != 2 or Phi.shape[1] != model.N:
            raise ValueError(
                f"operator with {Phi.shape} columns does not match signal length {model.N}")

    ref = synthesize_atom(model, theta_ref)
    if Phi is not None:
        ref = Phi.T @ (Phi @ ref)
    lam = np.empty(offsets.size)
    for start in range(0, offsets.size, chunk):
        A = model.atoms(theta_ref + offsets[start:start + chunk])
        lam[start:start + chunk] = np.abs(ref.conj() @ A)
    return CorrelationProfile.from_lambda(offsets, lam)


def inverse_cumulative(profile: CorrelationProfile, value: float) -> float:
    """Smallest grid offset whose cumulative correlation reaches ``value``."""
    if value < 0 or value > profile.total * (1 + 1e-12):
        raise ValueError(f"value {value} outside [0, {profile.total}]")
    i = int(np.searchsorted(profile.cumulative, value, side="left"))
    return float(profile.offsets[min(i, profile.offsets.size - 1)])


def compose_signal(dictionary: Dictionary, params, coefs) -> np.ndarray:
    """Sum of ``coefs[i] * psi(params[i])`` with atoms synthesized off-grid."""
    params = np.atleast_1d(np.asarray(params, dtype=float))
    coefs = np.atleast_1d(np.asarray(coefs))
    if params.size == 0:
        raise ValueError("need at least one component")
    if params.shape != coefs.shape:
        raise ValueError("params and coefs must have the same length")
    return dictionary.model.atoms(params) @ coefs.astype(complex)


def draw_random_scene(grid: ParameterGrid, K: int, zeta: float, epsilon: float = 0.0,
                      r: float = 1.0, magnitude_mode: str = "unit", rng_seed=None,
                      complex_phase: bool = True, on_grid: bool = False,
                      max_attempts: int = 1000):
    """Random K-component scene with separation and off-bound constraints.

    Parameters are drawn uniformly from ``[theta_min + epsilon, theta_max -
    epsilon]`` by sampling the gaps between sorted parameters, so the minimum
    pairwise separation is at least ``zeta`` by construction. With
    ``on_grid`` the draw is snapped to the grid and rejected if snapping
    breaks a constraint.

    ``magnitude_mode`` is ``"unit"`` (all ones) or ``"range"`` (log-uniform
    in ``[1, r]``). Returns ``(params, coefs)`` sorted by parameter.
    """
    if K < 1:
        raise ValueError("K must be positive")
    if r < 1:
        raise ValueError("dynamic range r must be >= 1")
    lo, hi = grid.theta_min + epsilon, grid.theta_max - epsilon
    slack = (hi - lo) - (K - 1) * zeta
    if slack <= 0:
        raise ValueError(
            f"infeasible scene: {K} components with separation {zeta} "
            f"and off-bound {epsilon} do not fit in the parameter range")
    rng = np.random.default_rng(rng_seed)

    for _ in range(max_attempts):
        # sorted uniform points in [0, slack] then spread by zeta
        base = np.sort(rng.uniform(0.0, slack, size=K))
        params = lo + base + zeta * np.arange(K)
        if on_grid:
            params = grid.value(grid.nearest_index(params))
            if (K > 1 and np.min(np.diff(params)) < zeta - 1e-12 * abs(grid.delta)) \
                    or params[0] < lo - 1e-12 or params[-1] > hi + 1e-12:
                continue
        break
    else:
        raise ValueError("could not draw a feasible on-grid scene")

    if magnitude_mode == "unit" or r == 1:
        mags = np.ones(K)
    elif magnitude_mode == "range":
        mags = np.exp(rng.uniform(0.0, np.log(r), size=K))
        # pin the extremes so the realized dynamic range is exactly r
        if K >= 2:
            order = rng.permutation(K)
            mags[order[0]], mags[order[1]] = 1.0, r
    else:
        raise ValueError(f"unknown magnitude mode {magnitude_mode!r}")
    if complex_phase:
        coefs = mags * np.exp(2j * np.pi * rng.uniform(size=K))
    else:
        coefs = mags.astype(complex)
    return params, coefs


def min_separation(params) -> float:
    params = np.sort(np.asarray(params, dtype=float))
    return float(np.min(np.diff(params))) if params.size > 1 else np.inf


def offbound_distance(grid: ParameterGrid, params) -> float:
    params = np.asarray(params, dtype=float)
    return float(np.min(np.minimum(params - grid.theta_min, grid.theta_max - params)))
