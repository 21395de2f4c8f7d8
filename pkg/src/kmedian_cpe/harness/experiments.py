"""Monte-Carlo experiment sweeps.

Every trial draws from its own seed, derived from ``(master seed, experiment
code, axis index, trial index)``, so records do not depend on execution
order. Within one trial all algorithms see the same scene, operator and noise.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from ..bounds import fit_decay
from ..recovery import (Algorithm, EstimationResult, MeasurementOperator, OperatorKind,
                        RecoveryConfig, add_awgn, estimate, measure)
from ..signal_models import (Dictionary, build_dictionary, compose_signal,
                             correlation_profile, draw_random_scene)
from ..transport import SparseCoefVector, emd_value, max_matched_error, pee
from .config import EXPERIMENT_CODES, DecayAxis, Experiment, ExperimentConfig
from .records import TrialRecord


def trial_seed(master: int, experiment, axis_index: int, trial_index: int) -> int:
    """64-bit seed of one trial."""
    if master < 0:
        raise ValueError("master seed must be nonnegative")
    code = EXPERIMENT_CODES[Experiment(experiment)]
    ss = np.random.SeedSequence([master, code, axis_index, trial_index])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass
class SweepResult:
    """Trial records plus one summary row per axis point."""

    config: ExperimentConfig
    records: List[TrialRecord]
    summary: List[dict]
    series: Dict[str, tuple] = field(default_factory=dict)


@dataclass
class TrialScene:
    params: np.ndarray
    coefs: np.ndarray
    results: Dict[Algorithm, EstimationResult]
    runtimes_ms: Dict[Algorithm, float]


def _recovery_config(cfg: ExperimentConfig, algorithm: Algorithm, t: Optional[float] = None):
    if t is None:
        t = cfg.t if algorithm == Algorithm.BSP else cfg.threshold_for_csp
    nu = cfg.nu if algorithm == Algorithm.BSP else 1.0
    return RecoveryConfig(K=cfg.K, t=t, nu=nu, algorithm=algorithm, restarts=cfg.restarts,
                          max_iter=cfg.max_iter, max_outer_iter=cfg.max_outer_iter)


def _operator(cfg: ExperimentConfig, kappa: float, N: int, seed) -> MeasurementOperator:
    if kappa is None:
        return MeasurementOperator.identity(N)
    if kappa == 1.0 and cfg.unit_rate_identity:
        return MeasurementOperator.identity(N)
    return MeasurementOperator.from_rate(OperatorKind(cfg.operator), kappa, N, seed=seed)


def run_trial(cfg: ExperimentConfig, dictionary: Dictionary, seed: int, *, zeta: float,
              kappa: Optional[float], snr_db: float, r: Optional[float] = None,
              t: Optional[float] = None, algorithms=None) -> TrialScene:
    """One scene measured once and estimated by every requested algorithm.

    ``kappa=None`` measures with the identity.
    """
    scene_ss, op_ss, noise_ss, alg_ss = np.random.SeedSequence(seed).spawn(4)
    r = cfg.r if r is None else r
    params, coefs = draw_random_scene(
        dictionary.grid, cfg.K, zeta, cfg.epsilon, r=r,
        magnitude_mode=cfg.magnitude_mode if r > 1 else "unit", rng_seed=scene_ss,
        complex_phase=cfg.complex_phase, on_grid=cfg.on_grid)
    op = _operator(cfg, kappa, dictionary.N, op_ss)
    y = measure(op, compose_signal(dictionary, params, coefs))
    y = add_awgn(y, snr_db, rng_seed=noise_ss)
    results, runtimes = {}, {}
    algorithms = cfg.algorithms if algorithms is None else algorithms
    for alg in algorithms:
        start = time.perf_counter()
        res = estimate(y, op, dictionary, _recovery_config(cfg, alg, t), rng_seed=alg_ss)
        runtimes[alg] = (time.perf_counter() - start) * 1e3
        results[alg] = res
    return TrialScene(params, coefs, results, runtimes)


def coefficient_emd(dictionary: Dictionary, params, coefs, result: EstimationResult) -> float:
    """EMD between true magnitudes (at their nearest grid points) and estimated ones."""
    L = dictionary.grid.L
    truth = SparseCoefVector.from_entries(L, dictionary.grid.nearest_index(params),
                                          np.abs(coefs))
    est = np.abs(np.asarray(result.coefs))
    if not np.any(est > 0):
        return truth.mass * L
    return emd_value(truth, SparseCoefVector.from_entries(L, result.support, est))


def make_records(cfg: ExperimentConfig, dictionary: Dictionary, axis_value: float,
                 trial: int, seed: int, scene: TrialScene) -> List[TrialRecord]:
    out = []
    for alg, res in scene.results.items():
        total = pee(scene.params, res.theta_hat)
        out.append(TrialRecord(
            experiment=cfg.experiment.value, axis_value=float(axis_value), trial=trial,
            seed=seed, pee_total=total, pee_avg=total / cfg.K,
            max_component_error=max_matched_error(scene.params, res.theta_hat),
            emd=coefficient_emd(dictionary, scene.params, scene.coefs, res),
            runtime_ms=float(scene.runtimes_ms[alg]) if cfg.record_runtime else 0.0,
            algorithm=alg.value))
    return out


def _require(cfg: ExperimentConfig, experiment: Experiment):
    if cfg.experiment != experiment:
        raise ValueError(f"expected a {experiment.value} config, got {cfg.experiment.value}")


def run_separation_sweep(cfg: ExperimentConfig, dictionary: Optional[Dictionary] = None):
    """Maximum component error over trials at each minimum separation (identity measurements).

    Summary rows hold ``zeta``, ``sigma`` (max over trials of the largest
    matched component error), ``lam_sigma`` = Λ(σ)/Λ(0) and ``lam_zeta`` =
    Λ(ζ)/Λ(∞).
    """
    _require(cfg, Experiment.SEPARATION)
    model, grid = cfg.build_model(), cfg.build_grid()
    dictionary = dictionary or build_dictionary(model, grid)
    profile = correlation_profile(model, grid)
    records, summary = [], []
    for ai, zeta in enumerate(cfg.axis):
        sigma = {alg: 0.0 for alg in cfg.algorithms}
        for trial in range(cfg.trials):
            seed = trial_seed(cfg.seed, cfg.experiment, ai, trial)
            scene = run_trial(cfg, dictionary, seed, zeta=zeta, kappa=None,
                              snr_db=cfg.snr_db)
            recs = make_records(cfg, dictionary, zeta, trial, seed, scene)
            for rec in recs:
                alg = Algorithm(rec.algorithm)
                sigma[alg] = max(sigma[alg], rec.max_component_error)
            records.extend(recs)
        for alg, s in sigma.items():
            summary.append(dict(
                algorithm=alg.value, zeta=zeta, sigma=s,
                zeta_over_delta=zeta / grid.delta, sigma_over_delta=s / grid.delta,
                lam_sigma=float(profile.at(s)) / profile.at_zero,
                lam_zeta=float(profile.at(zeta)) / profile.total))
    series = {}
    for alg in cfg.algorithms:
        rows = [s for s in summary if s["algorithm"] == alg.value]
        series[f"{alg.value}_normalized"] = ([s["lam_zeta"] for s in rows],
                                             [s["lam_sigma"] for s in rows])
        series[f"{alg.value}_raw"] = ([s["zeta_over_delta"] for s in rows],
                                      [s["sigma_over_delta"] for s in rows])
    return SweepResult(cfg, records, summary, series)


def linearity_r2(summary: List[dict], delta: float, algorithm: Optional[str] = None):
    """R² of the least-squares line of Λ(σ)/Λ(0) on Λ(ζ)/Λ(∞) over rows with σ > Δ.

    Returns ``(r2, n_points)``; ``r2`` is nan with fewer than three points.
    """
    rows = [s for s in summary if s["sigma"] > delta * (1 + 1e-9)
            and (algorithm is None or s["algorithm"] == algorithm)]
    if len(rows) < 3:
        return math.nan, len(rows)
    x = np.array([s["lam_zeta"] for s in rows])
    y = np.array([s["lam_sigma"] for s in rows])
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        return math.nan, len(rows)
    return float(np.corrcoef(x, y)[0, 1] ** 2), len(rows)


def min_separation_reached(summary: List[dict], delta: float,
                           algorithm: Optional[str] = None) -> float:
    """Smallest swept ζ/Δ from which every larger swept ζ has σ ≤ Δ (inf if none)."""
    rows = sorted((s for s in summary if algorithm is None or s["algorithm"] == algorithm),
                  key=lambda s: s["zeta"])
    best = math.inf
    for s in reversed(rows):
        if s["sigma"] <= delta * (1 + 1e-9):
            best = s["zeta_over_delta"]
        else:
            break
    return best


def _decay_setting(cfg: ExperimentConfig, value: float):
    """Model overrides, r and t for one decay-sweep axis point."""
    if cfg.decay_axis == DecayAxis.F_A:
        return dict(f_a=value), cfg.r, cfg.threshold_for_csp
    if cfg.decay_axis == DecayAxis.R:
        return {}, value, cfg.threshold_for_csp
    return {}, cfg.r, value


def run_decay_sweep(cfg: ExperimentConfig):
    """Smallest ζ (a multiple of Δ) whose maximum error over the trials is at most Δ.

    The estimator is ``cfg.algorithms[0]`` (by default the K-median of the
    thresholded proxy) with identity measurements. Bisection runs over integer
    ζ/Δ in ``[zeta_lo, zeta_hi]``; every probe of one axis point reuses the
    same trial seeds. An axis point whose bracket
    does not hold (``zeta_hi`` fails or ``zeta_lo`` already succeeds) is
    reported unresolved with ``zeta_min = nan``; success already at
    ``zeta_lo`` resolves to ``zeta_lo``. Records are the trials at the
    resolved ``zeta_min``.
    """
    _require(cfg, Experiment.DECAY)
    grid = cfg.build_grid()
    alg = cfg.algorithms[0]
    lo_m = max(1, int(math.ceil(cfg.zeta_lo / grid.delta - 1e-9)))
    hi_m = int(math.floor(cfg.zeta_hi / grid.delta + 1e-9))
    records, summary = [], []
    for ai, value in enumerate(cfg.axis):
        overrides, r, t = _decay_setting(cfg, value)
        model = cfg.build_model(**overrides)
        dictionary = build_dictionary(model, grid)
        a = fit_decay(correlation_profile(model, grid), floor=cfg.fit_floor)
        seeds = [trial_seed(cfg.seed, cfg.experiment, ai, k) for k in range(cfg.trials)]
        cache = {}

        def probe(m):
            # True when every trial at zeta = m * delta has error <= delta
            if m in cache:
                return cache[m][0]
            recs = []
            ok = True
            for k, seed in enumerate(seeds):
                scene = run_trial(cfg, dictionary, seed, zeta=m * grid.delta, kappa=None,
                                  snr_db=cfg.snr_db, r=r, t=t, algorithms=(alg,))
                rec = make_records(cfg, dictionary, value, k, seed, scene)[0]
                recs.append(rec)
                if rec.max_component_error > grid.delta * (1 + 1e-9):
                    ok = False
                    break
            cache[m] = (ok, recs)
            return ok

        status, zmin = "resolved", math.nan
        if not probe(hi_m):
            status = "unresolved: upper end fails"
        elif probe(lo_m):
            status, zmin = "resolved at lower end", float(lo_m)
        else:
            lo, hi = lo_m, hi_m
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if probe(mid):
                    hi = mid
                else:
                    lo = mid
            zmin = float(hi)
        if not math.isnan(zmin):
            records.extend(cache[int(zmin)][1])
        summary.append(dict(axis=cfg.decay_axis.value, value=value, a=a, r=r, t=t,
                            zeta_min_over_delta=zmin, status=status))
    x_key = "a" if cfg.decay_axis == DecayAxis.F_A else "value"
    series = {f"decay_{cfg.decay_axis.value}": (
        [s[x_key] for s in summary], [s["zeta_min_over_delta"] for s in summary])}
    return SweepResult(cfg, records, summary, series)


def _mean_table(cfg, records, key):
    summary = []
    for value in cfg.axis:
        for alg in cfg.algorithms:
            vals = [rec.pee_avg for rec in records
                    if rec.axis_value == value and rec.algorithm == alg.value]
            summary.append({key: value, "algorithm": alg.value,
                            "mean_pee_avg": float(np.mean(vals)),
                            "max_pee_avg": float(np.max(vals))})
    series = {}
    for alg in cfg.algorithms:
        rows = [s for s in summary if s["algorithm"] == alg.value]
        series[f"{alg.value}_{key}"] = ([s[key] for s in rows],
                                        [s["mean_pee_avg"] for s in rows])
    return summary, series


def run_compression_sweep(cfg: ExperimentConfig, dictionary: Optional[Dictionary] = None):
    """Mean average parameter error per compression rate, noiseless, fresh Φ per trial."""
    _require(cfg, Experiment.COMPRESSION)
    dictionary = dictionary or build_dictionary(cfg.build_model(), cfg.build_grid())
    records = []
    for ai, kappa in enumerate(cfg.axis):
        for trial in range(cfg.trials):
            seed = trial_seed(cfg.seed, cfg.experiment, ai, trial)
            scene = run_trial(cfg, dictionary, seed, zeta=cfg.zeta, kappa=kappa,
                              snr_db=math.inf)
            records.extend(make_records(cfg, dictionary, kappa, trial, seed, scene))
    summary, series = _mean_table(cfg, records, "kappa")
    return SweepResult(cfg, records, summary, series)


def run_snr_sweep(cfg: ExperimentConfig, dictionary: Optional[Dictionary] = None):
    """Mean average parameter error per SNR (dB) at compression rate ``cfg.kappa``."""
    _require(cfg, Experiment.SNR)
    dictionary = dictionary or build_dictionary(cfg.build_model(), cfg.build_grid())
    records = []
    for ai, snr in enumerate(cfg.axis):
        for trial in range(cfg.trials):
            seed = trial_seed(cfg.seed, cfg.experiment, ai, trial)
            scene = run_trial(cfg, dictionary, seed, zeta=cfg.zeta, kappa=cfg.kappa,
                              snr_db=snr)
            records.extend(make_records(cfg, dictionary, snr, trial, seed, scene))
    summary, series = _mean_table(cfg, records, "snr_db")
    return SweepResult(cfg, records, summary, series)


def run_single(cfg: ExperimentConfig, dictionary: Optional[Dictionary] = None):
    """Trials at each listed separation with the configured κ and SNR."""
    _require(cfg, Experiment.SINGLE)
    dictionary = dictionary or build_dictionary(cfg.build_model(), cfg.build_grid())
    records = []
    for ai, zeta in enumerate(cfg.axis):
        for trial in range(cfg.trials):
            seed = trial_seed(cfg.seed, cfg.experiment, ai, trial)
            scene = run_trial(cfg, dictionary, seed, zeta=zeta, kappa=cfg.kappa,
                              snr_db=cfg.snr_db)
            records.extend(make_records(cfg, dictionary, zeta, trial, seed, scene))
    summary, series = _mean_table(cfg, records, "zeta")
    return SweepResult(cfg, records, summary, series)


RUNNERS = {
    Experiment.SEPARATION: run_separation_sweep,
    Experiment.DECAY: run_decay_sweep,
    Experiment.COMPRESSION: run_compression_sweep,
    Experiment.SNR: run_snr_sweep,
    Experiment.SINGLE: run_single,
}


def run(cfg: ExperimentConfig) -> SweepResult:
    return RUNNERS[cfg.experiment](cfg)
