"""Acceptance criteria at their stated tolerances.

Each test records its outcome with :mod:`acceptance_report`; the session ends
with one PASS/FAIL line per criterion. Parts that are known not to hold are
marked ``xfail(strict=True)``: they still run and must still fail, and the
analysis is in the decisions ledger.
"""

import math
import time

import numpy as np
import pytest
from scipy.stats import rankdata, spearmanr

from acceptance_report import record
from instances import random_equal_mass_pair, random_pee_instance, random_theorem1_pair
from kmedian_cpe.clustering import LloydTrace, kmedian_objective, lloyd
from kmedian_cpe.harness.config import Experiment, preset
from kmedian_cpe.harness.experiments import linearity_r2, min_separation_reached, run
from kmedian_cpe.harness.records import records_to_csv
from kmedian_cpe.transport import (
    SparseCoefVector, emd_lp_oracle, emd_sparse_approx, emd_value, pee, pee_bruteforce,
    theorem1_check)

pytestmark = pytest.mark.slow


# 1. oracle equivalence

def test_criterion1_oracle_equivalence():
    start = time.perf_counter()
    rng = np.random.default_rng(101)
    emd_err = max(abs(emd_value(c, h) - emd_lp_oracle(c, h))
                  for c, h in (random_equal_mass_pair(rng) for _ in range(500)))
    pee_err = max(abs(pee(a, b) - pee_bruteforce(a, b))
                  for a, b in (random_pee_instance(rng) for _ in range(500)))
    elapsed = time.perf_counter() - start
    ok = emd_err <= 1e-9 and pee_err <= 1e-9 and elapsed < 10
    record(1, "emd vs LP and pee vs permutations", ok,
           f"max |diff| emd={emd_err:.1e}, pee={pee_err:.1e}, {elapsed:.1f} s")
    assert ok


# 2. PEE bounded by the scaled EMD

def test_criterion2_equal_magnitudes_and_single_component():
    start = time.perf_counter()
    rng = np.random.default_rng(202)
    violations, worst_gap = 0, 0.0
    for _ in range(10_000):
        K, L = int(rng.integers(1, 7)), 400
        m = rng.uniform(0.1, 10)
        c = SparseCoefVector(L, np.sort(rng.choice(L, K, replace=False)), np.full(K, m))
        chat = SparseCoefVector(L, np.sort(rng.choice(L, K, replace=False)), np.full(K, m))
        chk = theorem1_check(c, chat, 0.02)
        violations += not chk.holds
        if K == 1:
            worst_gap = max(worst_gap, abs(chk.lhs - chk.rhs))
    elapsed = time.perf_counter() - start
    ok = violations == 0 and worst_gap <= 1e-9 and elapsed < 30
    record(2, "equal magnitudes, single-component equality", ok,
           f"{violations} violations in 10^4 pairs, single-component gap {worst_gap:.1e}, "
           f"{elapsed:.1f} s")
    assert ok


@pytest.mark.xfail(strict=True, reason=(
    "the inequality is false for unequal magnitudes: c = {1@0, 1@2, 2@200}, "
    "chat = {2@1, 1@198, 1@200} has EMD 4 but PEE 197 in grid units; the random "
    "suite hits such a configuration; see the ledger"))
def test_criterion2_mixed_dynamic_range():
    start = time.perf_counter()
    rng = np.random.default_rng(202)
    violations = sum(not theorem1_check(*random_theorem1_pair(rng), delta=0.02).holds
                     for _ in range(10_000))
    elapsed = time.perf_counter() - start
    ok = violations == 0 and elapsed < 30
    record(2, "mixed dynamic ranges r in {1, 2, 10, 100}", ok,
           f"{violations} violations in 10^4 pairs, {elapsed:.1f} s")
    assert ok


# 3. clustering

def test_criterion3_clustering():
    rng = np.random.default_rng(303)
    increases = 0
    for _ in range(1000):
        L = int(rng.integers(5, 200))
        v = rng.exponential(size=L) * (rng.uniform(size=L) < 0.5)
        v[rng.integers(L)] += 1.0
        K = int(rng.integers(1, min(8, np.count_nonzero(v)) + 1))
        trace = LloydTrace()
        lloyd(np.arange(L), v, np.sort(rng.choice(L, K, replace=False)), trace=trace)
        obj = np.array(trace.objectives)
        increases += int(np.sum(np.diff(obj) > 1e-12 * max(1.0, obj[0])))
    worst = 0.0
    for _ in range(1000):
        L = int(rng.integers(2, 150))
        v = rng.exponential(size=L) * (rng.uniform(size=L) < 0.6)
        v[rng.integers(L)] += 1.0
        S = np.sort(rng.choice(L, int(rng.integers(1, min(L, 8) + 1)), replace=False))
        diff = abs(kmedian_objective(v, S)
                   - emd_value(SparseCoefVector.from_dense(v), emd_sparse_approx(v, S)))
        worst = max(worst, diff)
    ok = increases == 0 and worst <= 1e-9
    record(3, "Lloyd monotonicity and objective = EMD", ok,
           f"{increases} objective increases in 10^3 runs, max |diff| {worst:.1e}")
    assert ok


# 4. noiseless recovery

@pytest.fixture(scope="module")
def noiseless_identity():
    cfg = preset(Experiment.COMPRESSION, "tde").replace(axis=(1.0,), unit_rate_identity=True,
                                                        t=0.0, csp_t=None)
    start = time.perf_counter()
    res = run(cfg)
    return cfg, res, time.perf_counter() - start


def test_criterion4_noiseless_recovery(noiseless_identity):
    cfg, res, elapsed = noiseless_identity
    exact = {alg.value: sum(r.pee_total == 0 for r in res.records if r.algorithm == alg.value)
             for alg in cfg.algorithms}
    ok = all(n >= 95 for n in exact.values()) and elapsed < 300
    record(4, "PEE = 0 counts", ok,
           ", ".join(f"{a} {n}/100" for a, n in exact.items()) + f", {elapsed:.0f} s")
    assert ok


# 5. separation sweep

@pytest.fixture(scope="module")
def separation():
    out = {}
    start = time.perf_counter()
    for model in ("tde", "fe"):
        cfg = preset(Experiment.SEPARATION, model)
        assert cfg.trials == 100
        res = run(cfg)
        alg = cfg.algorithms[0].value
        r2, n = linearity_r2(res.summary, cfg.delta, alg)
        out[model] = dict(r2=r2, points=n, zmin=min_separation_reached(res.summary, cfg.delta, alg))
    out["elapsed"] = time.perf_counter() - start
    return out


def test_criterion5_fe_needs_larger_separation(separation):
    tde, fe = separation["tde"]["zmin"], separation["fe"]["zmin"]
    ok = fe > tde and separation["elapsed"] < 1800
    record(5, "FE min zeta/delta > TDE", ok,
           f"FE {fe}, TDE {tde}, {separation['elapsed']:.0f} s for both sweeps")
    assert ok


def _linearity(separation, model):
    r2, n = separation[model]["r2"], separation[model]["points"]
    ok = r2 >= 0.9
    record(5, f"{model.upper()} R^2 >= 0.9", ok, f"R^2 = {r2:.3f} over {n} points with sigma > delta")
    assert ok


@pytest.mark.xfail(strict=True, reason=(
    "sigma > delta only for zeta below about 16 delta, where the bias of the K-median "
    "jumps between sidelobe plateaus instead of following a line; see the ledger"))
def test_criterion5_linearity_tde(separation):
    _linearity(separation, "tde")


@pytest.mark.xfail(strict=True, reason=(
    "at the swept FE separations the error is dominated by isolated gross errors from "
    "Dirichlet sidelobes, so sigma is not a smooth function of zeta; see the ledger"))
def test_criterion5_linearity_fe(separation):
    _linearity(separation, "fe")


# 6. decay-sweep trends

@pytest.fixture(scope="module")
def decay():
    out = {}
    start = time.perf_counter()
    for axis in ("f_a", "r", "t"):
        cfg = preset(Experiment.DECAY, decay_axis=axis)
        out[axis] = run(cfg).summary
    out["elapsed"] = time.perf_counter() - start
    return out


def _trend(decay, axis, x_key, sign, label):
    rows = decay[axis]
    x = [row[x_key] for row in rows]
    # an unresolved point (fails even at the largest separation) ranks above every resolved one
    z = [math.inf if math.isnan(row["zeta_min_over_delta"]) else row["zeta_min_over_delta"]
         for row in rows]
    rho = float(spearmanr(x, rankdata(z)).statistic)
    ok = len(rows) >= 5 and sign * rho >= 0.9 and decay["elapsed"] < 1800
    word = "decreasing" if sign < 0 else "increasing"
    record(6, f"zeta_min {word} in {label}", ok,
           f"rho = {rho:.3f}, zeta_min/delta = {[round(v, 1) for v in z]}, "
           f"{decay['elapsed']:.0f} s for all sweeps")
    assert ok


def test_criterion6_decreasing_in_decay_rate(decay):
    _trend(decay, "f_a", "a", -1, "fitted a")


def test_criterion6_increasing_in_dynamic_range(decay):
    _trend(decay, "r", "value", +1, "r")


@pytest.mark.xfail(strict=True, reason=(
    "at f_a = 10 MHz and r = 1 the required separation is a few grid steps and nearly "
    "flat in t, rising slightly at large t; the decrease appears only for slow decay "
    "(f_a = 2 MHz); see the ledger"))
def test_criterion6_decreasing_in_threshold(decay):
    _trend(decay, "t", "value", -1, "t")


# 7. compression / SNR parity

@pytest.fixture(scope="module")
def parity():
    out = {}
    for model in ("tde", "fe"):
        for exp in (Experiment.COMPRESSION, Experiment.SNR):
            cfg = preset(exp, model)
            assert cfg.trials == 100
            out[model, exp] = (cfg, run(cfg))
    return out


def _parity(parity, model):
    worst, text = 0.0, []
    for exp, key in ((Experiment.COMPRESSION, "kappa"), (Experiment.SNR, "snr_db")):
        cfg, res = parity[model, exp]
        means = {(s[key], s["algorithm"]): s["mean_pee_avg"] for s in res.summary}
        for value in cfg.axis:
            csp_err, bsp_err = means[value, "CSP"], means[value, "BSP"]
            ratio = 1.0 if csp_err == bsp_err else (math.inf if bsp_err == 0 else csp_err / bsp_err)
            worst = max(worst, ratio)
            text.append(f"{key}={value:g}: CSP {csp_err / cfg.delta:.3g} / BSP "
                        f"{bsp_err / cfg.delta:.3g} grid steps")
    ok = worst <= 2.0
    record(7, f"{model.upper()} CSP within 2x of BSP", ok, "; ".join(text))
    assert ok


@pytest.mark.xfail(strict=True, reason=(
    "with t = 0 the Gaussian-operator proxy has a noise floor of about |y|/sqrt(M) at "
    "every grid index whose total mass outweighs the true peaks, so the first K-median "
    "lands on the floor; BSP is unaffected; see the ledger"))
def test_criterion7_parity_tde(parity):
    _parity(parity, "tde")


def test_criterion7_parity_fe(parity):
    _parity(parity, "fe")


# 8. determinism

def test_criterion8_determinism(noiseless_identity, parity):
    runs = [("noiseless identity", noiseless_identity[0], noiseless_identity[1])]
    runs += [(f"{m} {e.value}", *parity[m, e]) for m, e in
             (("tde", Experiment.SNR), ("fe", Experiment.COMPRESSION))]
    same = []
    for name, cfg, first in runs:
        same.append(records_to_csv(run(cfg).records) == records_to_csv(first.records))
    ok = all(same)
    record(8, "identical CSV bytes on rerun", ok,
           ", ".join(f"{name}: {'identical' if s else 'differs'}"
                     for (name, _, _), s in zip(runs, same)))
    assert ok
