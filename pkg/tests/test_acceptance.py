"""Acceptance criteria.

Each test prints one ``CRITERION <n> ... PASS|FAIL`` line straight to the
terminal. Criteria 4 and 5 are marked ``slow``; deselect them with
``-m "not slow"``.
"""

import math
import time

import numpy as np
import pytest

import oracles
from edfcp.bootstrap import MultiplierConfig, gen_multipliers, induced_correlation, replicate_paths, rescaled_clock
from edfcp.core import MonitorConfig, quantile
from edfcp.detectors import DominanceState, detector_path_all, detector_values, extend
from edfcp.simulation import AR1, GARCH11, IidNormal, IidUniform, Scenario, run_level_experiment, run_power_experiment
from edfcp.thresholds import DEFAULT_M, bootstrap_threshold, xi_from_alpha

KINDS = "RSTPQ"

# published reference levels at m = 50, n = 100: (kind, gamma, p) -> rejection percentage
REFERENCE_LEVELS = {
    ("T", 0.0, 1): 5.2, ("T", 0.5, 1): 5.1, ("S", 0.0, 1): 4.9, ("S", 0.5, 1): 4.9,
    ("R", 0.0, 1): 4.7, ("R", 0.5, 1): 4.7, ("Q", 0.0, 1): 5.2, ("P", 0.0, 1): 5.2,
    ("T", 0.0, 10): 5.2, ("T", 0.5, 10): 5.0, ("S", 0.0, 10): 4.9, ("S", 0.5, 10): 5.2,
    ("R", 0.0, 10): 4.6, ("R", 0.5, 10): 5.0, ("Q", 0.0, 10): 5.0, ("P", 0.0, 10): 4.8,
}


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {n}: {'PASS' if ok else 'FAIL'} - {detail}")
        return ok

    return emit


def test_criterion_1_oracle_equivalence(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst_det = worst_rep = 0.0
    n_rep = 0
    for _ in range(500):
        m = int(rng.integers(2, 7))
        n = int(rng.integers(m + 1, 13))
        d = int(rng.integers(1, 4))
        gamma = float(rng.choice([0.0, 0.25, 0.5]))
        X = rng.standard_normal((n, d))
        st = DominanceState.from_array(X)
        for k in range(m + 1, n + 1):
            vals = detector_values(st, m, k, gamma, 1e-4)
            for code, kind in enumerate(KINDS):
                worst_det = max(worst_det, abs(vals[code] - oracles.detector(X, m, k, kind, gamma)))
        # replicates live on the learning sample alone and need m' >= 2
        mp, _ = rescaled_clock(m, n)
        if mp >= 2:
            xi = rng.standard_normal((1, m))
            for kind in "RST":
                cfg = MonitorConfig(m=m, n=n, detector=kind, gamma=gamma, dim=d)
                got = replicate_paths(X[:m], cfg, MultiplierConfig.fixed(1), multipliers=xi).values[0]
                worst_rep = max(worst_rep, np.max(np.abs(got - oracles.replicate(X[:m], xi[0], n, kind, gamma))))
            n_rep += 1
    elapsed = time.perf_counter() - t0
    ok = worst_det <= 1e-12 and worst_rep <= 1e-12 and elapsed <= 60
    report(1, ok, f"max |detector err| {worst_det:.1e}, max |replicate err| {worst_rep:.1e} "
                  f"({n_rep} replicate instances), {elapsed:.1f}s")
    assert ok


def test_criterion_2_margin_invariance(report):
    maps = [lambda x: x**3 + x, np.exp, lambda x: np.arctan(x), lambda x: 2 * x - 7]
    rng = np.random.default_rng(2)
    bad = 0
    for inst in range(100):
        m = int(rng.integers(20, 41))
        n = m + int(rng.integers(5, 30))
        d = int(rng.integers(1, 4))
        gamma = float(rng.choice([0.0, 0.25, 0.5]))
        X = rng.standard_normal((n, d))
        Y = np.column_stack([maps[(inst + c) % 4](X[:, c]) for c in range(d)])
        if not np.array_equal(detector_path_all(X, m, gamma), detector_path_all(Y, m, gamma)):
            bad += 1
            continue
        cfg = MonitorConfig(m=m, n=n, p=2, detector="RST"[inst % 3], gamma=gamma, dim=d)
        mult = MultiplierConfig(B=50, seed=inst)
        if bootstrap_threshold(X[:m], cfg, mult).levels != bootstrap_threshold(Y[:m], cfg, mult).levels:
            bad += 1
    report(2, bad == 0, f"{bad} of 100 instances changed under monotone margins")
    assert bad == 0


def test_criterion_3_mc_levels(report):
    t0 = time.perf_counter()
    misses = []
    lines = []
    # every cell gets its own data stream; sharing one would correlate the cells
    for cell, ((kind, gamma, p), ref) in enumerate(REFERENCE_LEVELS.items()):
        scn = Scenario(IidUniform(), 50, 100)
        cfg = MonitorConfig(m=50, n=100, p=p, detector=kind, gamma=gamma)
        lvl = run_level_experiment(scn, cfg, "mc", 2000, seed=300 + cell, M=20_000).rejection_pct
        lines.append(f"{kind} g={gamma} p={p}: {lvl:.2f} (reference {ref})")
        if abs(lvl - ref) > 1.5:
            misses.append(lines[-1])
    elapsed = time.perf_counter() - t0
    ok = not misses and elapsed <= 1800
    report(3, ok, f"{len(REFERENCE_LEVELS) - len(misses)}/{len(REFERENCE_LEVELS)} cells within 1.5 points, {elapsed:.0f}s; "
                  + "; ".join(lines))
    assert ok


def _bootstrap_level(model, gamma, m, seed):
    n = 2 * m
    scn = Scenario(model, m, n)
    cfg = MonitorConfig(m=m, n=n, p=1, detector="T", gamma=gamma)
    return run_level_experiment(scn, cfg, "bootstrap", 500, seed=seed, mult=MultiplierConfig(B=1000)).rejection_pct


@pytest.mark.slow
def test_criterion_4_bootstrap_ar1_levels(report):
    t0 = time.perf_counter()
    l0 = _bootstrap_level(AR1(0.0), 0.0, 200, seed=40)
    l5 = _bootstrap_level(AR1(0.5), 0.0, 200, seed=45)
    ok = abs(l0 - 5.1) <= 2.5 and abs(l5 - 7.5) <= 2.5
    report(4, ok, f"beta=0: {l0:.1f} (reference 5.1), beta=0.5: {l5:.1f} (reference 7.5), "
                  f"{time.perf_counter() - t0:.0f}s")
    assert ok


@pytest.mark.slow
def test_criterion_5_garch_level(report):
    t0 = time.perf_counter()
    lvl = _bootstrap_level(GARCH11(), 0.5, 200, seed=50)
    ok = abs(lvl - 5.7) <= 2.5
    report(5, ok, f"GARCH T gamma=0.5: {lvl:.1f} (reference 5.7), {time.perf_counter() - t0:.0f}s")
    assert ok


def test_criterion_6_uniform_false_alarms(report):
    scn = Scenario(IidUniform(), 50, 100)
    cfg = MonitorConfig(m=50, n=100, p=10, detector="R")
    res = run_level_experiment(scn, cfg, "mc", 10_000, seed=6, M=DEFAULT_M)
    total = res.n_alarms
    se = math.sqrt(0.1 * 0.9 / total)
    shares = [h / total for h in res.alarm_histogram]
    worst = max(abs(s - 0.1) / se for s in shares)
    ok = worst <= 3
    report(6, ok, f"{total} alarms, shares {[round(s, 3) for s in shares]}, worst deviation {worst:.2f} SE")
    assert ok


def test_criterion_7_xi_identities(report):
    xi = xi_from_alpha(0.05, 50)
    e1 = abs((1 - xi) ** 50 - 0.95)
    e2 = abs(xi - 0.05 / 50)
    ok = e1 <= 1e-12 and e2 < 5e-5
    report(7, ok, f"|(1-xi)^50 - 0.95| = {e1:.1e}, |xi - alpha/50| = {e2:.1e}")
    assert ok


def test_criterion_8_structural_invariants(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    fails = []
    for _ in range(50):
        m = int(rng.integers(2, 15))
        n = m + int(rng.integers(1, 20))
        d = int(rng.integers(1, 4))
        gamma = float(rng.choice([0.0, 0.25, 0.5]))
        X = rng.standard_normal((n, d))
        path = detector_path_all(X, m, gamma)
        if np.any(path < 0):
            fails.append("non-negativity")
        ks = np.arange(m, n + 1)
        if np.any(m * path[:, 2] > (ks - m) * path[:, 1] * (1 + 1e-12) + 1e-15):
            fails.append("S/T inequality")
        st = DominanceState.from_array(X[:m])
        rows = []
        for x in X[m:]:
            st = extend(st, x)
            rows.append(detector_values(st, m, st.k, gamma, 1e-4))
        if not np.array_equal(np.array(rows), path[1:]):
            fails.append("streaming=batch")
        s = rng.standard_normal(int(rng.integers(1, 40)))
        ys = np.sort(rng.random(10))
        qs = [quantile(s, y) for y in ys]
        if any(a > b for a, b in zip(qs, qs[1:])) or any(q not in s for q in qs):
            fails.append("quantile monotonicity")
    for ell in (1, 3, 6):
        xi = gen_multipliers(10**6, MultiplierConfig.fixed(ell, seed=ell), 0)
        phi = induced_correlation(ell)
        c = xi - xi.mean()
        if abs(xi.mean()) >= 4e-3 or abs(xi.var() - 1) >= 1e-2:
            fails.append(f"multiplier moments ell={ell}")
        for h in range(1, ell + 3):
            acf = np.dot(c[:-h], c[h:]) / np.dot(c, c)
            if abs(acf - (phi[h] if h < phi.size else 0.0)) >= 1e-2:
                fails.append(f"multiplier acf ell={ell} h={h}")
        if phi.size - 1 > ell:
            fails.append(f"multiplier dependence range ell={ell}")
    elapsed = time.perf_counter() - t0
    ok = not fails
    report(8, ok, f"{'all invariants hold' if ok else sorted(set(fails))}, {elapsed:.1f}s")
    assert ok


def test_criterion_9_extreme_signal(report):
    details = []
    ok = True
    for kind in "RST":
        scn = Scenario(IidNormal(), 50, 100, change_at=75, post=IidNormal(5.0))
        cfg = MonitorConfig(m=50, n=100, detector=kind)
        res = run_power_experiment(scn, cfg, "mc", 200, seed=9, M=20_000)
        located = sum(cp is not None and abs(cp - 75) <= 3 for cp in res.changepoints) / res.n_trials
        good = res.rejection_pct >= 99 and res.mean_delay <= 10 and located >= 0.95
        ok &= good
        details.append(f"{kind}: rejection {res.rejection_pct:.1f}%, delay {res.mean_delay:.2f}, "
                       f"located {100 * located:.1f}%")
    # informational only: the same design with gamma = 0.5 (does not affect the verdict)
    scn = Scenario(IidNormal(), 50, 100, change_at=75, post=IidNormal(5.0))
    res = run_power_experiment(scn, MonitorConfig(m=50, n=100, gamma=0.5), "mc", 200, seed=9, M=20_000)
    located = sum(cp is not None and abs(cp - 75) <= 3 for cp in res.changepoints) / res.n_trials
    details.append(f"[info, T gamma=0.5: delay {res.mean_delay:.2f}, located {100 * located:.1f}%]")
    report(9, ok, "; ".join(details))
    assert ok
