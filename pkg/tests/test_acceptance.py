"""Acceptance criteria, one test each. A PASS/FAIL line per criterion is
printed in the terminal summary (see conftest.py)."""

import math

import numpy as np
import pytest

from conftest import random_passive, record
from oracles import chi2_sum_power_quantile, cofactor_inverse
from lmarray import hardware_models as hw
from lmarray import stat_engine as se
from lmarray.array_model import CouplingMatrix
from lmarray.cli import main
from lmarray.feed_solver import (
    Conventional,
    LoadModulated,
    OutputImpedanceRule,
    Parasitic,
    solve_currents,
    synthesize_load_modulation,
    synthesize_parasitic_loads,
)

ACCEPT_SAMPLES = 10**7
N_SWEEP = (1, 2, 5, 10, 20, 50, 100, 200, 500, 1000)
EPSILONS = (1e-2, 1e-3, 1e-4)


def test_criterion_01_crest_point():
    c = se.crest_factor_analytic(100, 1e-3)
    oracle = 10 * math.log10(chi2_sum_power_quantile(100, 1e-3))
    ok = abs(c - 1.17) <= 0.10 and abs(c - oracle) < 1e-9
    record("1. crest(100, 1e-3) = 1.17 +/- 0.10 dB", ok, f"{c:.4f} dB (mpmath oracle {oracle:.4f} dB)")
    assert ok


def test_criterion_02_crest_curve_shape():
    table = np.array([[se.crest_factor_analytic(n, e) for n in N_SWEEP] for e in EPSILONS])
    dec_n = bool(np.all(np.diff(table, axis=1) < 0))
    inc_eps = bool(np.all(np.diff(table, axis=0) > 0))
    worst = 0.0
    for n in (1, 10, 100, 1000):
        p = se.sum_power_samples(n, ACCEPT_SAMPLES, seed=2)
        for e in EPSILONS:
            mc = 10 * math.log10(float(np.quantile(p, 1 - e)))
            worst = max(worst, abs(mc - se.crest_factor_analytic(n, e)))
    ok = dec_n and inc_eps and worst < 0.05
    record(
        "2. crest curve monotone, MC vs analytic < 0.05 dB",
        ok,
        f"decreasing in N: {dec_n}, increasing as eps falls: {inc_eps}, max |MC - analytic| = {worst:.4f} dB",
    )
    assert ok


def test_criterion_03_papr_asymptote():
    c = se.crest_factor_analytic(10**5, 1e-3)
    ok = c < 0.1
    record("3. crest(1e5, 1e-3) < 0.1 dB", ok, f"{c:.4f} dB")
    assert ok


def test_criterion_04_vswr_trend():
    ns = (16, 64, 256, 1024)
    monotone = True
    parts = []
    medians = {}
    for model in se.MismatchModel:
        reps = [se.vswr_distribution(n, 1e-3, model, 10**6, seed=4) for n in ns]
        med = [r.metadata["median"] for r in reps]
        p95 = [r.metadata["p95"] for r in reps]
        monotone &= all(a >= b for a, b in zip(med, med[1:])) and all(a >= b for a, b in zip(p95, p95[1:]))
        medians[model] = med
        parts.append(f"{model.value} median " + "/".join(f"{m:.3f}" for m in med))
    final = medians[se.MismatchModel.POWER_CONSERVING][-1]
    ok = monotone and final < 1.5
    record(
        "4. VSWR non-increasing, PowerConserving median(1024) < 1.5",
        ok,
        f"monotone: {monotone}; median(1024) = {final:.3f}; " + "; ".join(parts),
    )
    assert ok


def test_criterion_05_distortion_trend():
    ns = (8, 16, 32, 64, 128, 256, 512, 1024)
    stats = [se.distortion_stats(n, 0.8, 10**6, seed=5) for n in ns]
    ok_all = True
    parts = []
    for name in ("mmse", "equal"):
        d = [getattr(s, name) for s in stats]
        ok_all &= all(a >= b for a, b in zip(d, d[1:])) and d[-1] < d[1] / 10
        parts.append(f"{name} D(16)={d[1]:.3e} D(1024)={d[-1]:.3e}")
    violations = sum(s.optimality_violations for s in stats)
    ok = ok_all and violations == 0
    record(
        "5. distortion non-increasing, D(1024) < D(16)/10, MMSE <= Equal per draw",
        ok,
        "; ".join(parts) + f"; optimality violations {violations}",
    )
    assert ok


def test_criterion_06_solver(rng):
    # diagonal closed form
    z = np.diag([50 + 10j, 30 - 5j, 70 + 0j])
    zs = np.array([50, 40 + 2j, 10j])
    v = np.array([1, 2j, -1 + 1j])
    i = solve_currents(CouplingMatrix(z), Conventional(zs, v)).i
    diag_err = float(np.max(np.abs(i - v / (np.diag(z) + zs)) / np.abs(v / (np.diag(z) + zs))))
    # 2x2 by hand: (Z + 0) i = (1, 0)  ->  i = (50, -10) / (50^2 - 10^2)
    i2 = solve_currents(CouplingMatrix(np.array([[50, 10], [10, 50]])), Conventional([0, 0], [1, 0])).i
    hand = np.array([50, -10]) / 2400
    hand_err = float(np.max(np.abs(i2 - hand)) / np.max(np.abs(hand)))
    brute = 0.0
    for trial in range(100):
        n = 1 + trial % 4
        zc = random_passive(rng, n)
        zs = rng.uniform(10, 100, n) + 1j * rng.normal(0, 20, n)
        vv = rng.normal(size=n) + 1j * rng.normal(size=n)
        i = solve_currents(CouplingMatrix(zc), Conventional(zs, vv)).i
        ref = cofactor_inverse(zc + np.diag(zs)) @ vv
        brute = max(brute, float(np.linalg.norm(i - ref) / np.linalg.norm(ref)))
    ok = diag_err <= 1e-12 and hand_err <= 1e-10 and brute <= 1e-9
    record(
        "6. solver: diagonal 1e-12, 2x2 1e-10, cofactor brute force 1e-9",
        ok,
        f"diagonal {diag_err:.1e}, 2x2 {hand_err:.1e}, brute force max {brute:.1e}",
    )
    assert ok


def test_criterion_07_synthesis_round_trip(rng):
    worst = {"parasitic": 0.0, "conjugate": 0.0, "reference": 0.0}
    for trial in range(1000):
        n = 2 + trial % 7
        cm = CouplingMatrix(random_passive(rng, n))
        target = rng.normal(size=n) + 1j * rng.normal(size=n)
        s = synthesize_parasitic_loads(cm, target)
        i = solve_currents(cm, s.feed).i
        worst["parasitic"] = max(worst["parasitic"], float(np.linalg.norm(i - target) / np.linalg.norm(target)))
        for rule in OutputImpedanceRule:
            s = synthesize_load_modulation(cm, target, rule)
            i = solve_currents(cm, LoadModulated(s.voltages, s.loads)).i
            worst[rule.value] = max(worst[rule.value], float(np.linalg.norm(i - target) / np.linalg.norm(target)))
    ok = all(w <= 1e-9 for w in worst.values())
    record(
        "7. synthesis round trip <= 1e-9 relative (1000 pairs)",
        ok,
        ", ".join(f"{k} {w:.1e}" for k, w in worst.items()),
    )
    assert ok


def test_criterion_08_clip_rate():
    parts = []
    ok = True
    for n, eps in ((10, 1e-2), (100, 1e-3)):
        p = se.sum_power_samples(n, ACCEPT_SAMPLES, seed=8)
        frac = float(np.mean(p > se.incident_power(n, eps)))
        sigma = math.sqrt(eps * (1 - eps) / ACCEPT_SAMPLES)
        ok &= abs(frac - eps) < 3 * sigma
        parts.append(f"N={n}: {frac:.6f} vs {eps:g} ({(frac - eps) / sigma:+.2f} sigma)")
    record("8. clip fraction = eps within 3 binomial sigma", ok, "; ".join(parts))
    assert ok


def test_criterion_09_hardware(rng):
    x = rng.uniform(-400, 400, 200_000)
    rms = [math.sqrt(np.mean(hw.quantize_loads(x, hw.LoadGrid(bits=b)).error ** 2)) for b in range(8, 16)]
    slopes = np.diff(20 * np.log10(rms))
    law = bool(np.all(np.abs(slopes + 20 * math.log10(2)) <= 1.0))
    saw = hw.saw_filter_loss(1.0, 2.0)
    saw_ok = round(saw, 4) == 0.6310
    p_inc = np.full(1000, 1.7)
    p_rad = rng.uniform(0, 1.7, 1000)
    balance = float(np.max(np.abs(hw.circulator_dump(p_inc, p_rad) + p_rad - p_inc)))
    a = hw.pa_power_budget(hw.PAClass.CLASS_A, 1.0, 0.0).dc_input
    f = hw.pa_power_budget(hw.PAClass.CLASS_F, 1.0, 0.0).dc_input
    ok = law and saw_ok and balance <= 1e-12 and a == 4.0 and f == 1.25 and math.isclose(a / f, 3.2)
    record(
        "9. hardware: 6.02 dB/bit, SAW, circulator balance, class A/F ratio",
        ok,
        f"slopes {slopes.min():.2f}..{slopes.max():.2f} dB/bit, SAW {saw:.4f} W, "
        f"balance {balance:.1e}, dc {a:g} W vs {f:g} W ({a / f:.2f}:1)",
    )
    assert ok


def _csv_bodies(d):
    return {p.name: p.read_bytes() for p in sorted(d.glob("*.csv"))}


def test_criterion_10_determinism(tmp_path):
    runs = {}
    for label, workers in (("a", "1"), ("b", "4"), ("c", "1")):
        out = tmp_path / label
        assert main(["fig4", "--seed", "42", "--workers", workers, "--out", str(out)]) == 0
        runs[label] = _csv_bodies(out)
    same = runs["a"] == runs["b"] == runs["c"] and len(runs["a"]) > 0
    record(
        "10. fig4 --seed 42 byte-identical CSVs across runs and workers",
        same,
        f"{len(runs['a'])} CSV files compared over 3 runs (workers 1, 4, 1)",
    )
    assert same
