"""Acceptance criteria, each run at its stated size and tolerance.

Every test prints one PASS/FAIL line (collected again in the pytest
terminal summary). Run just this file with

    pytest tests/test_acceptance.py -v
"""
import dataclasses
import time

import numpy as np
import pytest

from onebit_ar import cli
from onebit_ar.ar import ArConfig, run_ar, update_gamma
from onebit_ar.biht import biht_estimate, build_dictionary
from onebit_ar.channel import (
    ArrayGeometry,
    ChannelParams,
    gen_angles,
    gen_gains,
    gen_training,
    observe,
    synth_channel,
)
from onebit_ar.core import fro_norm_sq, herm_eig, sign_quantize
from onebit_ar.harness import nmse, preset, raw_path_for, run_sweep, run_trial
from onebit_ar.ml import ml_cost, ml_gradient
from onebit_ar.qcqp import (
    h_from_rho,
    secular_function,
    secular_solve,
    solve_h_subproblem,
    special_case_semi_unitary,
    special_case_unitary,
    subproblem_objective,
)

pytestmark = pytest.mark.slow


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def draw(rng, m_r, m_t, k, sep=0.0):
    rx, tx = ArrayGeometry(m_r), ArrayGeometry(m_t)
    p = ChannelParams(gen_angles(k, rng, sep), gen_angles(k, rng, sep), gen_gains(k, rng))
    return rx, tx, p, synth_channel(p, rx, tx)


def test_c01_objective_monotone(report):
    t0 = time.perf_counter()
    worst = -np.inf
    for t in range(100):
        rng = np.random.default_rng([1, t])
        rx, tx, _, h = draw(rng, 4, 8, 2)
        obs = observe(h, gen_training(8, 8, "gaussian", rng), 10.0, rng)
        _, _, st = run_ar(obs, ArConfig(k_paths=2, r_norm=fro_norm_sq(h)), rx, tx)
        tr = np.asarray(st.objective_trace)
        if tr.size > 1:
            worst = max(worst, float(np.max((tr[1:] - tr[:-1]) / tr[:-1])))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and elapsed < 60.0
    report("C1 objective monotone", ok, f"worst relative step increase {worst:.2e} (tol 1e-9), {elapsed:.1f} s (limit 60 s)")
    assert ok


def test_c02_gradient(report):
    rx, tx = ArrayGeometry(8), ArrayGeometry(8)
    worst = 0.0
    for t in range(50):
        rng = np.random.default_rng([2, t])
        eta = np.concatenate([gen_angles(2, rng, 0.2), gen_angles(2, rng, 0.2)])
        eta = np.clip(eta, 0.1, np.pi - 0.1)
        h = crandn(rng, 64)
        g = ml_gradient(eta, h, rx, tx)
        fd = np.empty_like(g)
        for i in range(eta.size):
            e = np.zeros_like(eta)
            e[i] = 1e-6
            fd[i] = (ml_cost(eta + e, h, rx, tx) - ml_cost(eta - e, h, rx, tx)) / 2e-6
        worst = max(worst, float(np.linalg.norm(g - fd) / np.linalg.norm(fd)))
    ok = worst <= 1e-5
    report("C2 gradient vs central differences", ok, f"worst relative error {worst:.2e} (tol 1e-5)")
    assert ok


def test_c03_secular(report):
    res = semi = uni = inv = 0.0
    for t in range(100):
        rng = np.random.default_rng([3, t])
        m_r, m_t = rng.integers(2, 7, size=2)
        n = int(rng.integers(1, 9))
        r = float(rng.uniform(0.5, 50.0))
        lam_mat = crandn(rng, m_r, m_t)

        s = crandn(rng, m_t, n)
        rho = secular_solve(lam_mat, s, r)
        res = max(res, abs(secular_function(rho, lam_mat, s, r)) / r)

        n_semi = int(rng.integers(1, m_t + 1))
        s_semi = gen_training(m_t, n_semi, "semi_unitary", rng)
        a = special_case_semi_unitary(lam_mat, s_semi, r)
        b = secular_solve(lam_mat, s_semi, r)
        semi = max(semi, abs(a - b) / abs(b))
        direct = lam_mat @ np.linalg.inv(s_semi @ s_semi.conj().T + a * np.eye(m_t))
        fast = h_from_rho(lam_mat, s_semi, a, "semi_unitary")
        inv = max(inv, float(np.linalg.norm(fast - direct) / np.linalg.norm(direct)))

        s_uni = gen_training(m_t, m_t, "unitary", rng)
        c = special_case_unitary(lam_mat, r)
        d = secular_solve(lam_mat, s_uni, r)
        uni = max(uni, abs(c - d) / abs(d))
    ok = res <= 1e-8 and semi <= 1e-6 and uni <= 1e-8 and inv <= 1e-10
    report(
        "C3 secular solver",
        ok,
        f"residual/R {res:.1e} (1e-8), quartic {semi:.1e} (1e-6), closed form {uni:.1e} (1e-8), inverse-free H {inv:.1e} (1e-10)",
    )
    assert ok


def test_c04_h_update_global(report):
    margin = np.inf
    for t in range(20):
        rng = np.random.default_rng([4, t])
        m = 4
        n = int(rng.integers(2, 8))
        z, s, h_tilde = crandn(rng, m, n), crandn(rng, m, n), crandn(rng, m, m)
        lam, r = float(rng.uniform(0.1, 3.0)), float(rng.uniform(1.0, 40.0))
        h, _, _ = solve_h_subproblem(z, s, h_tilde, lam, r)
        best = subproblem_objective(h, z, s, h_tilde, lam)

        cand = crandn(rng, 10_000, m, m)
        cand *= np.sqrt(r / np.sum(np.abs(cand) ** 2, axis=(1, 2)))[:, None, None]
        vals = np.sum(np.abs(z - cand @ s) ** 2, axis=(1, 2)) + lam * np.sum(np.abs(cand - h_tilde) ** 2, axis=(1, 2))
        margin = min(margin, float(vals.min() - best))

        # dual scan: H(rho) = Lam (S S^H + rho I)^{-1} pushed onto the sphere
        lam_mat = z @ s.conj().T + lam * h_tilde
        e = herm_eig(s @ s.conj().T)
        lo, hi = -e.eigenvalues.max() - 20.0, e.eigenvalues.max() + 200.0
        for rho in np.linspace(lo, hi, 10_000):
            if np.min(np.abs(e.eigenvalues + rho)) < 1e-9:
                continue
            hr = h_from_rho(lam_mat, s, rho, "general", e)
            hr *= np.sqrt(r / fro_norm_sq(hr))
            margin = min(margin, subproblem_objective(hr, z, s, h_tilde, lam) - best)
    ok = margin >= -1e-8
    report("C4 H-update global optimality", ok, f"smallest margin {margin:.3e} (need >= -1e-8)")
    assert ok


def test_c05_gamma_update(report):
    worst = np.inf
    for t in range(20):
        rng = np.random.default_rng([5, t])
        y = sign_quantize(crandn(rng, 6, 7))
        hs = 2.0 * crandn(rng, 6, 7)
        g = update_gamma(y, hs)
        base_re = (y.real * g.real - hs.real) ** 2
        base_im = (y.imag * g.imag - hs.imag) ** 2
        top = 2.0 * np.abs(hs).max() + 1.0
        grid = np.linspace(0.0, top, 1000)
        scan_re = ((y.real[..., None] * grid - hs.real[..., None]) ** 2).min(-1)
        scan_im = ((y.imag[..., None] * grid - hs.imag[..., None]) ** 2).min(-1)
        worst = min(worst, float((scan_re - base_re).min()), float((scan_im - base_im).min()))
    ok = worst >= 0.0
    report("C5 gamma-update optimality", ok, f"smallest scan minus closed form {worst:.2e} (need >= 0)")
    assert ok


def test_c06_noiseless_small(report):
    vals = []
    for t in range(100):
        rng = np.random.default_rng([6, t])
        rx, tx, _, h = draw(rng, 4, 4, 1)
        obs = observe(h, gen_training(4, 4, "unitary", rng), np.inf, rng)
        _, h_hat, _ = run_ar(obs, ArConfig(k_paths=1, r_norm=fro_norm_sq(h)), rx, tx)
        vals.append(nmse(h_hat, h))
    vals = np.array(vals)
    hits = int(np.sum(vals <= 0.01))
    ok = hits >= 95
    report("C6 noiseless K=1 recovery", ok, f"{hits}/100 trials with NMSE <= 0.01 (need >= 95), median NMSE {np.median(vals):.3g}")
    assert ok


def _mean_se(results, est, snr):
    v = np.array([r.nmse for r in results if r.estimator == est and r.snr_db == snr])
    return v.mean(), v.std(ddof=1) / np.sqrt(v.size), v.size


def test_c07_downlink_trend(report):
    snrs = [-10.0, 0.0, 10.0, 20.0]
    cfg = preset("downlink-fdd", snr_grid_db=snrs, trials=50, estimators=["ar"])
    _, res = run_sweep(cfg, write=False)
    stats = [_mean_se(res, "ar", s) for s in snrs]
    means = [m for m, _, _ in stats]
    decreasing = all(
        means[i + 1] < means[i] + np.hypot(stats[i][1], stats[i + 1][1]) for i in range(len(snrs) - 1)
    )
    cfg_b = dataclasses.replace(cfg, estimators=["biht"])
    biht = np.array([run_trial(cfg_b, 10.0, cfg.n_train, t)[0].nmse for t in range(cfg.trials)])
    ar10 = means[snrs.index(10.0)]
    ok_a = report(
        "C7a downlink AR decreasing in SNR",
        decreasing,
        "means " + ", ".join(f"{s:+.0f} dB {m:.4f}" for s, m in zip(snrs, means)) + " (one standard error slack)",
    )
    ok_b = report("C7b downlink AR beats BIHT at 10 dB", ar10 < biht.mean(), f"AR {ar10:.4f} vs BIHT {biht.mean():.4f}")
    assert ok_a and ok_b


def test_c08_uplink_dispatch(report):
    cfg = preset("uplink-tdd", snr_grid_db=[-10.0, 10.0], trials=50, estimators=["ar"])
    _, res = run_sweep(cfg, write=False)
    paths = set()
    for r in res:
        paths.update(r.rho_paths)
    lo, _, _ = _mean_se(res, "ar", -10.0)
    hi, _, _ = _mean_se(res, "ar", 10.0)
    ok = paths == {"unitary"} and hi < lo
    report("C8 uplink unitary path and trend", ok, f"paths used {sorted(paths)}, NMSE -10 dB {lo:.4f} vs 10 dB {hi:.4f}")
    assert ok


def test_c09_reproducible_sweep(report, tmp_path):
    outs = []
    for i, threads in enumerate([1, 1, 2]):
        out = tmp_path / f"run{i}" / "agg.csv"
        argv = ["sweep", "--preset", "downlink-fdd", "--trials", "3", "--seed", "7", "--threads", str(threads), "--out", str(out)]
        assert cli.main(argv) == 0
        outs.append((out.read_bytes(), raw_path_for(out).read_bytes()))
    ok = outs[0] == outs[1] == outs[2]
    report("C9 byte-identical sweep CSVs", ok, "aggregate and per-trial CSVs identical across two serial runs and a 2-worker run")
    assert ok


def test_c10_biht_on_grid(report):
    m_r = m_t = 64
    rx, tx = ArrayGeometry(m_r), ArrayGeometry(m_t)
    d = build_dictionary(rx, tx, 128)
    hits, misses = 0, []
    for t in range(100):
        rng = np.random.default_rng([10, t])
        i, j = rng.integers(128, size=2)
        p = ChannelParams([d.grid[i]], [d.grid[j]], gen_gains(1, rng))
        h = synth_channel(p, rx, tx)
        obs = observe(h, gen_training(m_t, m_t, "unitary", rng), np.inf, rng)
        res = biht_estimate(obs, d, 1)
        if res.support.tolist() == [d.column_index(i, j)]:
            hits += 1
        else:
            misses.append((int(i), int(j)))
    ok = hits == 100
    report("C10 BIHT on-grid support recovery", ok, f"{hits}/100 (need 100); missed (rx, tx) grid cells {misses}")
    assert ok
