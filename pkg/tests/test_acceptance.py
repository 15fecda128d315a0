"""End-to-end acceptance checks; each test records one PASS/FAIL line."""

import time
from pathlib import Path

import numpy as np

from conftest import record
from sdrvm.baselines import fit_rbrvm, rvm_beta_update
from sdrvm.blocks import (block_beta_update, block_gamma_update,
                          fit_sdrvm_blocks, fit_sdrvm_sparse_dense,
                          overlap_beta_update, overlap_gamma_update)
from sdrvm.core import (BlockLayout, FitOptions, HyperPriors, LinearSystem,
                        PrecisionState)
from sdrvm.experiments.housing import load_housing, run_housing
from sdrvm.experiments.images import (denoise_image, median_filter_3x3, psnr,
                                      read_pgm, salt_pepper)
from sdrvm.experiments.instances import CsConfig, gen_cs_instance
from sdrvm.experiments.sweeps import run_cs_sweep
from sdrvm.identities import run_identity_suite
from sdrvm.solver import (fit_sdrvm, log_evidence, posterior,
                          projected_variance)

ROOT = Path(__file__).resolve().parents[1]
SD = "sdrvm-sd"
GRID = (0.5, 0.7, 0.9)


def test_1_identity_suite():
    t0 = time.perf_counter()
    results = run_identity_suite(trials=200, seed=0)
    secs = time.perf_counter() - t0
    ok = all(r.passed for r in results) and secs < 10
    detail = ", ".join(f"{r.name}={r.max_error:.1e}" for r in results)
    record(1, ok, f"{detail}; {secs:.1f}s")
    assert ok


def _outlier_system(seed, m=40, n=16):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n))
    A /= np.linalg.norm(A, axis=0)
    x = np.zeros(n)
    x[rng.choice(n, 3, replace=False)] = rng.standard_normal(3)
    y = A @ x + 0.05 * rng.standard_normal(m)
    y[rng.choice(m, 2, replace=False)] += 2.0
    return LinearSystem(A, y)


def _scaled_error(got, want, sizes, tilde, trace):
    live = np.isfinite(want) & np.isfinite(tilde)
    num = sizes[live] - tilde[live] * trace[live]
    cond = (sizes[live] + tilde[live] * trace[live]) / np.maximum(np.abs(num), 1e-300)
    rel = np.abs(got[live] - want[live]) / np.abs(want[live])
    return float(np.max(rel, initial=0.0)), float(np.max(rel / np.maximum(cond, 1.0),
                                                         initial=0.0))


def test_2_reduction_equivalences():
    t0 = time.perf_counter()
    pri, opts = HyperPriors(), FitOptions()
    bitwise = True
    raw_worst = scaled_worst = beta_worst = 0.0
    for seed in range(5):
        s = _outlier_system(seed)
        a, b = [], []
        fit_sdrvm(s, callback=lambda i, st, p: a.append(st))
        fit_sdrvm_blocks(s, BlockLayout.singletons(s.n), BlockLayout.singletons(s.m),
                         callback=lambda i, st, p: b.append(st))
        bitwise &= len(a) == len(b) and all(
            np.array_equal(u.gamma, v.gamma) and np.array_equal(u.beta, v.beta)
            for u, v in zip(a, b))

        sig, noi = BlockLayout.contiguous(s.n, 4), BlockLayout.contiguous(s.m, 5)
        G = BlockLayout(sig.blocks, s.n, "overlapping").incidence()
        J = BlockLayout(noi.blocks, s.m, "overlapping").incidence()
        states = []
        fit_sdrvm_blocks(s, sig, noi, callback=lambda i, st, p: states.append(st))
        for st in states:
            post = posterior(s, st)
            tg = np.bincount(sig.labels(), post.sigma_diag())
            tb = np.bincount(noi.labels(), projected_variance(s.A, post))
            for got, want, sizes, tilde, tr in (
                    (overlap_gamma_update(st, post, G, pri, opts),
                     block_gamma_update(st, post, sig.labels(), sig.sizes, pri, opts),
                     sig.sizes, st.tilde_gamma, tg),
                    (overlap_beta_update(s, st, post, J, pri, opts),
                     block_beta_update(s, st, post, noi.labels(), noi.sizes, pri, opts),
                     noi.sizes, st.tilde_beta, tb)):
                raw, scaled = _scaled_error(got, want, sizes, tilde, tr)
                raw_worst, scaled_worst = max(raw_worst, raw), max(scaled_worst, scaled)

        rng = np.random.default_rng(100 + seed)
        for _ in range(20):
            g = np.exp(rng.uniform(-1, 1, s.n))
            bval = np.exp(rng.uniform(-1, 1))
            st = PrecisionState(g, np.full(s.m, bval), g, np.array([bval]))
            post = posterior(s, st)
            blk = block_beta_update(s, st, post, np.zeros(s.m, dtype=int),
                                    np.array([float(s.m)]), pri, opts)
            rvm = rvm_beta_update(s, PrecisionState(g, np.array([bval])), post)
            beta_worst = max(beta_worst, abs(blk[0] - rvm[0]) / abs(rvm[0]))
    secs = time.perf_counter() - t0
    ok = bitwise and scaled_worst <= 1e-10 and beta_worst <= 1e-10 and secs < 30
    record(2, ok, f"singleton bitwise={bitwise}; overlap-vs-known per-step "
                  f"{scaled_worst:.1e} (raw {raw_worst:.1e}, cancellation-scaled); "
                  f"J=[m] beta {beta_worst:.1e}; {secs:.1f}s")
    assert ok


def _sweep(outliers):
    cfg = CsConfig(n=100, k_signal=10, sdnr_db=20, trials_matrices=20,
                   trials_signals=20, seed=7, mn_grid=GRID,
                   outlier_fraction=outliers, methods=("rbrvm", SD, "sdrvm"))
    return run_cs_sweep(cfg)


def test_3_outlier_ordering():
    tab = _sweep(0.05)
    gaps = [tab.value(r, "rbrvm", "nmse_db") - tab.value(r, SD, "nmse_db")
            for r in GRID]
    comp = [tab.value(r, "rbrvm", "nmse_db") - tab.value(r, "sdrvm", "nmse_db")
            for r in GRID]
    ok = min(gaps) >= 0 and np.mean(gaps) >= 0.5
    record(3, ok, "RB-RVM minus SD-RVM NMSE gap (dB) at m/n 0.5/0.7/0.9: "
                  + "/".join(f"{g:+.2f}" for g in gaps)
                  + f", mean {np.mean(gaps):+.2f}; componentwise variant "
                  + "/".join(f"{g:+.2f}" for g in comp))
    assert ok


def test_4_outlier_free_no_degradation():
    tab = _sweep(0.0)
    diffs = [tab.value(r, SD, "nmse_db") - tab.value(r, "rbrvm", "nmse_db")
             for r in GRID]
    ok = max(diffs) <= 0.5
    record(4, ok, "SD-RVM minus RB-RVM NMSE (dB), no outliers: "
                  + "/".join(f"{d:+.2f}" for d in diffs))
    assert ok


def test_5_housing():
    data = load_housing(ROOT / "data" / "boston.csv")
    tab = run_housing(data, 0.5, trials=100, seed=3, methods=("rvm", "rbrvm", SD))
    err = {m: tab.value(0.5, m, "mean_abs_median_error") for m in ("rvm", "rbrvm", SD)}
    sec = {m: tab.value(0.5, m, "mean_fit_seconds") for m in ("rvm", "rbrvm", SD)}
    checks = {"rvm>3x sd": err["rvm"] > 3 * err[SD],
              "sd<=1.1 rb": err[SD] <= 1.1 * err["rbrvm"],
              "sd faster": sec[SD] < sec["rbrvm"]}
    ok = all(checks.values())
    record(5, ok, "errors RVM/RB/SD = "
                  + "/".join(f"{err[m]:.3f}" for m in ("rvm", "rbrvm", SD))
                  + "; seconds = " + "/".join(f"{sec[m]:.3f}" for m in ("rvm", "rbrvm", SD))
                  + "; " + ", ".join(f"{k}:{v}" for k, v in checks.items()))
    assert ok


def test_6_per_iteration_cost():
    cfg = CsConfig(n=100, m=70, k_signal=10, k_noise=4, sdnr_db=20)
    sd, comp, rb = [], [], []
    for seed in range(5):
        s, _, _ = gen_cs_instance(cfg, seed)
        sd += fit_sdrvm_sparse_dense(s)[2].iteration_seconds
        comp += fit_sdrvm(s)[2].iteration_seconds
        rb += fit_rbrvm(s)[1].iteration_seconds
    med = {k: float(np.median(v)) for k, v in (("sd", sd), ("comp", comp), ("rb", rb))}
    ok = med["sd"] < med["rb"]
    record(6, ok, f"median s/iter SD-RVM {med['sd'] * 1e3:.2f}ms, componentwise "
                  f"{med['comp'] * 1e3:.2f}ms, RB-RVM {med['rb'] * 1e3:.2f}ms; "
                  f"RB/SD ratio {med['rb'] / med['sd']:.1f}")
    assert ok


def test_7_denoising():
    img = read_pgm(ROOT / "tests" / "data" / "camera64.pgm")
    rows = []
    ok = True
    for seed in range(3):
        noisy = salt_pepper(img, 0.2, seed)
        p_sd = psnr(img, denoise_image(noisy, SD))
        p_rb = psnr(img, denoise_image(noisy, "rbrvm"))
        p_med = psnr(img, median_filter_3x3(noisy))
        low = salt_pepper(img, 0.05, seed)
        q_sd = psnr(img, denoise_image(low, SD))
        q_med = psnr(img, median_filter_3x3(low))
        ok &= p_sd >= p_rb and p_sd >= p_med and q_med >= q_sd
        rows.append(f"seed{seed}: rho.2 SD {p_sd:.2f} RB {p_rb:.2f} med {p_med:.2f}"
                    f" | rho.05 SD {q_sd:.2f} med {q_med:.2f}")
    record(7, ok, "; ".join(rows))
    assert ok


def test_8_evidence_growth():
    cfg = CsConfig(n=100, m=70, k_signal=10, k_noise=4, sdnr_db=20)
    grew = 0
    for seed in range(100):
        s, _, _ = gen_cs_instance(cfg, 1000 + seed)
        post, st, rep = fit_sdrvm(s)
        final = log_evidence(s, st, post)
        grew += final > rep.evidence_trace[0]
    ok = grew >= 95
    record(8, ok, f"evidence increased in {grew}/100 instances")
    assert ok
