"""Acceptance gate: one test per release criterion, one verdict line each.

Each test prints and records "criterion N: PASS/FAIL ..." so the suite's
terminal summary shows the complete scorecard.
"""

import time

import numpy as np

from deflicker import autodiff, blocks, cli, flicker, metrics, model, spectral, \
    training, wavelet
from deflicker.flicker import FlickerParams

RESULTS: list[str] = []


def record(n: int, ok: bool, detail: str):
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'} - {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def dft2_naive(x: np.ndarray) -> np.ndarray:
    h, w = x.shape
    out = np.zeros((h, w), dtype=complex)
    for u in range(h):
        for v in range(w):
            for m in range(h):
                for n in range(w):
                    out[u, v] += x[m, n] * np.exp(-2j * np.pi
                                                  * (u * m / h + v * n / w))
    return out


def test_01_spectral_suite():
    start = time.perf_counter()
    rng = np.random.default_rng(101)

    worst_round = 0.0
    worst_parseval = 0.0
    for shape in [(16, 16, 3), (12, 20, 1), (7, 5, 2)]:
        x = rng.standard_normal(shape)
        spec = spectral.fft2(x)
        back = spectral.ifft2(spec)
        worst_round = max(worst_round, float(np.abs(back - x).max()))
        energy = float(np.sum(x * x))
        spec_energy = float(np.sum(np.abs(spec) ** 2)) / (shape[0] * shape[1])
        worst_parseval = max(worst_parseval,
                             abs(spec_energy - energy) / energy)

    worst_dft = 0.0
    for h, w in [(4, 4), (7, 5), (8, 8)]:
        x = rng.standard_normal((h, w))
        got = spectral.fft2(x)
        worst_dft = max(worst_dft, float(np.abs(got - dft2_naive(x)).max()))

    elapsed = time.perf_counter() - start
    ok = worst_round < 1e-9 and worst_parseval < 1e-8 and worst_dft < 1e-9 \
        and elapsed < 5.0
    record(1, ok, f"roundtrip {worst_round:.2e}, parseval {worst_parseval:.2e}, "
           f"naive-DFT {worst_dft:.2e}, {elapsed:.2f}s")


def test_02_wiener_khinchin():
    rng = np.random.default_rng(102)
    worst = 0.0
    worst_zero_lag = 0.0
    for side in (6, 8):
        x = rng.standard_normal((side, side, 1))
        r = spectral.autocorrelation(x)
        brute = np.zeros((side, side))
        for dy in range(side):
            for dx in range(side):
                brute[dy, dx] = np.sum(
                    x[:, :, 0] * np.roll(np.roll(x[:, :, 0], -dy, 0), -dx, 1))
        worst = max(worst, float(np.abs(r[:, :, 0] - brute).max()))
        sum_sq = float(np.sum(x * x))
        worst_zero_lag = max(worst_zero_lag,
                             abs(float(r[0, 0, 0]) - sum_sq) / sum_sq)
    ok = worst < 1e-8 and worst_zero_lag < 1e-10
    record(2, ok, f"FFT-vs-brute {worst:.2e}, zero-lag rel {worst_zero_lag:.2e}")


def test_03_phase_correlation_shifts():
    rng = np.random.default_rng(103)
    hits = 0
    for _ in range(20):
        h = int(rng.integers(12, 33))
        w = int(rng.integers(12, 33))
        base = rng.standard_normal((h, w))
        dy = int(rng.integers(0, h))
        dx = int(rng.integers(0, w))
        shifted = np.roll(np.roll(base, dy, axis=0), dx, axis=1)
        if spectral.phase_correlation_peak(base, shifted) == (dy, dx):
            hits += 1
    record(3, hits == 20, f"exact shift recovery {hits}/20")


def test_04_wavelet_suite():
    rng = np.random.default_rng(104)
    x = rng.standard_normal((16, 24, 3))
    s = wavelet.haar_dwt(x)
    recon_err = float(np.abs(wavelet.haar_idwt(s) - x).max())
    energy_in = float(np.sum(x * x))
    energy_out = sum(float(np.sum(b * b)) for b in (s.LL, s.LH, s.HL, s.HH))
    energy_rel = abs(energy_out - energy_in) / energy_in

    rows = np.zeros((32, 32, 1))
    rows[1::2] = 1.0  # horizontal stripes: vertical-highpass energy
    def lh_ratio(img):
        e = wavelet.directional_energy(wavelet.haar_dwt(img))
        detail = float(np.sum(e["LH"] + e["HL"] + e["HH"]))
        return float(np.sum(e["LH"])) / detail, float(np.sum(e["HL"])) / detail
    lh_h, _ = lh_ratio(rows)
    _, hl_t = lh_ratio(np.ascontiguousarray(rows.transpose(1, 0, 2)))

    ok = recon_err < 1e-10 and energy_rel < 1e-10 and lh_h > 0.9 and hl_t > 0.9
    record(4, ok, f"recon {recon_err:.2e}, energy rel {energy_rel:.2e}, "
           f"LH ratio {lh_h:.3f}, HL after transpose {hl_t:.3f}")


def test_05_gradient_verification():
    start = time.perf_counter()
    adjoint = autodiff.run_adjoint_suite(seed=0)
    worst_adjoint = max(adjoint.values())
    ops = autodiff.run_gradcheck_suite(seed=0)
    full = training.full_network_gradcheck(seed=0)
    elapsed = time.perf_counter() - start
    ok = worst_adjoint < 1e-9 and ops.all_pass and full.all_pass \
        and elapsed < 60.0
    record(5, ok, f"adjoint {worst_adjoint:.2e}, op gradcheck worst "
           f"{ops.worst:.2e} (tol 1e-4), full net worst "
           f"{full.worst:.2e} (tol 1e-3), {elapsed:.1f}s")


def test_06_attention_cost_ratio():
    shapes = [(64, 64, 32, 2, 8), (128, 96, 32, 4, 8), (32, 32, 16, 2, 4),
              (256, 192, 64, 4, 8), (160, 160, 48, 6, 8)]
    cores = [blocks.flops_report(*s).core_ratio for s in shapes]
    fulls = [blocks.flops_report(*s).full_ratio for s in shapes]
    ok = all(c == 0.25 for c in cores) \
        and all(0.25 <= f <= 0.40 for f in fulls)
    record(6, ok, f"core ratio {{{min(cores):.4f}..{max(cores):.4f}}} "
           f"(exact 0.25), full ratio {{{min(fulls):.3f}..{max(fulls):.3f}}}")


def test_07_parameter_count(capsys):
    count = model.param_count(model.build_model(model.ModelConfig(), seed=0))
    code = cli.main(["flops"])
    printed = str(count) in capsys.readouterr().out
    ok = code == 0 and 3_100_000 <= count <= 4_700_000 and printed
    record(7, ok, f"default model {count:,} params, printed by flops: {printed}")


def test_08_zero_init_identity():
    cfg = model.tiny_config()
    params = model.build_model(cfg, seed=0)
    rng = np.random.default_rng(108)
    frames = [rng.uniform(0, 1, (64, 48, 3)) for _ in range(3)]
    pred = model.forward(params, *frames, cfg)
    exact = np.array_equal(pred, frames[1])
    p = metrics.psnr(pred, frames[1])
    ok = exact and p == float("inf")
    record(8, ok, f"untrained output equals base frame: {exact}, "
           f"PSNR {metrics.format_db(p)}")


def test_09_desk_scale_overfit():
    start = time.perf_counter()
    scene = flicker.sample_scene(64, 64, seed=9)
    fp = FlickerParams(ac_frequency=50.0, exposure_time=2.5e-3,
                       row_readout_time=1.0 / 1600.0, gamma_w=2.0,
                       min_gain=0.15)
    burst = flicker.synth_burst(scene, fp, seed=9)
    cfg = model.tiny_config()
    _, l1, psnr_curve = training.train_overfit(burst, cfg, steps=500,
                                               seed=0, lr=1e-4)
    _, l1_again, _ = training.train_overfit(burst, cfg, steps=5,
                                            seed=0, lr=1e-4)
    elapsed = time.perf_counter() - start

    ratio = l1[-1] / l1[0]
    base = metrics.psnr(np.clip(burst.frames[1], 0, 1), burst.clean)
    gain = psnr_curve[-1] - base
    deterministic = l1[:6] == l1_again
    ok = ratio <= 0.10 and gain >= 3.0 and deterministic and elapsed < 600.0
    record(9, ok, f"L1 {l1[0]:.4f} -> {l1[-1]:.4f} (ratio {ratio:.3f}), "
           f"PSNR {base:.2f} -> {psnr_curve[-1]:.2f} dB (+{gain:.2f}), "
           f"deterministic {deterministic}, {elapsed:.0f}s")


def test_10_phase_swap_margin():
    h = 64
    yy = np.linspace(0, 1, h)[None, :]  # gentle texture along columns only
    clean = np.clip(0.55 + 0.1 * np.repeat(yy, h, axis=0), 0, 1)
    clean = np.repeat(clean[:, :, None], 3, axis=2)
    fp = FlickerParams(ac_frequency=50.0, exposure_time=2.5e-3,
                       row_readout_time=6.25e-4, gamma_w=2.0, min_gain=0.1,
                       phase_offsets=(0.0, np.pi, 3.0))
    burst = flicker.synth_burst(clean, fp, seed=10)
    a, b = burst.frames[0], burst.frames[1]
    swap_a, swap_b = spectral.phase_swap(a, b)
    pa = cli.row_profile(a)
    pb = cli.row_profile(b)
    margin_a = cli.pearson(cli.row_profile(swap_a), pb) \
        - cli.pearson(cli.row_profile(swap_a), pa)
    margin_b = cli.pearson(cli.row_profile(swap_b), pa) \
        - cli.pearson(cli.row_profile(swap_b), pb)
    ok = margin_a >= 0.2 and margin_b >= 0.2
    record(10, ok, f"stripes follow the phase donor: margins "
           f"{margin_a:.3f}, {margin_b:.3f} (need >= 0.2)")


def test_11_flicker_physics():
    flat = FlickerParams(ac_frequency=50.0, exposure_time=1.0 / 100.0,
                         row_readout_time=6.25e-4, gamma_w=2.0)
    variation = float(np.ptp(flicker.row_attenuation(flat, 320, 1.3)))

    worst_err = 0.0
    for f_ac, rows in [(50.0, 100.0), (60.0, 50.0), (50.0, 32.0)]:
        fp = FlickerParams(ac_frequency=f_ac, exposure_time=2.5e-3,
                           row_readout_time=1.0 / (2 * f_ac * rows),
                           gamma_w=2.0)
        gains = flicker.row_attenuation(fp, 320, 1.0)
        measured = cli.estimate_stripe_period(gains)
        worst_err = max(worst_err, abs(measured - fp.stripe_period_rows))
    ok = variation < 1e-6 and worst_err <= 1.0
    record(11, ok, f"full-period variation {variation:.2e}, "
           f"period error {worst_err:.2f} rows over three settings")
