"""Command-line surface: synthesis, inference, training, analysis, verification.

Exit codes: 0 success, 2 usage, 3 I/O, 4 parse (config/checkpoint/image
format), 5 shape mismatch, 6 numeric failure.  Every failure prints a
one-line reason on stderr.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import autodiff, blocks, flicker, image_io, metrics, model, spectral, training, wavelet
from .config import CliConfig, ConfigError, parse_config
from .image_io import ImageFormatError
from .model import CheckpointError
from .spectral import DegenerateInputError
from .tensor_ops import ShapeError
from .training import TrainingError

EXIT_USAGE = 2
EXIT_IO = 3
EXIT_PARSE = 4
EXIT_SHAPE = 5
EXIT_NUMERIC = 6


# ---------------------------------------------------------------------------
# profile analysis helpers (shared with the test-suite)
# ---------------------------------------------------------------------------

def row_profile(img: np.ndarray) -> np.ndarray:
    """Mean luminance per row; the 1-D signature of horizontal banding."""
    return metrics.luminance(img).mean(axis=1)


def pearson(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    da = a - a.mean()
    db = b - b.mean()
    denom = float(np.sqrt(np.sum(da * da) * np.sum(db * db)))
    if denom == 0.0:
        raise DegenerateInputError("constant profile has no correlation")
    return float(np.dot(da, db) / denom)


def estimate_stripe_period(profile) -> float:
    """Dominant period (in rows) of a 1-D profile.

    Scores each candidate period on a fine grid by projecting the detrended,
    Hann-windowed profile onto its fundamental plus two downweighted
    harmonics.  The harmonic sum keeps clipped (flat-topped) stripe
    waveforms from locking onto a harmonic or subharmonic, and the grid is
    not tied to FFT bins, so lengths that are not period multiples still
    resolve to well under a row.
    """
    p = np.asarray(profile, dtype=np.float64)
    n = p.size
    if n < 8:
        raise DegenerateInputError(f"profile of {n} rows is too short")
    x = np.arange(n, dtype=np.float64)
    slope, intercept = np.polyfit(x, p, 1)
    d = (p - slope * x - intercept) * np.hanning(n)
    if np.ptp(d) <= 1e-9 * max(1.0, float(np.abs(p).max())):
        raise DegenerateInputError("no dominant stripe frequency")
    periods = np.arange(3.0, n / 2.0 + 1e-9, 0.02)
    if periods.size == 0:
        raise DegenerateInputError(f"profile of {n} rows is too short")
    score = np.zeros(periods.size)
    for harmonic, weight in enumerate((1.0, 0.7, 0.4), start=1):
        f = harmonic / periods
        valid = f <= 0.5
        phases = np.exp(-2j * np.pi * np.outer(f[valid], x))
        score[valid] += weight * np.abs(phases @ d) ** 2
    return float(periods[int(np.argmax(score))])


def _load_cfg(path) -> CliConfig:
    if path is None:
        return CliConfig()
    return parse_config(path)


def _pick_seed(args, cfg: CliConfig) -> int:
    return cfg.seed if getattr(args, "seed", None) is None else args.seed


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_synth(args) -> int:
    cfg = _load_cfg(args.config)
    params = cfg.flicker_params()
    clean = image_io.load_image(args.clean)
    burst = flicker.synth_burst(clean, params, seed=_pick_seed(args, cfg))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(burst.frames):
        image_io.save_image(out / f"I{i}.png", frame)
    image_io.save_image(out / "gt.png", burst.clean)
    gains = burst.gains
    with open(out / "gains.csv", "w", encoding="utf-8") as fh:
        fh.write("row,g0,g1,g2\n")
        for r in range(gains.shape[1]):
            fh.write(f"{r},{gains[0, r]:.10g},{gains[1, r]:.10g},{gains[2, r]:.10g}\n")
    print(f"wrote burst to {out} ({clean.shape[0]}x{clean.shape[1]}, "
          f"stripe period {params.stripe_period_rows:.2f} rows)")
    return 0


def cmd_forward(args) -> int:
    cfg = _load_cfg(args.config)
    mc = cfg.model_config()
    bdir = Path(args.burst)
    frames = [image_io.load_image(bdir / f"I{i}.png") for i in range(3)]
    reference = model.build_model(mc, seed=cfg.seed)
    params = model.load_checkpoint(args.ckpt, reference=reference)
    restored = model.restore(params, frames[0], frames[1], frames[2], mc)
    image_io.save_image(args.out, restored)
    gt_path = bdir / "gt.png"
    if gt_path.exists():
        gt = image_io.load_image(gt_path)
        print(f"PSNR {metrics.format_db(metrics.psnr(restored, gt))}")
        print(f"SSIM {metrics.ssim(restored, gt):.4f}")
    print(f"wrote {args.out}")
    return 0


def cmd_train(args) -> int:
    cfg = _load_cfg(args.config)
    mc = cfg.model_config()
    bdir = Path(args.burst)
    frames = tuple(image_io.load_image(bdir / f"I{i}.png") for i in range(3))
    clean = image_io.load_image(bdir / "gt.png")
    n_rows = frames[0].shape[0]
    burst = flicker.BurstTriplet(frames=frames, clean=clean,
                                 gains=np.ones((3, n_rows)))
    params, l1_curve, psnr_curve = training.train_overfit(
        burst, mc, cfg.train_steps, seed=_pick_seed(args, cfg), lr=cfg.train_lr)
    model.save_checkpoint(args.out_ckpt, params)
    training.write_curves(args.curves, l1_curve, psnr_curve)
    print(f"steps {cfg.train_steps}  l1 {l1_curve[0]:.6g} -> {l1_curve[-1]:.6g}  "
          f"psnr {metrics.format_db(psnr_curve[0])} -> {metrics.format_db(psnr_curve[-1])}")
    return 0


def cmd_phasedemo(args) -> int:
    a = image_io.load_image(args.a)
    b = image_io.load_image(args.b)
    swap_a, swap_b = spectral.phase_swap(a, b)
    swap_a = np.clip(swap_a, 0.0, 1.0)
    swap_b = np.clip(swap_b, 0.0, 1.0)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    image_io.save_image(out / "swap_a.png", swap_a)
    image_io.save_image(out / "swap_b.png", swap_b)
    pa = row_profile(a)
    pb = row_profile(b)
    lines = [
        f"corr(swap_a, a) {pearson(row_profile(swap_a), pa):+.4f}",
        f"corr(swap_a, b) {pearson(row_profile(swap_a), pb):+.4f}",
        f"corr(swap_b, b) {pearson(row_profile(swap_b), pb):+.4f}",
        f"corr(swap_b, a) {pearson(row_profile(swap_b), pa):+.4f}",
    ]
    (out / "report.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print("\n".join(lines))
    return 0


def cmd_analyze(args) -> int:
    img = image_io.load_image(args.img)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    luma = metrics.luminance(img)
    centered = (luma - luma.mean())[:, :, None]
    ac = spectral.autocorrelation(centered)[:, :, 0]
    image_io.save_heatmap(out / "autocorr.png", ac, out / "autocorr_range.txt")
    lines = []
    try:
        period = estimate_stripe_period(row_profile(img))
        lines.append(f"stripe_period_rows {period:.6g}")
    except DegenerateInputError:
        lines.append("stripe_period_rows none")
    he = luma.shape[0] - luma.shape[0] % 2
    we = luma.shape[1] - luma.shape[1] % 2
    energies = wavelet.directional_energy(wavelet.haar_dwt(luma[:he, :we][:, :, None]))
    for band in ("LL", "LH", "HL", "HH"):
        lines.append(f"energy_{band} {float(np.sum(energies[band])):.6g}")
    (out / "report.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print("\n".join(lines))
    return 0


def cmd_flops(args) -> int:
    report = blocks.flops_report(args.height, args.width, args.channels,
                                 args.heads, args.window)
    print(report.summary())
    params = model.build_model(model.ModelConfig(), seed=0)
    print(f"default model parameters: {model.param_count(params)}")
    return 0


def cmd_gradcheck(args) -> int:
    seed = 0 if args.seed is None else args.seed
    adjoint = autodiff.run_adjoint_suite(seed=seed)
    worst_adjoint = max(adjoint.values())
    adjoint_ok = worst_adjoint < 1e-9
    for name in sorted(adjoint):
        status = "ok" if adjoint[name] < 1e-9 else "FAIL"
        print(f"{status:4s} adjoint {name}: rel_err={adjoint[name]:.3e}")
    report = autodiff.run_gradcheck_suite(seed=seed)
    print(report.summary())
    ok = adjoint_ok and report.all_pass
    if args.full:
        full = training.full_network_gradcheck(seed=seed)
        print(full.summary())
        ok = ok and full.all_pass
    print("gradcheck " + ("PASS" if ok else "FAIL"))
    return 0 if ok else EXIT_NUMERIC


# ---------------------------------------------------------------------------
# parser and dispatch
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deflicker",
        description="Burst deflicker: flicker synthesis, restoration, analysis.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize a flickered burst from a clean image")
    p.add_argument("--clean", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("forward", help="run inference on a burst directory")
    p.add_argument("--burst", required=True)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_forward)

    p = sub.add_parser("train", help="overfit the network to one burst")
    p.add_argument("--burst", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--out-ckpt", required=True)
    p.add_argument("--curves", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("phasedemo", help="swap phase spectra of two images")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_phasedemo)

    p = sub.add_parser("analyze", help="stripe and subband analysis of one image")
    p.add_argument("--img", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("flops", help="print the attention cost report")
    p.add_argument("--height", type=int, default=64)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--channels", type=int, default=32)
    p.add_argument("--window", type=int, default=8)
    p.add_argument("--heads", type=int, default=2)
    p.set_defaults(func=cmd_flops)

    p = sub.add_parser("gradcheck", help="run the gradient verification suites")
    p.add_argument("--full", action="store_true",
                   help="also finite-difference the full tiny network")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_gradcheck)

    return parser


def _fail(code: int, exc: BaseException) -> int:
    print(f"error: {exc}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DegenerateInputError, TrainingError, FloatingPointError) as exc:
        return _fail(EXIT_NUMERIC, exc)
    except ShapeError as exc:
        return _fail(EXIT_SHAPE, exc)
    except (ConfigError, CheckpointError, ImageFormatError) as exc:
        return _fail(EXIT_PARSE, exc)
    except OSError as exc:
        return _fail(EXIT_IO, exc)
    except ValueError as exc:
        return _fail(EXIT_PARSE, exc)


if __name__ == "__main__":
    sys.exit(main())
