"""End-to-end desk demo: synthesize a flickered burst, overfit the network,
restore the reference frame, and analyze the stripes before and after.

Runs everything through the command-line surface, so the run doubles as a
smoke test of the installed entry point:

    python3 scripts/run_desk_demo.py --workdir /tmp/deflicker_demo --steps 500

The default 500 steps take a few minutes on one CPU core; --steps 25 gives
a fast but visibly partial cleanup.
"""

import argparse
import sys
from pathlib import Path

from deflicker import cli, flicker, image_io


def run(argv) -> int:
    code = cli.main(argv)
    if code != 0:
        print(f"step failed with exit code {code}: {' '.join(argv)}",
              file=sys.stderr)
        sys.exit(code)
    return code


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--workdir", default="demo_out")
    ap.add_argument("--size", type=int, default=64,
                    help="scene side length in pixels")
    ap.add_argument("--steps", type=int, default=500)
    ap.add_argument("--seed", type=int, default=9)
    args = ap.parse_args()

    work = Path(args.workdir)
    work.mkdir(parents=True, exist_ok=True)

    clean_path = work / "clean.png"
    image_io.save_image(clean_path, flicker.sample_scene(args.size, args.size,
                                                         seed=args.seed))

    cfg_path = work / "run.cfg"
    cfg_path.write_text("\n".join([
        "# desk-scale run: tiny model, pronounced 40-row stripes",
        "ac_frequency = 50",
        "gamma_w = 2.0",
        "exposure_time = 2.5e-3",
        "row_readout_time = 6.25e-4",
        "model.channels = 8,16,24",
        "model.blocks = 2,2,2",
        "model.heads = 1,2,4",
        "model.window = 4",
        "train.lr = 1e-4",
        f"train.steps = {args.steps}",
        f"seed = {args.seed}",
    ]) + "\n", encoding="utf-8")

    burst = work / "burst"
    print("== synth ==")
    run(["synth", "--clean", str(clean_path), "--config", str(cfg_path),
         "--out", str(burst)])

    print("== train ==")
    ckpt = work / "model.ckpt"
    run(["train", "--burst", str(burst), "--config", str(cfg_path),
         "--out-ckpt", str(ckpt), "--curves", str(work / "curves.csv")])

    print("== forward ==")
    restored = work / "restored.png"
    run(["forward", "--burst", str(burst), "--ckpt", str(ckpt),
         "--out", str(restored), "--config", str(cfg_path)])

    print("== analyze (flickered input) ==")
    run(["analyze", "--img", str(burst / "I1.png"),
         "--out", str(work / "analysis_input")])
    print("== analyze (restored output) ==")
    run(["analyze", "--img", str(restored),
         "--out", str(work / "analysis_restored")])

    print("== phasedemo ==")
    run(["phasedemo", "--a", str(burst / "I0.png"), "--b", str(burst / "I1.png"),
         "--out", str(work / "phasedemo")])

    print(f"\nall outputs under {work}/")


if __name__ == "__main__":
    main()
