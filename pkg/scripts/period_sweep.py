"""Sweep sensor timings and compare measured stripe periods with theory.

For each (mains frequency, readout time) pair the script synthesizes one
frame's row-gain profile, estimates the stripe period from it, and prints
the error against 1 / (2 f_ac t_row).  Useful when tuning the estimator or
sanity-checking a new timing configuration.

    python3 scripts/period_sweep.py --rows 320 --gamma 2.0
"""

import argparse

from deflicker.cli import estimate_stripe_period
from deflicker.flicker import FlickerParams, row_attenuation


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rows", type=int, default=320)
    ap.add_argument("--gamma", type=float, default=2.0)
    ap.add_argument("--exposure", type=float, default=2.5e-3)
    ap.add_argument("--phase", type=float, default=1.0)
    args = ap.parse_args()

    settings = []
    for f_ac in (50.0, 60.0):
        for period_rows in (16.0, 32.0, 50.0, 100.0, 57.0):
            settings.append((f_ac, 1.0 / (2.0 * f_ac * period_rows)))

    print(f"{'f_ac':>6} {'t_row':>12} {'theory':>8} {'measured':>9} {'error':>7}")
    worst = 0.0
    for f_ac, t_row in settings:
        fp = FlickerParams(ac_frequency=f_ac, exposure_time=args.exposure,
                           row_readout_time=t_row, gamma_w=args.gamma)
        gains = row_attenuation(fp, args.rows, args.phase)
        measured = estimate_stripe_period(gains)
        err = abs(measured - fp.stripe_period_rows)
        worst = max(worst, err)
        print(f"{f_ac:6.0f} {t_row:12.3e} {fp.stripe_period_rows:8.2f} "
              f"{measured:9.2f} {err:7.3f}")
    print(f"\nworst error: {worst:.3f} rows over {len(settings)} settings")


if __name__ == "__main__":
    main()
