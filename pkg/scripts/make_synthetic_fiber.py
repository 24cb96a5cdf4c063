"""Regenerate the bundled synthetic fiber tables.

Attenuation: parabola in wavelength with a 0.17 dB/km minimum at 1560 nm.
Raman gain: triangular, slope 0.0284 1/(W km THz) up to 14 THz shift, then
linear decay to zero at 20 THz.

These are stand-ins shaped like a low-loss silica fiber, not measured data.
"""
import argparse
from pathlib import Path

import numpy as np

DATA = Path(__file__).resolve().parents[1] / "src" / "isrs_nli" / "data"

LOSS_MIN_DB = 0.17
LOSS_MIN_NM = 1560.0
LOSS_CURV = 5e-6  # dB/km/nm^2
RAMAN_SLOPE = 0.0284
RAMAN_PEAK = 14.0
RAMAN_END = 20.0


def attenuation_table(lo=1420, hi=1680, step=2):
    lam = np.arange(lo, hi + step, step, dtype=float)
    return lam, LOSS_MIN_DB + LOSS_CURV * (lam - LOSS_MIN_NM) ** 2


def raman_table(step=0.25):
    shift = np.round(np.arange(0.0, RAMAN_END + step / 2, step), 10)
    gain = np.where(shift <= RAMAN_PEAK, RAMAN_SLOPE * shift,
                    RAMAN_SLOPE * RAMAN_PEAK * (RAMAN_END - shift) / (RAMAN_END - RAMAN_PEAK))
    return shift, np.clip(gain, 0.0, None)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=DATA)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    lam, loss = attenuation_table()
    with open(args.out / "synthetic_attenuation.csv", "w") as fh:
        fh.write("wavelength_nm,loss_dB_per_km\n")
        for a, b in zip(lam, loss):
            fh.write(f"{a:.1f},{b:.8f}\n")
    shift, gain = raman_table()
    with open(args.out / "synthetic_raman.csv", "w") as fh:
        fh.write("shift_THz,gain_per_W_per_km\n")
        for a, b in zip(shift, gain):
            fh.write(f"{a:.4f},{b:.8f}\n")
    print(f"wrote tables to {args.out}")


if __name__ == "__main__":
    main()
