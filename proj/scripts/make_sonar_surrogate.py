#!/usr/bin/env python3
"""Generate a synthetic stand-in for the UCI Sonar (mines vs rocks) table.

The output has the layout of ``sonar.all-data``: 208 rows, 60 band energies
in [0, 1] followed by a text label (97 x ``R`` then 111 x ``M``), no header.
Each row is a smooth spectral profile with a class-dependent bump, a random
band shift, a random gain and AR(1) noise, so the classes overlap and a small
network can fit the training half but not generalize perfectly.

Usage: make_sonar_surrogate.py [--seed 151] [--out data/sonar_surrogate.csv]
"""
import argparse

import numpy as np

BANDS = 60
CLASS_SIGNAL = 0.25
NOISE = 0.08
COUNTS = (("R", 97), ("M", 111))


def profile(label, shift, rng):
    j = np.arange(BANDS, dtype=float) - shift
    base = 0.04 + 0.45 * np.exp(-(((j - 24.0) / 11.0) ** 2))
    if label == "M":
        bump = 0.14 * np.exp(-(((j - 38.0) / 5.0) ** 2)) + 0.05 * np.exp(-(((j - 10.0) / 4.0) ** 2))
    else:
        bump = 0.12 * np.exp(-(((j - 17.0) / 4.5) ** 2)) + 0.04 * np.exp(-(((j - 50.0) / 5.0) ** 2))
    bump *= CLASS_SIGNAL
    gain = rng.lognormal(0.0, 0.35)
    noise = np.empty(BANDS)
    noise[0] = rng.normal(0.0, NOISE)
    for k in range(1, BANDS):
        noise[k] = 0.8 * noise[k - 1] + rng.normal(0.0, NOISE * np.sqrt(1 - 0.64))
    return np.clip(gain * (base + bump) * (1.0 + noise) + rng.normal(0.0, 0.01, BANDS), 0.0, 1.0)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--seed", type=int, default=151)
    parser.add_argument("--out", default="data/sonar_surrogate.csv")
    args = parser.parse_args()
    rng = np.random.default_rng(args.seed)
    with open(args.out, "w") as f:
        for label, count in COUNTS:
            for _ in range(count):
                row = profile(label, rng.normal(0.0, 3.0), rng)
                f.write(",".join(f"{x:.4f}" for x in row) + f",{label}\n")


if __name__ == "__main__":
    main()
