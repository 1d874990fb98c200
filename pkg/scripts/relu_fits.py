"""Fit the polynomial ReLU for several degrees; write curves and an error table."""

import argparse
import csv
from pathlib import Path

import numpy as np

from byitfl.relu_poly import curve_samples, fit_relu


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--degrees", type=int, nargs="+", default=[2, 4, 6, 8])
    ap.add_argument("--points", type=int, default=401)
    ap.add_argument("--out", default="results/relu")
    a = ap.parse_args()
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)

    fits = {k: fit_relu(k) for k in a.degrees}
    x = curve_samples(fits[a.degrees[0]], a.points)[:, 0]
    with open(out / "curves.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["x", "relu"] + [f"h{k}" for k in a.degrees])
        cols = [curve_samples(fits[k], a.points)[:, 2] for k in a.degrees]
        for row in zip(x, np.maximum(x, 0.0), *cols):
            w.writerow([f"{v:.6f}" for v in row])

    print(f"{'k':>3s} {'max |h-relu|':>14s}  coefficients")
    for k, fit in fits.items():
        coeffs = " ".join(f"{c:+.4f}" for c in fit.real_coeffs)
        print(f"{k:3d} {fit.max_abs_error:14.6f}  {coeffs}")


if __name__ == "__main__":
    main()
