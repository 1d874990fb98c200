"""How often the norm check wrongly rejects an honest unit vector, per (q, epsilon),
and whether it always rejects a doubled one."""

import argparse

import numpy as np

from byitfl.protocol import norm_passes, plaintext_norms
from byitfl.quantizer import QuantConfig, normalize, quantize, required_prime


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--d", type=int, default=64)
    ap.add_argument("--qs", type=int, nargs="+", default=[16, 64, 128, 256, 1024])
    ap.add_argument("--eps", type=float, nargs="+", default=[0.02, 0.05, 0.1, 0.3])
    ap.add_argument("--trials", type=int, default=1000)
    a = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'q':>6s} {'eps':>6s} {'honest rejected':>16s} {'doubled passed':>15s}")
    for q in a.qs:
        cfg = QuantConfig(q, 2, a.d, 2, 2, 1)
        cfg = QuantConfig(q, required_prime(cfg), a.d, 2, 2, 1)
        for eps in a.eps:
            fp = fn = 0
            for _ in range(a.trials):
                u = normalize(rng.normal(size=a.d))
                norms = plaintext_norms({1: quantize(u, cfg, rng, 1), 2: quantize(2 * u, cfg, rng, 2, check_range=False)})
                fp += not norm_passes(norms[1], q, eps)
                fn += norm_passes(norms[2], q, eps)
            print(f"{q:6d} {eps:6.2f} {fp / a.trials:16.3f} {fn / a.trials:15.3f}")


if __name__ == "__main__":
    main()
