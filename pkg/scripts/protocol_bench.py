"""Wall time of one secure aggregation round as the user count and dimension grow."""

import argparse
import time

import numpy as np

from byitfl.params import min_users, setup
from byitfl.protocol import ProtocolEngine, plaintext_oracle
from byitfl.quantizer import normalize, quantize


def run(n, d, b, k, q, seed=0):
    params, approx = setup(n, b, 1, 0, 1, k, q, d, epsilon=0.3)
    rng = np.random.default_rng(seed)
    base = normalize(rng.normal(size=d))
    ups = {i: quantize(normalize(base + 0.3 * rng.normal(size=d)), params.quant, rng, i) for i in range(1, n + 1)}
    g0 = quantize(base, params.quant, rng, 0)
    t0 = time.perf_counter()
    res = ProtocolEngine(params, approx, seed=seed).run_round(ups, g0)
    dt = time.perf_counter() - t0
    ok = res.field_quotients == plaintext_oracle(ups, g0, approx, params.prime, res.included).field_quotients
    return dt, ok, params.prime.bit_length()


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--k", type=int, default=2)
    ap.add_argument("--q", type=int, default=16)
    ap.add_argument("--b", type=int, default=1)
    ap.add_argument("--dims", type=int, nargs="+", default=[2, 8, 32])
    ap.add_argument("--extra-users", type=int, nargs="+", default=[0, 4, 8])
    a = ap.parse_args()
    base_n = min_users(a.b, a.k, 1, 1, 0)
    print(f"{'n':>4s} {'d':>4s} {'bits':>5s} {'seconds':>9s} oracle")
    for extra in a.extra_users:
        for d in a.dims:
            dt, ok, bits = run(base_n + extra, d, a.b, a.k, a.q)
            print(f"{base_n + extra:4d} {d:4d} {bits:5d} {dt:9.3f} {'match' if ok else 'MISMATCH'}")


if __name__ == "__main__":
    main()
