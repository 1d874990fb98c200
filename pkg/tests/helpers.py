"""Shared builders for protocol-level tests."""

import numpy as np

from byitfl.params import setup
from byitfl.protocol import ProtocolEngine
from byitfl.quantizer import normalize, quantize


def instance(n, b, t, p_drop, m, k, q, d, eps=0.3, seed=0, b_max=None):
    params, approx = setup(n, b, t, p_drop, m, k, q, d, epsilon=eps, b_max=b_max)
    rng = np.random.default_rng(seed)
    g0_real = normalize(rng.normal(size=d))
    # updates loosely aligned with g0 so most trust scores are positive
    ups = {i: quantize(normalize(g0_real + rng.normal(size=d)), params.quant, rng, i) for i in range(1, n + 1)}
    g0 = quantize(g0_real, params.quant, rng, 0)
    return params, approx, ups, g0


def engine(params, approx, seed=0, attacks=()):
    return ProtocolEngine(params, approx, seed=seed, attacks=attacks)
