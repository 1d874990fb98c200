"""Normalization, stochastic quantization into F_P, dequantization and the
field-size guards."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .field import is_probable_prime, next_prime


class ZeroUpdate(ValueError):
    pass


class RangeError(ValueError):
    pass


class WrapAroundDetected(ValueError):
    pass


class ParamsInfeasible(ValueError):
    pass


@dataclass(frozen=True)
class QuantConfig:
    q: int
    prime: int
    d: int
    k: int
    n: int
    coeff_scale: int = 1
    # sum of |integer ReLU coefficients|; bounds |h_hat| more tightly than coeff_scale alone
    coeff_mass: Optional[int] = None

    @property
    def magnitude_scale(self) -> int:
        return self.coeff_mass if self.coeff_mass is not None else self.coeff_scale


@dataclass(frozen=True)
class QuantizedUpdate:
    values: tuple[int, ...]
    source: int
    prime: int

    def __len__(self):
        return len(self.values)

    def signed(self) -> list[int]:
        return [phi_inv(v, self.prime) for v in self.values]


@dataclass(frozen=True)
class ParamCheck:
    ok: bool
    reasons: tuple[str, ...] = ()

    def __bool__(self):
        return self.ok


def phi(x: int, prime: int) -> int:
    return int(x) % prime


def phi_inv(v: int, prime: int) -> int:
    v %= prime
    return v - prime if v > prime // 2 else v


def normalize(g) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    nrm = float(np.linalg.norm(g))
    if not np.isfinite(nrm):
        raise ValueError("update contains non-finite entries")
    if nrm == 0.0:
        raise ZeroUpdate("cannot normalize a zero update")
    return g / nrm


def stochastic_round(x, rng: np.random.Generator) -> np.ndarray:
    """Round each entry up with probability equal to its fractional part."""
    x = np.asarray(x, dtype=float)
    lo = np.floor(x)
    return (lo + (rng.random(x.shape) < (x - lo))).astype(np.int64)


def quantize(g_tilde, cfg: QuantConfig, rng: np.random.Generator, source: int = 0,
             check_range: bool = True) -> QuantizedUpdate:
    g_tilde = np.asarray(g_tilde, dtype=float)
    if check_range:
        if np.any(np.abs(g_tilde) > 1.0 + 1e-12):
            raise RangeError("quantizer input must lie in [-1, 1]")
        g_tilde = np.clip(g_tilde, -1.0, 1.0)
    ints = stochastic_round(cfg.q * g_tilde, rng)
    return QuantizedUpdate(tuple(phi(int(v), cfg.prime) for v in ints), source, cfg.prime)


def dequantize(v, cfg: QuantConfig, norm0: float = 1.0):
    """Field element -> raw update coordinate, or (num, den) quotient -> aggregate coordinate."""
    if isinstance(v, (tuple, Fraction)):
        frac = Fraction(*v) if isinstance(v, tuple) else v
        _, B2 = sigma_bounds(cfg)
        if abs(frac) > B2:
            raise WrapAroundDetected("quotient exceeds the Sigma2 bound")
        return float(frac) * norm0 / cfg.q
    x = phi_inv(int(v), cfg.prime)
    if abs(x) > cfg.q:
        raise WrapAroundDetected(f"lifted value {x} is outside [-q, q]")
    return x / cfg.q


def dequantize_vector(vals: Sequence[int], cfg: QuantConfig) -> np.ndarray:
    return np.array([dequantize(v, cfg) for v in vals])


def field_bound(cfg: QuantConfig) -> int:
    """Wrap-around bound 2 n d^k q^(2k+1) + 1, scaled by the coefficient magnitude."""
    return 2 * cfg.n * cfg.magnitude_scale * cfg.d ** cfg.k * cfg.q ** (2 * cfg.k + 1) + 1


def sigma_bounds(cfg: QuantConfig) -> tuple[int, int]:
    """(B1, B2): bounds on |Sigma1| and on every |Sigma2| coordinate."""
    b1 = cfg.n * cfg.magnitude_scale * cfg.d ** cfg.k * cfg.q ** (2 * cfg.k)
    return b1, b1 * cfg.q


def required_prime(cfg: QuantConfig) -> int:
    b1, b2 = sigma_bounds(cfg)
    return next_prime(max(field_bound(cfg), 2 * b1 * b2 + 1))


def validate_params(cfg: QuantConfig) -> ParamCheck:
    reasons = []
    P = cfg.prime
    if not is_probable_prime(P):
        reasons.append(f"P={P} is not prime")
    fb = field_bound(cfg)
    if P < fb:
        reasons.append(f"P >= 2*n*s*d^k*q^(2k+1)+1 violated: P={P} < {fb}")
    b1, b2 = sigma_bounds(cfg)
    if 2 * b1 * b2 >= P:
        reasons.append(f"2*B1*B2 < P violated: 2*{b1}*{b2} >= P={P}")
    if cfg.q < 1 or cfg.d < 1 or cfg.n < 1 or cfg.k < 0:
        reasons.append("q, d, n must be positive and k non-negative")
    return ParamCheck(not reasons, tuple(reasons))
