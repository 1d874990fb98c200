"""Polynomial approximation of ReLU and its integer embedding.

The fit lives on cosine values in [-1, 1].  With integer coefficients
c_j = round(s * h_j) the embedded polynomial is

    h_hat(x) = sum_j c_j * q^(2(k-j)) * x^j  =  s * q^(2k) * h(x / q^2) + rounding,

so it can be evaluated directly on raw dot products x = <g0_bar, gi_bar>.  The
common factor s * q^(2k) cancels in Sigma2 / Sigma1.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .quantizer import ParamsInfeasible, phi


@dataclass(frozen=True)
class ReluApprox:
    k: int
    real_coeffs: tuple[float, ...]
    fit_interval: tuple[float, float]
    max_abs_error: float
    coeff_scale: int = 0
    int_coeffs: tuple[int, ...] = ()
    field_coeffs: tuple[int, ...] = ()
    q: int = 0
    prime: int = 0

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), self.real_coeffs)

    @property
    def coeff_mass(self) -> int:
        return sum(abs(c) for c in self.int_coeffs)

    @property
    def embedded_scale(self) -> int:
        """Factor s * q^(2k) between h_hat(q^2 c) and h(c)."""
        return self.coeff_scale * self.q ** (2 * self.k)

    def eval_int(self, x: int) -> int:
        """h_hat on an integer dot product, exact."""
        acc = 0
        for j in range(self.k, -1, -1):
            acc = acc * x + self.int_coeffs[j] * self.q ** (2 * (self.k - j))
        return acc

    def embedding_slack(self) -> float:
        """Bound on |h_hat(round(q^2 c)) / (s q^(2k)) - h(c)| over c in [-1, 1]."""
        s = self.coeff_scale
        coef_err = sum(abs(c / s - h) for c, h in zip(self.int_coeffs, self.real_coeffs))
        lip = sum(j * abs(c) / s for j, c in enumerate(self.int_coeffs))
        return coef_err + lip * 0.5 / self.q ** 2


def relu(x):
    return np.maximum(x, 0.0)


def _lstsq(x: np.ndarray, y: np.ndarray, k: int) -> tuple[np.ndarray, float]:
    V = np.vander(x, k + 1, increasing=True)
    coef, *_ = np.linalg.lstsq(V, y, rcond=None)
    return coef, float(np.linalg.cond(V))


def fit_relu(k: int, interval: tuple[float, float] = (-1.0, 1.0), nodes: int = 1001,
             cond_limit: float = 1e12) -> ReluApprox:
    """Least-squares degree-k fit of ReLU on a uniform grid over a symmetric interval."""
    lo, hi = float(interval[0]), float(interval[1])
    if k < 1:
        raise ValueError("degree must be at least 1")
    if nodes < 10 * k:
        raise ValueError("need at least 10*k nodes")
    if hi <= 0 or abs(lo + hi) > 1e-12 * hi:
        raise ValueError("interval must be symmetric around 0")
    # fit in t = x / hi, then rescale: relu(x) = hi * relu(t)
    t = np.linspace(-1.0, 1.0, nodes)
    a, cond = _lstsq(t, relu(t), k)
    if not np.isfinite(cond) or cond > cond_limit:
        t = np.cos(np.pi * (np.arange(nodes) + 0.5) / nodes)
        a, cond = _lstsq(t, relu(t), k)
        if not np.isfinite(cond) or cond > cond_limit:
            raise np.linalg.LinAlgError("ReLU fit is singular")
    coeffs = tuple(float(a[j]) * hi ** (1 - j) for j in range(k + 1))
    dense = np.linspace(lo, hi, 10 * nodes)
    err = float(np.max(np.abs(np.polynomial.polynomial.polyval(dense, coeffs) - relu(dense))))
    return ReluApprox(k, coeffs, (lo, hi), err)


def choose_scale(coeffs, rel_tol: float = 1e-3, max_exp: int = 15, tiny: float = 1e-9) -> int:
    """Smallest power of 10 rounding every non-negligible coefficient within ``rel_tol``."""
    big = [h for h in coeffs if abs(h) >= tiny]
    for e in range(max_exp + 1):
        s = 10 ** e
        if all(round(s * h) != 0 and abs(round(s * h) - s * h) < rel_tol * abs(s * h) for h in big):
            return s
    raise ParamsInfeasible(f"no scale up to 1e{max_exp} embeds the coefficients")


def embed_coeffs(approx: ReluApprox, q: int, prime: int, scale: Optional[int] = None) -> ReluApprox:
    if approx.fit_interval != (-1.0, 1.0):
        raise ValueError("embedding expects a fit over [-1, 1]")
    s = scale if scale is not None else choose_scale(approx.real_coeffs)
    ints = tuple(0 if abs(h) < 1e-9 else int(round(s * h)) for h in approx.real_coeffs)
    k = approx.k
    fc = tuple(phi(c * q ** (2 * (k - j)), prime) for j, c in enumerate(ints))
    return replace(approx, coeff_scale=s, int_coeffs=ints, field_coeffs=fc, q=q, prime=prime)


def curve_samples(approx: ReluApprox, points: int = 201) -> np.ndarray:
    lo, hi = approx.fit_interval
    x = np.linspace(lo, hi, points)
    return np.column_stack([x, relu(x), approx(x)])
