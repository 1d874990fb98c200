"""Protocol parameters and feasibility checks."""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from functools import cached_property
from typing import Optional

from .field import PrimeField
from .lcc import EvalDomain, padded_width
from .quantizer import ParamCheck, QuantConfig, validate_params

USER_BOUND = "n >= 2b+(k+2)(m+t-1)+p+1"
NORM_BOUND = "n >= 2b+2(m+t-1)+p+1"


def min_users(b: int, k: int, m: int, t: int, p_drop: int) -> int:
    if min(b, k, t, p_drop) < 0 or m < 1:
        raise ValueError("parameters must be non-negative with m >= 1")
    return 2 * b + (k + 2) * (m + t - 1) + p_drop + 1


def norm_check_users(b: int, m: int, t: int, p_drop: int) -> int:
    return 2 * b + 2 * (m + t - 1) + p_drop + 1


def check_counts(n: int, b: int, k: int, m: int, t: int, p_drop: int) -> ParamCheck:
    reasons = []
    need = min_users(b, k, m, t, p_drop)
    if n < need:
        reasons.append(f"{USER_BOUND} violated: n={n} < {need} "
                       f"(b={b}, k={k}, m={m}, t={t}, p={p_drop})")
    need2 = norm_check_users(b, m, t, p_drop)
    if n < need2:
        reasons.append(f"{NORM_BOUND} violated: n={n} < {need2}")
    return ParamCheck(not reasons, tuple(reasons))


@dataclass(frozen=True)
class ProtocolParams:
    n: int
    b: int
    t: int
    p_drop: int
    m: int
    k: int
    q: int
    d: int
    prime: int
    epsilon: float = 0.02
    eta: float = 1.0
    eta_u: float = 0.1
    # error budget used by decoders and VSS; defaults to b
    b_max: Optional[int] = None
    coeff_scale: int = 1
    coeff_mass: Optional[int] = None
    extra: dict = dc_field(default_factory=dict, compare=False, hash=False)

    @property
    def budget(self) -> int:
        return self.b if self.b_max is None else self.b_max

    @property
    def L(self) -> int:
        return self.m + self.t - 1

    @property
    def width(self) -> int:
        return padded_width(self.d, self.m)

    @cached_property
    def field(self) -> PrimeField:
        return PrimeField(self.prime)

    @cached_property
    def domain(self) -> EvalDomain:
        return EvalDomain.standard(self.n, self.m, self.t, self.field)

    @property
    def quant(self) -> QuantConfig:
        return QuantConfig(self.q, self.prime, self.d, self.k, self.n, self.coeff_scale, self.coeff_mass)

    def check(self) -> ParamCheck:
        r = list(check_counts(self.n, self.budget, self.k, self.m, self.t, self.p_drop).reasons)
        r += list(validate_params(self.quant).reasons)
        if not 0 < self.epsilon < 1:
            r.append("epsilon must lie in (0, 1)")
        return ParamCheck(not r, tuple(r))


def setup(n: int, b: int, t: int, p_drop: int, m: int, k: int, q: int, d: int, epsilon: float = 0.02,
          b_max: Optional[int] = None, prime: Optional[int] = None, nodes: int = 1001, **kw):
    """Fit and embed the ReLU approximation, pick the smallest admissible prime, return (params, approx)."""
    from .quantizer import required_prime
    from .relu_poly import choose_scale, embed_coeffs, fit_relu

    approx = fit_relu(k, (-1.0, 1.0), nodes)
    s = choose_scale(approx.real_coeffs)
    mass = sum(abs(int(round(s * h))) for h in approx.real_coeffs if abs(h) >= 1e-9)
    qc = QuantConfig(q, 2, d, k, n, s, mass)
    P = prime if prime is not None else required_prime(qc)
    params = ProtocolParams(n=n, b=b, t=t, p_drop=p_drop, m=m, k=k, q=q, d=d, prime=P, epsilon=epsilon,
                            b_max=b_max, coeff_scale=s, coeff_mass=mass, **kw)
    return params, embed_coeffs(approx, q, P, scale=s)
