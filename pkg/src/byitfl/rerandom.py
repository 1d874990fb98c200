"""Zero contributions, resharing-based conversion and lambda masking.

A zero contribution is Z(x) * Q(x) with Z the monic polynomial vanishing on
the data points and Q uniform of degree D - m.  Only Q is dealt (through VSS);
every holder multiplies its Q share by the public Z(alpha_j), so vanishing at
the data points holds by construction even for a Byzantine contributor.

The conversion turns shares of w(x) (degree D_w) into a fresh degree-(m+t-1)
replicated sharing of sum_l w(beta_l): each party sub-shares its value
w(alpha_j), the parties open a syndrome of the sub-shared values to locate
wrong ones, and everybody applies the same public linear combination.
"""

from __future__ import annotations

from typing import Mapping, Optional, Sequence

from .field import PrimeField, horner, lagrange_weights, poly_mul
from .lcc import EvalDomain, PackedShare, lcc_polys, replicated_bundle, share_add, share_mul
from .rs import InsufficientRedundancy, NoisyCodeword, rs_decode, solve_linear


def contribution_poly_degree(degree: int, domain: EvalDomain) -> int:
    """Degree of Q for a zero contribution of total degree ``degree`` (-1: none possible)."""
    return degree - domain.m


def random_zero_poly(degree: int, domain: EvalDomain, rng) -> list[int]:
    """Coefficients of Z * Q, uniform among degree <= ``degree`` polys vanishing on the data points."""
    if degree < domain.m:
        raise ValueError(f"zero contribution needs degree >= m={domain.m}")
    p = domain.field.p
    qpoly = [rng.randrange(p) for _ in range(degree - domain.m + 1)]
    return poly_mul(domain.vanishing_poly, qpoly, p)


def zero_contribution(degree: int, domain: EvalDomain, rng, width: int = 1,
                      tag: str = "zero") -> list[PackedShare]:
    """Plain (unverified) shares of ``width`` independent zero contributions."""
    p = domain.field.p
    polys = [random_zero_poly(degree, domain, rng) for _ in range(width)]
    return [PackedShare(j, tuple(horner(f, a, p) for f in polys), degree, tag, p)
            for j, a in enumerate(domain.alphas, start=1)]


def lift_contribution(q_values: Sequence[int], party: int, domain: EvalDomain) -> tuple[int, ...]:
    """Turn a party's shares of Q into its shares of Z * Q."""
    p = domain.field.p
    z = domain.vanishing_at_alpha[party - 1]
    return tuple(v * z % p for v in q_values)


def rerandomize(shares: Sequence[PackedShare], contributions: Sequence[Sequence[PackedShare]]) -> list[PackedShare]:
    """Add every contribution's share to the matching product share (ascending contributor order)."""
    out = []
    for s in shares:
        acc = s
        for contrib in contributions:
            c = next(x for x in contrib if x.owner == s.owner)
            acc = share_add(acc, PackedShare(s.owner, c.values, s.degree_bound, s.source_tag, s.modulus))
        out.append(acc)
    return out


# conversion ----------------------------------------------------------------

def parity_rows(xs: Sequence[int], degree: int, p: int) -> list[list[int]]:
    """Rows H[r][j] = lam_j * x_j^r, r < len(xs) - degree - 1, annihilating degree <= ``degree`` codewords."""
    n = len(xs)
    lam = []
    for i, xi in enumerate(xs):
        d = 1
        for j, xj in enumerate(xs):
            if j != i:
                d = d * (xi - xj) % p
        lam.append(d)
    lam = PrimeField(p, check=False).batch_inv(lam)
    rows = []
    for r in range(n - degree - 1):
        rows.append([lam[j] * pow(xs[j], r, p) % p for j in range(n)])
    return rows


def syndrome_decode(xs: Sequence[int], syndrome: Sequence[int], degree: int, b_max: int,
                    field: PrimeField) -> list[int]:
    """Positions (indices into ``xs``) of the error vector behind ``syndrome``."""
    p = field.p
    if not any(s % p for s in syndrome):
        return []
    r = len(syndrome)
    rows = parity_rows(xs, degree, p)
    # a coset member supported on the first r positions, then decode it as a noisy codeword
    sq = [row[:r] for row in rows]
    z = solve_linear(sq, list(syndrome), p)
    if z is None:
        raise InsufficientRedundancy("syndrome system is singular")
    z = z + [0] * (len(xs) - r)
    _, errs = rs_decode(NoisyCodeword(list(zip(xs, z)), degree), b_max, field)
    return sorted(errs)


def combine_coeffs(xs: Sequence[int], domain: EvalDomain) -> list[int]:
    """c_j with sum_j c_j w(x_j) = sum_{l in [m]} w(beta_l) for deg w < len(xs)."""
    p = domain.field.p
    out = [0] * len(xs)
    for beta in domain.data_betas:
        for j, w in enumerate(lagrange_weights(xs, beta, p)):
            out[j] = (out[j] + w) % p
    return out


def reshare_to_replicated_scalar(partial: Mapping[int, int], domain: EvalDomain, rngs: Mapping[int, object],
                                 degree_w: int, b_max: int = 0,
                                 forged: Optional[Mapping[int, int]] = None) -> tuple[list[PackedShare], list[int]]:
    """Honest-execution model of the conversion step (no network).

    ``partial[j]`` is party j's value w(alpha_j); ``forged`` optionally
    replaces what some parties sub-share.  Returns the output shares and the
    parties identified as having sub-shared a wrong value.
    """
    p = domain.field.p
    parties = sorted(partial)
    if len(parties) < degree_w + 2 * b_max + 1:
        raise InsufficientRedundancy(f"{len(parties)} sub-sharings, need {degree_w + 2 * b_max + 1}")
    forged = dict(forged or {})
    subs = {}
    for j in parties:
        v = forged.get(j, partial[j])
        subs[j] = lcc_polys(replicated_bundle([v], domain, rngs[j]), domain)[0]
    xs = [domain.alpha(j) for j in parties]
    rows = parity_rows(xs, degree_w, p)
    bad: set[int] = set()
    for beta in domain.data_betas:
        vals = [horner(subs[j], beta, p) for j in parties]
        syn = [sum(h * v for h, v in zip(row, vals)) % p for row in rows]
        bad.update(parties[i] for i in syndrome_decode(xs, syn, degree_w, b_max, domain.field))
    keep = [j for j in parties if j not in bad]
    coef = combine_coeffs([domain.alpha(j) for j in keep], domain)
    out = []
    for k, a in enumerate(domain.alphas, start=1):
        v = sum(c * horner(subs[j], a, p) for c, j in zip(coef, keep)) % p
        out.append(PackedShare(k, (v,), domain.degree, "converted", p))
    return out, sorted(bad)


def lambda_mask(sigma1: Sequence[PackedShare], sigma2: Sequence[PackedShare],
                lambda_parts: Sequence[Sequence[PackedShare]],
                zero1: Sequence[Sequence[PackedShare]] = (),
                zero2: Sequence[Sequence[PackedShare]] = ()) -> tuple[list[PackedShare], list[PackedShare]]:
    """Shares of lambda*Sigma1 and lambda*Sigma2 with lambda = sum of replicated ``lambda_parts``,
    re-randomized by the given zero contributions."""
    lam = []
    for j, s in enumerate(sigma1):
        acc = lambda_parts[0][j]
        for part in lambda_parts[1:]:
            acc = share_add(acc, part[j])
        lam.append(acc)
    m1 = [share_mul(l, s) for l, s in zip(lam, sigma1)]
    m2 = [share_mul(l, s) for l, s in zip(lam, sigma2)]
    return rerandomize(m1, zero1), rerandomize(m2, zero2)
