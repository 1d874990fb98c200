"""Packed Lagrange coded computing: encoding, share arithmetic and decoding."""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from functools import cached_property
from typing import Optional, Sequence

from .field import (PrimeField, decode_int, encode_int, horner, interpolate_coeffs,
                    lagrange_weights, poly_mul)


class DomainError(ValueError):
    pass


class ShapeError(ValueError):
    pass


@dataclass(frozen=True)
class EvalDomain:
    """Party points ``alphas`` and data/mask points ``betas`` (first m are data)."""

    alphas: tuple[int, ...]
    betas: tuple[int, ...]
    m: int
    t: int
    field: PrimeField = dc_field(compare=False, repr=False)

    def __post_init__(self):
        if len(self.betas) != self.m + self.t:
            raise DomainError(f"need m+t={self.m + self.t} beta points, got {len(self.betas)}")
        pts = [x % self.field.p for x in self.alphas + self.betas]
        if len(set(pts)) != len(pts):
            raise DomainError("alpha and beta points must be mutually distinct")

    @classmethod
    def standard(cls, n: int, m: int, t: int, field: PrimeField) -> "EvalDomain":
        # alpha_j = j, beta_l = n + l; 0 is kept free for the VSS secret line
        if field.p <= n + m + t:
            raise DomainError("field too small for the evaluation points")
        return cls(tuple(range(1, n + 1)), tuple(n + l for l in range(1, m + t + 1)), m, t, field)

    @property
    def n(self) -> int:
        return len(self.alphas)

    @property
    def degree(self) -> int:
        return self.m + self.t - 1

    @property
    def data_betas(self) -> tuple[int, ...]:
        return self.betas[: self.m]

    def alpha(self, party: int) -> int:
        return self.alphas[party - 1]

    @cached_property
    def beta_basis(self) -> list[list[int]]:
        """Coefficient lists of the Lagrange basis over the beta points."""
        p = self.field.p
        out = []
        for l in range(len(self.betas)):
            ys = [0] * len(self.betas)
            ys[l] = 1
            out.append(interpolate_coeffs(self.betas, ys, p))
        return out

    @cached_property
    def encode_matrix(self) -> list[list[int]]:
        """encode_matrix[j][l] = basis_l(alpha_{j+1})."""
        p = self.field.p
        return [[horner(b, a, p) for b in self.beta_basis] for a in self.alphas]

    @cached_property
    def vanishing_poly(self) -> list[int]:
        """Coefficients of prod_{l in [m]} (z - beta_l)."""
        p = self.field.p
        z = [1]
        for b in self.data_betas:
            z = poly_mul(z, [-b % p, 1], p)
        return z

    @cached_property
    def vanishing_at_alpha(self) -> list[int]:
        p = self.field.p
        return [horner(self.vanishing_poly, a, p) for a in self.alphas]


@dataclass(frozen=True)
class SecretBundle:
    subvectors: tuple[tuple[int, ...], ...]
    masks: tuple[tuple[int, ...], ...]

    @property
    def width(self) -> int:
        return len(self.subvectors[0])

    @classmethod
    def from_vector(cls, values: Sequence[int], m: int, t: int, rng, field: PrimeField) -> "SecretBundle":
        """Partition into m sub-vectors (zero padded) and draw t uniform masks."""
        vals = [int(v) % field.p for v in values]
        width = -(-len(vals) // m) if vals else 1
        vals += [0] * (m * width - len(vals))
        subs = tuple(tuple(vals[j * width : (j + 1) * width]) for j in range(m))
        masks = tuple(tuple(field.random(rng) for _ in range(width)) for _ in range(t))
        return cls(subs, masks)


@dataclass(frozen=True)
class PackedShare:
    owner: int
    values: tuple[int, ...]
    degree_bound: int
    source_tag: str
    modulus: int = dc_field(repr=False)

    def __len__(self):
        return len(self.values)


def padded_width(d: int, m: int) -> int:
    return -(-d // m)


def lcc_polys(secret: SecretBundle, domain: EvalDomain) -> list[list[int]]:
    """Per-coordinate coefficients of u with u(beta_j)=sub_j, u(beta_{m+j})=mask_j."""
    m, t = domain.m, domain.t
    if len(secret.subvectors) != m or len(secret.masks) != t:
        raise DomainError("secret bundle does not match the domain's (m, t)")
    p = domain.field.p
    basis = domain.beta_basis
    slots = list(secret.subvectors) + list(secret.masks)
    L = domain.degree
    out = []
    for c in range(secret.width):
        coeffs = [0] * (L + 1)
        for l, vec in enumerate(slots):
            v = vec[c]
            if v:
                for k, b in enumerate(basis[l]):
                    coeffs[k] += v * b
        out.append([x % p for x in coeffs])
    return out


def _encode_slots(slots: Sequence[Sequence[int]], domain: EvalDomain, tag: str) -> list[PackedShare]:
    p = domain.field.p
    width = len(slots[0])
    shares = []
    for j, row in enumerate(domain.encode_matrix):
        vals = []
        for c in range(width):
            acc = 0
            for l, coef in enumerate(row):
                acc += coef * slots[l][c]
            vals.append(acc % p)
        shares.append(PackedShare(j + 1, tuple(vals), domain.degree, tag, p))
    return shares


def lcc_encode(secret: SecretBundle, domain: EvalDomain, tag: str = "g") -> list[PackedShare]:
    if len(secret.subvectors) != domain.m or len(secret.masks) != domain.t:
        raise DomainError("secret bundle does not match the domain's (m, t)")
    return _encode_slots(list(secret.subvectors) + list(secret.masks), domain, tag)


def replicated_bundle(values: Sequence[int], domain: EvalDomain, rng) -> SecretBundle:
    """Bundle whose every data slot holds ``values`` (one scalar per coordinate)."""
    f = domain.field
    vals = tuple(int(v) % f.p for v in values)
    masks = tuple(tuple(f.random(rng) for _ in vals) for _ in range(domain.t))
    return SecretBundle(tuple(vals for _ in range(domain.m)), masks)


def replicate_scalar_encode(s: int, domain: EvalDomain, rng, tag: str = "scalar") -> list[PackedShare]:
    return lcc_encode(replicated_bundle([s], domain, rng), domain, tag)


def _check_pair(a: PackedShare, b: PackedShare):
    if a.owner != b.owner:
        raise ShapeError(f"shares belong to different parties ({a.owner}, {b.owner})")
    if a.modulus != b.modulus:
        raise ShapeError("shares live in different fields")


def share_add(a: PackedShare, b: PackedShare) -> PackedShare:
    _check_pair(a, b)
    if len(a) != len(b):
        raise ShapeError(f"length mismatch {len(a)} vs {len(b)}")
    p = a.modulus
    return PackedShare(a.owner, tuple((x + y) % p for x, y in zip(a.values, b.values)),
                       max(a.degree_bound, b.degree_bound), a.source_tag, p)


def share_mul(a: PackedShare, b: PackedShare) -> PackedShare:
    _check_pair(a, b)
    p = a.modulus
    if len(a) == len(b):
        vals = tuple(x * y % p for x, y in zip(a.values, b.values))
    elif len(a) == 1:
        vals = tuple(a.values[0] * y % p for y in b.values)
    elif len(b) == 1:
        vals = tuple(x * b.values[0] % p for x in a.values)
    else:
        raise ShapeError(f"cannot multiply shapes {len(a)} and {len(b)}")
    return PackedShare(a.owner, vals, a.degree_bound + b.degree_bound, a.source_tag, p)


def apply_poly_to_share(h_field: Sequence[int], a: PackedShare) -> PackedShare:
    k = max(len(h_field) - 1, 0)
    p = a.modulus
    vals = tuple(horner(h_field, x, p) for x in a.values)
    return PackedShare(a.owner, vals, k * a.degree_bound, a.source_tag, p)


def decode_shares(shares: Sequence[PackedShare], domain: EvalDomain,
                  degree: Optional[int] = None) -> list[list[int]]:
    """Interpolate error-free shares and evaluate at the data points.

    Returns ``out[j][c]`` = value of coordinate c at beta_{j+1}.
    """
    p = domain.field.p
    deg = max(s.degree_bound for s in shares) if degree is None else degree
    use = list(shares)[: deg + 1]
    if len(use) < deg + 1:
        raise DomainError(f"need {deg + 1} shares to decode degree {deg}")
    xs = [domain.alpha(s.owner) for s in use]
    out = []
    for beta in domain.data_betas:
        w = lagrange_weights(xs, beta, p)
        out.append([sum(wi * s.values[c] for wi, s in zip(w, use)) % p for c in range(len(use[0]))])
    return out


def encode_share(s: PackedShare) -> bytes:
    tag = s.source_tag.encode()
    head = (len(tag).to_bytes(2, "big") + tag + s.owner.to_bytes(4, "big")
            + s.degree_bound.to_bytes(4, "big") + len(s.values).to_bytes(4, "big"))
    body = b"".join(encode_int(v) for v in s.values)
    return len(head + body).to_bytes(4, "big") + head + body


def decode_share(buf: bytes, modulus: int) -> PackedShare:
    off = 4
    tl = int.from_bytes(buf[off : off + 2], "big")
    off += 2
    tag = buf[off : off + tl].decode()
    off += tl
    owner = int.from_bytes(buf[off : off + 4], "big")
    deg = int.from_bytes(buf[off + 4 : off + 8], "big")
    cnt = int.from_bytes(buf[off + 8 : off + 12], "big")
    off += 12
    vals = []
    for _ in range(cnt):
        v, off = decode_int(buf, off)
        vals.append(v)
    return PackedShare(owner, tuple(vals), deg, tag, modulus)
