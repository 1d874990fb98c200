"""Berlekamp-Welch error-and-erasure decoding of Reed-Solomon codewords over F_P."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .field import FieldPoly, PrimeField, horner, interpolate_coeffs, poly_divmod


class InsufficientRedundancy(ValueError):
    pass


class DecodeFailure(ValueError):
    pass


@dataclass(frozen=True)
class NoisyCodeword:
    """Evaluations ``(alpha, value)``; ``value is None`` marks an erasure."""

    entries: tuple[tuple[int, Optional[int]], ...]
    degree_bound: int

    def __init__(self, entries, degree_bound: int):
        object.__setattr__(self, "entries", tuple((int(a), None if v is None else int(v)) for a, v in entries))
        object.__setattr__(self, "degree_bound", int(degree_bound))


def solve_linear(rows: list[list[int]], rhs: list[int], p: int) -> Optional[list[int]]:
    """One solution of rows @ x = rhs over F_p (free variables set to 0), or None."""
    n_rows = len(rows)
    n_cols = len(rows[0]) if rows else 0
    m = [[v % p for v in row] + [b % p] for row, b in zip(rows, rhs)]
    pivots = []
    r = 0
    for c in range(n_cols):
        piv = next((i for i in range(r, n_rows) if m[i][c]), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = pow(m[r][c], -1, p)
        row_r = [v * inv % p for v in m[r]]
        m[r] = row_r
        for i in range(n_rows):
            if i != r and m[i][c]:
                f = m[i][c]
                row_i = m[i]
                m[i] = [(a - f * b) % p for a, b in zip(row_i, row_r)]
        pivots.append(c)
        r += 1
        if r == n_rows:
            break
    for i in range(r, n_rows):
        if m[i][n_cols]:
            return None
    x = [0] * n_cols
    for i, c in enumerate(pivots):
        x[c] = m[i][n_cols]
    return x


def rs_decode(cw: NoisyCodeword, b_max: int, field: PrimeField) -> tuple[FieldPoly, list[int]]:
    """Decode ``cw`` tolerating up to ``b_max`` errors.

    Returns the message polynomial (degree <= ``cw.degree_bound``) and the
    indices into ``cw.entries`` whose value disagrees with it.
    """
    p = field.p
    D = cw.degree_bound
    present = [(i, a, v) for i, (a, v) in enumerate(cw.entries) if v is not None]
    if len(set(a % p for _, a, _ in present)) != len(present):
        raise ValueError("evaluation points must be distinct")
    need = D + 2 * b_max + 1
    if len(present) < need:
        raise InsufficientRedundancy(f"{len(present)} evaluations present, need {need}")
    xs = [a for _, a, _ in present]
    ys = [v % p for _, _, v in present]

    # error-free fast path
    coeffs = interpolate_coeffs(xs[: D + 1], ys[: D + 1], p)
    if all(horner(coeffs, x, p) == y for x, y in zip(xs[D + 1 :], ys[D + 1 :])):
        return FieldPoly(coeffs, field), []
    if b_max == 0:
        raise DecodeFailure("evaluations are inconsistent and no errors are allowed")

    e = b_max
    rows, rhs = [], []
    for x, y in zip(xs, ys):
        pw = [1] * (D + e + 1)
        for k in range(1, D + e + 1):
            pw[k] = pw[k - 1] * x % p
        # unknowns: E_0..E_{e-1}, then Q_0..Q_{D+e}
        rows.append([-y * pw[j] % p for j in range(e)] + pw)
        rhs.append(y * pw[e] % p)
    sol = solve_linear(rows, rhs, p)
    if sol is None:
        raise DecodeFailure("error-locator system is inconsistent")
    E = sol[:e] + [1]
    Q = sol[e:]
    f, r = poly_divmod(Q, E, p)
    if r:
        raise DecodeFailure("error locator does not divide the interpolant")
    while f and f[-1] == 0:
        f.pop()
    if len(f) - 1 > D:
        raise DecodeFailure("decoded polynomial exceeds the degree bound")
    errors = [i for i, x, y in present if horner(f, x, p) != y]
    if len(errors) > b_max:
        raise DecodeFailure("more disagreements than the error budget")
    return FieldPoly(f, field), errors


def decode_values(alphas: Sequence[int], values: Sequence[Optional[int]], degree: int,
                  b_max: int, field: PrimeField) -> tuple[FieldPoly, list[int]]:
    """Convenience wrapper: returns the polynomial and the *alphas* in error."""
    cw = NoisyCodeword(list(zip(alphas, values)), degree)
    poly, idx = rs_decode(cw, b_max, field)
    return poly, [alphas[i] for i in idx]
