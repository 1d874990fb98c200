"""Prime-field arithmetic and univariate polynomials over F_P.

Field elements are carried around as plain Python ints in ``[0, P)`` on the
hot paths; :class:`FieldElement` is a thin convenience wrapper for callers
that prefer operator syntax.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd
from typing import Iterable, Sequence


class DivisionByZero(ZeroDivisionError):
    pass


class DuplicateNode(ValueError):
    pass


class ReconstructFailed(ValueError):
    pass


# Fixed witness schedule: deterministic for n < 3.3e24, and a fixed
# (reproducible) probabilistic test beyond that.
_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71)


def is_probable_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in _MR_WITNESSES:
        if n % p == 0:
            return n == p
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_WITNESSES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def next_prime(n: int) -> int:
    """Smallest prime >= n."""
    if n <= 2:
        return 2
    c = n | 1
    while not is_probable_prime(c):
        c += 2
    return c


class PrimeField:
    """Arithmetic modulo a prime ``p`` on int residues."""

    __slots__ = ("p", "half")

    def __init__(self, p: int, check: bool = True):
        if check and not is_probable_prime(p):
            raise ValueError(f"{p} is not prime")
        self.p = p
        self.half = p // 2

    def __repr__(self):
        return f"PrimeField(p={self.p})"

    def __eq__(self, other):
        return isinstance(other, PrimeField) and other.p == self.p

    def __hash__(self):
        return hash(self.p)

    def __call__(self, value: int) -> "FieldElement":
        return FieldElement(value % self.p, self)

    def elem(self, x: int) -> int:
        """phi: map a signed integer into the field."""
        return x % self.p

    def lift(self, a: int) -> int:
        """Centered lift, inverse of phi on (-P/2, P/2]."""
        return a - self.p if a > self.half else a

    def add(self, a: int, b: int) -> int:
        return (a + b) % self.p

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.p

    def mul(self, a: int, b: int) -> int:
        return a * b % self.p

    def neg(self, a: int) -> int:
        return -a % self.p

    def inv(self, a: int) -> int:
        a %= self.p
        if a == 0:
            raise DivisionByZero("zero has no inverse")
        return pow(a, -1, self.p)

    def div(self, a: int, b: int) -> int:
        return a * self.inv(b) % self.p

    def random(self, rng) -> int:
        return rng.randrange(self.p)

    def batch_inv(self, values: Sequence[int]) -> list[int]:
        """Montgomery's trick: invert many nonzero elements with one pow."""
        p = self.p
        prefix = [1] * (len(values) + 1)
        for i, v in enumerate(values):
            if v % p == 0:
                raise DivisionByZero("zero has no inverse")
            prefix[i + 1] = prefix[i] * v % p
        acc = pow(prefix[-1], -1, p)
        out = [0] * len(values)
        for i in range(len(values) - 1, -1, -1):
            out[i] = acc * prefix[i] % p
            acc = acc * values[i] % p
        return out


@dataclass(frozen=True)
class FieldElement:
    value: int
    field: PrimeField

    def _coerce(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.field != self.field:
                raise ValueError("mixing elements of different fields")
            return other.value
        return other % self.field.p

    def __add__(self, other):
        return FieldElement((self.value + self._coerce(other)) % self.field.p, self.field)

    __radd__ = __add__

    def __sub__(self, other):
        return FieldElement((self.value - self._coerce(other)) % self.field.p, self.field)

    def __rsub__(self, other):
        return FieldElement((self._coerce(other) - self.value) % self.field.p, self.field)

    def __mul__(self, other):
        return FieldElement(self.value * self._coerce(other) % self.field.p, self.field)

    __rmul__ = __mul__

    def __neg__(self):
        return FieldElement(-self.value % self.field.p, self.field)

    def __truediv__(self, other):
        return self * fld_inv(FieldElement(self._coerce(other), self.field))

    def __eq__(self, other):
        if isinstance(other, FieldElement):
            return self.field == other.field and self.value == other.value
        if isinstance(other, int):
            return self.value == other % self.field.p
        return NotImplemented

    def __hash__(self):
        return hash((self.value, self.field.p))

    def __int__(self):
        return self.value

    def __repr__(self):
        return f"{self.value} (mod {self.field.p})"


def fld_inv(a: FieldElement) -> FieldElement:
    return FieldElement(a.field.inv(a.value), a.field)


class FieldPoly:
    """Polynomial over F_P, coefficients lowest degree first."""

    __slots__ = ("coeffs", "field")

    def __init__(self, coeffs: Iterable[int], field: PrimeField):
        p = field.p
        c = [int(x) % p for x in coeffs]
        while c and c[-1] == 0:
            c.pop()
        self.coeffs = tuple(c)
        self.field = field

    @property
    def degree(self) -> int:
        # the zero polynomial gets degree -1
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def __call__(self, x: int) -> int:
        return horner(self.coeffs, x, self.field.p)

    def __eq__(self, other):
        return isinstance(other, FieldPoly) and self.field == other.field and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.coeffs, self.field.p))

    def __repr__(self):
        return f"FieldPoly({list(self.coeffs)}, p={self.field.p})"

    def __add__(self, other: "FieldPoly") -> "FieldPoly":
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, v in enumerate(b):
            out[i] += v
        return FieldPoly(out, self.field)

    def __sub__(self, other: "FieldPoly") -> "FieldPoly":
        return self + other.scale(-1)

    def __mul__(self, other: "FieldPoly") -> "FieldPoly":
        return FieldPoly(poly_mul(self.coeffs, other.coeffs, self.field.p), self.field)

    def scale(self, c: int) -> "FieldPoly":
        p = self.field.p
        return FieldPoly([v * c % p for v in self.coeffs], self.field)

    def divmod(self, other: "FieldPoly") -> tuple["FieldPoly", "FieldPoly"]:
        q, r = poly_divmod(self.coeffs, other.coeffs, self.field.p)
        return FieldPoly(q, self.field), FieldPoly(r, self.field)


def horner(coeffs: Sequence[int], x: int, p: int) -> int:
    acc = 0
    for c in reversed(coeffs):
        acc = (acc * x + c) % p
    return acc


def poly_mul(a: Sequence[int], b: Sequence[int], p: int) -> list[int]:
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return [v % p for v in out]


def poly_divmod(num: Sequence[int], den: Sequence[int], p: int) -> tuple[list[int], list[int]]:
    den = list(den)
    while den and den[-1] % p == 0:
        den.pop()
    if not den:
        raise DivisionByZero("division by the zero polynomial")
    rem = [v % p for v in num]
    if len(rem) < len(den):
        return [], rem
    lead_inv = pow(den[-1], -1, p)
    quot = [0] * (len(rem) - len(den) + 1)
    for i in range(len(quot) - 1, -1, -1):
        coef = rem[i + len(den) - 1] * lead_inv % p
        quot[i] = coef
        if coef:
            for j, dv in enumerate(den):
                rem[i + j] = (rem[i + j] - coef * dv) % p
    rem = rem[: len(den) - 1]
    while rem and rem[-1] == 0:
        rem.pop()
    return quot, rem


def poly_eval(f: FieldPoly, x) -> FieldElement:
    xv = x.value if isinstance(x, FieldElement) else int(x)
    return FieldElement(f(xv), f.field)


def _as_int(v) -> int:
    return v.value if isinstance(v, FieldElement) else int(v)


def interpolate_coeffs(xs: Sequence[int], ys: Sequence[int], p: int) -> list[int]:
    """Coefficients of the unique polynomial of degree < len(xs) through (xs, ys)."""
    n = len(xs)
    if n == 0:
        raise ValueError("need at least one point")
    xs = [x % p for x in xs]
    if len(set(xs)) != n:
        raise DuplicateNode("interpolation nodes must be distinct")
    # master polynomial prod (z - x_i)
    master = [1]
    for x in xs:
        nxt = [0] * (len(master) + 1)
        for i, c in enumerate(master):
            nxt[i] = (nxt[i] - c * x) % p
            nxt[i + 1] = (nxt[i + 1] + c) % p
        master = nxt
    denoms = []
    for i, xi in enumerate(xs):
        d = 1
        for j, xj in enumerate(xs):
            if j != i:
                d = d * (xi - xj) % p
        denoms.append(d)
    inv_d = PrimeField(p, check=False).batch_inv(denoms)
    out = [0] * n
    for i, xi in enumerate(xs):
        w = ys[i] * inv_d[i] % p
        if not w:
            continue
        # synthetic division master / (z - xi)
        q = [0] * n
        carry = 0
        for k in range(n, 0, -1):
            carry = (master[k] + carry * xi) % p
            q[k - 1] = carry
        for k in range(n):
            out[k] += w * q[k]
    return [v % p for v in out]


def poly_interp(points, field: PrimeField) -> FieldPoly:
    points = list(points)
    if not points:
        raise ValueError("need at least one point")
    xs = [_as_int(x) for x, _ in points]
    ys = [_as_int(y) % field.p for _, y in points]
    return FieldPoly(interpolate_coeffs(xs, ys, field.p), field)


def lagrange_weights(xs: Sequence[int], at: int, p: int) -> list[int]:
    """Weights w_i with f(at) = sum_i w_i f(xs[i]) for deg f < len(xs)."""
    n = len(xs)
    if len(set(x % p for x in xs)) != n:
        raise DuplicateNode("interpolation nodes must be distinct")
    nums, dens = [], []
    for i, xi in enumerate(xs):
        num, den = 1, 1
        for j, xj in enumerate(xs):
            if j != i:
                num = num * (at - xj) % p
                den = den * (xi - xj) % p
        nums.append(num)
        dens.append(den)
    inv = PrimeField(p, check=False).batch_inv(dens)
    return [a * b % p for a, b in zip(nums, inv)]


def rational_reconstruct(c, num_bound: int, den_bound: int, field: PrimeField) -> tuple[int, int]:
    """Recover a/b with |a| <= num_bound, 0 < b <= den_bound from c = a/b mod P.

    Half-extended Euclid (Wang). The answer is unique when
    2 * num_bound * den_bound < P.
    """
    p = field.p
    if 2 * num_bound * den_bound >= p:
        raise ValueError("rational reconstruction needs 2*N*D < P")
    c = _as_int(c) % p
    r0, r1 = p, c
    s0, s1 = 0, 1
    while r1 > num_bound:
        qt = r0 // r1
        r0, r1 = r1, r0 - qt * r1
        s0, s1 = s1, s0 - qt * s1
    if s1 == 0 or abs(s1) > den_bound:
        raise ReconstructFailed(f"no fraction within bounds ({num_bound}, {den_bound})")
    a, b = (r1, s1) if s1 > 0 else (-r1, -s1)
    if gcd(a, b) != 1:
        raise ReconstructFailed("reconstructed fraction is not in lowest terms")
    return a, b


def encode_int(v: int) -> bytes:
    """Minimal big-endian bytes, prefixed with a 2-byte length."""
    raw = v.to_bytes((v.bit_length() + 7) // 8, "big") if v else b""
    return len(raw).to_bytes(2, "big") + raw


def decode_int(buf: bytes, offset: int = 0) -> tuple[int, int]:
    n = int.from_bytes(buf[offset : offset + 2], "big")
    start = offset + 2
    return int.from_bytes(buf[start : start + n], "big"), start + n


def encode_element(a: FieldElement | int) -> bytes:
    return encode_int(_as_int(a))
