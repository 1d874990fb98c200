"""One secure aggregation iteration: Share, NormCheck, Compute, Mask and
Reconstruct, run as party-local computations over the simulated network,
plus the single-machine plaintext oracle the protocol must match."""

from __future__ import annotations

import time
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Mapping, Optional, Sequence

import numpy as np

from .adversary import DropSchedule, ProtocolAdversary
from .field import ReconstructFailed, horner, interpolate_coeffs, rational_reconstruct
from .lcc import SecretBundle, lcc_polys, replicated_bundle
from .net import FEDERATOR, Network, party_rng
from .params import ProtocolParams
from .quantizer import QuantizedUpdate, phi_inv, sigma_bounds
from .relu_poly import ReluApprox
from .rerandom import combine_coeffs, parity_rows, syndrome_decode
from .rs import DecodeFailure, InsufficientRedundancy, NoisyCodeword, rs_decode
from .vss import DealItem, run_vss

PHASES = ("Share", "NormCheck", "Compute", "Mask", "Reconstruct")
LAMBDA_TRIES = 3
LOW_TRUST_RATIO = 10.0


class LowTrustDenominator(ArithmeticError):
    pass


class ProtocolAbort(RuntimeError):
    pass


@dataclass
class RoundState:
    round_idx: int
    net: Network
    phase: str = "Share"
    live: set = dc_field(default_factory=set)
    excluded: set = dc_field(default_factory=set)
    dealers: list = dc_field(default_factory=list)
    included: list = dc_field(default_factory=list)
    shares: dict = dc_field(default_factory=dict)
    norms: dict = dc_field(default_factory=dict)
    x_shares: dict = dc_field(default_factory=dict)
    sigma1: dict = dc_field(default_factory=dict)
    sigma2: dict = dc_field(default_factory=dict)
    masked1: dict = dc_field(default_factory=dict)
    masked2: dict = dc_field(default_factory=dict)
    g0_alpha: dict = dc_field(default_factory=dict)
    decoded: dict = dc_field(default_factory=dict)
    disqualified: dict = dc_field(default_factory=dict)
    identified: dict = dc_field(default_factory=dict)
    timing: dict = dc_field(default_factory=dict)
    history: list = dc_field(default_factory=list)

    def flag(self, phase: str, parties):
        self.identified.setdefault(phase, set()).update(parties)


@dataclass
class AggregateResult:
    g: np.ndarray
    quotients: list
    field_quotients: list
    masked_sigma1: list
    included: list
    excluded: set
    identified: set
    norms: dict
    live: set
    round_idx: int
    low_trust: bool = False
    error_sets: dict = dc_field(default_factory=dict)
    disqualified: dict = dc_field(default_factory=dict)
    timing: dict = dc_field(default_factory=dict)

    def check(self) -> "AggregateResult":
        if self.low_trust:
            raise LowTrustDenominator("aggregate quotient is implausibly large; trust denominator near zero")
        return self

    def to_record(self) -> dict:
        return {
            "round": self.round_idx,
            "live": sorted(self.live),
            "included": list(self.included),
            "excluded": sorted(self.excluded),
            "identified": sorted(self.identified),
            "disqualified": {str(k): v for k, v in sorted(self.disqualified.items())},
            "masked_sigma1": [str(v) for v in self.masked_sigma1],
            "quotients": [f"{q.numerator}/{q.denominator}" for q in self.quotients],
            "low_trust": self.low_trust,
            "timing": {k: round(v, 6) for k, v in self.timing.items()},
        }


@dataclass
class OracleResult:
    sigma1: int
    sigma2: list
    quotients: list
    field_quotients: list
    inner: dict


def plaintext_norms(updates: Mapping[int, QuantizedUpdate]) -> dict[int, int]:
    return {i: sum(v * v for v in u.signed()) for i, u in updates.items()}


def norm_passes(norm: int, q: int, epsilon: float) -> bool:
    """Two-sided interval test |norm - q^2| < eps * q^2 (q^2 = phi(q * Q_q(1))^2)."""
    eps = Fraction(str(epsilon))
    return abs(norm - q * q) < eps * q * q


def plaintext_oracle(updates: Mapping[int, QuantizedUpdate], g0: QuantizedUpdate, approx: ReluApprox,
                     prime: int, included: Optional[Sequence[int]] = None) -> OracleResult:
    """Sigma1, Sigma2 and their quotient computed in the integers on the same quantized inputs."""
    idx = sorted(updates) if included is None else sorted(included)
    g0s = g0.signed()
    d = len(g0s)
    s1, s2, inner = 0, [0] * d, {}
    for i in idx:
        gi = updates[i].signed()
        x = sum(a * b for a, b in zip(g0s, gi))
        y = approx.eval_int(x)
        inner[i] = x
        s1 += y
        for c in range(d):
            s2[c] += y * gi[c]
    if s1 == 0:
        raise LowTrustDenominator("Sigma1 is zero")
    inv = pow(s1 % prime, -1, prime)
    return OracleResult(s1, s2, [Fraction(v, s1) for v in s2], [v * inv % prime for v in s2], inner)


def _codeword(entries: Mapping[int, Optional[int]], parties: Sequence[int], domain, degree: int) -> NoisyCodeword:
    return NoisyCodeword([(domain.alpha(j), entries.get(j)) for j in parties], degree)


def _is_vec(v, n: int, p: int) -> bool:
    return (isinstance(v, tuple) and len(v) == n
            and all(isinstance(x, int) and not isinstance(x, bool) and 0 <= x < p for x in v))


class ProtocolEngine:
    """Runs rounds of the protocol; remembers permanent exclusions between rounds."""

    def __init__(self, params: ProtocolParams, approx: ReluApprox, seed: int = 0, attacks=(),
                 record: bool = True):
        if not approx.field_coeffs or approx.prime != params.prime:
            raise ValueError("ReLU approximation must be embedded into the protocol field")
        self.params = params
        self.approx = approx
        self.seed = seed
        self.record = record
        self.excluded: set[int] = set()
        self.adversary = ProtocolAdversary(list(attacks), params.prime, party_rng(seed, "attack"))
        self.last_state: Optional[RoundState] = None
        self.transcripts = []
        self._round = 0

    # helpers ---------------------------------------------------------------

    def _rng(self, state: RoundState, party: int, purpose: str, attempt: int = 0):
        return party_rng(self.seed, state.round_idx, party, purpose, attempt)

    def _tamper(self, state: RoundState):
        return lambda s, k, v: self.adversary.tamper(s, k, v, state.round_idx, state.phase)

    def _enter(self, state: RoundState, phase: str, drops: Optional[DropSchedule]):
        state.phase = phase
        state.net.phase = phase
        if drops is not None:
            for j in drops.silenced_at(state.round_idx, phase, PHASES):
                state.net.silence(j)
        if len(state.net.silenced) > self.params.p_drop:
            raise InsufficientRedundancy(f"{len(state.net.silenced)} silent parties exceed p_drop={self.params.p_drop}")
        state.live = {j for j in state.net.parties if not state.net.is_silenced(j)}
        state.excluded |= self.excluded
        state.history.append((phase, frozenset(state.excluded)))

    def _vss(self, state: RoundState, jobs, kind: str):
        P = self.params
        rngs = {i: self._rng(state, i, f"vss-{kind}-{state.phase}") for i in jobs}
        res = run_vss(state.net, jobs, rngs, state.net.parties, P.domain, P.budget,
                      tamper=self._tamper(state),
                      inconsistent=self.adversary.inconsistent_dealers(state.round_idx, state.phase),
                      deal_kind=kind)
        for i, why in res.disqualified.items():
            state.disqualified[(state.phase, kind, i)] = why
        state.flag(state.phase, res.disqualified)
        return res

    def _decode(self, state: RoundState, entries, degree: int, parties) -> list:
        P = self.params
        poly, errs = rs_decode(_codeword(entries, parties, P.domain, degree), P.budget, P.field)
        state.flag(state.phase, [parties[e] for e in errs])
        return [poly(b) for b in P.domain.data_betas]

    # phases ----------------------------------------------------------------

    def step_share(self, state: RoundState, updates: Mapping[int, Optional[QuantizedUpdate]],
                   g0: QuantizedUpdate):
        P = self.params
        p, m, L, W = P.prime, P.m, P.L, P.width
        state.net.broadcast(FEDERATOR, "GLOBAL", tuple(g0.values))
        state.net.deliver()
        slots = list(g0.values) + [0] * (m * W - len(g0.values))
        g0polys = [interpolate_coeffs(P.domain.data_betas, [slots[l * W + c] for l in range(m)], p)
                   for c in range(W)]
        state.g0_alpha = {j: [horner(f, P.domain.alpha(j), p) for f in g0polys] for j in state.net.parties}
        jobs = {}
        for i in sorted(updates):
            u = updates[i]
            if u is None or i in self.excluded or i not in state.live:
                continue
            bundle = SecretBundle.from_vector(u.values, m, P.t, self._rng(state, i, "lcc"), P.field)
            jobs[i] = [DealItem("g", L, lcc_polys(bundle, P.domain))]
        res = self._vss(state, jobs, "DEAL")
        self.excluded |= set(res.disqualified)
        state.dealers = sorted(res.accepted)
        state.shares = {j: {i: v[0] for i, v in sh.items()} for j, sh in res.shares.items()}

    def step_norm_check(self, state: RoundState):
        P = self.params
        p, L, T = P.prime, P.L, state.dealers
        net, dom = state.net, P.domain
        if not T:
            state.included = []
            return
        qdeg = 2 * L - P.m
        zc: dict[int, list[int]] = {j: [0] * len(T) for j in state.live}
        if qdeg >= 0:
            jobs = {}
            for j in sorted(state.live):
                r = self._rng(state, j, "zero-norm")
                jobs[j] = [DealItem("zq", qdeg, [[r.randrange(p) for _ in range(qdeg + 1)] for _ in T])]
            res = self._vss(state, jobs, "ZERO_CONTRIB")
            for j in state.live:
                z = dom.vanishing_at_alpha[j - 1]
                acc = [0] * len(T)
                for c in sorted(res.accepted):
                    for x, v in enumerate(res.shares[j][c][0]):
                        acc[x] += v
                zc[j] = [a * z % p for a in acc]
        tamper = self._tamper(state)
        for j in sorted(state.live):
            vals = tuple((sum(v * v for v in state.shares[j][i]) + zc[j][x]) % p for x, i in enumerate(T))
            net.send(j, FEDERATOR, "NORM_SHARE", tamper(j, "NORM_SHARE", vals))
        inbox = net.deliver()
        got = {msg.sender: msg.payload for msg in inbox[FEDERATOR]
               if msg.kind == "NORM_SHARE" and _is_vec(msg.payload, len(T), p)}
        excl = []
        for x, i in enumerate(T):
            vals = self._decode(state, {j: v[x] for j, v in got.items()}, 2 * L, net.parties)
            norm = phi_inv(sum(vals) % p, p)
            state.norms[i] = norm
            if not norm_passes(norm, P.q, P.epsilon):
                excl.append(i)
        net.broadcast(FEDERATOR, "EXCLUDE", tuple(excl))
        net.deliver()
        self.excluded |= set(excl)
        state.excluded |= self.excluded
        state.included = [i for i in T if i not in excl]

    def step_compute(self, state: RoundState):
        P = self.params
        p, L, m, dom, net = P.prime, P.L, P.m, P.domain, state.net
        I = state.included
        if not I:
            raise LowTrustDenominator("no users left to aggregate")
        dw = L + m - 1
        jobs = {}
        for j in sorted(state.live):
            g0a = state.g0_alpha[j]
            r = self._rng(state, j, "subshare")
            polys = []
            for i in I:
                v = sum(a * b for a, b in zip(state.shares[j][i], g0a)) % p
                polys.append(lcc_polys(replicated_bundle([v], dom, r), dom)[0])
            jobs[j] = [DealItem("sub", L, polys)]
        res = self._vss(state, jobs, "SUBSHARE")
        A = sorted(a for a in res.accepted if a in state.live)
        need = dw + 2 * P.budget + 1
        if len(A) < need:
            raise InsufficientRedundancy(f"{len(A)} consistent sub-sharings, need {need}")
        xs = [dom.alpha(a) for a in A]
        rows = parity_rows(xs, dw, p)
        sub = {k: res.shares[k] for k in state.live}
        tamper = self._tamper(state)
        if rows:
            for k in sorted(state.live):
                syn = tuple(tuple(sum(h * sub[k][a][0][x] for h, a in zip(row, A)) % p for row in rows)
                            for x in range(len(I)))
                net.broadcast(k, "SYNDROME", tamper(k, "SYNDROME", syn))
            inbox = net.deliver()
            got = {}
            for msg in inbox[FEDERATOR]:
                pl = msg.payload
                if (msg.kind == "SYNDROME" and isinstance(pl, tuple) and len(pl) == len(I)
                        and all(_is_vec(r, len(rows), p) for r in pl)):
                    got[msg.sender] = pl
        errors: dict[int, set] = {}
        for x, i in enumerate(I):
            bad: set[int] = set()
            if rows:
                per_slot = [[0] * len(rows) for _ in range(m)]
                for r in range(len(rows)):
                    vals = self._decode(state, {j: v[x][r] for j, v in got.items()}, L, net.parties)
                    for l in range(m):
                        per_slot[l][r] = vals[l]
                for l in range(m):
                    bad.update(A[e] for e in syndrome_decode(xs, per_slot[l], dw, P.budget, P.field))
            errors[i] = bad
            state.flag(state.phase, bad)
        hc = self.approx.field_coeffs
        for k in sorted(state.live):
            xk, s1, s2 = {}, 0, [0] * P.width
            for x, i in enumerate(I):
                keep = [a for a in A if a not in errors[i]]
                if x == 0 or errors[i] != errors[I[x - 1]]:
                    coef = combine_coeffs([dom.alpha(a) for a in keep], dom)
                xi = sum(c * sub[k][a][0][x] for c, a in zip(coef, keep)) % p
                xk[i] = xi
                y = horner(hc, xi, p)
                s1 += y
                for c, v in enumerate(state.shares[k][i]):
                    s2[c] += y * v
            state.x_shares[k] = xk
            state.sigma1[k] = s1 % p
            state.sigma2[k] = [v % p for v in s2]

    def step_mask(self, state: RoundState, lambdas: Optional[Mapping[int, int]] = None, attempt: int = 0):
        P = self.params
        p, L, kk, dom = P.prime, P.L, P.k, P.domain
        d1, d2 = (kk + 1) * L - P.m, (kk + 2) * L - P.m
        jobs = {}
        for j in sorted(state.live):
            r = self._rng(state, j, "mask", attempt)
            lam = lambdas[j] % p if lambdas is not None and j in lambdas else r.randrange(1, p)
            items = [DealItem("lam", L, [lcc_polys(replicated_bundle([lam], dom, r), dom)[0]])]
            if d1 >= 0:
                items.append(DealItem("z1", d1, [[r.randrange(p) for _ in range(d1 + 1)]]))
            if d2 >= 0:
                items.append(DealItem("z2", d2, [[r.randrange(p) for _ in range(d2 + 1)] for _ in range(P.width)]))
            jobs[j] = items
        res = self._vss(state, jobs, "LAMBDA_DEAL")
        M = sorted(res.accepted)
        for k in sorted(state.live):
            lam, z1, z2 = 0, 0, [0] * P.width
            for j in M:
                sh = res.shares[k][j]
                lam += sh[0][0]
                if d1 >= 0:
                    z1 += sh[1][0]
                if d2 >= 0:
                    for c, v in enumerate(sh[-1]):
                        z2[c] += v
            zk = dom.vanishing_at_alpha[k - 1]
            state.masked1[k] = (lam * state.sigma1[k] + zk * z1) % p
            state.masked2[k] = [(lam * s + zk * z) % p for s, z in zip(state.sigma2[k], z2)]

    def step_reconstruct(self, state: RoundState):
        """Returns (field quotients per slot, decoded lambda*Sigma1 per slot) or None if a denominator is zero."""
        P = self.params
        p, L, kk, W, net = P.prime, P.L, P.k, P.width, state.net
        tamper = self._tamper(state)
        for k in sorted(state.live):
            payload = (state.masked1[k],) + tuple(state.masked2[k])
            net.send(k, FEDERATOR, "RECON", tamper(k, "RECON", payload))
        inbox = net.deliver()
        got = {msg.sender: msg.payload for msg in inbox[FEDERATOR]
               if msg.kind == "RECON" and _is_vec(msg.payload, W + 1, p)}
        den = self._decode(state, {j: v[0] for j, v in got.items()}, (kk + 1) * L, net.parties)
        if any(v == 0 for v in den):
            return None
        inv = [pow(v, -1, p) for v in den]
        quot = [[0] * W for _ in range(P.m)]
        nums = [[0] * W for _ in range(P.m)]
        for c in range(W):
            num = self._decode(state, {j: v[c + 1] for j, v in got.items()}, (kk + 2) * L, net.parties)
            for l in range(P.m):
                nums[l][c] = num[l]
                quot[l][c] = num[l] * inv[l] % p
        flat = [quot[l][c] for l in range(P.m) for c in range(W)][: P.d]
        state.decoded = {"masked_sigma1": list(den), "masked_sigma2": nums}
        return flat, den

    # driver ----------------------------------------------------------------

    def run_until(self, updates: Mapping[int, Optional[QuantizedUpdate]], g0: QuantizedUpdate,
                  last_phase: str = "Reconstruct", drops: Optional[DropSchedule] = None,
                  lambdas: Optional[Mapping[int, int]] = None, round_idx: Optional[int] = None) -> RoundState:
        """Execute phases up to and including ``last_phase``; returns the round state."""
        P = self.params
        stop = PHASES.index(last_phase)
        if round_idx is None:
            round_idx = self._round
        self._round = round_idx + 1
        net = Network(range(1, P.n + 1), record=self.record)
        state = RoundState(round_idx, net)
        self.last_state = state
        self.transcripts.append(net.transcript)

        def timed(phase, fn, *a):
            t0 = time.perf_counter()
            self._enter(state, phase, drops)
            out = fn(state, *a)
            state.timing[phase] = state.timing.get(phase, 0.0) + time.perf_counter() - t0
            return out

        steps = [("Share", self.step_share, (updates, g0)), ("NormCheck", self.step_norm_check, ()),
                 ("Compute", self.step_compute, ())]
        for phase, fn, a in steps[: stop + 1]:
            timed(phase, fn, *a)
        if stop < PHASES.index("Mask"):
            return state
        out = None
        for attempt in range(LAMBDA_TRIES):
            timed("Mask", self.step_mask, lambdas if attempt == 0 else None, attempt)
            if stop == PHASES.index("Mask"):
                return state
            out = timed("Reconstruct", self.step_reconstruct)
            if out is not None:
                break
        if out is None:
            raise LowTrustDenominator("masked Sigma1 decodes to zero after resampling lambda")
        state.decoded["field_quotients"] = out[0]
        return state

    def run_round(self, updates: Mapping[int, Optional[QuantizedUpdate]], g0: QuantizedUpdate,
                  norm0: float = 1.0, drops: Optional[DropSchedule] = None,
                  lambdas: Optional[Mapping[int, int]] = None, round_idx: Optional[int] = None) -> AggregateResult:
        P = self.params
        state = self.run_until(updates, g0, "Reconstruct", drops, lambdas, round_idx)
        flat, den = state.decoded["field_quotients"], state.decoded["masked_sigma1"]
        B1, B2 = sigma_bounds(P.quant)
        fracs = []
        for v in flat:
            try:
                a, b = rational_reconstruct(v, B2, B1, P.field)
            except ReconstructFailed as exc:
                raise ProtocolAbort(f"quotient outside the guarded range: {exc}") from exc
            fracs.append(Fraction(a, b))
        g = np.array([float(f) for f in fracs]) * norm0 / P.q
        low = bool(np.linalg.norm([float(f) for f in fracs]) / P.q > LOW_TRUST_RATIO)
        ident = set().union(*state.identified.values()) if state.identified else set()
        return AggregateResult(g, fracs, flat, den, list(state.included), set(self.excluded), ident,
                               dict(state.norms), set(state.live), state.round_idx, low,
                               {k: set(v) for k, v in state.identified.items()},
                               dict(state.disqualified), dict(state.timing))


__all__ = ["AggregateResult", "DecodeFailure", "LowTrustDenominator", "OracleResult", "PHASES",
           "ProtocolAbort", "ProtocolEngine", "RoundState", "norm_passes", "plaintext_norms",
           "plaintext_oracle"]
