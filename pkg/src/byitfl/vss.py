"""Information-theoretic verifiable secret sharing with symmetric bivariate
polynomials (BGW family).

A dealer embeds each secret polynomial u(x) on the line y = 0 of a random
symmetric S(x, y) of degree ``D`` in each variable.  Party j receives the row
S(alpha_j, y); its LCC share is the row's constant term u(alpha_j).  Rounds:

    DEAL -> CHECKPOINT -> COMPLAINT -> RESPONSE -> (ACCUSE -> REVEAL)*

after which every party computes the same accept/disqualify verdict from
broadcast data alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional, Sequence

from .lcc import EvalDomain
from .net import Network

Values = tuple  # nested tuple: [item][coordinate] -> int
Tamper = Callable[[int, str, tuple], tuple]


@dataclass
class DealItem:
    """One logical secret: per-coordinate coefficient lists of u(x), deg <= degree."""

    tag: str
    degree: int
    polys: list

    @property
    def width(self) -> int:
        return len(self.polys)


@dataclass(frozen=True)
class BivariateShare:
    dealer: int
    owner: int
    rows: tuple  # [item][coordinate] -> coefficients of S(alpha_owner, y)

    @property
    def col_polys(self) -> tuple:
        # symmetric construction: S(alpha_i, y) and S(x, alpha_i) coincide
        return self.rows

    def lcc_share(self) -> tuple:
        return tuple(tuple(r[0] if r else 0 for r in item) for item in self.rows)


@dataclass(frozen=True)
class Complaint:
    accuser: int
    dealer: int
    peer: int
    evidence: tuple = ()


@dataclass
class Verdict:
    accepted: bool
    reason: str = ""


@dataclass
class VssResult:
    accepted: set
    disqualified: dict
    shares: dict  # party -> dealer -> Values
    complaints: list = dc_field(default_factory=list)
    accusers: dict = dc_field(default_factory=dict)
    rounds: int = 0


class Dealing:
    """Dealer-side state for one batch of items."""

    def __init__(self, dealer: int, items: Sequence[DealItem], domain: EvalDomain, rng,
                 over_degree: bool = False):
        self.dealer = dealer
        self.items = list(items)
        self.domain = domain
        p = domain.field.p
        self.p = p
        self.mats = []
        for it in self.items:
            D = it.degree + (1 if over_degree else 0)
            mats = []
            for poly in it.polys:
                u = [c % p for c in poly] + [0] * (D + 1 - len(poly))
                if len(u) > D + 1:
                    raise ValueError(f"secret polynomial exceeds degree {D}")
                if over_degree:
                    u[D] = rng.randrange(1, p)
                C = [[0] * (D + 1) for _ in range(D + 1)]
                for a in range(D + 1):
                    C[a][0] = C[0][a] = u[a]
                for a in range(1, D + 1):
                    for b in range(a, D + 1):
                        C[a][b] = C[b][a] = rng.randrange(p)
                mats.append(C)
            self.mats.append(mats)
        self._rows: dict[int, tuple] = {}
        self.claimed: dict[int, tuple] = {}

    def row(self, receiver: int) -> tuple:
        if receiver not in self._rows:
            p = self.p
            a = self.domain.alpha(receiver)
            out = []
            for mats in self.mats:
                item_rows = []
                for C in mats:
                    D1 = len(C)
                    pw = [1] * D1
                    for e in range(1, D1):
                        pw[e] = pw[e - 1] * a % p
                    item_rows.append(tuple(sum(C[r][b] * pw[r] for r in range(D1)) % p for b in range(D1)))
                out.append(tuple(item_rows))
            self._rows[receiver] = tuple(out)
        return self._rows[receiver]

    def claimed_row(self, receiver: int) -> tuple:
        return self.claimed.get(receiver) or self.row(receiver)

    def claimed_value(self, j: int, k: int) -> tuple:
        """S(alpha_j, alpha_k) as the dealer asserts it."""
        if k in self.claimed and j not in self.claimed:
            j, k = k, j
        return eval_rows(self.claimed_row(j), self.domain.alpha(k), self.p)

    def corrupt(self, receiver: int):
        """Shift ``receiver``'s row by one and keep asserting the shifted version."""
        rows = self.row(receiver)
        self.claimed[receiver] = tuple(tuple(((r[0] + 1) % self.p,) + tuple(r[1:]) for r in item) for item in rows)


def eval_rows(rows: tuple, x: int, p: int) -> tuple:
    out = []
    for item in rows:
        vals = []
        for coeffs in item:
            acc = 0
            for c in reversed(coeffs):
                acc = (acc * x + c) % p
            vals.append(acc)
        out.append(tuple(vals))
    return tuple(out)


def _eval_rows_pw(rows: tuple, pw: list, p: int) -> tuple:
    return tuple(tuple(sum(c * w for c, w in zip(coeffs, pw)) % p for coeffs in item) for item in rows)


def _shape_ok(values, widths: Sequence[int], p: int, depth: int) -> bool:
    """depth=1: [item][coord] -> int; depth=2: [item][coord] -> tuple of ints."""
    if not isinstance(values, tuple) or len(values) != len(widths):
        return False
    for item, w in zip(values, widths):
        if not isinstance(item, tuple) or len(item) != w:
            return False
        for v in item:
            if depth == 1:
                if not isinstance(v, int) or not 0 <= v < p:
                    return False
            else:
                if not isinstance(v, tuple) or not v or not all(isinstance(c, int) and 0 <= c < p for c in v):
                    return False
    return True


def _degree_ok(rows: tuple, degrees: Sequence[int]) -> bool:
    for item, D in zip(rows, degrees):
        for coeffs in item:
            k = len(coeffs)
            while k and coeffs[k - 1] == 0:
                k -= 1
            if k > D + 1:
                return False
    return True


def vss_deal(items: Sequence[DealItem], dealer: int, domain: EvalDomain, rng,
             over_degree: bool = False) -> tuple[dict[int, BivariateShare], Dealing]:
    dealing = Dealing(dealer, items, domain, rng, over_degree=over_degree)
    shares = {j: BivariateShare(dealer, j, dealing.row(j)) for j in range(1, domain.n + 1)}
    return shares, dealing


def checkpoints(share: BivariateShare, domain: EvalDomain) -> dict[int, tuple]:
    """Values S(alpha_owner, alpha_k) that the owner sends to every peer k."""
    p = domain.field.p
    return {k: eval_rows(share.rows, domain.alpha(k), p) for k in range(1, domain.n + 1) if k != share.owner}


def vss_verify_round(my_share: BivariateShare, peer_checkpoints: dict, domain: EvalDomain,
                     peers: Optional[Sequence[int]] = None) -> list[Complaint]:
    """Complaints for every peer whose checkpoint is missing or disagrees with ``my_share``."""
    p = domain.field.p
    peers = [k for k in (peers or range(1, domain.n + 1)) if k != my_share.owner]
    out = []
    for k in peers:
        expected = eval_rows(my_share.rows, domain.alpha(k), p)
        got = peer_checkpoints.get(k)
        if got != expected:
            out.append(Complaint(my_share.owner, my_share.dealer, k, (got, expected)))
    return out


def vss_resolve(complaints: Sequence[Complaint], responses: dict, *, accusers=(), reveals=None,
                degrees: Sequence[int], b_max: int, domain: EvalDomain) -> Verdict:
    """Public accept/disqualify decision for one dealer.

    ``responses`` maps (accuser, peer) -> asserted S values; ``reveals`` maps an
    accusing party to the row the dealer made public.
    """
    p = domain.field.p
    reveals = reveals or {}
    for c in complaints:
        if (c.accuser, c.peer) not in responses:
            return Verdict(False, f"complaint {c.accuser}->{c.peer} unanswered")
    accusers = set(accusers)
    if len(accusers) > b_max:
        return Verdict(False, f"{len(accusers)} accusers exceed budget {b_max}")
    for a in sorted(accusers):
        if a not in reveals:
            return Verdict(False, f"row of accuser {a} not revealed")
        if not _degree_ok(reveals[a], degrees):
            return Verdict(False, f"revealed row of {a} exceeds the degree bound")
    for (j, k), v in sorted(responses.items()):
        if j in reveals and eval_rows(reveals[j], domain.alpha(k), p) != v:
            return Verdict(False, f"revealed row of {j} contradicts response ({j},{k})")
        if k in reveals and eval_rows(reveals[k], domain.alpha(j), p) != v:
            return Verdict(False, f"revealed row of {k} contradicts response ({j},{k})")
    rev = sorted(reveals)
    for x in range(len(rev)):
        for y in range(x + 1, len(rev)):
            a, b = rev[x], rev[y]
            if eval_rows(reveals[a], domain.alpha(b), p) != eval_rows(reveals[b], domain.alpha(a), p):
                return Verdict(False, f"revealed rows of {a} and {b} disagree")
    return Verdict(True)


def _identity(sender, kind, values):
    return values


def run_vss(net: Network, jobs: dict[int, list[DealItem]], rngs: dict, parties: Sequence[int],
            domain: EvalDomain, b_max: int, *, tamper: Optional[Tamper] = None,
            inconsistent: frozenset = frozenset(), over_degree: frozenset = frozenset(),
            deal_kind: str = "DEAL") -> VssResult:
    """Run one batch of parallel dealings (one per dealer in ``jobs``).

    ``tamper(sender, kind, values)`` rewrites the value part of every outgoing
    payload; it is the hook through which Byzantine behaviour is injected.
    """
    tamper = tamper or _identity
    p = domain.field.p
    parties = sorted(parties)
    start_round = net.round
    dealers = sorted(jobs)
    specs = {i: ([it.width for it in jobs[i]], [it.degree for it in jobs[i]]) for i in dealers}
    max_deg = max((it.degree for i in dealers for it in jobs[i]), default=0) + 2
    pw = {}
    for k in parties:
        a = domain.alpha(k)
        row = [1] * (max_deg + 1)
        for e in range(1, max_deg + 1):
            row[e] = row[e - 1] * a % p
        pw[k] = row
    active = lambda j: not net.is_silenced(j)  # noqa: E731

    # DEAL
    dealings: dict[int, Dealing] = {}
    for i in dealers:
        if not active(i):
            continue
        d = Dealing(i, jobs[i], domain, rngs[i], over_degree=i in over_degree)
        if i in inconsistent:
            d.corrupt(next(j for j in parties if j != i))
        dealings[i] = d
        for j in parties:
            net.send(i, j, deal_kind, tamper(i, deal_kind, d.claimed_row(j)))
    inbox = net.deliver()
    rows: dict[int, dict[int, tuple]] = {j: {} for j in parties}
    bad_row: dict[int, set] = {j: set() for j in parties}
    for j in parties:
        for msg in inbox[j]:
            if msg.kind == deal_kind and msg.sender in specs and msg.sender not in rows[j]:
                widths, degs = specs[msg.sender]
                if _shape_ok(msg.payload, widths, p, 2) and _degree_ok(msg.payload, degs):
                    rows[j][msg.sender] = msg.payload
        bad_row[j] = {i for i in dealers if i not in rows[j]}

    # CHECKPOINT
    evals: dict[int, dict[int, dict[int, tuple]]] = {}
    for j in parties:
        if not active(j):
            continue
        evals[j] = {i: {k: _eval_rows_pw(r, pw[k], p) for k in parties} for i, r in rows[j].items()}
        for k in parties:
            if k == j:
                continue
            payload = tuple((i, tamper(j, "CHECKPOINT", evals[j][i][k])) for i in sorted(evals[j]))
            net.send(j, k, "CHECKPOINT", payload)
    inbox = net.deliver()

    # COMPLAINT
    complaints: dict[int, list[Complaint]] = {i: [] for i in dealers}
    for k in parties:
        if not active(k):
            continue
        got: dict[tuple, tuple] = {}
        for msg in inbox[k]:
            if msg.kind != "CHECKPOINT" or not isinstance(msg.payload, tuple):
                continue
            for entry in msg.payload:
                if isinstance(entry, tuple) and len(entry) == 2 and entry[0] in specs:
                    got.setdefault((entry[0], msg.sender), entry[1])
        mine = []
        for i in sorted(rows[k]):
            for j in parties:
                if j != k and got.get((i, j)) != evals[k][i][j]:
                    mine.append((i, j))
        if mine:
            net.broadcast(k, "COMPLAINT", tuple(mine))
    inbox = net.deliver()
    public = inbox[0]
    for msg in public:
        if msg.kind == "COMPLAINT" and isinstance(msg.payload, tuple):
            for entry in msg.payload:
                if isinstance(entry, tuple) and len(entry) == 2 and entry[0] in complaints:
                    complaints[entry[0]].append(Complaint(msg.sender, entry[0], entry[1]))

    # RESPONSE
    for i in dealers:
        if not active(i) or not complaints[i]:
            continue
        pairs = sorted({(c.accuser, c.peer) for c in complaints[i]})
        d = dealings[i]
        payload = tuple((j, k, tamper(i, "RESPONSE", d.claimed_value(j, k))) for j, k in pairs)
        net.broadcast(i, "RESPONSE", payload)
    inbox = net.deliver()
    responses: dict[int, dict[tuple, tuple]] = {i: {} for i in dealers}
    for msg in inbox[0]:
        if msg.kind != "RESPONSE" or msg.sender not in responses or not isinstance(msg.payload, tuple):
            continue
        widths, _ = specs[msg.sender]
        for entry in msg.payload:
            if isinstance(entry, tuple) and len(entry) == 3 and _shape_ok(entry[2], widths, p, 1):
                responses[msg.sender].setdefault((entry[0], entry[1]), entry[2])

    # ACCUSE / REVEAL until quiescent
    accusers: dict[int, set] = {i: set() for i in dealers}
    reveals: dict[int, dict[int, tuple]] = {i: {} for i in dealers}
    fresh: dict[int, dict[int, tuple]] = {}
    for it in range(len(parties) + 1):
        any_new = False
        for j in parties:
            if not active(j):
                continue
            mine = []
            for i in dealers:
                if j in accusers[i]:
                    continue
                if i in bad_row[j]:
                    if it == 0:
                        mine.append(i)
                    continue
                ev = evals[j][i]
                if it == 0:
                    for (a, c), v in responses[i].items():
                        if (a == j and c in ev and ev[c] != v) or (c == j and a in ev and ev[a] != v):
                            mine.append(i)
                            break
                else:
                    for a, r in fresh.get(i, {}).items():
                        if a in pw and _eval_rows_pw(r, pw[j], p) != ev.get(a):
                            mine.append(i)
                            break
            if mine:
                net.broadcast(j, "ACCUSE", tuple(mine))
        inbox = net.deliver()
        new: dict[int, set] = {}
        for msg in inbox[0]:
            if msg.kind == "ACCUSE" and isinstance(msg.payload, tuple):
                for i in msg.payload:
                    if i in accusers and msg.sender not in accusers[i]:
                        accusers[i].add(msg.sender)
                        new.setdefault(i, set()).add(msg.sender)
                        any_new = True
        if not any_new:
            break
        for i in sorted(new):
            if not active(i):
                continue
            d = dealings.get(i)
            if d is None:
                continue
            payload = tuple((a, tamper(i, "REVEAL", d.claimed_row(a))) for a in sorted(new[i]))
            net.broadcast(i, "REVEAL", payload)
        inbox = net.deliver()
        fresh = {}
        for msg in inbox[0]:
            if msg.kind != "REVEAL" or msg.sender not in new or not isinstance(msg.payload, tuple):
                continue
            widths, _ = specs[msg.sender]
            for entry in msg.payload:
                if (isinstance(entry, tuple) and len(entry) == 2 and entry[0] in new[msg.sender]
                        and _shape_ok(entry[1], widths, p, 2)):
                    reveals[msg.sender].setdefault(entry[0], entry[1])
                    fresh.setdefault(msg.sender, {})[entry[0]] = entry[1]

    # verdicts: a function of broadcast data only, identical at every party
    accepted, disq = set(), {}
    for i in dealers:
        v = vss_resolve(complaints[i], responses[i], accusers=accusers[i], reveals=reveals[i],
                        degrees=specs[i][1], b_max=b_max, domain=domain)
        if v.accepted:
            accepted.add(i)
        else:
            disq[i] = v.reason

    net.broadcast(0, "VERDICT", tuple(sorted(disq)))
    net.deliver()

    shares: dict[int, dict[int, tuple]] = {}
    for j in parties:
        if not active(j):
            continue
        mine = {}
        for i in sorted(accepted):
            r = reveals[i][j] if j in accusers[i] else rows[j].get(i)
            if r is not None:
                mine[i] = tuple(tuple(c[0] for c in item) for item in r)
        shares[j] = mine
    flat = [c for i in dealers for c in complaints[i]]
    return VssResult(accepted, disq, shares, flat, accusers, net.round - start_round)
