import random
from collections import Counter

import pytest
from hypothesis import given, strategies as st

from byitfl.field import PrimeField, interpolate_coeffs, horner, next_prime
from byitfl.lcc import EvalDomain, SecretBundle, lcc_polys
from byitfl.net import Network
from byitfl.vss import (BivariateShare, Complaint, DealItem, Dealing, checkpoints, eval_rows, run_vss, vss_deal,
                        vss_resolve, vss_verify_round)

F = PrimeField(next_prime(2**61))


def setup(n=7, m=1, t=1, dealers=(1,), seed=0, width=2):
    dom = EvalDomain.standard(n, m, t, F)
    r = random.Random(seed)
    secrets, jobs = {}, {}
    for i in dealers:
        b = SecretBundle.from_vector([r.randrange(F.p) for _ in range(m * width)], m, t, r, F)
        secrets[i] = lcc_polys(b, dom)
        jobs[i] = [DealItem("g", dom.degree, secrets[i])]
    rngs = {i: random.Random(seed * 100 + i) for i in range(1, n + 1)}
    return dom, jobs, rngs, secrets


def run(dom, jobs, rngs, b_max=1, **kw):
    net = Network(range(1, dom.n + 1))
    res = run_vss(net, jobs, rngs, range(1, dom.n + 1), dom, b_max, **kw)
    return net, res


def share_on_poly(res, dom, dealer, polys, parties):
    for j in parties:
        got = res.shares[j][dealer][0]
        assert got == tuple(horner(f, dom.alpha(j), F.p) for f in polys)


def test_honest_dealer_no_complaints():
    dom, jobs, rngs, sec = setup(dealers=(1, 4))
    net, res = run(dom, jobs, rngs)
    assert res.accepted == {1, 4} and not res.complaints and not res.disqualified
    share_on_poly(res, dom, 1, sec[1], range(1, 8))
    kinds = {r.kind for r in net.transcript.records}
    assert kinds == {"DEAL", "CHECKPOINT", "VERDICT"}


def test_lcc_share_is_row_constant_term():
    dom, jobs, rngs, sec = setup()
    shares, dealing = vss_deal(jobs[1], 1, dom, rngs[1])
    for j, s in shares.items():
        assert s.lcc_share()[0] == tuple(horner(f, dom.alpha(j), F.p) for f in sec[1])
        assert s.col_polys == s.rows


def test_symmetric_consistency():
    dom, jobs, rngs, _ = setup()
    shares, _ = vss_deal(jobs[1], 1, dom, rngs[1])
    for i in shares:
        for j in shares:
            assert eval_rows(shares[i].rows, dom.alpha(j), F.p) == eval_rows(shares[j].col_polys, dom.alpha(i), F.p)


def test_verify_round_examples():
    dom, jobs, rngs, _ = setup()
    shares, _ = vss_deal(jobs[1], 1, dom, rngs[1])
    cps = {k: checkpoints(shares[k], dom)[3] for k in shares if k != 3}
    assert vss_verify_round(shares[3], cps, dom) == []
    forged = dict(cps)
    forged[5] = tuple(tuple((v + 1) % F.p for v in item) for item in cps[5])
    out = vss_verify_round(shares[3], forged, dom)
    assert [(c.accuser, c.dealer, c.peer) for c in out] == [(3, 1, 5)]
    missing = {k: v for k, v in cps.items() if k != 6}
    assert [c.peer for c in vss_verify_round(shares[3], missing, dom)] == [6]


def test_corrupted_row_draws_complaint_and_disqualification():
    dom, jobs, rngs, _ = setup()
    net, res = run(dom, jobs, rngs, inconsistent=frozenset({1}))
    # party 2 is the first receiver other than the dealer
    assert any(c.accuser == 2 and c.dealer == 1 for c in res.complaints)
    assert 1 in res.disqualified


def test_over_degree_rejected():
    dom, jobs, rngs, _ = setup()
    _, res = run(dom, jobs, rngs, over_degree=frozenset({1}))
    assert res.accepted == set() and 1 in res.disqualified


def test_dropout_peer_complaint_resolved():
    dom, jobs, rngs, sec = setup()
    net = Network(range(1, 8))
    net.silence(6)
    res = run_vss(net, jobs, rngs, range(1, 8), dom, 1)
    assert res.complaints and all(c.peer == 6 for c in res.complaints)
    assert res.accepted == {1}
    assert 6 not in res.shares
    share_on_poly(res, dom, 1, sec[1], [j for j in range(1, 8) if j != 6])
    assert any(r.kind == "RESPONSE" for r in net.transcript.records)


def test_resolve_examples():
    dom, jobs, rngs, _ = setup()
    assert vss_resolve([], {}, degrees=[1], b_max=1, domain=dom).accepted
    c = Complaint(3, 1, 5)
    assert not vss_resolve([c], {}, degrees=[1], b_max=1, domain=dom).accepted
    shares, d = vss_deal(jobs[1], 1, dom, rngs[1])
    ok = vss_resolve([c], {(3, 5): d.claimed_value(3, 5)}, degrees=[1], b_max=1, domain=dom)
    assert ok.accepted
    bad_val = tuple(tuple((v + 1) % F.p for v in item) for item in d.claimed_value(3, 5))
    v = vss_resolve([c], {(3, 5): bad_val}, accusers={3}, reveals={3: shares[3].rows}, degrees=[1], b_max=1,
                    domain=dom)
    assert not v.accepted


def _tamper_checkpoints(byz, r):
    def tamper(sender, kind, values):
        if sender in byz and kind == "CHECKPOINT":
            return tuple(tuple((v + r.randrange(1, F.p)) % F.p for v in item) for item in values)
        return values
    return tamper


@given(st.integers(1, 2), st.integers(0, 2**32), st.data())
def test_completeness_with_byzantine_receivers(b, seed, data):
    n = 4 + 2 * b
    dom, jobs, rngs, sec = setup(n=n, dealers=(1,), seed=seed)
    byz = set(data.draw(st.lists(st.integers(2, n), min_size=1, max_size=b, unique=True)))
    _, res = run(dom, jobs, rngs, b_max=b, tamper=_tamper_checkpoints(byz, random.Random(seed)))
    assert res.accepted == {1}
    share_on_poly(res, dom, 1, sec[1], [j for j in range(1, n + 1) if j not in byz])


@given(st.integers(0, 2**32), st.data())
def test_soundness_after_acceptance(seed, data):
    n, b = 7, 1
    dom, jobs, rngs, _ = setup(n=n, seed=seed, width=1)
    victims = data.draw(st.lists(st.integers(2, n), min_size=1, max_size=3, unique=True))
    real = Dealing.corrupt

    def corrupt_many(self, receiver):
        for v in victims:
            real(self, v)

    Dealing.corrupt = corrupt_many
    try:
        _, res = run(dom, jobs, rngs, b_max=b, inconsistent=frozenset({1}))
    finally:
        Dealing.corrupt = real
    if 1 in res.accepted:
        honest = sorted(res.shares)
        xs = [dom.alpha(j) for j in honest]
        ys = [res.shares[j][1][0][0] for j in honest]
        f = interpolate_coeffs(xs[: dom.degree + 1], ys[: dom.degree + 1], F.p)
        assert all(horner(f, x, F.p) == y for x, y in zip(xs, ys))


class _Scripted:
    def __init__(self, vals):
        self.vals = list(vals)

    def randrange(self, *a):
        return self.vals.pop(0)


def test_single_receiver_view_is_secret_independent():
    P = 31
    G = PrimeField(P)
    dom = EvalDomain.standard(3, 1, 1, G)
    views = []
    for secret in (0, 7):
        cnt = Counter()
        for mask in range(P):
            for r in range(P):
                polys = lcc_polys(SecretBundle.from_vector([secret], 1, 1, _Scripted([mask]), G), dom)
                d = Dealing(1, [DealItem("g", 1, polys)], dom, _Scripted([r]))
                cnt[d.row(2)] += 1
        assert len(cnt) == P * P
        views.append(cnt)
    assert views[0] == views[1]
