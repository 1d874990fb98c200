"""Acceptance criteria, one test each.  Every test prints a single
``[PASS]``/``[FAIL]`` line (shown even under output capture) and then asserts."""

import contextlib
import csv
import io
import random
import time
from collections import Counter

import numpy as np
import pytest

from byitfl.adversary import RANDOM_SHARES, WRONG_COMPUTATION, AttackSpec, DropSchedule
from byitfl.cli import main
from byitfl.field import FieldPoly, PrimeField, is_probable_prime, next_prime
from byitfl.fl import FLConfig, train
from byitfl.lcc import EvalDomain, SecretBundle, lcc_polys
from byitfl.params import ProtocolParams, min_users, setup
from byitfl.protocol import PHASES, ProtocolEngine, plaintext_oracle
from byitfl.quantizer import (QuantConfig, QuantizedUpdate, field_bound, normalize, quantize, required_prime,
                              sigma_bounds, stochastic_round, validate_params)
from byitfl.relu_poly import ReluApprox, fit_relu
from byitfl.rs import DecodeFailure, NoisyCodeword, rs_decode
from byitfl.vss import DealItem, Dealing

from helpers import instance

LATE = ("NormCheck", "Compute", "Mask", "Reconstruct")


@pytest.fixture
def report(capsys):
    def emit(tag, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {tag}: {detail}")
        assert ok, detail
    return emit


def _configs(count=50, seed=2024):
    r = random.Random(seed)
    out = []
    while len(out) < count:
        m, t, k, b, p = r.choice((1, 2)), r.choice((1, 2)), r.choice((2, 3)), r.choice((0, 1, 2)), r.choice((0, 1))
        need = min_users(b, k, m, t, p)
        if need > 20:
            continue
        n = r.randint(need, 20)
        d = r.randint(2, 4)
        out.append(dict(cfg=(n, b, t, p, m, k, 16, d), seed=r.randrange(2**31)))
    return out


@pytest.fixture(scope="module")
def honest_runs():
    runs = []
    t0 = time.perf_counter()
    for c in _configs():
        params, approx, ups, g0 = instance(*c["cfg"], seed=c["seed"])
        res = ProtocolEngine(params, approx, seed=c["seed"]).run_round(ups, g0)
        runs.append((c, params, approx, ups, g0, res))
    return runs, time.perf_counter() - t0


def test_c01_oracle_equivalence(report, honest_runs):
    runs, elapsed = honest_runs
    bad = []
    for c, params, approx, ups, g0, res in runs:
        o = plaintext_oracle(ups, g0, approx, params.prime, res.included)
        assert params.check().ok
        if res.field_quotients != o.field_quotients or res.quotients != o.quotients:
            bad.append(c["cfg"])
    report("C1 oracle equivalence", not bad and elapsed < 300,
           f"{len(runs) - len(bad)}/{len(runs)} configurations exact, {elapsed:.1f}s")


def test_c02_byzantine_invariance(report, honest_runs):
    runs, _ = honest_runs
    r = random.Random(7)
    bad, attacked = [], 0
    for x, (c, params, approx, ups, g0, ref) in enumerate(runs):
        n, b = params.n, params.b
        if b == 0:
            continue
        members = set(r.sample(range(1, n + 1), b))
        kind = (RANDOM_SHARES, WRONG_COMPUTATION)[x % 2]
        spec = AttackSpec(kind, members, phases=LATE)
        res = ProtocolEngine(params, approx, seed=c["seed"], attacks=[spec]).run_round(ups, g0)
        attacked += 1
        if res.quotients != ref.quotients or res.field_quotients != ref.field_quotients:
            bad.append((c["cfg"], kind, "aggregate"))
        if not all(s <= members for s in res.error_sets.values()):
            bad.append((c["cfg"], kind, "error set"))
    report("C2 Byzantine invariance", not bad and attacked > 0, f"{attacked - len(bad)}/{attacked} attacked runs identical")


def test_c03_dropout_invariance(report, honest_runs):
    runs, _ = honest_runs
    r = random.Random(11)
    bad, tried = [], 0
    for c, params, approx, ups, g0, ref in runs:
        if params.p_drop == 0:
            continue
        who = r.randint(1, params.n)
        phase = r.choice(PHASES)
        res = ProtocolEngine(params, approx, seed=c["seed"]).run_round(ups, g0, drops=DropSchedule({who: phase}))
        if phase == "Share":
            # a party silent from the start never contributes its update
            ref = ProtocolEngine(params, approx, seed=c["seed"]).run_round({**ups, who: None}, g0)
        tried += 1
        if res.quotients != ref.quotients or res.field_quotients != ref.field_quotients:
            bad.append((c["cfg"], who, phase))
    report("C3 dropout invariance", not bad and tried > 0, f"{tried - len(bad)}/{tried} dropout runs identical")


def test_c04_norm_check(report):
    n, d, q = 7, 64, 1024
    params, approx = setup(n, 1, 1, 0, 1, 2, q, d, epsilon=0.02)
    caught = false_pos = 0
    for trial in range(100):
        rng = np.random.default_rng(trial)
        atk = int(rng.integers(1, n + 1))
        ups = {}
        for i in range(1, n + 1):
            u = normalize(rng.normal(size=d))
            ups[i] = quantize(2 * u, params.quant, rng, i, check_range=False) if i == atk else quantize(u, params.quant, rng, i)
        g0 = quantize(normalize(rng.normal(size=d)), params.quant, rng, 0)
        st = ProtocolEngine(params, approx, seed=trial).run_until(ups, g0, "NormCheck")
        caught += atk in st.excluded
        false_pos += bool(st.excluded - {atk})
    report("C4 norm check", caught == 100 and false_pos == 0,
           f"scaled attackers excluded {caught}/100, trials with honest exclusions {false_pos}/100")


class _Scripted:
    def __init__(self, vals):
        self.vals = list(vals)

    def randrange(self, *a):
        return self.vals.pop(0)


def test_c05_privacy_enumeration(report):
    P = 101
    G = PrimeField(P)
    dom = EvalDomain.standard(3, 1, 1, G)
    # (a) receiver 2's row from dealer 1, over every mask and every free bivariate coefficient
    views = []
    for secret in (0, 1, 50, 100):
        cnt = Counter()
        for mask in range(P):
            polys = lcc_polys(SecretBundle.from_vector([secret], 1, 1, _Scripted([mask]), G), dom)
            for r in range(P):
                cnt[Dealing(1, [DealItem("g", 1, polys)], dom, _Scripted([r])).row(2)] += 1
        views.append(cnt)
    uniform = all(len(v) == P * P and set(v.values()) == {1} for v in views)
    same = all(v == views[0] for v in views)

    # (b) federator's decoded masked pair over every value of the one non-zero mask
    params = ProtocolParams(n=4, b=0, t=1, p_drop=0, m=1, k=1, q=3, d=1, prime=P, epsilon=0.5)
    h = ReluApprox(1, (0.25, 0.5), (-1.0, 1.0), 0.0, 100, (25, 50), tuple(c % P for c in (25 * 9, 50)), 3, P)
    g0 = QuantizedUpdate((3,), 0, P)
    plus, minus = QuantizedUpdate((3,), 1, P), QuantizedUpdate((P - 3,), 1, P)

    def dist(updates):
        cnt = Counter()
        for lam in range(1, P):
            eng = ProtocolEngine(params, h, seed=lam)
            st = eng.run_until(updates, g0, lambdas={1: lam, 2: 0, 3: 0, 4: 0})
            cnt[(st.decoded["masked_sigma1"][0], st.decoded["masked_sigma2"][0][0])] += 1
        return cnt

    one = dist({1: plus})
    two = dist({1: plus, 2: QuantizedUpdate((3,), 2, P)})  # Sigma1, Sigma2 doubled, same quotient
    other = dist({1: minus})  # different quotient
    ok_b = one == two and one != other
    report("C5 privacy enumeration", uniform and same and ok_b,
           f"(a) {len(views)} secrets, views uniform={uniform} identical={same}; "
           f"(b) same-quotient distributions equal={one == two}, different quotient distinguishable={one != other}")


def test_c06_rs_decoder(report):
    F = PrimeField(next_prime(2**61))
    r = random.Random(6)
    ok = 0
    for _ in range(1000):
        D, b = r.randrange(0, 9), r.randrange(0, 5)
        n = r.randrange(D + 2 * b + 1, 41)
        er = r.randrange(0, n - (D + 2 * b + 1) + 1)
        f = FieldPoly([r.randrange(F.p) for _ in range(D + 1)], F)
        xs = r.sample(range(1, F.p), n)
        ys = [f(x) for x in xs]
        idx = r.sample(range(n), er + r.randrange(0, b + 1))
        for i in idx[:er]:
            ys[i] = None
        errs = sorted(idx[er:])
        for i in errs:
            ys[i] = (ys[i] + r.randrange(1, F.p)) % F.p
        g, found = rs_decode(NoisyCodeword(zip(xs, ys), D), b, F)
        ok += g == f and found == errs
    G = PrimeField(101)
    silent = 0
    for _ in range(1000):
        D, b = r.randrange(0, 4), r.randrange(1, 3)
        n = D + 2 * b + 1 + r.randrange(0, 3)
        f = FieldPoly([r.randrange(101) for _ in range(D + 1)], G)
        xs = r.sample(range(1, 101), n)
        ys = [f(x) for x in xs]
        for i in r.sample(range(n), b + 1):
            ys[i] = (ys[i] + r.randrange(1, 101)) % 101
        try:
            g, _ = rs_decode(NoisyCodeword(zip(xs, ys), D), b, G)
            silent += g == f
        except DecodeFailure:
            pass
    report("C6 RS decoder", ok == 1000 and silent == 0,
           f"{ok}/1000 within-radius exact, {silent}/1000 beyond-radius silently returned planted")


def test_c07_relu_fits(report, tmp_path):
    fits = {k: fit_relu(k) for k in (2, 4, 6, 8)}
    errs = [fits[k].max_abs_error for k in (2, 4, 6, 8)]
    dec = all(a > b for a, b in zip(errs, errs[1:]))
    h1 = all(abs(f.real_coeffs[1] - 0.5) <= 1e-6 for f in fits.values())
    with contextlib.redirect_stdout(io.StringIO()):
        code = main(["fit-relu", "--k", "6", "--out", str(tmp_path)])
    rows = list(csv.reader(open(tmp_path / "relu_k6.csv")))
    csv_ok = code == 0 and rows[0] == ["x", "relu", "h"] and len(rows) > 100
    report("C7 ReLU approximation", dec and h1 and csv_ok,
           "max errors " + ", ".join(f"k{k}={e:.4f}" for k, e in zip((2, 4, 6, 8), errs)) + f"; h1 ok={h1}; csv ok={csv_ok}")


def test_c08_unbiased_quantizer(report):
    rng = np.random.default_rng(8)
    q, draws = 1024, 10**5
    xs = rng.uniform(-1, 1, 100)
    worst = 0.0
    for x in xs:
        v = stochastic_round(np.full(draws, q * x), rng)
        frac = q * x - np.floor(q * x)
        se = np.sqrt(frac * (1 - frac) / draws)
        worst = max(worst, abs(v.mean() - q * x) / se if se > 0 else 0.0)
    report("C8 quantizer unbiasedness", worst <= 4, f"worst deviation {worst:.2f} standard errors over 100 points")


def test_c09_robustness_analogue(report):
    t0 = time.perf_counter()
    base = dict(n=16, b=4, t=1, m=1, k=6, rounds=30, b_max=3, seed=0)
    acc = {}
    for attack in ("trim", "label_flip"):
        for agg in ("byitfl-secure", "fltrust-approx", "fedavg"):
            acc[(attack, agg)] = train(FLConfig(aggregator=agg, attack=attack, **base)).final_accuracy
    clean = {agg: train(FLConfig(aggregator=agg, **{**base, "b": 0})).final_accuracy
             for agg in ("byitfl-secure", "fltrust-approx", "fedavg")}
    elapsed = time.perf_counter() - t0
    a = all(abs(acc[(x, "byitfl-secure")] - acc[(x, "fltrust-approx")]) <= 0.02 for x in ("trim", "label_flip"))
    b = all(min(acc[(x, "byitfl-secure")], acc[(x, "fltrust-approx")]) >= acc[(x, "fedavg")] + 0.10
            for x in ("trim", "label_flip"))
    c = max(clean.values()) - min(clean.values()) <= 0.02
    detail = "; ".join(f"{x}: secure={acc[(x, 'byitfl-secure')]:.3f} approx={acc[(x, 'fltrust-approx')]:.3f} "
                       f"fedavg={acc[(x, 'fedavg')]:.3f}" for x in ("trim", "label_flip"))
    detail += "; clean: " + " ".join(f"{k}={v:.3f}" for k, v in clean.items()) + f"; {elapsed:.0f}s"
    report("C9 robustness analogue", a and b and c and elapsed < 600, detail)


def _inequality_holds(n, b, k, m, t, p):
    return n - 2 * b - (k + 2) * (m + t - 1) - p - 1 >= 0


def test_c10_parameter_guards(report):
    r = random.Random(10)
    mismatches = 0
    for _ in range(1000):
        b, k, m, t, p = r.randint(0, 3), r.randint(1, 6), r.randint(1, 3), r.randint(1, 3), r.randint(0, 2)
        n = r.randint(3, 40)
        argv = ["check-params"] + [f"--set={key}={val}" for key, val in
                                   dict(n=n, b=b, k=k, m=m, t=t, p_drop=p, q=16, dim=3).items()]
        out, err = io.StringIO(), io.StringIO()
        with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
            code = main(argv)
        report_json = out.getvalue()
        want = _inequality_holds(n, b, k, m, t, p)
        expect_min = 2 * b + (k + 2) * (m + t - 1) + p + 1
        if (code == 0) != want or f'"min_users": {expect_min}' not in report_json:
            mismatches += 1
        elif not want and "2b+(k+2)(m+t-1)+p+1" not in err.getvalue():
            mismatches += 1
    rejected = 0
    for _ in range(100):
        qc = QuantConfig(r.choice((4, 16, 1024)), 2, r.randint(1, 64), r.randint(1, 8), r.randint(3, 40),
                         r.choice((1, 10, 1000)))
        need = required_prime(qc)
        lo = max(field_bound(qc), 2 * sigma_bounds(qc)[0] * sigma_bounds(qc)[1] + 1)
        below = next_prime(r.randrange(2, lo))
        while below >= lo:
            below = next_prime(r.randrange(2, lo // 2 + 2))
        rejected += (not validate_params(QuantConfig(qc.q, below, qc.d, qc.k, qc.n, qc.coeff_scale)).ok
                     and validate_params(QuantConfig(qc.q, need, qc.d, qc.k, qc.n, qc.coeff_scale)).ok)
    report("C10 parameter guards", mismatches == 0 and rejected == 100,
           f"{1000 - mismatches}/1000 check-params verdicts match the inequality; {rejected}/100 sub-bound primes rejected")
