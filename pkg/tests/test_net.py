from hypothesis import given, strategies as st

from byitfl.net import (BROADCAST, FEDERATOR, Network, Transcript, decode_payload, deliver_round, derive_seed,
                        encode_payload, party_rng)

payloads = st.recursive(st.none() | st.booleans() | st.integers() | st.text(max_size=5) | st.binary(max_size=5),
                        lambda c: st.lists(c, max_size=4).map(tuple), max_leaves=12)


def test_empty_round():
    net = Network(range(1, 4))
    assert deliver_round(net) == {0: [], 1: [], 2: [], 3: []}


def test_broadcast_identical_everywhere():
    net = Network(range(1, 5))
    net.broadcast(2, "X", (1, 2, 3))
    inbox = net.deliver()
    assert all([(m.sender, m.kind, m.payload) for m in inbox[p]] == [(2, "X", (1, 2, 3))] for p in range(5))
    assert len(net.transcript) == 1 and net.transcript.records[0].receiver == BROADCAST


def test_dropout_absent_from_drop_round_on():
    net = Network(range(1, 4))
    net.send(3, 1, "A", 1)
    assert len(net.deliver()[1]) == 1
    net.silence(3)
    for _ in range(3):
        net.send(3, 1, "A", 1)
        net.broadcast(3, "B", 2)
        net.send(2, 1, "C", 3)
        inbox = net.deliver()
        assert all(m.sender != 3 for p in inbox for m in inbox[p])
        assert [m.kind for m in inbox[1]] == ["C"]


def test_views():
    net = Network(range(1, 4))
    net.send(1, 2, "A", 0)
    net.send(2, FEDERATOR, "B", 0)
    net.broadcast(3, "C", 0)
    net.deliver()
    t = net.transcript
    assert t.view_of(set()) == []
    assert t.view_of({0, 1, 2, 3}) == t.records
    assert [r.kind for r in t.view_of({FEDERATOR})] == ["B", "C"]
    assert [r.kind for r in t.view_of({1})] == ["C"]


@given(st.lists(st.tuples(st.integers(1, 4), st.integers(-1, 4), payloads), max_size=12))
def test_isolation_and_log(msgs):
    net = Network(range(1, 5))
    for s, r, pl in msgs:
        if r == BROADCAST:
            net.broadcast(s, "K", pl)
        else:
            net.send(s, r, "K", pl)
    inbox = net.deliver()
    for p, box in inbox.items():
        assert all(m.receiver in (p, BROADCAST) for m in box)
    assert len(net.transcript) == len(msgs)
    assert [decode_payload(r.payload) for r in net.transcript.records] == [pl for _, _, pl in msgs]


@given(payloads)
def test_payload_round_trip(pl):
    assert decode_payload(encode_payload(pl)) == pl


def test_transcript_export_round_trip(tmp_path):
    net = Network(range(1, 3))
    net.phase = "Share"
    net.send(1, 2, "DEAL", ((1, 2), (3,)))
    net.broadcast(0, "GLOBAL", 2**100)
    net.deliver()
    net.transcript.meta = {"seed": 3}
    net.transcript.export(tmp_path / "log")
    back = Transcript.load(tmp_path / "log")
    assert back.records == net.transcript.records and back.meta == {"seed": 3}
    assert back.to_bytes() == net.transcript.to_bytes()


def test_seed_streams_are_independent_of_other_keys():
    assert derive_seed(1, "deal", 3) == derive_seed(1, "deal", 3)
    assert derive_seed(1, "deal", 3) != derive_seed(1, "deal", 4) != derive_seed(2, "deal", 4)
    assert party_rng(5, 2).random() == party_rng(5, 2).random()
