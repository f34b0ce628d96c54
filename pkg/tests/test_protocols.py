"""Unit tests for the replica implementations, driven without the network."""

from actsim.model import (OK, OperationLabel, STRONG, WEAK, rv_bool, rv_int,
                          rv_str)
from actsim.protocols import (ClassicLogReplica, MixedLogReplica, NncReplica,
                              RedBlueReplica, Req, replay)
from actsim.simnet import Message, RB, TOB


def lab(name, *args):
    return OperationLabel(name, args)


def msg(kind, payload, origin=0, mid=0):
    return Message(mid, kind, tuple(payload), origin, 0, None)


def test_counter_add_is_applied_locally_and_broadcast():
    r = NncReplica(0)
    eff = r.on_invoke(0, lab("add", 4), WEAK, 0)
    assert [k for k, _ in eff.casts] == [RB, TOB]
    assert eff.responses[0].value == OK
    assert r.value() == 4
    get = r.on_invoke(1, lab("get"), WEAK, 1)
    assert get.responses[0].value == rv_int(4)


def test_counter_duplicate_adds_are_ignored():
    r = NncReplica(0)
    r.on_deliver(RB, msg(RB, ("ADD", (1, 1), 4)))
    r.on_deliver(TOB, msg(TOB, ("ADD", (1, 1), 4)))
    assert r.value() == 4
    assert r.committed_add == 4


def test_counter_subtract_decisions_match_across_replicas():
    deliveries = [("ADD", (1, 1), 3), ("SUB", (2, 1), 2), ("SUB", (1, 2), 2)]
    values = []
    for rid in (0, 1):
        r = NncReplica(rid)
        for payload in deliveries:
            r.on_deliver(TOB, msg(TOB, payload))
        values.append((r.committed_add, r.committed_sub, r.value()))
    # 3 - 2 succeeds, the second subtract is unfunded everywhere
    assert values == [(3, 2, 1), (3, 2, 1)]


def test_counter_subtract_answers_at_its_own_commit():
    r = NncReplica(0)
    eff = r.on_invoke(0, lab("subtract", 1), STRONG, 0)
    assert eff.responses == [] and [k for k, _ in eff.casts] == [TOB]
    dot = eff.req_dot
    r.on_deliver(TOB, msg(TOB, ("ADD", (1, 1), 3)))
    done = r.on_deliver(TOB, msg(TOB, ("SUB", dot, 1)))
    assert done.responses[0].event_id == 0
    assert done.responses[0].value == rv_bool(True)


def test_log_tentative_order_follows_timestamps():
    r = MixedLogReplica(0)
    r.on_invoke(0, lab("append", "a"), WEAK, 10)
    r.on_deliver(RB, msg(RB, ("ISSUE", Req(4, (1, 1), lab("append", "b")))))
    read = r.on_invoke(1, lab("read"), WEAK, 11)
    assert read.responses[0].value == rv_str("ba")


def test_log_commit_moves_requests_out_of_tentative():
    r = MixedLogReplica(0)
    eff = r.on_invoke(0, lab("append", "a"), WEAK, 10)
    _, req = eff.casts[1][1][0], eff.casts[1][1][1]
    r.on_deliver(TOB, msg(TOB, ("COMMIT", req)))
    assert [x.dot for x in r.committed] == [req.dot]
    assert r.tentative == []


def test_log_strong_read_answers_from_the_committed_prefix():
    r = MixedLogReplica(0)
    r.on_deliver(TOB, msg(TOB, ("COMMIT", Req(4, (1, 1), lab("append", "b")))))
    eff = r.on_invoke(0, lab("read"), STRONG, 10)
    assert eff.responses == []
    req = eff.casts[0][1][1]
    done = r.on_deliver(TOB, msg(TOB, ("COMMIT", req)))
    assert done.responses[0].value == rv_str("b")
    assert done.responses[0].trace_snapshot == ((1, 1),)


def test_register_replay_tracks_read_from_provenance():
    u2 = Req(1, (1, 1), lab("upd_y"))
    u1 = Req(5, (0, 1), lab("upd_x"))
    q = Req(9, (0, 2), lab("read_z"))
    results = replay([u2, u1, q])
    value, edges = results[q.dot]
    assert value == 1  # x=1 ran after y=1, so the guarded write fired
    assert ((0, 1), (0, 2)) in edges      # the read saw u1's write
    assert ((1, 1), (0, 1)) in edges      # which itself read u2's write


def test_classic_primary_commits_in_learn_order():
    p = ClassicLogReplica(0, is_primary=True)
    late = Req(9, (1, 1), lab("upd_x"))
    early = Req(1, (2, 1), lab("upd_y"))
    p.on_deliver(RB, msg(RB, ("ISSUE", late)))
    p.on_deliver(RB, msg(RB, ("ISSUE", early)))
    order = []
    while p.has_internal():
        eff = p.on_internal()
        order.append(eff.casts[0][1][1].dot)
    # commit follows arrival, not timestamps
    assert order == [late.dot, early.dot]
    assert p.committed_dots() == [late.dot, early.dot]


def test_classic_flags_nothing_as_local_readonly():
    p = ClassicLogReplica(0)
    assert not p.is_local_ro(lab("read_z"), WEAK)


def test_redblue_read_sorts_by_clock_then_payload():
    r = RedBlueReplica(0)
    r.on_invoke(0, lab("append", "b"), WEAK, 0)
    r.on_deliver(RB, msg(RB, ("SHADOW", (1, 1), "a", 0)))
    read = r.on_invoke(1, lab("read"), WEAK, 1)
    assert read.responses[0].value == rv_str("ab")
    assert r.lc == 2  # bumped once per applied shadow


def test_redblue_duplicate_shadows_are_idempotent():
    r = RedBlueReplica(0)
    r.on_deliver(RB, msg(RB, ("SHADOW", (1, 1), "a", 0)))
    r.on_deliver(RB, msg(RB, ("SHADOW", (1, 1), "a", 0)))
    assert r.lc == 1
    assert len(r.shadows) == 1


def test_redblue_red_append_answers_at_commit():
    r = RedBlueReplica(0)
    eff = r.on_invoke(0, lab("append", "x"), STRONG, 0)
    assert eff.responses == [] and eff.casts[0][0] == TOB
    done = r.on_deliver(TOB, msg(TOB, eff.casts[0][1]))
    assert done.responses[0].event_id == 0
