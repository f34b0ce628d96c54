"""Replica protocol implementations.

Four protocols run over the simulated network:

  * NncReplica: a non-negative counter with RB-propagated adds and
    TOB-ordered subtracts.
  * MixedLogReplica: an append/read sequence where weak operations execute
    against a tentative log and strong operations wait for commit.
  * ClassicLogReplica: the primary-commit tentative/committed log over
    generic register programs, re-executing on every reordering.
  * RedBlueReplica: Lamport-clocked shadow operations, blue via RB and red
    via TOB.

Replicas expose on_invoke / on_deliver / on_internal / has_internal plus a
state digest, and answer through Effects records.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from .model import OK, OperationLabel, STRONG, WEAK, rv_int, rv_bool, rv_str
from .simnet import Effects, FIFO_RB, RB, Response, TOB


@dataclass(frozen=True, order=True)
class Req:
    """A named request record, totally ordered by (timestamp, dot)."""

    timestamp: int
    dot: tuple                              # (replica id, per-replica seqno)
    op: OperationLabel = field(compare=False)
    level: str = field(compare=False, default=WEAK)


def _digest(obj):
    return hashlib.sha256(repr(obj).encode()).hexdigest()[:16]


class Replica:
    def __init__(self, rid):
        self.rid = rid
        self._seq = 0

    def mint_dot(self):
        self._seq += 1
        return (self.rid, self._seq)

    def is_local_ro(self, op, level):
        return False

    def has_internal(self):
        return False

    def on_internal(self):
        return Effects()

    def on_deliver(self, kind, msg):
        return Effects()

    def state_digest(self):
        return _digest(self._state_repr())

    def convergence_digest(self):
        return _digest(self._converged_repr())

    def _state_repr(self):
        raise NotImplementedError

    def _converged_repr(self):
        return self._state_repr()


class NncReplica(Replica):
    """Non-negative counter: weak add/get, strong subtract.

    Adds spread over RB for availability and also go through TOB so the
    total order can rule on subtracts deterministically.  A subtract
    succeeds iff the committed additions cover the committed subtractions
    plus its own amount.
    """

    def __init__(self, rid):
        super().__init__(rid)
        self.known_adds = {}     # dot -> amount, everything seen via RB or TOB
        self.committed_add = 0
        self.committed_sub = 0
        self.awaiting = {}       # dot -> event id of my undecided subtract

    def is_local_ro(self, op, level):
        return op.name == "get"

    def _state_repr(self):
        return (sorted(self.known_adds.items()), self.committed_add,
                self.committed_sub, sorted(self.awaiting))

    def _converged_repr(self):
        return (sorted(self.known_adds.items()), self.committed_add,
                self.committed_sub)

    def value(self):
        return sum(self.known_adds.values()) - self.committed_sub

    def on_invoke(self, event_id, op, level, now_clock):
        if op.name == "get":
            return Effects(responses=[Response(event_id, rv_int(self.value()))])
        dot = self.mint_dot()
        if op.name == "add":
            amount = op.args[0]
            self.known_adds[dot] = amount
            return Effects(
                casts=[(RB, ("ADD", dot, amount)),
                       (TOB, ("ADD", dot, amount))],
                responses=[Response(event_id, OK)],
                req_dot=dot)
        if op.name == "subtract":
            self.awaiting[dot] = event_id
            return Effects(casts=[(TOB, ("SUB", dot, op.args[0]))],
                           req_dot=dot)
        raise ValueError(op.name)

    def on_deliver(self, kind, msg):
        tag, dot, amount = msg.payload
        if tag == "ADD":
            self.known_adds.setdefault(dot, amount)
            if kind == TOB:
                self.committed_add += amount
            return Effects()
        # committed subtract: decided identically at every replica
        ok = self.committed_add >= self.committed_sub + amount
        if ok:
            self.committed_sub += amount
        eff = Effects()
        if dot in self.awaiting:
            eff.responses.append(Response(self.awaiting.pop(dot), rv_bool(ok)))
        return eff


class MixedLogReplica(Replica):
    """Append/read sequence with a tentative log and a committed prefix.

    Weak updates answer from the tentative state at invoke time and are both
    RB-issued and TOB-committed; weak reads are purely local; strong
    operations answer only once their own commit is delivered.
    """

    def __init__(self, rid):
        super().__init__(rid)
        self.committed = []            # Req, in commit order
        self.tentative = []            # Req, kept sorted
        self.awaiting = {}             # dot -> event id of my strong op

    def is_local_ro(self, op, level):
        return op.name == "read" and level == WEAK

    def _state_repr(self):
        return ([r.dot for r in self.committed],
                [r.dot for r in self.tentative], sorted(self.awaiting))

    def _converged_repr(self):
        return ([r.dot for r in self.committed],
                [r.dot for r in self.tentative])

    def _trace(self):
        return [r for r in self.committed + self.tentative]

    def _insert_tentative(self, req):
        self.tentative.append(req)
        self.tentative.sort()

    def _value_of(self, op, reqs):
        if op.name == "append":
            return OK
        return rv_str("".join(r.op.args[0] for r in reqs
                              if r.op.name == "append"))

    def on_invoke(self, event_id, op, level, now_clock):
        if self.is_local_ro(op, level):
            snapshot = tuple(r.dot for r in self._trace())
            value = self._value_of(op, self._trace())
            return Effects(responses=[
                Response(event_id, value, trace_snapshot=snapshot)])
        req = Req(now_clock, self.mint_dot(), op, level)
        if level == WEAK:
            snapshot = tuple(r.dot for r in self._trace())
            self._insert_tentative(req)
            return Effects(
                casts=[(RB, ("ISSUE", req)), (TOB, ("COMMIT", req))],
                responses=[Response(event_id, self._value_of(op, self._trace()),
                                    trace_snapshot=snapshot)],
                req_dot=req.dot)
        self.awaiting[req.dot] = event_id
        return Effects(casts=[(TOB, ("COMMIT", req))], req_dot=req.dot)

    def on_deliver(self, kind, msg):
        tag, req = msg.payload
        known = {r.dot for r in self.committed + self.tentative}
        if tag == "ISSUE":
            if req.dot not in known:
                self._insert_tentative(req)
            return Effects()
        # COMMIT
        self.tentative = [r for r in self.tentative if r.dot != req.dot]
        if req.dot not in {r.dot for r in self.committed}:
            self.committed.append(req)
        eff = Effects()
        if req.dot in self.awaiting:
            prefix = self.committed[:-1]
            eff.responses.append(Response(
                self.awaiting.pop(req.dot),
                self._value_of(req.op, prefix),
                trace_snapshot=tuple(r.dot for r in prefix)))
        return eff


class RegView:
    """Register file view that tracks read-from provenance while a program runs."""

    def __init__(self, env, dot):
        self.env = env
        self.dot = dot
        self.edges = set()

    def read(self, reg):
        if reg in self.env:
            value, writer, support = self.env[reg]
            if writer != self.dot:
                self.edges.add((writer, self.dot))
                self.edges |= support
            return value
        return 0

    def write(self, reg, value):
        self.env[reg] = (value, self.dot, frozenset(self.edges))


def prog_upd_x(view):
    view.write("x", 1)
    if view.read("y") == 1:
        view.write("z", 1)


def prog_upd_y(view):
    view.write("y", 1)
    if view.read("x") == 1:
        view.write("z", 2)


def prog_read_z(view):
    return view.read("z")


PROGRAMS = {
    "upd_x": prog_upd_x,
    "upd_y": prog_upd_y,
    "read_z": prog_read_z,
}

READONLY_PROGRAMS = {"read_z"}


def replay(reqs):
    """Re-execute a request sequence from the initial register file.

    Returns {dot: (value, provenance edges)} for every request.
    """
    env = {}
    results = {}
    for r in reqs:
        view = RegView(env, r.dot)
        value = PROGRAMS[r.op.name](view)
        results[r.dot] = (value, frozenset(view.edges))
    return results


class ClassicLogReplica(Replica):
    """Primary-commit tentative/committed log over register programs.

    Every operation, including queries, becomes a request: it is inserted
    into the timestamp-sorted tentative log, answered from the re-executed
    state right away, and issued over RB.  The primary commits requests in
    the order it learns of them and announces commits over FIFO RB.
    """

    def __init__(self, rid, is_primary=False):
        super().__init__(rid)
        self.is_primary = is_primary
        self.committed = []
        self.tentative = []
        self.commit_queue = []    # dots in learn order, primary only

    def _state_repr(self):
        return ([r.dot for r in self.committed],
                [r.dot for r in self.tentative], list(self.commit_queue))

    def _converged_repr(self):
        return ([r.dot for r in self.committed],
                [r.dot for r in self.tentative])

    def committed_dots(self):
        return [r.dot for r in self.committed]

    def _insert_tentative(self, req):
        self.tentative.append(req)
        self.tentative.sort()
        if self.is_primary:
            self.commit_queue.append(req.dot)

    def has_internal(self):
        return self.is_primary and bool(self.commit_queue)

    def on_internal(self):
        dot = self.commit_queue.pop(0)
        req = next(r for r in self.tentative if r.dot == dot)
        self.tentative = [r for r in self.tentative if r.dot != dot]
        self.committed.append(req)
        return Effects(casts=[(FIFO_RB, ("COMMIT", req))])

    def on_invoke(self, event_id, op, level, now_clock):
        req = Req(now_clock, self.mint_dot(), op, level)
        self._insert_tentative(req)
        results = replay(self.committed + self.tentative)
        value, edges = results[req.dot]
        rv = OK if op.name not in READONLY_PROGRAMS else rv_int(value or 0)
        return Effects(
            casts=[(RB, ("ISSUE", req))],
            responses=[Response(event_id, rv,
                                trace_snapshot=tuple(
                                    r.dot for r in self.committed + self.tentative
                                    if r.dot != req.dot),
                                essential_edges=tuple(sorted(edges)))],
            req_dot=req.dot)

    def on_deliver(self, kind, msg):
        tag, req = msg.payload
        known = {r.dot for r in self.committed + self.tentative}
        if tag == "ISSUE":
            if req.dot not in known:
                self._insert_tentative(req)
            return Effects()
        # COMMIT from the primary
        self.tentative = [r for r in self.tentative if r.dot != req.dot]
        if req.dot not in {r.dot for r in self.committed}:
            self.committed.append(req)
        return Effects()


class RedBlueReplica(Replica):
    """Shadow-operation log: blue appends over RB, red appends over TOB,
    reads sort the delivered shadows by (Lamport clock, payload)."""

    def __init__(self, rid):
        super().__init__(rid)
        self.lc = 0
        self.shadows = {}        # dot -> (payload, lc at generation)
        self.awaiting = {}       # dot -> event id of my red op

    def is_local_ro(self, op, level):
        return op.name == "read"

    def _state_repr(self):
        return (self.lc, sorted(self.shadows.items()), sorted(self.awaiting))

    def _converged_repr(self):
        return sorted(self.shadows.items())

    def _apply(self, dot, payload, lc):
        if dot in self.shadows:
            return
        self.shadows[dot] = (payload, lc)
        self.lc = max(self.lc, lc) + 1

    def on_invoke(self, event_id, op, level, now_clock):
        if op.name == "read":
            ordered = sorted(self.shadows.values(), key=lambda s: (s[1], s[0]))
            return Effects(responses=[
                Response(event_id, rv_str("".join(p for p, _ in ordered)))])
        dot = self.mint_dot()
        rec = (dot, op.args[0], self.lc)
        if level == WEAK:
            self._apply(*rec)
            return Effects(casts=[(RB, ("SHADOW",) + rec)],
                           responses=[Response(event_id, OK)], req_dot=dot)
        self.awaiting[dot] = event_id
        return Effects(casts=[(TOB, ("SHADOW",) + rec)], req_dot=dot)

    def on_deliver(self, kind, msg):
        _, dot, payload, lc = msg.payload
        self._apply(dot, payload, lc)
        eff = Effects()
        if dot in self.awaiting:
            eff.responses.append(Response(self.awaiting.pop(dot), OK))
        return eff
