"""Event-graph primitives: events, relations, histories, abstract executions.

Everything downstream (RDT evaluation, predicates, witness construction)
consumes the types defined here.  Relations are materialized edge sets over
event ids; histories at the scale we simulate are at most a few hundred
events, so explicit sets keep brute-force checks simple.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

WEAK = "weak"
STRONG = "strong"

EventId = int


class NotTotal(ValueError):
    """Raised when a relation expected to be a total order leaves a pair unordered."""


class MalformedHistory(ValueError):
    pass


class UnknownEvent(KeyError):
    pass


@dataclass(frozen=True)
class OperationLabel:
    name: str
    args: tuple = ()

    def __str__(self):
        if not self.args:
            return self.name
        return "%s(%s)" % (self.name, ",".join(str(a) for a in self.args))


@dataclass(frozen=True)
class ReturnValue:
    """Tagged return value: Ok | Int | Bool | Str | Set | Pending.

    Pending encodes the undefined return of an operation that never completed.
    """

    tag: str
    value: object = None

    def is_pending(self):
        return self.tag == "pending"

    def to_json(self):
        if self.tag == "set":
            return {"tag": "set", "value": sorted(self.value, key=str)}
        return {"tag": self.tag, "value": self.value}

    @staticmethod
    def from_json(d):
        if d["tag"] == "set":
            return rv_set(d["value"])
        return ReturnValue(d["tag"], d["value"])


OK = ReturnValue("ok")
PENDING = ReturnValue("pending")


def rv_int(n):
    return ReturnValue("int", int(n))


def rv_bool(b):
    return ReturnValue("bool", bool(b))


def rv_str(s):
    return ReturnValue("str", str(s))


def rv_set(values):
    return ReturnValue("set", frozenset(values))


class Relation:
    """A binary relation over event ids with cached forward/backward adjacency."""

    def __init__(self, edges: Iterable[tuple] = ()):
        self._edges = frozenset((a, b) for a, b in edges)
        self._succ = {}
        self._pred = {}
        for a, b in self._edges:
            self._succ.setdefault(a, set()).add(b)
            self._pred.setdefault(b, set()).add(a)

    @property
    def edges(self):
        return self._edges

    def has(self, a, b):
        return (a, b) in self._edges

    def succ(self, a):
        return frozenset(self._succ.get(a, ()))

    def pred(self, a):
        return frozenset(self._pred.get(a, ()))

    def union(self, other: "Relation") -> "Relation":
        return Relation(self._edges | other._edges)

    def restrict(self, events) -> "Relation":
        ev = set(events)
        return Relation((a, b) for a, b in self._edges if a in ev and b in ev)

    def nodes(self):
        out = set()
        for a, b in self._edges:
            out.add(a)
            out.add(b)
        return out

    def transitive_closure(self) -> "Relation":
        succ = {a: set(bs) for a, bs in self._succ.items()}
        # plain worklist closure; fine at this scale
        changed = True
        while changed:
            changed = False
            for a in list(succ):
                extra = set()
                for b in succ[a]:
                    extra |= succ.get(b, set())
                if not extra <= succ[a]:
                    succ[a] |= extra
                    changed = True
        return Relation((a, b) for a, bs in succ.items() for b in bs)

    def __len__(self):
        return len(self._edges)

    def __eq__(self, other):
        return isinstance(other, Relation) and self._edges == other._edges

    def __hash__(self):
        return hash(self._edges)

    def __repr__(self):
        return "Relation(%r)" % sorted(self._edges)


def is_acyclic(rel: Relation) -> bool:
    """True iff no event reaches itself through rel+."""
    return find_cycle(rel) is None


def find_cycle(rel: Relation):
    """Return one cycle as a list of event ids, or None if the relation is acyclic."""
    WHITE, GREY, BLACK = 0, 1, 2
    color = {}
    stack_path = []

    def visit(n):
        color[n] = GREY
        stack_path.append(n)
        for m in sorted(rel.succ(n)):
            c = color.get(m, WHITE)
            if c == GREY:
                i = stack_path.index(m)
                return stack_path[i:] + [m]
            if c == WHITE:
                got = visit(m)
                if got:
                    return got
        stack_path.pop()
        color[n] = BLACK
        return None

    for n in sorted(rel.nodes()):
        if color.get(n, WHITE) == WHITE:
            got = visit(n)
            if got:
                return got
    return None


def rank(carrier, rel: Relation, e) -> int:
    """Number of carrier elements related to e: |rel^-1(e) n carrier|."""
    return len(rel.pred(e) & set(carrier))


def sort_events(carrier, total: Relation):
    """Arrange carrier in ascending order of a total order relation."""
    items = sorted(carrier)
    n = len(items)
    for i in range(n):
        for j in range(i + 1, n):
            a, b = items[i], items[j]
            if not total.has(a, b) and not total.has(b, a):
                raise NotTotal("unordered pair (%r, %r)" % (a, b))
    out = sorted(items, key=lambda e: rank(carrier, total, e))
    # sanity: adjacent elements must be ordered forward
    for x, y in zip(out, out[1:]):
        if not total.has(x, y):
            raise NotTotal("relation is not a total order over the carrier")
    return out


def foldr(acc0, f: Callable, seq):
    """Left-to-right accumulation: foldr(a0,f,eps)=a0; foldr(a0,f,w.b)=f(foldr(a0,f,w),b)."""
    acc = acc0
    for x in seq:
        acc = f(acc, x)
    return acc


@dataclass(frozen=True)
class Event:
    id: EventId
    op: OperationLabel
    rval: ReturnValue
    lvl: str
    client: str
    invoke_ts: int
    return_ts: Optional[int]


class History:
    """Client-observable history H = (E, op, rval, rb, ss, lvl).

    rb is derived from invoke/return timestamps (a ->rb b iff a returned
    before b was invoked) and ss from client ids; neither is stored
    redundantly.
    """

    def __init__(self, events):
        self.events = sorted(events, key=lambda e: e.id)
        self._by_id = {e.id: e for e in self.events}
        if len(self._by_id) != len(self.events):
            raise MalformedHistory("duplicate event ids")

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def event(self, eid) -> Event:
        try:
            return self._by_id[eid]
        except KeyError:
            raise UnknownEvent(eid)

    def ids(self):
        return [e.id for e in self.events]

    @property
    def rb(self) -> Relation:
        edges = []
        for a in self.events:
            if a.return_ts is None:
                continue
            for b in self.events:
                if a.id != b.id and a.return_ts < b.invoke_ts:
                    edges.append((a.id, b.id))
        return Relation(edges)

    @property
    def ss(self) -> Relation:
        edges = []
        for a in self.events:
            for b in self.events:
                if a.id != b.id and a.client == b.client:
                    edges.append((a.id, b.id))
        return Relation(edges)

    def level_events(self, lvl):
        return [e.id for e in self.events if e.lvl == lvl]

    def validate(self):
        """Check well-formedness; raises MalformedHistory."""
        ids = self.ids()
        if ids != list(range(len(ids))):
            raise MalformedHistory("event ids must be dense 0..N-1")
        for e in self.events:
            if (e.return_ts is None) != e.rval.is_pending():
                raise MalformedHistory(
                    "event %d: pending iff return_ts is missing" % e.id)
            if e.return_ts is not None and e.return_ts < e.invoke_ts:
                raise MalformedHistory("event %d returns before invoke" % e.id)
        # clients issue operations sequentially: intervals of one session
        # must not overlap, and a pending op must be the session's last
        by_client = {}
        for e in self.events:
            by_client.setdefault(e.client, []).append(e)
        for client, evs in by_client.items():
            evs.sort(key=lambda e: e.invoke_ts)
            for x, y in zip(evs, evs[1:]):
                if x.return_ts is None:
                    raise MalformedHistory(
                        "client %s issues after a pending operation" % client)
                if x.return_ts >= y.invoke_ts:
                    raise MalformedHistory(
                        "client %s has overlapping operations" % client)
        return True

    def subhistory(self, ids):
        """Induced sub-history over the given event ids, re-identified densely.

        Timestamps are preserved, so rb/ss restrict naturally.  Returns the
        new history and the old->new id mapping.
        """
        keep = sorted(set(ids))
        mapping = {old: new for new, old in enumerate(keep)}
        events = []
        for old in keep:
            e = self.event(old)
            events.append(Event(mapping[old], e.op, e.rval, e.lvl, e.client,
                                e.invoke_ts, e.return_ts))
        return History(events), mapping

    def to_jsonl(self) -> str:
        lines = []
        for e in self.events:
            rec = {
                "id": e.id,
                "op": {"name": e.op.name, "args": list(e.op.args)},
                "rval": e.rval.to_json(),
                "lvl": e.lvl,
                "client": e.client,
                "invoke_ts": e.invoke_ts,
                "return_ts": e.return_ts,
            }
            lines.append(json.dumps(rec, sort_keys=True))
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_jsonl(text: str) -> "History":
        events = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            events.append(Event(
                id=rec["id"],
                op=OperationLabel(rec["op"]["name"], tuple(rec["op"]["args"])),
                rval=ReturnValue.from_json(rec["rval"]),
                lvl=rec["lvl"],
                client=rec["client"],
                invoke_ts=rec["invoke_ts"],
                return_ts=rec["return_ts"],
            ))
        return History(events)


def session_order(h: History) -> Relation:
    """so = rb n ss."""
    ss = h.ss
    return Relation(e for e in h.rb.edges if ss.has(*e))


class AbstractExecution:
    """A = (H, vis, ar, par).

    ar is kept as a sequence (the total order read off left to right); par
    maps each event to its own total order sequence.
    """

    def __init__(self, history: History, vis: Relation, ar, par=None):
        self.history = history
        self.vis = vis
        self.ar = tuple(ar)
        if sorted(self.ar) != history.ids():
            raise MalformedHistory("ar must be a permutation of the event ids")
        self._ar_pos = {e: i for i, e in enumerate(self.ar)}
        if par is None:
            par = {e.id: self.ar for e in history}
        self.par = {eid: tuple(seq) for eid, seq in par.items()}
        for eid, seq in self.par.items():
            if sorted(seq) != history.ids():
                raise MalformedHistory("par(%d) must be a permutation" % eid)

    def ar_before(self, a, b):
        return self._ar_pos[a] < self._ar_pos[b]

    def ar_relation(self) -> Relation:
        n = len(self.ar)
        return Relation((self.ar[i], self.ar[j])
                        for i in range(n) for j in range(i + 1, n))

    def par_relation(self, eid) -> Relation:
        seq = self.par[eid]
        n = len(seq)
        return Relation((seq[i], seq[j])
                        for i in range(n) for j in range(i + 1, n))

    def par_equals_ar(self, eid):
        return self.par[eid] == self.ar

    def restrict(self, ids):
        """Induced sub-execution over the given ids (re-identified densely)."""
        sub, mapping = self.history.subhistory(ids)
        keep = set(mapping)
        vis = Relation((mapping[a], mapping[b]) for a, b in self.vis.edges
                       if a in keep and b in keep)
        ar = [mapping[e] for e in self.ar if e in keep]
        par = {mapping[e]: [mapping[x] for x in self.par[e] if x in keep]
               for e in keep}
        return AbstractExecution(sub, vis, ar, par)

    def to_json(self):
        par = {}
        for eid in sorted(self.par):
            par[str(eid)] = "ar" if self.par[eid] == self.ar else list(self.par[eid])
        return {
            "ar": list(self.ar),
            "vis": sorted(self.vis.edges),
            "par": par,
        }

    @staticmethod
    def from_json(history: History, d) -> "AbstractExecution":
        ar = list(d["ar"])
        par = {}
        for k, v in d["par"].items():
            par[int(k)] = ar if v == "ar" else list(v)
        return AbstractExecution(history, Relation(tuple(e) for e in d["vis"]),
                                 ar, par)


def happens_before(a: AbstractExecution) -> Relation:
    """hb = (so u vis)+."""
    so = session_order(a.history)
    return so.union(a.vis).transitive_closure()
