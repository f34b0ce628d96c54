"""Deterministic discrete-event scheduler with reliable broadcast (RB),
FIFO reliable broadcast, and total-order broadcast (TOB).

Runs are reproducible: the same Schedule yields byte-identical event logs.
Stable runs deliver every TOB message; asynchronous runs withhold the suffix
of TOB messages cast after a cutoff step.  Partitions defer RB deliveries
across blocks and stall TOB outside the majority block.
"""

from __future__ import annotations

import hashlib
import heapq
import json
import random
from dataclasses import dataclass, field
from typing import Optional

from .model import OperationLabel, ReturnValue
from .predicates import HOLDS, VIOLATED, PredicateReport

RB = "RB"
TOB = "TOB"
FIFO_RB = "FIFO_RB"


class Quiescent(Exception):
    pass


class StepBudgetExceeded(RuntimeError):
    pass


class UnknownReplica(KeyError):
    pass


@dataclass(frozen=True)
class Message:
    id: int
    kind: str
    payload: tuple
    origin: int
    cast_step: int
    cast_event: Optional[int]


@dataclass
class Response:
    event_id: int
    value: ReturnValue
    trace_snapshot: Optional[tuple] = None  # request dots, in trace order
    essential_edges: tuple = ()             # provenance (dep_dot, this_dot) pairs


@dataclass
class Effects:
    casts: list = field(default_factory=list)      # (kind, payload)
    responses: list = field(default_factory=list)  # Response
    req_dot: Optional[tuple] = None                # dot minted for this invoke


@dataclass(frozen=True)
class Invoke:
    at_step: int
    client: str
    replica: int
    op: OperationLabel
    level: str


@dataclass(frozen=True)
class Schedule:
    seed: int = 0
    rb_delay: int = 2
    rb_delays: tuple = ()          # ((origin, dest, delay), ...) overrides
    tob_delay: int = 3
    jitter: int = 0                # extra random delay in [0, jitter]
    clock_skew: tuple = ()         # ((replica, offset), ...)
    tob_cutoff: Optional[int] = None
    partitions: tuple = ()         # ((from_step, (block, block, ...)), ...)

    def link_delay(self, origin, dest):
        for o, d, delay in self.rb_delays:
            if o == origin and d == dest:
                return delay
        return self.rb_delay

    def skew(self, replica):
        for r, off in self.clock_skew:
            if r == replica:
                return off
        return 0

    def blocks_at(self, step):
        current = None
        for from_step, blocks in self.partitions:
            if step >= from_step:
                current = blocks
        return current

    def next_partition_change(self, step):
        for from_step, _ in self.partitions:
            if from_step > step:
                return from_step
        return None


@dataclass
class StepRecord:
    step: int
    replica: Optional[int]
    kind: str                 # invoke | deliver | internal
    detail: dict
    hash_before: str
    hash_after: str
    casts: tuple = ()         # (msg_id, kind)
    responses: tuple = ()     # event ids
    passive_after: bool = True


@dataclass
class EventRecord:
    event_id: int
    replica: int
    op: OperationLabel
    level: str
    local_ro: bool
    client: str
    invoke_step: int
    req_dot: Optional[tuple] = None
    return_step: Optional[int] = None
    rval: Optional[ReturnValue] = None
    tobno: Optional[int] = None
    rbdel: frozenset = frozenset()     # events whose RB message was delivered
    tobdel: frozenset = frozenset()    # events whose TOB message was delivered
    trace_snapshot: Optional[tuple] = None   # event ids, in state-object trace order
    essential_edges: tuple = ()

    @property
    def pending(self):
        return self.return_step is None


@dataclass
class ProtocolTrace:
    """Per-event and per-step metadata captured during a simulation."""

    protocol: str
    events: dict = field(default_factory=dict)   # event id -> EventRecord
    steps: list = field(default_factory=list)    # StepRecord

    def event_ids(self):
        return sorted(self.events)

    def to_json(self):
        events = {}
        for eid, r in sorted(self.events.items()):
            events[str(eid)] = {
                "replica": r.replica,
                "op": {"name": r.op.name, "args": list(r.op.args)},
                "level": r.level,
                "local_ro": r.local_ro,
                "client": r.client,
                "invoke_step": r.invoke_step,
                "req_dot": list(r.req_dot) if r.req_dot else None,
                "return_step": r.return_step,
                "rval": r.rval.to_json() if r.rval is not None else None,
                "tobno": r.tobno,
                "rbdel": sorted(r.rbdel),
                "tobdel": sorted(r.tobdel),
                "trace_snapshot": (list(r.trace_snapshot)
                                   if r.trace_snapshot is not None else None),
                "essential_edges": [list(e) for e in r.essential_edges],
            }
        steps = [{
            "step": s.step, "replica": s.replica, "kind": s.kind,
            "detail": s.detail, "hash_before": s.hash_before,
            "hash_after": s.hash_after, "casts": [list(c) for c in s.casts],
            "responses": list(s.responses), "passive_after": s.passive_after,
        } for s in self.steps]
        return {"protocol": self.protocol, "events": events, "steps": steps}

    @staticmethod
    def from_json(d):
        trace = ProtocolTrace(protocol=d["protocol"])
        for k, r in d["events"].items():
            trace.events[int(k)] = EventRecord(
                event_id=int(k),
                replica=r["replica"],
                op=OperationLabel(r["op"]["name"], tuple(r["op"]["args"])),
                level=r["level"],
                local_ro=r["local_ro"],
                client=r["client"],
                invoke_step=r["invoke_step"],
                req_dot=tuple(r["req_dot"]) if r["req_dot"] else None,
                return_step=r["return_step"],
                rval=(ReturnValue.from_json(r["rval"])
                      if r["rval"] is not None else None),
                tobno=r["tobno"],
                rbdel=frozenset(r["rbdel"]),
                tobdel=frozenset(r["tobdel"]),
                trace_snapshot=(tuple(r["trace_snapshot"])
                                if r["trace_snapshot"] is not None else None),
                essential_edges=tuple(tuple(e) for e in r["essential_edges"]),
            )
        for s in d["steps"]:
            trace.steps.append(StepRecord(
                step=s["step"], replica=s["replica"], kind=s["kind"],
                detail=s["detail"], hash_before=s["hash_before"],
                hash_after=s["hash_after"],
                casts=tuple(tuple(c) for c in s["casts"]),
                responses=tuple(s["responses"]),
                passive_after=s["passive_after"]))
        return trace

    def digest(self):
        h = hashlib.sha256()
        for rec in self.steps:
            h.update(repr((rec.step, rec.replica, rec.kind, sorted(rec.detail.items()),
                           rec.hash_before, rec.hash_after, rec.casts,
                           rec.responses)).encode())
        return h.hexdigest()


# scheduler priority classes: a replica drains internal work before new
# deliveries reach it, and scripted invokes fire only into passive worlds
CLASS_INTERNAL = 0
CLASS_DELIVER = 1
CLASS_INVOKE = 2


class SimWorld:
    def __init__(self, replicas, schedule: Schedule, workload,
                 mode="stable", protocol="unknown"):
        self.replicas = list(replicas)
        self.schedule = schedule
        self.mode = mode
        self.now = 0
        self.rng = random.Random(schedule.seed)
        self.trace = ProtocolTrace(protocol=protocol)
        self._heap = []
        self._seq = 0
        self.messages = {}
        self.tob_log = []              # TOB msg ids in cast order
        self.tob_pointer = [0] * len(self.replicas)
        self.tob_no = {}               # msg id -> dense delivery number
        self.rb_delivered = [set() for _ in self.replicas]
        self.tob_delivered = [set() for _ in self.replicas]
        self.withheld = set()          # msg ids never delivered anywhere
        self._fifo_last_ready = {}
        self._pending_local = []
        self._internal_scheduled = [False] * len(self.replicas)
        self._client_queue = {}
        self._client_waiting = {}
        self._next_event_id = 0
        self._current_event = None
        self._current_replica = None
        for inv in workload:
            self._client_queue.setdefault(inv.client, []).append(inv)
        for q in self._client_queue.values():
            q.sort(key=lambda i: i.at_step)
        for client, q in sorted(self._client_queue.items()):
            self._client_waiting[client] = False
            self._push(q[0].at_step, CLASS_INVOKE, q[0].replica, ("invoke", client))

    # -- scheduling ----------------------------------------------------

    def _push(self, ready, klass, replica, action):
        heapq.heappush(self._heap, (ready, klass, replica, self._seq, action))
        self._seq += 1

    def clock(self, rid):
        return self.now + self.schedule.skew(rid)

    def _same_block(self, a, b):
        blocks = self.schedule.blocks_at(self.now)
        if blocks is None:
            return True
        for block in blocks:
            if a in block:
                return b in block
        return True

    def _majority_block(self):
        blocks = self.schedule.blocks_at(self.now)
        if blocks is None:
            return None
        best = max(blocks, key=lambda b: (len(b), -min(b)))
        return set(best)

    def _refresh_internal(self):
        for rid, rep in enumerate(self.replicas):
            if rep.has_internal() and not self._internal_scheduled[rid]:
                self._internal_scheduled[rid] = True
                self._push(self.now, CLASS_INTERNAL, rid, ("internal", rid))

    # -- casting -------------------------------------------------------

    def _cast(self, kind, payload, origin):
        mid = len(self.messages)
        msg = Message(mid, kind, tuple(payload), origin, self.now,
                      self._current_event)
        self.messages[mid] = msg
        if kind == TOB:
            cutoff = self.schedule.tob_cutoff
            if self.mode == "async" and cutoff is not None and self.now > cutoff:
                self.withheld.add(mid)
                return msg
            self._sequence_tob(mid)
        else:
            for dest in range(len(self.replicas)):
                if dest == origin:
                    continue  # delivered to the caster synchronously below
                ready = self.now + self.schedule.link_delay(origin, dest) \
                    + self._jitter()
                if kind == FIFO_RB:
                    key = (origin, dest)
                    ready = max(ready, self._fifo_last_ready.get(key, -1) + 1)
                    self._fifo_last_ready[key] = ready
                self._push(ready, CLASS_DELIVER, dest, ("deliver", mid, dest))
            self._pending_local.append((msg, origin))
        return msg

    def _sequence_tob(self, mid):
        """Hand a message to the ordering service.  A replica cut off from
        the majority cannot get its message sequenced until the partition
        timeline changes."""
        msg = self.messages[mid]
        majority = self._majority_block()
        if majority is not None and msg.origin not in majority:
            change = self.schedule.next_partition_change(self.now)
            if change is None:
                self.withheld.add(mid)
                return
            self._push(change, CLASS_DELIVER, msg.origin, ("tobcast", mid))
            return
        self.tob_log.append(mid)
        for dest in range(len(self.replicas)):
            ready = self.now + self.schedule.tob_delay + self._jitter()
            self._push(ready, CLASS_DELIVER, dest, ("tob", mid, dest))

    def _flush_local(self):
        """Apply queued same-step local deliveries, after the causing record."""
        while self._pending_local:
            msg, dest = self._pending_local.pop(0)
            self._deliver_local(msg, dest)

    def _deliver_local(self, msg, dest):
        """A replica's own RB message reaches it in the same step it casts."""
        rep = self.replicas[dest]
        before = rep.state_digest()
        effects = rep.on_deliver(msg.kind, msg)
        self.rb_delivered[dest].add(msg.id)
        casts, resps = self._apply_effects(dest, effects)
        self._record(dest, "deliver",
                     {"msg": msg.id, "kind": msg.kind, "local": True},
                     before, casts, resps)

    def _jitter(self):
        if self.schedule.jitter <= 0:
            return 0
        return self.rng.randint(0, self.schedule.jitter)

    # -- effects and trace ---------------------------------------------

    def _delivered_event_sets(self, rid):
        """Events whose RB / TOB messages this replica has delivered."""
        rbdel, tobdel = set(), set()
        for mid in self.rb_delivered[rid]:
            ev = self.messages[mid].cast_event
            if ev is not None and self.messages[mid].kind == RB:
                rbdel.add(ev)
        for mid in self.tob_delivered[rid]:
            ev = self.messages[mid].cast_event
            if ev is not None:
                tobdel.add(ev)
        return frozenset(rbdel), frozenset(tobdel)

    def _dot_to_event(self, dot):
        for rec in self.trace.events.values():
            if rec.req_dot == dot:
                return rec.event_id
        return None

    def _apply_effects(self, rid, effects: Effects):
        cast_ids = []
        for kind, payload in effects.casts:
            msg = self._cast(kind, payload, rid)
            cast_ids.append((msg.id, kind))
        resp_ids = []
        for resp in effects.responses:
            rec = self.trace.events[resp.event_id]
            if rec.return_step is not None:
                # a re-execution produced a duplicate client response; the
                # client only sees the first one
                continue
            rec.return_step = self.now
            rec.rval = resp.value
            rec.rbdel, rec.tobdel = self._delivered_event_sets(rid)
            if resp.trace_snapshot is not None:
                snap = []
                for dot in resp.trace_snapshot:
                    ev = self._dot_to_event(dot)
                    if ev is not None:
                        snap.append(ev)
                rec.trace_snapshot = tuple(snap)
            edges = []
            for dep_dot, this_dot in resp.essential_edges:
                dep = self._dot_to_event(dep_dot) if dep_dot else None
                cur = self._dot_to_event(this_dot) if this_dot else None
                if dep is not None and cur is not None and dep != cur:
                    edges.append((dep, cur))
            rec.essential_edges = tuple(edges)
            resp_ids.append(resp.event_id)
            client = rec.client
            if self._client_waiting.get(client):
                self._client_waiting[client] = False
                self._schedule_next_invoke(client)
        return tuple(cast_ids), tuple(resp_ids)

    def _schedule_next_invoke(self, client):
        q = self._client_queue.get(client)
        if q:
            nxt = q[0]
            self._push(max(nxt.at_step, self.now + 1), CLASS_INVOKE,
                       nxt.replica, ("invoke", client))

    def _record(self, rid, kind, detail, before, casts, responses):
        rep = self.replicas[rid] if rid is not None else None
        after = rep.state_digest() if rep else before
        passive = not rep.has_internal() if rep else True
        self.trace.steps.append(StepRecord(
            step=self.now, replica=rid, kind=kind, detail=detail,
            hash_before=before, hash_after=after, casts=casts,
            responses=responses, passive_after=passive))

    # -- the step loop -------------------------------------------------

    def step(self):
        self._refresh_internal()
        while True:
            if not self._heap:
                raise Quiescent()
            ready, klass, rid, seq, action = heapq.heappop(self._heap)
            self.now = max(self.now + 1, ready)
            if self._dispatch(action, rid):
                return
            # action was deferred or dropped; try the next one

    def _dispatch(self, action, rid):
        kind = action[0]
        if kind == "invoke":
            return self._do_invoke(action[1])
        if kind == "deliver":
            return self._do_deliver(action[1], action[2])
        if kind == "tob":
            return self._do_tob(action[1], action[2])
        if kind == "internal":
            return self._do_internal(action[1])
        if kind == "tobcast":
            self._sequence_tob(action[1])
            return False  # bookkeeping only, no replica acted
        raise AssertionError(kind)

    def _do_invoke(self, client):
        inv = self._client_queue[client].pop(0)
        rid = inv.replica
        if rid >= len(self.replicas):
            raise UnknownReplica(rid)
        rep = self.replicas[rid]
        eid = self._next_event_id
        self._next_event_id += 1
        rec = EventRecord(event_id=eid, replica=rid, op=inv.op, level=inv.level,
                          local_ro=rep.is_local_ro(inv.op, inv.level),
                          client=client, invoke_step=self.now)
        self.trace.events[eid] = rec
        self._current_event = eid
        before = rep.state_digest()
        effects = rep.on_invoke(eid, inv.op, inv.level, self.clock(rid))
        rec.req_dot = getattr(effects, "req_dot", None)
        casts, resps = self._apply_effects(rid, effects)
        self._current_event = None
        self._record(rid, "invoke", {"event": eid, "op": str(inv.op),
                                     "level": inv.level, "ro": rec.local_ro},
                     before, casts, resps)
        if eid not in [r for r in resps] and rec.return_step is None:
            self._client_waiting[client] = True
        else:
            self._schedule_next_invoke(client)
        self._flush_local()
        return True

    def _do_deliver(self, mid, dest):
        msg = self.messages[mid]
        if not self._same_block(msg.origin, dest):
            change = self.schedule.next_partition_change(self.now)
            if change is None:
                self.withheld.add((mid, dest))
                return False
            self._push(change, CLASS_DELIVER, dest, ("deliver", mid, dest))
            return False
        rep = self.replicas[dest]
        before = rep.state_digest()
        effects = rep.on_deliver(msg.kind, msg)
        self.rb_delivered[dest].add(mid)
        casts, resps = self._apply_effects(dest, effects)
        self._record(dest, "deliver", {"msg": mid, "kind": msg.kind},
                     before, casts, resps)
        self._flush_local()
        return True

    def _do_tob(self, mid, dest):
        msg = self.messages[mid]
        idx = self.tob_log.index(mid)
        if idx != self.tob_pointer[dest]:
            # out of order: retry after the earlier deliveries land
            self._push(self.now + 1, CLASS_DELIVER, dest, ("tob", mid, dest))
            return False
        majority = self._majority_block()
        if majority is not None and dest not in majority:
            change = self.schedule.next_partition_change(self.now)
            if change is None:
                self.withheld.add((mid, dest))
                return False
            self._push(change, CLASS_DELIVER, dest, ("tob", mid, dest))
            return False
        if mid not in self.tob_no:
            self.tob_no[mid] = len(self.tob_no) + 1
            ev = msg.cast_event
            if ev is not None:
                self.trace.events[ev].tobno = self.tob_no[mid]
        self.tob_pointer[dest] = idx + 1
        rep = self.replicas[dest]
        before = rep.state_digest()
        effects = rep.on_deliver(TOB, msg)
        self.tob_delivered[dest].add(mid)
        casts, resps = self._apply_effects(dest, effects)
        self._record(dest, "deliver", {"msg": mid, "kind": TOB,
                                       "tobno": self.tob_no[mid]},
                     before, casts, resps)
        self._flush_local()
        return True

    def _do_internal(self, rid):
        self._internal_scheduled[rid] = False
        rep = self.replicas[rid]
        if not rep.has_internal():
            return False
        before = rep.state_digest()
        effects = rep.on_internal()
        casts, resps = self._apply_effects(rid, effects)
        self._record(rid, "internal", {}, before, casts, resps)
        self._flush_local()
        return True

    def run_to_quiescence(self, max_steps=100000):
        steps = 0
        while True:
            try:
                self.step()
            except Quiescent:
                return self
            steps += 1
            if steps > max_steps:
                raise StepBudgetExceeded(steps)

    def run_until(self, step_limit, max_steps=100000):
        """Process actions whose ready time is <= step_limit."""
        steps = 0
        while True:
            self._refresh_internal()
            if not self._heap or self._heap[0][0] > step_limit:
                return self
            try:
                self.step()
            except Quiescent:
                return self
            steps += 1
            if steps > max_steps:
                raise StepBudgetExceeded(steps)

    def inject(self, client, replica, op, level, at_step=None):
        """Add a workload item after construction (e.g. tail probes)."""
        at = self.now + 1 if at_step is None else at_step
        inv = Invoke(at, client, replica, op, level)
        q = self._client_queue.setdefault(client, [])
        fresh = not q and not self._client_waiting.get(client, False)
        q.append(inv)
        if client not in self._client_waiting:
            self._client_waiting[client] = False
            fresh = True
        if fresh:
            self._push(at, CLASS_INVOKE, replica, ("invoke", client))


# -- the five implementation-restriction lints --------------------------

LINT_RULES = (
    "invisible_reads",
    "input_driven_processing",
    "op_driven_messages",
    "highly_available_weak",
    "non_blocking_strong",
)


def check_act_restrictions(trace: ProtocolTrace,
                           strong_budget=200) -> PredicateReport:
    """Check the five replica-implementation rules on a recorded trace."""
    subs = []

    # rule 1: weak read-only invokes leave the state untouched and answer
    # in the invoke step itself
    bad = []
    for rec in trace.steps:
        if rec.kind != "invoke" or not rec.detail.get("ro"):
            continue
        if rec.detail.get("level") != "weak":
            continue
        eid = rec.detail["event"]
        if rec.hash_before != rec.hash_after:
            bad.append((eid, "state changed"))
        if eid not in rec.responses:
            bad.append((eid, "no response in the invoke step"))
    subs.append(PredicateReport("invisible_reads", None,
                                VIOLATED if bad else HOLDS, tuple(bad)))

    # rule 2: internal events happen only between an external stimulus and
    # the next passive state
    bad = []
    active = {}
    for rec in trace.steps:
        rid = rec.replica
        if rec.kind in ("invoke", "deliver"):
            active[rid] = True
        elif rec.kind == "internal" and not active.get(rid, False):
            bad.append((rec.step, rid))
        if rec.passive_after:
            active[rid] = False
    subs.append(PredicateReport("input_driven_processing", None,
                                VIOLATED if bad else HOLDS, tuple(bad)))

    # rule 3: broadcasts require a previously invoked non-read-only operation
    bad = []
    saw_update_invoke = False
    for rec in trace.steps:
        if rec.kind == "invoke" and not rec.detail.get("ro"):
            saw_update_invoke = True
        if rec.casts and not saw_update_invoke:
            bad.append((rec.step, rec.replica))
    subs.append(PredicateReport("op_driven_messages", None,
                                VIOLATED if bad else HOLDS, tuple(bad)))

    # rule 4: weak operations return without awaiting deliveries
    bad = []
    for eid, ev in sorted(trace.events.items()):
        if ev.level != "weak":
            continue
        if ev.return_step is None:
            bad.append((eid, "weak operation never returned"))
            continue
        for rec in trace.steps:
            if (rec.kind == "deliver" and rec.replica == ev.replica
                    and ev.invoke_step < rec.step <= ev.return_step):
                bad.append((eid, "awaited a delivery at step %d" % rec.step))
                break
    subs.append(PredicateReport("highly_available_weak", None,
                                VIOLATED if bad else HOLDS, tuple(bad)))

    # rule 5: a strong operation returns within a bounded number of steps
    # after its last TOB-cast message is TOB-delivered at its own replica
    bad = []
    tob_casts = {}  # event id -> list of msg ids
    for rec in trace.steps:
        for mid, kind in rec.casts:
            if kind != TOB:
                continue
            eid = rec.detail.get("event")
            if rec.kind == "invoke" and eid is not None:
                tob_casts.setdefault(eid, []).append(mid)
    deliveries = {}  # (msg, replica) -> step
    for rec in trace.steps:
        if rec.kind == "deliver" and rec.detail.get("kind") == TOB:
            deliveries[(rec.detail["msg"], rec.replica)] = rec.step
    for eid, ev in sorted(trace.events.items()):
        if ev.level != "strong" or eid not in tob_casts:
            continue
        steps = [deliveries.get((m, ev.replica)) for m in tob_casts[eid]]
        if any(s is None for s in steps):
            continue  # undelivered: the operation may legitimately pend
        deadline = max(steps) + strong_budget
        if ev.return_step is None or ev.return_step > deadline:
            bad.append((eid, "no response by step %d" % deadline))
    subs.append(PredicateReport("non_blocking_strong", None,
                                VIOLATED if bad else HOLDS, tuple(bad)))

    verdict = VIOLATED if any(s.verdict == VIOLATED for s in subs) else HOLDS
    return PredicateReport("act_restrictions", None, verdict,
                           tuple(s.predicate for s in subs if not s.ok),
                           tuple(subs))
