"""Level-parametrized correctness predicates over finite abstract executions.

"Eventually" clauses are given a finite-horizon interpretation: they must
hold exactly for all level-l events at or beyond a configured stabilization
index (in practice, the first tail-probe event injected after the run
quiesces).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .model import (AbstractExecution, Relation, find_cycle, rank,
                    session_order)
from .rdt import RdtSpec, context_of, fcontext_of

HOLDS = "holds"
VIOLATED = "violated"
VACUOUS = "vacuous"


@dataclass(frozen=True)
class HorizonConfig:
    """Finite stand-in for the "eventually / cofinitely" quantifiers.

    Level-l events whose ordinal is >= stabilization_index are the tail
    probes against which EV and CPar are checked exactly.
    """

    stabilization_index: int
    tail_probe_count: int = 3

    def __post_init__(self):
        if self.tail_probe_count < 1:
            raise ValueError("tail_probe_count must be >= 1")


@dataclass(frozen=True)
class PredicateReport:
    predicate: str
    level: Optional[str]
    verdict: str
    counterexample: tuple = ()
    sub_reports: tuple = ()

    @property
    def ok(self):
        return self.verdict != VIOLATED

    def to_json(self):
        return {
            "predicate": self.predicate,
            "level": self.level,
            "verdict": self.verdict,
            "counterexample": [list(c) if isinstance(c, (tuple, list)) else c
                               for c in self.counterexample],
            "sub_reports": [s.to_json() for s in self.sub_reports],
        }

    def line(self):
        lvl = "(%s)" % self.level if self.level else ""
        return "%s%s: %s" % (self.predicate, lvl, self.verdict)


def _tail_events(a, l, hz):
    return [e.id for e in a.history
            if e.lvl == l and e.id >= hz.stabilization_index]


def check_EV(a: AbstractExecution, l: str, hz: HorizonConfig) -> PredicateReport:
    """Every event must be visible to every level-l tail event that rb-follows it."""
    L = a.history.level_events(l)
    if not L:
        return PredicateReport("EV", l, VACUOUS)
    rb = a.history.rb
    bad = []
    for e in a.history.ids():
        for e2 in _tail_events(a, l, hz):
            if e != e2 and rb.has(e, e2) and not a.vis.has(e, e2):
                bad.append((e, e2))
    if bad:
        return PredicateReport("EV", l, VIOLATED, tuple(sorted(bad)))
    return PredicateReport("EV", l, HOLDS)


def check_NCC(a: AbstractExecution, l: str) -> PredicateReport:
    """acyclic(hb n (L x L)): no causal cycle among level-l events."""
    L = set(a.history.level_events(l))
    base = session_order(a.history).union(a.vis)
    hb = base.transitive_closure()
    hb_L = Relation((x, y) for x, y in hb.edges if x in L and y in L)
    cycle = find_cycle(hb_L)
    if cycle is None:
        return PredicateReport("NCC", l, HOLDS)
    # expand to a path through the underlying so u vis edges so the
    # counterexample can be replayed on the induced sub-execution
    support = set(cycle)
    for x, y in zip(cycle, cycle[1:]):
        support |= _path_nodes(base, x, y)
    return PredicateReport("NCC", l, VIOLATED,
                           (tuple(cycle[:-1]), tuple(sorted(support))))


def _path_nodes(rel: Relation, src, dst):
    """Nodes on one shortest rel-path from src to dst (BFS)."""
    frontier = [[src]]
    seen = {src}
    while frontier:
        path = frontier.pop(0)
        for m in sorted(rel.succ(path[-1])):
            if m == dst:
                return set(path + [m])
            if m not in seen:
                seen.add(m)
                frontier.append(path + [m])
    return {src, dst}


def check_RVal(a: AbstractExecution, l: str, spec: RdtSpec) -> PredicateReport:
    """rval(e) = F(op(e), context(A,e)) for every level-l event.

    A pending level-l event can never match F and counts as a violation.
    """
    bad = []
    for e in a.history:
        if e.lvl != l:
            continue
        if e.rval.is_pending():
            bad.append((e.id, "pending"))
            continue
        got = spec.evaluate(e.op, context_of(a, e.id))
        if got != e.rval:
            bad.append((e.id, "expected %r got %r" % (e.rval, got)))
    if bad:
        return PredicateReport("RVal", l, VIOLATED, tuple(bad))
    return PredicateReport("RVal", l, HOLDS)


def check_FRVal(a: AbstractExecution, l: str, spec: RdtSpec) -> PredicateReport:
    """Like RVal but the context order follows the perceived arbitration par(e)."""
    bad = []
    for e in a.history:
        if e.lvl != l:
            continue
        if e.rval.is_pending():
            bad.append((e.id, "pending"))
            continue
        got = spec.evaluate(e.op, fcontext_of(a, e.id))
        if got != e.rval:
            bad.append((e.id, "expected %r got %r" % (e.rval, got)))
    if bad:
        return PredicateReport("FRVal", l, VIOLATED, tuple(bad))
    return PredicateReport("FRVal", l, HOLDS)


def check_CPar(a: AbstractExecution, l: str, hz: HorizonConfig) -> PredicateReport:
    """Perceived arbitration converges: every level-l tail event ranks each
    event it observes exactly as the final arbitration does."""
    bad = []
    ar_rel = a.ar_relation()
    for e2 in _tail_events(a, l, hz):
        carrier = a.vis.pred(e2)
        par_rel = a.par_relation(e2)
        for e in sorted(carrier):
            if rank(carrier, par_rel, e) != rank(carrier, ar_rel, e):
                bad.append((e, e2))
    if bad:
        return PredicateReport("CPar", l, VIOLATED, tuple(sorted(bad)))
    return PredicateReport("CPar", l, HOLDS)


def check_SinOrd(a: AbstractExecution, l: str) -> PredicateReport:
    """vis into level-l events equals arbitration, modulo some set of pending
    events (resolved constructively: exactly the mismatching pending ones)."""
    L = set(a.history.level_events(l))
    pending = {e.id for e in a.history if e.rval.is_pending()}
    vis_L = {(x, y) for x, y in a.vis.edges if y in L}
    ar_L = set()
    for i, x in enumerate(a.ar):
        for y in a.ar[i + 1:]:
            if y in L:
                ar_L.add((x, y))
    excluded = set()
    bad = []
    for x, y in sorted(ar_L - vis_L):
        if x in pending:
            excluded.add(x)
        else:
            bad.append((x, y, "completed event arbitrated before but invisible"))
    # edges removed by E' x E must not survive in vis, and vis must not
    # order against ar
    for x, y in sorted(vis_L - ar_L):
        bad.append((x, y, "visible but arbitrated after"))
    for x, y in sorted(vis_L & ar_L):
        if x in excluded:
            bad.append((x, y, "pending event both excluded and visible"))
    if bad:
        return PredicateReport("SinOrd", l, VIOLATED, tuple(bad))
    return PredicateReport("SinOrd", l, HOLDS,
                           (tuple(sorted(excluded)),) if excluded else ())


def check_SessArb(a: AbstractExecution, l: str) -> PredicateReport:
    """so edges ending in level-l events are respected by arbitration."""
    L = set(a.history.level_events(l))
    if not L:
        return PredicateReport("SessArb", l, VACUOUS)
    so = session_order(a.history)
    bad = [(x, y) for x, y in sorted(so.edges)
           if y in L and not a.ar_before(x, y)]
    if bad:
        return PredicateReport("SessArb", l, VIOLATED, tuple(bad))
    return PredicateReport("SessArb", l, HOLDS)


def check_RT(a: AbstractExecution, l: str) -> PredicateReport:
    """rb between level-l events is respected by arbitration."""
    L = set(a.history.level_events(l))
    if not L:
        return PredicateReport("RT", l, VACUOUS)
    rb = a.history.rb
    bad = [(x, y) for x, y in sorted(rb.edges)
           if x in L and y in L and not a.ar_before(x, y)]
    if bad:
        return PredicateReport("RT", l, VIOLATED, tuple(bad))
    return PredicateReport("RT", l, HOLDS)


COMPOSITES = ("BEC", "FEC", "Seq", "Lin")


def check_composite(a: AbstractExecution, which: str, l: str, spec: RdtSpec,
                    hz: HorizonConfig) -> PredicateReport:
    """BEC = EV & NCC & RVal; FEC = EV & NCC & FRVal & CPar;
    Seq = SinOrd & SessArb & BEC; Lin = SinOrd & RT & BEC."""
    if which == "BEC":
        subs = (check_EV(a, l, hz), check_NCC(a, l), check_RVal(a, l, spec))
    elif which == "FEC":
        subs = (check_EV(a, l, hz), check_NCC(a, l),
                check_FRVal(a, l, spec), check_CPar(a, l, hz))
    elif which == "Seq":
        subs = (check_SinOrd(a, l), check_SessArb(a, l),
                check_composite(a, "BEC", l, spec, hz))
    elif which == "Lin":
        subs = (check_SinOrd(a, l), check_RT(a, l),
                check_composite(a, "BEC", l, spec, hz))
    else:
        raise ValueError("unknown composite %r" % which)
    verdict = VIOLATED if any(s.verdict == VIOLATED for s in subs) else HOLDS
    counter = tuple(s.predicate for s in subs if s.verdict == VIOLATED)
    return PredicateReport(which, l, verdict, counter, tuple(subs))
