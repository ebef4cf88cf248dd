"""Deterministic virtual-time scheduler for asynchronous multi-context systems.

Events sit in a heap keyed by ``(time, seq)``; ``seq`` increases with every
insertion, so simultaneous events run in the order they were scheduled.
Interval ticks are *passive*: they never keep a run-to-quiescence alive
on their own.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

from ..asp.grounder import Limits
from ..asp.terms import Function, render, term_key
from ..packing.buffer import EOC, BufferState, encode_facts, fresh_computation_id, fresh_dataset_id, ingest
from ..packing.directives import run_packing
from .model import (
    BeliefSet,
    ContextBusy,
    ContextSpec,
    DataSet,
    Emission,
    SensorSpec,
    UnknownStakeholder,
    relout,
    stakeholders,
    tags_for,
)
from .trace import TraceRecord

RESERVED = {
    ("in_pack", 1),
    ("process_as_schema", 1),
    ("process", 2),
    ("rm", 1),
    ("rm_pack", 0),
    ("add_tag", 2),
    ("rm_tag", 2),
    ("ignore", 1),
}


class QueueEmpty(LookupError):
    pass


class DuplicateName(ValueError):
    pass


def _terms(ts: Iterable) -> list:
    return [render(t) for t in sorted(ts, key=term_key)]


def _is_directive(atom) -> bool:
    if type(atom) is Function:
        return (atom.name, len(atom.args)) in RESERVED
    return (getattr(atom, "name", None), 0) in RESERVED


@dataclass
class ContextState:
    spec: ContextSpec
    buffer: BufferState = field(default_factory=BufferState)
    busy: bool = False
    dirty: bool = False
    eval_pending: bool = False
    computation: object = None
    update: object = None


@dataclass(frozen=True)
class _Event:
    kind: str
    target: str
    data: tuple = ()
    passive: bool = False


class Engine:
    def __init__(
        self,
        contexts: Iterable[ContextSpec] = (),
        sensors: Iterable[SensorSpec] = (),
        output_streams: Iterable[str] = (),
        *,
        delay: int = 0,
        jitter: int = 0,
        seed: int = 0,
        limits: Optional[Limits] = None,
    ):
        self.contexts: dict = {}
        self.sensors: dict = {}
        self.streams: dict = {}
        seen = set()
        for kind, items in (("context", contexts), ("sensor", sensors), ("stream", output_streams)):
            for item in items:
                name = item if kind == "stream" else item.name
                if name in seen:
                    raise DuplicateName(f"name {name!r} used twice")
                seen.add(name)
                if kind == "context":
                    self.contexts[name] = ContextState(item)
                elif kind == "sensor":
                    self.sensors[name] = item
                else:
                    self.streams[name] = []
        if delay < 0 or jitter < 0:
            raise ValueError("delay and jitter must be nonnegative")
        self.delay = delay
        self.jitter = jitter
        self.limits = limits
        self.clock = 0
        self.trace: list = []
        self._rng = random.Random(seed)
        self._queue: list = []
        self._seq = 0
        self._active = 0
        self._ds_counter = 0
        self._comp_counter = 0
        self._link_last: dict = {}
        self._link_pending: dict = {}
        for sensor in self.sensors.values():
            for e in sensor.script:
                self._push(e.t, _Event("emit", sensor.name, (e,)))
        for st in self.contexts.values():
            trig = st.spec.trigger
            if trig.kind == "interval":
                self._push(trig.interval, _Event("tick", st.spec.name, passive=True))

    # scheduling

    def _push(self, t: int, event: _Event) -> None:
        heapq.heappush(self._queue, (t, self._seq, event))
        self._seq += 1
        if not event.passive:
            self._active += 1

    def _record(self, kind: str, ctx: str, **payload) -> None:
        self.trace.append(TraceRecord(self.clock, len(self.trace), kind, ctx, payload))

    @property
    def pending(self) -> int:
        return len(self._queue)

    @property
    def quiescent(self) -> bool:
        return self._active == 0 and not any(s.busy for s in self.contexts.values())

    def step(self) -> list:
        """Execute the earliest event; returns the trace records it produced."""
        if not self._queue:
            raise QueueEmpty("no pending events")
        t, _, event = heapq.heappop(self._queue)
        if not event.passive:
            self._active -= 1
        self.clock = t
        start = len(self.trace)
        getattr(self, "_on_" + event.kind)(event)
        return self.trace[start:]

    def run_until(self, t_end: Optional[int] = None) -> list:
        """Step while the next event is due by ``t_end`` (``None``: until quiescent)."""
        if t_end is not None and t_end < self.clock:
            raise ValueError("cannot run backwards in time")
        while self._queue:
            if t_end is None:
                if self._active == 0:
                    break
            elif self._queue[0][0] > t_end:
                break
            self.step()
        if t_end is not None:
            self.clock = t_end
        return list(self.trace)

    def request_evaluation(self, name: str) -> None:
        """Ask a (typically manually triggered) context to evaluate now."""
        st = self.contexts[name]
        if st.busy:
            st.dirty = True
        elif not st.eval_pending:
            st.eval_pending = True
            self._push(self.clock, _Event("eval", name))

    # delivery

    def dispatch(
        self,
        ds: DataSet,
        stakeholder: str,
        computation=None,
        tags: frozenset = frozenset(),
        ds_id=None,
    ) -> None:
        if stakeholder in self.streams:
            self.streams[stakeholder].append((self.clock, ds))
            return
        if stakeholder not in self.contexts:
            raise UnknownStakeholder(f"no context or output stream named {stakeholder!r}")
        link = (ds.source, stakeholder)
        due = self.clock + self.delay
        if self.jitter:
            due += self._rng.randint(0, self.jitter)
        due = max(due, self._link_last.get(link, 0))
        self._link_last[link] = due
        data = (ds, computation, tags, ds_id)
        if due == self.clock and not self._link_pending.get(link):
            self._deliver(stakeholder, *data)
        else:
            self._link_pending[link] = self._link_pending.get(link, 0) + 1
            self._push(due, _Event("deliver", stakeholder, data))

    def _on_deliver(self, event: _Event) -> None:
        link = (event.data[0].source, event.target)
        self._link_pending[link] -= 1
        self._deliver(event.target, *event.data)

    def _deliver(self, target: str, ds: DataSet, computation, tags, ds_id) -> None:
        st = self.contexts[target]
        if ds.is_eoc:
            st.buffer = ingest(st.buffer, ds.source, computation, ds.info, clock=self.clock)
            self._record("eoc", target, event="received", source=ds.source, comp=render(computation))
        else:
            k = self._ds_counter
            self._ds_counter += 1
            if ds_id is None:
                ds_id = fresh_dataset_id(k)
            tags = frozenset(tags) | tags_for(st.spec.receive_tags, ds.info)
            before = len(st.buffer.records)
            st.buffer = ingest(
                st.buffer,
                ds.source,
                computation,
                ds.info,
                (Function("created", (self.clock,)),),
                tags=tags,
                ds_id=ds_id,
                arrival_index=k,
                clock=self.clock,
            )
            comp = None if computation is None else render(computation)
            if len(st.buffer.records) == before:
                self._record("append", target, source=ds.source, comp=comp, dropped=True)
                return
            record = st.buffer.records[-1]
            self._record(
                "append",
                target,
                source=ds.source,
                comp=comp,
                id=render(record.id),
                info=_terms(record.info),
                tags=_terms(record.tags),
            )
        if st.spec.trigger.kind == "on_arrival":
            self.request_evaluation(target)

    def _on_emit(self, event: _Event) -> None:
        sensor = self.sensors[event.target]
        e: Emission = event.data[0]
        ds = DataSet(sensor.name, frozenset(e.info))
        for target in sensor.targets:
            self.dispatch(ds, target, None, e.tags, e.id)

    # packing

    def _on_tick(self, event: _Event) -> None:
        st = self.contexts[event.target]
        self._push(self.clock + st.spec.trigger.interval, event)
        if st.busy:
            st.dirty = True
        elif not st.eval_pending:
            self._evaluate(st)

    def _on_eval(self, event: _Event) -> None:
        st = self.contexts[event.target]
        st.eval_pending = False
        if st.busy:
            st.dirty = True
            return
        self._evaluate(st)

    def _evaluate(self, st: ContextState) -> None:
        spec = st.spec
        buffer = replace(st.buffer, clock=self.clock)
        facts = encode_facts(buffer, spec.arrival_facts)
        problems: list = []
        answer, _, new_buffer, packages = run_packing(
            spec.packing_program,
            buffer,
            spec.eval_mode,
            self.limits,
            spec.arrival_facts,
            report=problems.append,
        )
        self._record(
            "eval",
            spec.name,
            facts=_terms(facts),
            consistent=answer is not None,
            directives=[] if answer is None else _terms(a for a in answer.atoms if _is_directive(a)),
            objective=None if answer is None else answer.objective,
            buffer=[render(r.id) for r in new_buffer.records],
        )
        for w in problems:
            self._record("directive_warning", spec.name, warning=type(w).__name__, message=str(w))
        st.buffer = new_buffer
        for p in packages:
            self._record(
                "package",
                spec.name,
                schema=render(p.schema),
                members=[render(m) for m in p.members],
            )
        if packages:
            self.start_computation(spec.name, packages)

    # computations

    def start_computation(self, name: str, batch) -> None:
        st = self.contexts[name]
        if st.busy:
            raise ContextBusy(f"context {name} is computing")
        if not batch:
            raise ValueError("empty package batch")
        comp = fresh_computation_id(self._comp_counter)
        self._comp_counter += 1
        st.busy = True
        st.computation = comp
        self._record(
            "compute_start",
            name,
            comp=render(comp),
            schemas=[render(p.schema) for p in batch],
        )
        latency = st.spec.compute_latency
        t = self.clock
        update = None
        produced = 0
        for package in batch:
            result = st.spec.behavior.run(package)
            for bs in result.belief_sets:
                t += latency
                produced += 1
                self._push(t, _Event("belief", name, (comp, bs)))
            if result.update is not None:
                update = result.update
        if not produced:
            t += latency
        st.update = update
        self._push(t, _Event("eoc", name, (comp,)))

    def _on_belief(self, event: _Event) -> None:
        comp, bs = event.data
        self._record("belief", event.target, comp=render(comp), beliefs=_terms(bs.beliefs))
        self.emit_for_belief(event.target, bs, comp)

    def emit_for_belief(self, name: str, bs: BeliefSet, comp=None) -> None:
        spec = self.contexts[name].spec
        for target in stakeholders(spec.output_rules):
            ds = relout(name, bs, spec.output_rules, target)
            if not ds.info:
                continue
            tags = tags_for(spec.send_tags, ds.info)
            self._record(
                "output",
                name,
                to=target,
                comp=None if comp is None else render(comp),
                info=_terms(ds.info),
                tags=_terms(tags),
            )
            self.dispatch(ds, target, comp, tags)

    def _on_eoc(self, event: _Event) -> None:
        self.emit_eoc(event.target, event.data[0])

    def emit_eoc(self, name: str, comp) -> None:
        st = self.contexts[name]
        targets = stakeholders(st.spec.output_rules)
        self._record("eoc", name, event="sent", comp=render(comp), to=list(targets))
        for target in targets:
            self.dispatch(DataSet(name, frozenset((EOC,))), target, comp)
        st.busy = False
        st.computation = None
        if st.update is not None:
            changes = {k: v for k, v in vars(st.update).items() if v is not None}
            st.spec = replace(st.spec, **changes)
            st.update = None
        if st.dirty:
            st.dirty = False
            self.request_evaluation(name)
