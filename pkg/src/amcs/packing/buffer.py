"""Information buffers and their encoding as packing-program input facts.

A buffer is an immutable snapshot: :func:`ingest` returns a new state and
never mutates its argument.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Optional

from ..asp.terms import Constant, Function, is_ground, render, term_key

EOC = Constant("eoc")


class MixedEoc(ValueError):
    """An eoc notification must be the only piece of information in its data set."""


@dataclass(frozen=True)
class DataSetRecord:
    id: object
    source: str
    computation: object
    info: frozenset
    tags: frozenset
    arrival_index: int


@dataclass(frozen=True)
class ComputationRecord:
    id: object
    source: str
    ended: bool = False
    tags: frozenset = frozenset()
    ignored: bool = False


@dataclass(frozen=True)
class BufferState:
    records: tuple = ()
    computations: tuple = ()  # ComputationRecord, in order of first sight
    clock: int = 0
    next_index: int = 0

    def computation(self, comp_id) -> Optional[ComputationRecord]:
        for c in self.computations:
            if c.id == comp_id:
                return c
        return None

    def record(self, ds_id) -> Optional[DataSetRecord]:
        for r in self.records:
            if r.id == ds_id:
                return r
        return None

    @property
    def ids(self) -> tuple:
        return tuple(r.id for r in self.records)


def fresh_dataset_id(k: int):
    return Function("ds", (k,))


def fresh_computation_id(k: int):
    return Function("comp", (k,))


def _with_computation(buffer: BufferState, comp: ComputationRecord) -> tuple:
    out = []
    found = False
    for c in buffer.computations:
        if c.id == comp.id:
            out.append(comp)
            found = True
        else:
            out.append(c)
    if not found:
        out.append(comp)
    return tuple(out)


def ingest(
    buffer: BufferState,
    source: str,
    computation,
    info: Iterable,
    engine_tags: Iterable = (),
    *,
    tags: Iterable = (),
    ds_id=None,
    arrival_index: Optional[int] = None,
    clock: Optional[int] = None,
) -> BufferState:
    """Place one data set on the buffer.

    ``tags`` carries sender- and receiver-assigned tags; ``engine_tags`` the
    ones supplied by the runtime.  Without explicit ``ds_id`` and
    ``arrival_index`` the buffer's own counter provides ``ds(k)`` and ``k``.
    """
    info = frozenset(info)
    if not info:
        raise ValueError("a data set needs at least one piece of information")
    for t in info:
        if not is_ground(t):
            raise ValueError(f"information {render(t)} is not ground")
    if clock is None:
        clock = buffer.clock
    if EOC in info:
        if len(info) > 1:
            raise MixedEoc("eoc cannot be combined with other information")
        if computation is None:
            raise ValueError("eoc notification without a computation")
        comp = buffer.computation(computation) or ComputationRecord(computation, source)
        return replace(
            buffer,
            computations=_with_computation(buffer, replace(comp, ended=True)),
            clock=clock,
        )
    if computation is not None:
        comp = buffer.computation(computation)
        if comp is not None and comp.ignored:
            return replace(buffer, clock=clock)
    index = buffer.next_index if arrival_index is None else arrival_index
    if buffer.records and index <= buffer.records[-1].arrival_index:
        raise ValueError("arrival indices must increase")
    if ds_id is None:
        ds_id = fresh_dataset_id(index)
    if buffer.record(ds_id) is not None:
        raise ValueError(f"duplicate data set id {render(ds_id)}")
    record = DataSetRecord(
        id=ds_id,
        source=source,
        computation=computation,
        info=info,
        tags=frozenset(engine_tags) | frozenset(tags),
        arrival_index=index,
    )
    computations = buffer.computations
    if computation is not None and buffer.computation(computation) is None:
        computations = computations + (ComputationRecord(computation, source),)
    return BufferState(
        records=buffer.records + (record,),
        computations=computations,
        clock=clock,
        next_index=max(buffer.next_index, index + 1),
    )


def _fact(name: str, *args):
    return Function(name, args)


def encode_facts(buffer: BufferState, arrival_facts: bool = False) -> frozenset:
    """Input atoms describing ``buffer`` for a packing program."""
    facts = {_fact("time", buffer.clock)}
    for r in buffer.records:
        facts.add(_fact("ds_avail", r.id))
        facts.add(_fact("source", r.id, Constant(r.source)))
        if r.computation is not None:
            facts.add(_fact("ds_comp", r.id, r.computation))
        for t in r.tags:
            facts.add(_fact("tag", r.id, t))
        if arrival_facts:
            facts.add(_fact("arrived", r.id, r.arrival_index))
    for c in buffer.computations:
        facts.add(_fact("source", c.id, Constant(c.source)))
        if c.ended:
            facts.add(_fact("eoc", c.id))
        for t in c.tags:
            facts.add(_fact("tag", c.id, t))
    return frozenset(facts)


def render_facts(facts: Iterable) -> str:
    """Program text for a fact set, one fact per line in term order."""
    return "".join(render(f) + ".\n" for f in sorted(facts, key=term_key))
