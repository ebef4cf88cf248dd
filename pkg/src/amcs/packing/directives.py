"""Evaluate a packing program over a buffer, decode and apply its directives.

Directive atoms (reserved predicates) in the chosen answer set are turned
into a :class:`DirectiveSet`; every other predicate is auxiliary.  Problems
that leave a usable directive set behind are reported as warnings, either to
a caller-supplied ``report`` callback or through :mod:`warnings`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import Callable, Optional

from ..asp.grounder import Limits, ground
from ..asp.solver import AnswerSet, solve, solve_optimal
from ..asp.syntax import Program
from ..asp.terms import CELL, NIL, Constant, Function, render, term_key
from .buffer import BufferState, encode_facts

Report = Callable[[Warning], None]


class DecodeError(ValueError):
    pass


class MixedVariants(DecodeError):
    """Both process_as_schema/1 and process/2 occur in one answer set."""


class MultipleSchemas(DecodeError):
    """More than one process_as_schema/1 atom."""


class TagConflict(DecodeError):
    """The same tag is added to and removed from the same target."""


class DirectiveWarning(UserWarning):
    pass


class DanglingInPack(DirectiveWarning):
    pass


class UnknownId(DirectiveWarning):
    pass


class EmptyPackage(DirectiveWarning):
    pass


@dataclass(frozen=True)
class Package:
    schema: object
    members: tuple
    records: tuple = ()  # DataSetRecord snapshots, filled in by apply

    def info(self) -> tuple:
        """All pieces of information of the members, in member order."""
        out = []
        for r in self.records:
            out.extend(sorted(r.info, key=term_key))
        return tuple(out)


@dataclass(frozen=True)
class DirectiveSet:
    packages: tuple = ()
    rm_pack: bool = False
    removals: frozenset = frozenset()
    tag_adds: frozenset = frozenset()
    tag_removes: frozenset = frozenset()
    ignores: frozenset = frozenset()

    def is_empty(self) -> bool:
        return not (
            self.packages
            or self.rm_pack
            or self.removals
            or self.tag_adds
            or self.tag_removes
            or self.ignores
        )


def _emit(report: Optional[Report], warning: Warning) -> None:
    if report is None:
        warnings.warn(warning, stacklevel=3)
    else:
        report(warning)


def evaluate(
    program: Program,
    buffer: BufferState,
    mode: str = "first",
    limits: Optional[Limits] = None,
    arrival_facts: bool = False,
) -> Optional[AnswerSet]:
    """Ground ``program`` over the buffer's input facts and pick one answer set.

    Mode ``optimal`` falls back to ``first`` for programs without an
    optimize statement.
    """
    if mode not in ("first", "optimal"):
        raise ValueError(f"unknown evaluation mode {mode!r}")
    gp = ground(program, encode_facts(buffer, arrival_facts), limits)
    if mode == "optimal" and gp.objective is not None:
        return solve_optimal(gp)
    found = solve(gp, 1)
    return found[0] if found else None


def flatten_list(t) -> tuple:
    """Items of a ``__cell`` chain; a non-list tail counts as the last item."""
    out = []
    while type(t) is Function and t.name == CELL and len(t.args) == 2:
        out.append(t.args[0])
        t = t.args[1]
    if t != NIL:
        out.append(t)
    return tuple(out)


def _directive(atom):
    if type(atom) is Constant:
        return atom.name, ()
    if type(atom) is Function:
        return atom.name, atom.args
    return None, ()


def decode(
    answer: AnswerSet, buffer: BufferState, report: Optional[Report] = None
) -> DirectiveSet:
    ds_ids = set(buffer.ids)
    comp_ids = {c.id for c in buffer.computations}

    in_pack, schemas, lists = [], [], []
    rm_pack = False
    removals, adds, removes, ignores = set(), set(), set(), set()

    for atom in sorted(answer.atoms, key=term_key):
        name, args = _directive(atom)
        arity = len(args)
        if name == "in_pack" and arity == 1:
            in_pack.append(args[0])
        elif name == "process_as_schema" and arity == 1:
            schemas.append(args[0])
        elif name == "process" and arity == 2:
            lists.append(args)
        elif name == "rm_pack" and arity == 0:
            rm_pack = True
        elif name == "rm" and arity == 1:
            if args[0] in ds_ids or args[0] in comp_ids:
                removals.add(args[0])
            else:
                _emit(report, UnknownId(f"rm({render(args[0])}): unknown id"))
        elif name in ("add_tag", "rm_tag") and arity == 2:
            if args[0] in ds_ids or args[0] in comp_ids:
                (adds if name == "add_tag" else removes).add(args)
            else:
                _emit(report, UnknownId(f"{name}: unknown target {render(args[0])}"))
        elif name == "ignore" and arity == 1:
            if args[0] in comp_ids:
                ignores.add(args[0])
            else:
                _emit(report, UnknownId(f"ignore({render(args[0])}): unknown computation"))

    if schemas and lists:
        raise MixedVariants("answer set uses both package variants")
    if len(schemas) > 1:
        raise MultipleSchemas(
            "several schemas: " + ", ".join(render(s) for s in schemas)
        )
    conflict = adds & removes
    if conflict:
        target, tag = sorted(conflict, key=lambda p: (term_key(p[0]), term_key(p[1])))[0]
        raise TagConflict(f"tag {render(tag)} both added to and removed from {render(target)}")

    packages = []
    if schemas:
        wanted = set(in_pack)
        for x in in_pack:
            if x not in ds_ids:
                _emit(report, UnknownId(f"in_pack({render(x)}): unknown data set"))
        members = tuple(i for i in buffer.ids if i in wanted)
        if members:
            packages.append(Package(schemas[0], members))
        else:
            _emit(report, EmptyPackage(f"schema {render(schemas[0])} without members"))
    elif in_pack:
        _emit(report, DanglingInPack("in_pack atoms without process_as_schema"))
    for schema, items in lists:
        members = []
        for x in flatten_list(items):
            if x not in ds_ids:
                _emit(report, UnknownId(f"process list member {render(x)} unknown"))
            elif x not in members:
                members.append(x)
        if members:
            packages.append(Package(schema, tuple(members)))
        else:
            _emit(report, EmptyPackage(f"schema {render(schema)} without members"))

    return DirectiveSet(
        packages=tuple(packages),
        rm_pack=rm_pack,
        removals=frozenset(removals),
        tag_adds=frozenset(adds),
        tag_removes=frozenset(removes),
        ignores=frozenset(ignores),
    )


def apply(
    buffer: BufferState, d: DirectiveSet, report: Optional[Report] = None
) -> tuple:
    """Execute ``d`` on ``buffer``; returns ``(new_buffer, packages)``.

    Order: capture packages, rm_pack, rm, tag removals then additions,
    ignore.  Ended computations without records, tags or an ignore mark
    are forgotten afterwards.
    """
    by_id = {r.id: r for r in buffer.records}
    packages = tuple(
        replace(p, records=tuple(by_id[m] for m in p.members if m in by_id))
        for p in d.packages
    )
    gone = set()
    if d.rm_pack:
        for p in packages:
            gone.update(p.members)
    for x in sorted(d.removals, key=term_key):
        if x in by_id:
            if x in gone:
                _emit(report, UnknownId(f"rm({render(x)}): already removed"))
            gone.add(x)
        elif buffer.computation(x) is not None:
            gone.update(r.id for r in buffer.records if r.computation == x)
        else:
            _emit(report, UnknownId(f"rm({render(x)}): unknown id"))
    records = [r for r in buffer.records if r.id not in gone]

    def retag(tags: frozenset, target) -> frozenset:
        drop = {t for x, t in d.tag_removes if x == target}
        add = {t for x, t in d.tag_adds if x == target}
        return (tags - drop) | add

    records = [replace(r, tags=retag(r.tags, r.id)) for r in records]
    computations = [replace(c, tags=retag(c.tags, c.id)) for c in buffer.computations]
    for target, _ in sorted(d.tag_adds | d.tag_removes, key=lambda p: term_key(p[0])):
        if target in gone:
            _emit(report, UnknownId(f"tag target {render(target)} was removed"))

    if d.ignores:
        computations = [
            replace(c, ignored=True) if c.id in d.ignores else c for c in computations
        ]
        records = [r for r in records if r.computation not in d.ignores]

    used = {r.computation for r in records}
    computations = [
        c
        for c in computations
        if c.id in used or not c.ended or c.tags or c.ignored
    ]
    return (
        replace(buffer, records=tuple(records), computations=tuple(computations)),
        packages,
    )


def run_packing(
    program: Program,
    buffer: BufferState,
    mode: str = "first",
    limits: Optional[Limits] = None,
    arrival_facts: bool = False,
    report: Optional[Report] = None,
) -> tuple:
    """encode, evaluate, decode and apply in one step.

    Returns ``(answer, directives, new_buffer, packages)``; for an
    inconsistent program the buffer is returned unchanged.
    """
    answer = evaluate(program, buffer, mode, limits, arrival_facts)
    if answer is None:
        return None, DirectiveSet(), buffer, ()
    d = decode(answer, buffer, report)
    new_buffer, packages = apply(buffer, d, report)
    return answer, d, new_buffer, packages

