"""Context behaviors: what a context computes from one package.

A behavior maps a :class:`~amcs.packing.Package` to a sequence of belief
sets and, optionally, a :class:`SpecUpdate` that reconfigures the context
once the computation has finished.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Protocol

from ..asp.evaluation import match, substitute
from ..asp.grounder import Limits, ground
from ..asp.solver import solve
from ..asp.syntax import Program
from ..asp.terms import Constant, Function, term_key
from ..packing.directives import Package
from .model import BeliefSet, SpecUpdate


@dataclass(frozen=True)
class BehaviorResult:
    belief_sets: tuple = ()
    update: Optional[SpecUpdate] = None


class Behavior(Protocol):
    def run(self, package: Package) -> BehaviorResult: ...


@dataclass(frozen=True)
class ScriptCase:
    """Fires for packages of ``schema`` (any, if ``None``).

    Every joint match of the ``match`` patterns against the package's info
    terms produces the belief-set templates in ``beliefs``, instantiated.
    """

    match: tuple
    beliefs: tuple  # tuple of belief-set templates, each a tuple of terms
    schema: object = None
    update: Optional[SpecUpdate] = None


def _joins(patterns: tuple, terms: list, binding: dict):
    if not patterns:
        yield binding
        return
    for t in terms:
        extended = match(patterns[0], t, binding)
        if extended is not None:
            yield from _joins(patterns[1:], terms, extended)


@dataclass(frozen=True)
class ScriptedBehavior:
    cases: tuple = ()

    def run(self, package: Package) -> BehaviorResult:
        terms = sorted(set(package.info()), key=term_key)
        out = []
        update = None
        for case in self.cases:
            if case.schema is not None and case.schema != package.schema:
                continue
            fired = False
            for binding in _joins(case.match, terms, {}):
                fired = True
                for template in case.beliefs:
                    beliefs = {substitute(b, binding) for b in template}
                    beliefs.discard(None)
                    bs = BeliefSet(frozenset(beliefs))
                    if bs not in out:
                        out.append(bs)
            if fired and case.update is not None:
                update = case.update
        return BehaviorResult(tuple(out), update)


def _is_atom(t) -> bool:
    return type(t) is Constant or type(t) is Function


@dataclass(frozen=True)
class AspBehavior:
    """Belief sets are the answer sets of ``program`` over the package.

    The package contributes its atom-shaped info terms and ``schema(S)`` as
    facts.  ``show`` restricts belief sets to the listed predicate names.
    """

    program: Program
    max_models: Optional[int] = 1
    show: Optional[tuple] = None
    limits: Optional[Limits] = None

    def run(self, package: Package) -> BehaviorResult:
        facts = {t for t in package.info() if _is_atom(t)}
        facts.add(Function("schema", (package.schema,)))
        gp = ground(self.program, facts, self.limits)
        out = []
        for answer in solve(gp, self.max_models):
            atoms = answer.atoms
            if self.show is not None:
                atoms = frozenset(a for a in atoms if _predicate(a) in self.show)
            bs = BeliefSet(frozenset(atoms))
            if bs not in out:
                out.append(bs)
        return BehaviorResult(tuple(out))


def _predicate(atom) -> str:
    return atom.name
