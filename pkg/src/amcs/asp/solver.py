"""Stable-model search over ground programs.

The search branches on the atom table in order, trying *false* before
*true*, so answer sets come out in lexicographic order of their truth
vectors over the table.  Propagation (rule forward/backward chaining,
choice bounds, unfounded atoms) only prunes assignments that cannot be
extended to an answer set; every leaf is confirmed by :func:`check_stable`.

Aggregate literals are evaluated on the candidate interpretation when
forming the reduct, the same way as default-negated literals.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

from .grounder import GroundProgram, aggregate_value
from .syntax import Aggregate, ChoiceHead, Literal
from .terms import render, term_key

UNKNOWN, TRUE, FALSE = 0, 1, -1


class NonIntegerWeight(ValueError):
    pass


class OracleBudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class AnswerSet:
    atoms: frozenset
    objective: Optional[int] = None

    def sorted_atoms(self) -> list:
        return sorted(self.atoms, key=term_key)

    def render(self) -> str:
        return "".join(render(a) + "\n" for a in self.sorted_atoms())

    def __contains__(self, atom) -> bool:
        return atom in self.atoms


# interpretation helpers shared by the checker and the search


def _holds(lit, model) -> bool:
    if isinstance(lit, Aggregate):
        return _aggregate_holds(lit, model)
    return (lit.atom in model) != lit.negated


def _aggregate_holds(agg: Aggregate, model) -> bool:
    tuples = {
        el.terms for el in agg.elements if all(_holds(c, model) for c in el.condition)
    }
    value = aggregate_value(agg.kind, tuples)
    return value is not None and value == agg.target


def _body_holds(body, model) -> bool:
    return all(_holds(lit, model) for lit in body)


def _positive(lits) -> list:
    return [l.atom for l in lits if isinstance(l, Literal) and not l.negated]


def _reduct_applies(lits, model) -> bool:
    """Negative literals and aggregates are fixed by the candidate in the reduct."""
    for l in lits:
        if isinstance(l, Aggregate):
            if not _aggregate_holds(l, model):
                return False
        elif l.negated and l.atom in model:
            return False
    return True


def _choice_count(head: ChoiceHead, model) -> int:
    return len(
        {el.atom for el in head.elements if el.atom in model and _body_holds(el.condition, model)}
    )


def _least_model(facts, definite) -> set:
    """Least model of definite rules given as (head, positive body atoms)."""
    model = set(facts)
    waiting: dict = {}
    counts = []
    queue = list(model)
    for n, (head, body) in enumerate(definite):
        missing = {a for a in body if a not in model}
        counts.append(len(missing))
        if not missing:
            if head not in model:
                model.add(head)
                queue.append(head)
        for a in missing:
            waiting.setdefault(a, []).append(n)
    while queue:
        atom = queue.pop()
        for n in waiting.pop(atom, ()):
            counts[n] -= 1
            if counts[n] == 0:
                head = definite[n][0]
                if head not in model:
                    model.add(head)
                    queue.append(head)
    return model


def check_stable(gp: GroundProgram, candidate: Iterable) -> bool:
    """True iff ``candidate`` (facts included) is an answer set of ``gp``."""
    model = frozenset(candidate)
    if not gp.facts <= model:
        return False
    if not model <= gp.facts | set(gp.atoms):
        return False
    definite = []
    for rule in gp.rules:
        body_true = _body_holds(rule.body, model)
        head = rule.head
        if head is None:
            if body_true:
                return False
            continue
        if isinstance(head, ChoiceHead):
            if body_true:
                n = _choice_count(head, model)
                if head.lower is not None and n < head.lower:
                    return False
                if head.upper is not None and n > head.upper:
                    return False
            if not _reduct_applies(rule.body, model):
                continue
            pos = _positive(rule.body)
            for el in head.elements:
                if el.atom in model and _reduct_applies(el.condition, model):
                    definite.append((el.atom, pos + _positive(el.condition)))
            continue
        if body_true and head not in model:
            return False
        if _reduct_applies(rule.body, model):
            definite.append((head, _positive(rule.body)))
    return _least_model(gp.facts, definite) == model


def objective_value(gp: GroundProgram, model) -> Optional[int]:
    """Sum of the leading weights of the distinct satisfied objective tuples."""
    if gp.objective is None:
        return None
    tuples = {el.terms for el in gp.objective if _body_holds(el.condition, model)}
    total = 0
    for terms in tuples:
        if type(terms[0]) is not int:
            raise NonIntegerWeight(f"weight {render(terms[0])} is not an integer")
        total += terms[0]
    return total


def _answer(gp: GroundProgram, model) -> AnswerSet:
    return AnswerSet(frozenset(model), objective_value(gp, model))


def oracle_answer_sets(gp: GroundProgram, budget: int = 22) -> set:
    """All answer sets by exhaustive enumeration of atom-table subsets."""
    if len(gp.atoms) > budget:
        raise OracleBudgetExceeded(f"{len(gp.atoms)} atoms exceed the oracle budget of {budget}")
    found = set()
    table = list(gp.atoms)
    for bits in itertools.product((False, True), repeat=len(table)):
        candidate = gp.facts | {a for a, b in zip(table, bits) if b}
        if check_stable(gp, candidate):
            found.add(_answer(gp, candidate))
    return found


# search


class _Compiled:
    """Integer-indexed view of a ground program for propagation."""

    def __init__(self, gp: GroundProgram):
        self.gp = gp
        index: dict = {}
        names: list = []

        def idx(atom) -> int:
            i = index.get(atom)
            if i is None:
                i = index[atom] = len(names)
                names.append(atom)
            return i

        for a in gp.atoms:
            idx(a)
        self.branch = list(range(len(gp.atoms)))

        def lits(body):
            pos, neg, aggs = [], [], []
            for l in body:
                if isinstance(l, Aggregate):
                    elements = [(el.terms,) + lits(el.condition)[:2] for el in l.elements]
                    aggs.append((l.kind, l.target, elements))
                elif l.negated:
                    neg.append(idx(l.atom))
                else:
                    pos.append(idx(l.atom))
            return pos, neg, aggs

        self.rules = []
        for rule in gp.rules:
            pos, neg, aggs = lits(rule.body)
            head = rule.head
            if head is None:
                self.rules.append(("constraint", None, pos, neg, aggs))
            elif isinstance(head, ChoiceHead):
                elements = [(idx(el.atom),) + lits(el.condition)[:2] for el in head.elements]
                self.rules.append(("choice", (head.lower, head.upper, elements), pos, neg, aggs))
            else:
                self.rules.append(("normal", idx(head), pos, neg, aggs))
        self.names = names
        self.initial = [UNKNOWN] * len(names)
        table = set(gp.atoms)
        for i, atom in enumerate(names):
            if atom in gp.facts:
                self.initial[i] = TRUE
            elif atom not in table:
                self.initial[i] = FALSE


def _cond_state(pos, neg, val) -> int:
    state = TRUE
    for a in pos:
        v = val[a]
        if v == FALSE:
            return FALSE
        if v == UNKNOWN:
            state = UNKNOWN
    for a in neg:
        v = val[a]
        if v == TRUE:
            return FALSE
        if v == UNKNOWN:
            state = UNKNOWN
    return state


def _agg_state(agg, val) -> int:
    kind, target, elements = agg
    tuples = set()
    for terms, pos, neg in elements:
        s = _cond_state(pos, neg, val)
        if s == UNKNOWN:
            return UNKNOWN
        if s == TRUE:
            tuples.add(terms)
    value = aggregate_value(kind, tuples)
    return TRUE if value is not None and value == target else FALSE


def _body_state(pos, neg, aggs, val):
    """(state, unknown simple literals as (atom, wanted_value), unknown aggregates)."""
    state = TRUE
    unknown = []
    open_aggs = 0
    for a in pos:
        v = val[a]
        if v == FALSE:
            return FALSE, None, 0
        if v == UNKNOWN:
            state = UNKNOWN
            unknown.append((a, TRUE))
    for a in neg:
        v = val[a]
        if v == TRUE:
            return FALSE, None, 0
        if v == UNKNOWN:
            state = UNKNOWN
            unknown.append((a, FALSE))
    for agg in aggs:
        s = _agg_state(agg, val)
        if s == FALSE:
            return FALSE, None, 0
        if s == UNKNOWN:
            state = UNKNOWN
            open_aggs += 1
    return state, unknown, open_aggs


def _set(val, atom, value) -> bool:
    current = val[atom]
    if current == UNKNOWN:
        val[atom] = value
        return True
    if current != value:
        raise _Conflict
    return False


class _Conflict(Exception):
    pass


def _propagate(cp: _Compiled, val: list) -> bool:
    try:
        changed = True
        while changed:
            changed = False
            for kind, head, pos, neg, aggs in cp.rules:
                state, unknown, open_aggs = _body_state(pos, neg, aggs, val)
                if state == FALSE:
                    continue
                if kind == "normal":
                    if state == TRUE:
                        changed |= _set(val, head, TRUE)
                    elif val[head] == FALSE and len(unknown) == 1 and not open_aggs:
                        a, wanted = unknown[0]
                        changed |= _set(val, a, -wanted)
                elif kind == "constraint":
                    if state == TRUE:
                        raise _Conflict
                    if len(unknown) == 1 and not open_aggs:
                        a, wanted = unknown[0]
                        changed |= _set(val, a, -wanted)
                elif state == TRUE:
                    changed |= _propagate_choice(head, val)
            changed |= _unfounded(cp, val)
        return True
    except _Conflict:
        return False


def _propagate_choice(head, val) -> bool:
    lower, upper, elements = head
    true_atoms, open_atoms = set(), set()
    for atom, pos, neg in elements:
        s = _cond_state(pos, neg, val)
        if s == FALSE or val[atom] == FALSE:
            continue
        if s == TRUE and val[atom] == TRUE:
            true_atoms.add(atom)
        else:
            open_atoms.add(atom)
    open_atoms -= true_atoms
    if upper is not None and len(true_atoms) > upper:
        raise _Conflict
    if lower is not None and len(true_atoms) + len(open_atoms) < lower:
        raise _Conflict
    changed = False
    if upper is not None and len(true_atoms) == upper:
        for atom, pos, neg in elements:
            if atom not in true_atoms and _cond_state(pos, neg, val) == TRUE:
                changed |= _set(val, atom, FALSE)
    elif lower is not None and len(true_atoms) + len(open_atoms) == lower:
        for atom, pos, neg in elements:
            if atom in open_atoms and _cond_state(pos, neg, val) == TRUE:
                changed |= _set(val, atom, TRUE)
    return changed


def _unfounded(cp: _Compiled, val: list) -> bool:
    """Falsify atoms that cannot be derived under any extension of ``val``."""
    supported = [v == TRUE and cp.names[i] in cp.gp.facts for i, v in enumerate(val)]
    grew = True
    while grew:
        grew = False
        for kind, head, pos, neg, aggs in cp.rules:
            if kind == "constraint":
                continue
            if any(val[a] == TRUE for a in neg):
                continue
            if not all(supported[a] and val[a] != FALSE for a in pos):
                continue
            if any(_agg_state(agg, val) == FALSE for agg in aggs):
                continue
            if kind == "normal":
                if not supported[head] and val[head] != FALSE:
                    supported[head] = grew = True
                continue
            for atom, epos, eneg in head[2]:
                if supported[atom] or val[atom] == FALSE:
                    continue
                if any(val[a] == TRUE for a in eneg):
                    continue
                if all(supported[a] and val[a] != FALSE for a in epos):
                    supported[atom] = grew = True
    changed = False
    for i, ok in enumerate(supported):
        if not ok:
            changed |= _set(val, i, FALSE)
    return changed


def _search(gp: GroundProgram) -> Iterator[AnswerSet]:
    cp = _Compiled(gp)
    stack = [list(cp.initial)]
    while stack:
        val = stack.pop()
        if not _propagate(cp, val):
            continue
        nxt = next((i for i in cp.branch if val[i] == UNKNOWN), None)
        if nxt is None:
            model = gp.facts | {cp.names[i] for i in cp.branch if val[i] == TRUE}
            if check_stable(gp, model):
                yield _answer(gp, model)
            continue
        yes = list(val)
        yes[nxt] = TRUE
        no = val
        no[nxt] = FALSE
        stack.append(yes)
        stack.append(no)


def solve(gp: GroundProgram, max_models: Optional[int] = 1) -> list:
    """Answer sets of ``gp`` in enumeration order; ``max_models=None`` for all."""
    out = []
    if max_models is not None and max_models <= 0:
        raise ValueError("max_models must be positive")
    for answer in _search(gp):
        out.append(answer)
        if max_models is not None and len(out) >= max_models:
            break
    return out


def solve_optimal(gp: GroundProgram) -> Optional[AnswerSet]:
    """An answer set with the best objective; ties go to the earliest found."""
    if gp.objective is None:
        raise ValueError("program has no optimize statement")
    best = None
    for answer in _search(gp):
        if best is None:
            best = answer
        elif gp.sense == "maximize" and answer.objective > best.objective:
            best = answer
        elif gp.sense == "minimize" and answer.objective < best.objective:
            best = answer
    return best
