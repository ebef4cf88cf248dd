"""Bottom-up instantiation of packing programs.

Predicates are grounded one strongly connected component at a time, in
dependency order, with semi-naive iteration inside each component.  When a
component is finished its atoms are classified with a well-founded style
alternating fixpoint: atoms derivable in every answer set become facts,
atoms without possible support are dropped, and the remaining atoms stay
undecided.  Literals over decided atoms are simplified away, which lets
aggregates over lower components be evaluated to a single value while
grounding.
"""

from __future__ import annotations

import os
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

import networkx as nx

from .evaluation import match, substitute
from .syntax import (
    Aggregate,
    AggregateElement,
    ChoiceElement,
    ChoiceHead,
    Comparison,
    Literal,
    OptimizeElement,
    Program,
    RangeBind,
    Rule,
    aggregate_globals,
    outside_variables,
)
from .terms import (
    BinOp,
    Constant,
    Function,
    Negate,
    Variable,
    compare_terms,
    depth,
    is_ground,
    render,
    term_key,
    variables,
)


class GroundingError(Exception):
    pass


class GroundingBudgetExceeded(GroundingError):
    pass


class RecursiveAggregate(GroundingError):
    pass


@dataclass(frozen=True)
class Limits:
    max_ground_atoms: int = 10**6
    max_term_depth: int = 64
    oracle_atoms: int = 22

    @classmethod
    def from_env(cls, environ=None) -> "Limits":
        environ = os.environ if environ is None else environ
        kwargs = {}
        for name, var in (
            ("max_ground_atoms", "AMCS_MAX_GROUND_ATOMS"),
            ("max_term_depth", "AMCS_MAX_TERM_DEPTH"),
            ("oracle_atoms", "AMCS_ORACLE_BUDGET"),
        ):
            if environ.get(var):
                kwargs[name] = int(environ[var])
        return cls(**kwargs)


@dataclass(frozen=True)
class GroundProgram:
    """A ground program split into facts and undecided atoms.

    ``atoms`` is the atom table the solver branches on (sorted by the term
    order); ``facts`` hold in every answer set.  ``objective`` is ``None`` when
    the source program had no optimize statement.
    """

    atoms: tuple = ()
    facts: frozenset = frozenset()
    rules: tuple = ()
    objective: Optional[tuple] = None
    sense: Optional[str] = None

    def __str__(self) -> str:
        lines = [render(a) + "." for a in sorted(self.facts, key=term_key)]
        lines += [str(r) for r in self.rules]
        if self.objective is not None:
            inner = ";".join(str(e) for e in self.objective)
            lines.append(f"#{self.sense}{{{inner}}}.")
        return "".join(line + "\n" for line in lines)


def signature(atom):
    if type(atom) is Function:
        return (atom.name, len(atom.args))
    if type(atom) is Constant:
        return (atom.name, 0)
    raise GroundingError(f"{render(atom)} is not an atom")


def _arith_ready(t, binding) -> bool:
    tt = type(t)
    if tt is Function:
        return all(_arith_ready(a, binding) for a in t.args)
    if tt is BinOp or tt is Negate:
        return all(v.name in binding for v in variables(t))
    return True


def _all_bound(t, binding) -> bool:
    return all(v.name in binding for v in variables(t))


def _compare(op: str, a, b) -> bool:
    if op == "=":
        return a == b
    if op == "!=":
        return a != b
    c = compare_terms(a, b)
    if op == "<":
        return c < 0
    if op == "<=":
        return c <= 0
    if op == ">":
        return c > 0
    return c >= 0


def aggregate_value(kind: str, tuples):
    """Value of an aggregate over a set of distinct term tuples (``None`` if empty)."""
    tuples = set(tuples)
    if not tuples:
        return None
    if kind == "count":
        return len(tuples)
    firsts = [t[0] for t in tuples]
    if kind == "max":
        return max(firsts, key=term_key)
    return min(firsts, key=term_key)


class _RuleInfo:
    __slots__ = ("rule", "outside", "globals", "head_sigs", "pos_sigs", "recursive", "naive")

    def __init__(self, rule: Rule):
        self.rule = rule
        self.outside = outside_variables(rule)
        self.globals = {
            i: aggregate_globals(lit, self.outside)
            for i, lit in enumerate(rule.body)
            if isinstance(lit, Aggregate)
        }
        if rule.head is None:
            self.head_sigs = set()
        elif isinstance(rule.head, ChoiceHead):
            self.head_sigs = {signature(e.atom) for e in rule.head.elements}
        else:
            self.head_sigs = {signature(rule.head)}
        self.pos_sigs = [
            signature(lit.atom) if isinstance(lit, Literal) and not lit.negated else None
            for lit in rule.body
        ]
        self.recursive = []
        self.naive = False


def _body_sigs(rule: Rule):
    """Yield (signature, through_aggregate) for every atom the rule depends on."""
    for lit in rule.body:
        if isinstance(lit, Literal):
            yield signature(lit.atom), False
        elif isinstance(lit, Aggregate):
            for el in lit.elements:
                for c in el.condition:
                    if isinstance(c, Literal):
                        yield signature(c.atom), True
    if isinstance(rule.head, ChoiceHead):
        for el in rule.head.elements:
            for c in el.condition:
                if isinstance(c, Literal):
                    yield signature(c.atom), False


class _Grounder:
    def __init__(self, program: Program, facts: Iterable, limits: Limits):
        self.program = program
        self.limits = limits
        self.by_sig: dict = defaultdict(list)
        self.index: dict = defaultdict(lambda: defaultdict(list))
        self.added: dict = {}
        self.certain: set = set()
        self.possible: set = set()
        self.current: set = set()
        self.round = -1
        self.ground_rules: dict = {}
        for atom in sorted(set(facts), key=term_key):
            if not is_ground(atom):
                raise GroundingError(f"fact {render(atom)} is not ground")
            self._add(atom)
            self.certain.add(atom)

    # atom store

    def _add(self, atom) -> None:
        if atom in self.possible:
            return
        if type(atom) is Function:
            for a in atom.args:
                if depth(a) > self.limits.max_term_depth:
                    raise GroundingBudgetExceeded(
                        f"term depth exceeds {self.limits.max_term_depth} in {render(atom)[:80]}..."
                    )
        if len(self.added) >= self.limits.max_ground_atoms:
            raise GroundingBudgetExceeded(
                f"more than {self.limits.max_ground_atoms} ground atoms"
            )
        sig = signature(atom)
        self.possible.add(atom)
        self.added[atom] = self.round
        self.by_sig[sig].append(atom)
        if type(atom) is Function:
            self.index[sig][atom.args[0]].append(atom)

    def _rebuild(self, sig) -> None:
        atoms = [a for a in self.by_sig[sig] if a in self.possible]
        self.by_sig[sig] = atoms
        idx = defaultdict(list)
        for a in atoms:
            if type(a) is Function:
                idx[a.args[0]].append(a)
        self.index[sig] = idx

    def _candidates(self, pattern, binding, source):
        sig = signature(pattern)
        pool = None
        if type(pattern) is Function:
            first = pattern.args[0]
            if not isinstance(first, (Variable, BinOp, Negate)) and is_ground(first):
                pool = self.index[sig].get(first, ())
            elif type(first) is Variable and first.name in binding:
                pool = self.index[sig].get(binding[first.name], ())
        if pool is None:
            pool = self.by_sig.get(sig, ())
        if source is None:
            return pool
        kind, r = source
        if kind == "old":
            return [a for a in pool if self.added[a] < r]
        return [a for a in pool if self.added[a] == r]

    # literal status (valid for atoms of finished components)

    def _residual(self, lit: Literal):
        """True if satisfied, False if violated, else the literal to keep."""
        atom = lit.atom
        if atom in self.certain:
            return not lit.negated
        if atom not in self.possible:
            if signature(atom) in self.current:
                return lit
            return lit.negated
        return lit

    # body instantiation

    def _pick(self, pending, binding, info):
        first_join = None
        for k, (i, lit) in enumerate(pending):
            if isinstance(lit, Literal):
                if lit.negated:
                    if _all_bound(lit.atom, binding):
                        return k
                elif _all_bound(lit.atom, binding):
                    return k
                elif first_join is None and _arith_ready(lit.atom, binding):
                    first_join = k
            elif isinstance(lit, Comparison):
                if _all_bound(lit.lhs, binding) and _all_bound(lit.rhs, binding):
                    return k
                if first_join is None and lit.op == "=":
                    for side, other in ((lit.lhs, lit.rhs), (lit.rhs, lit.lhs)):
                        if type(side) is Variable and _all_bound(other, binding):
                            first_join = k
                            break
            elif isinstance(lit, RangeBind):
                if _all_bound(lit.lo, binding) and _all_bound(lit.hi, binding):
                    if lit.var.name in binding:
                        return k
                    if first_join is None:
                        first_join = k
            elif isinstance(lit, Aggregate):
                needed = info.get(i, set()) if info is not None else set()
                target = lit.target
                if type(target) is Variable and target.name not in binding:
                    needed = needed - {target.name}
                elif not _all_bound(target, binding):
                    continue
                if first_join is None and all(n in binding for n in needed):
                    first_join = k
        return first_join

    def _body(self, pending, binding, residual, sources, globals_=None) -> Iterator:
        if not pending:
            yield binding, residual
            return
        k = self._pick(pending, binding, globals_)
        if k is None:
            names = sorted(
                {v.name for _, lit in pending for v in _lit_vars(lit)} - set(binding)
            )
            raise GroundingError(f"cannot order body literals; unbound {names}")
        i, lit = pending[k]
        rest = pending[:k] + pending[k + 1 :]
        if isinstance(lit, Literal):
            if lit.negated:
                atom = substitute(lit.atom, binding)
                if atom is None:
                    return
                status = self._residual(Literal(atom, True))
                if status is False:
                    return
                if status is True:
                    yield from self._body(rest, binding, residual, sources, globals_)
                else:
                    yield from self._body(rest, binding, residual + (status,), sources, globals_)
                return
            pattern = substitute(lit.atom, binding)
            if pattern is None:
                return
            source = sources.get(i)
            if is_ground(pattern):
                if pattern not in self.possible:
                    return
                if source is not None:
                    kind, r = source
                    a = self.added[pattern]
                    if (kind == "old" and a >= r) or (kind == "delta" and a != r):
                        return
                candidates = (pattern,)
            else:
                candidates = self._candidates(pattern, binding, source)
            for atom in candidates:
                b2 = match(pattern, atom, binding)
                if b2 is None:
                    continue
                if atom in self.certain:
                    yield from self._body(rest, b2, residual, sources, globals_)
                else:
                    yield from self._body(
                        rest, b2, residual + (Literal(atom, False),), sources, globals_
                    )
            return
        if isinstance(lit, Comparison):
            lhs = substitute(lit.lhs, binding)
            rhs = substitute(lit.rhs, binding)
            if lhs is None or rhs is None:
                return
            if lit.op == "=" and type(lhs) is Variable and is_ground(rhs):
                yield from self._body(rest, {**binding, lhs.name: rhs}, residual, sources, globals_)
                return
            if lit.op == "=" and type(rhs) is Variable and is_ground(lhs):
                yield from self._body(rest, {**binding, rhs.name: lhs}, residual, sources, globals_)
                return
            if _compare(lit.op, lhs, rhs):
                yield from self._body(rest, binding, residual, sources, globals_)
            return
        if isinstance(lit, RangeBind):
            lo = substitute(lit.lo, binding)
            hi = substitute(lit.hi, binding)
            if type(lo) is not int or type(hi) is not int:
                return
            name = lit.var.name
            if name in binding:
                v = binding[name]
                if type(v) is int and lo <= v <= hi:
                    yield from self._body(rest, binding, residual, sources, globals_)
                return
            for v in range(lo, hi + 1):
                yield from self._body(rest, {**binding, name: v}, residual, sources, globals_)
            return
        if isinstance(lit, Aggregate):
            for b2, extra in self._aggregate(lit, binding):
                yield from self._body(rest, b2, residual + extra, sources, globals_)
            return
        raise TypeError(lit)

    def _elements(self, elements, binding):
        """Instantiate aggregate/optimize elements: list of (terms, residual)."""
        out = []
        seen = set()
        for el in elements:
            pending = list(enumerate(el.condition))
            for b2, res in self._body(pending, binding, (), {}):
                terms = tuple(substitute(t, b2) for t in el.terms)
                if any(t is None or not is_ground(t) for t in terms):
                    continue
                key = (terms, res)
                if key not in seen:
                    seen.add(key)
                    out.append(key)
        return out

    def _aggregate(self, agg: Aggregate, binding):
        elements = self._elements(agg.elements, binding)
        if not elements:
            return
        target = substitute(agg.target, binding)
        if target is None:
            return
        certain = {terms for terms, res in elements if not res}
        if all(not res for _, res in elements):
            value = aggregate_value(agg.kind, certain)
            if type(target) is Variable:
                yield {**binding, target.name: value}, ()
            elif target == value:
                yield binding, ()
            return
        all_tuples = {terms for terms, _ in elements}
        if agg.kind == "count":
            low = max(1, len(certain))
            candidates = list(range(low, len(all_tuples) + 1))
        else:
            firsts = sorted({t[0] for t in all_tuples}, key=term_key)
            if certain:
                bound = aggregate_value(agg.kind, certain)
                if agg.kind == "max":
                    firsts = [v for v in firsts if compare_terms(v, bound) >= 0]
                else:
                    firsts = [v for v in firsts if compare_terms(v, bound) <= 0]
            candidates = firsts
        ground_elements = tuple(AggregateElement(terms, res) for terms, res in elements)
        for value in candidates:
            lit = Aggregate(value, agg.kind, ground_elements)
            if type(target) is Variable:
                yield {**binding, target.name: value}, (lit,)
            elif target == value:
                yield binding, (lit,)

    # rules

    def _instantiate(self, info: _RuleInfo, sources) -> list:
        rule = info.rule
        produced = []
        pending = list(enumerate(rule.body))
        for binding, residual in self._body(pending, {}, (), sources, info.globals):
            head = rule.head
            if head is None:
                produced.append(Rule(None, residual))
            elif isinstance(head, ChoiceHead):
                bounds = []
                for b in (head.lower, head.upper):
                    value = None if b is None else substitute(b, binding)
                    if b is not None and type(value) is not int:
                        break
                    bounds.append(value)
                else:
                    elements = []
                    seen = set()
                    for el in head.elements:
                        for b2, res in self._body(list(enumerate(el.condition)), binding, (), {}):
                            atom = substitute(el.atom, b2)
                            if atom is None or not is_ground(atom):
                                continue
                            if (atom, res) in seen:
                                continue
                            seen.add((atom, res))
                            elements.append(ChoiceElement(atom, res))
                    lower, upper = bounds
                    if not elements and (lower is None or lower <= 0):
                        continue
                    for el in elements:
                        self._add(el.atom)
                    produced.append(Rule(ChoiceHead(lower, upper, tuple(elements)), residual))
            else:
                atom = substitute(head, binding)
                if atom is None or not is_ground(atom):
                    continue
                self._add(atom)
                produced.append(Rule(atom, residual))
        for r in produced:
            self.ground_rules.setdefault(r, None)
        return produced

    def run(self) -> GroundProgram:
        infos = [_RuleInfo(r) for r in self.program.rules]
        graph = nx.DiGraph()
        for sig in sorted(self.by_sig):
            graph.add_node(sig)
        for info in infos:
            heads = sorted(info.head_sigs)
            for h in heads:
                graph.add_node(h)
                for b, _ in _body_sigs(info.rule):
                    graph.add_node(b)
                    graph.add_edge(b, h)
            # all head predicates of one choice rule are grounded together
            for h1, h2 in zip(heads, heads[1:]):
                graph.add_edge(h1, h2)
                graph.add_edge(h2, h1)
        comps = list(nx.strongly_connected_components(graph))
        comp_of = {}
        for n, comp in enumerate(comps):
            for sig in comp:
                comp_of[sig] = n
        condensed = nx.condensation(graph, comps)
        order = list(
            nx.lexicographical_topological_sort(condensed, key=lambda n: min(comps[n]))
        )
        rules_of = defaultdict(list)
        for info in infos:
            if not info.head_sigs:
                continue
            comp = comp_of[next(iter(info.head_sigs))]
            for b, through_agg in _body_sigs(info.rule):
                if through_agg and comp_of.get(b) == comp:
                    raise RecursiveAggregate(
                        f"aggregate in rule {info.rule} depends on its own head"
                    )
            rules_of[comp].append(info)
        for n in order:
            members = rules_of.get(n)
            if members:
                self._ground_component(set(comps[n]), members)
        constraints = [info for info in infos if info.rule.head is None]
        self.current = set()
        for info in constraints:
            self._instantiate(info, {})
        objective = None
        sense = None
        if self.program.optimize:
            sense = self.program.optimize[0].sense
            objective_elements = []
            for opt in self.program.optimize:
                for terms, res in self._elements(opt.elements, {}):
                    if opt.sense != sense:
                        if type(terms[0]) is int:
                            terms = (-terms[0],) + terms[1:] + (Constant("__neg"),)
                    objective_elements.append((terms, res))
            objective = objective_elements
        return self._finish(objective, sense)

    def _ground_component(self, sigs: set, members) -> None:
        self.current = sigs
        for info in members:
            info.recursive = [
                i for i, s in enumerate(info.pos_sigs) if s is not None and s in sigs
            ]
            info.naive = False
            if isinstance(info.rule.head, ChoiceHead):
                for el in info.rule.head.elements:
                    for c in el.condition:
                        if isinstance(c, Literal) and signature(c.atom) in sigs:
                            info.naive = True
        self.round = 0
        produced: dict = {}
        before = len(self.added)
        for info in members:
            produced.update(dict.fromkeys(self._instantiate(info, {})))
        while len(self.added) > before:
            delta = self.round
            self.round += 1
            before = len(self.added)
            for info in members:
                if info.naive:
                    produced.update(dict.fromkeys(self._instantiate(info, {})))
                    continue
                for pos, i in enumerate(info.recursive):
                    sources = {i: ("delta", delta)}
                    for j in info.recursive[:pos]:
                        sources[j] = ("old", delta)
                    produced.update(dict.fromkeys(self._instantiate(info, sources)))
        self._settle(sigs, list(produced))
        self.current = set()
        for sig in sigs:
            self._rebuild(sig)

    # classification

    def _lit_state(self, lit, supported, sigs):
        """(true, possibly_true) of a ground body literal."""
        if isinstance(lit, Aggregate):
            state = self._agg_state(lit)
            return state is True, state is not False
        atom = lit.atom
        certain = atom in self.certain
        possible = atom in self.possible
        if lit.negated:
            return not possible, not certain
        if supported is not None and signature(atom) in sigs:
            possible = possible and (certain or atom in supported)
        return certain, possible

    def _agg_state(self, agg: Aggregate):
        true_tuples = set()
        unknown = False
        for el in agg.elements:
            states = [self._lit_state(c, None, ()) for c in el.condition]
            if all(t for t, _ in states):
                true_tuples.add(el.terms)
            elif all(p for _, p in states):
                unknown = True
        if unknown:
            return None
        value = aggregate_value(agg.kind, true_tuples)
        return value is not None and value == agg.target

    def _settle(self, sigs: set, rules: list) -> None:
        changed = True
        while changed:
            changed = False
            grew = True
            while grew:
                grew = False
                for r in rules:
                    if isinstance(r.head, ChoiceHead) or r.head in self.certain:
                        continue
                    if r.head not in self.possible:
                        continue
                    if all(self._lit_state(l, None, sigs)[0] for l in r.body):
                        self.certain.add(r.head)
                        grew = changed = True
            supported = {a for a in self.certain if signature(a) in sigs}
            grew = True
            while grew:
                grew = False
                for r in rules:
                    if not all(self._lit_state(l, supported, sigs)[1] for l in r.body):
                        continue
                    if isinstance(r.head, ChoiceHead):
                        for el in r.head.elements:
                            if el.atom in supported or el.atom not in self.possible:
                                continue
                            if all(self._lit_state(c, supported, sigs)[1] for c in el.condition):
                                supported.add(el.atom)
                                grew = True
                    elif r.head not in supported and r.head in self.possible:
                        supported.add(r.head)
                        grew = True
            for sig in sigs:
                for a in self.by_sig.get(sig, ()):
                    if a in self.possible and a not in supported:
                        self.possible.discard(a)
                        changed = True

    # output

    def _simplify_literals(self, lits):
        """Residual literals, or ``None`` if some literal is false."""
        out = []
        for lit in lits:
            if isinstance(lit, Aggregate):
                state = self._agg_state(lit)
                if state is False:
                    return None
                if state is True:
                    continue
                elements = []
                for el in lit.elements:
                    cond = self._simplify_literals(el.condition)
                    if cond is not None:
                        elements.append(AggregateElement(el.terms, tuple(cond)))
                out.append(Aggregate(lit.target, lit.kind, tuple(elements)))
                continue
            status = self._residual(lit)
            if status is False:
                return None
            if status is not True:
                out.append(status)
        return out

    def _finish(self, objective, sense) -> GroundProgram:
        rules = []
        seen = set()
        for r in self.ground_rules:
            body = self._simplify_literals(r.body)
            if body is None:
                continue
            head = r.head
            if isinstance(head, ChoiceHead):
                elements = []
                for el in head.elements:
                    if el.atom not in self.possible:
                        continue
                    cond = self._simplify_literals(el.condition)
                    if cond is not None:
                        elements.append(ChoiceElement(el.atom, tuple(cond)))
                if not elements and (head.lower is None or head.lower <= 0):
                    continue
                if head.lower in (None, 0) and head.upper is None and all(
                    e.atom in self.certain for e in elements
                ):
                    continue
                head = ChoiceHead(head.lower, head.upper, tuple(elements))
            elif head is not None:
                if head in self.certain or head not in self.possible:
                    continue
            new = Rule(head, tuple(body))
            if new not in seen:
                seen.add(new)
                rules.append(new)
        obj = None
        if objective is not None:
            obj = []
            for terms, res in objective:
                cond = self._simplify_literals(res)
                if cond is not None:
                    el = OptimizeElement(terms, tuple(cond))
                    if el not in obj:
                        obj.append(el)
            obj = tuple(obj)
        atoms = sorted((a for a in self.possible if a not in self.certain), key=term_key)
        return GroundProgram(tuple(atoms), frozenset(self.certain), tuple(rules), obj, sense)


def _head_sigs(head) -> set:
    if isinstance(head, ChoiceHead):
        return {signature(e.atom) for e in head.elements}
    return {signature(head)}


def _lit_vars(lit):
    if isinstance(lit, Literal):
        return list(variables(lit.atom))
    if isinstance(lit, Comparison):
        return list(variables(lit.lhs)) + list(variables(lit.rhs))
    if isinstance(lit, RangeBind):
        return [lit.var] + list(variables(lit.lo)) + list(variables(lit.hi))
    if isinstance(lit, Aggregate):
        return list(variables(lit.target))
    return []


def ground(program: Program, facts: Iterable = (), limits: Optional[Limits] = None) -> GroundProgram:
    """Instantiate ``program`` over ``facts``."""
    return _Grounder(program, facts, limits or Limits()).run()
