"""Abstract syntax of the packing-program fragment.

Atoms are terms (a constant or a function term).  Ground programs reuse the
same classes: after grounding, bodies contain only :class:`Literal` and
:class:`Aggregate` elements whose terms are ground.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .terms import Function, Variable, render, variables

COMPARISON_OPS = ("<", "<=", ">", ">=", "=", "!=")
AGGREGATE_KINDS = ("max", "min", "count")


@dataclass(frozen=True)
class Literal:
    atom: object
    negated: bool = False

    def __str__(self) -> str:
        return ("not " if self.negated else "") + render(self.atom)


@dataclass(frozen=True)
class Comparison:
    op: str
    lhs: object
    rhs: object

    def __str__(self) -> str:
        return f"{render(self.lhs)}{self.op}{render(self.rhs)}"


@dataclass(frozen=True)
class RangeBind:
    var: Variable
    lo: object
    hi: object

    def __str__(self) -> str:
        return f"{render(self.var)}={render(self.lo)}..{render(self.hi)}"


@dataclass(frozen=True)
class AggregateElement:
    terms: tuple
    condition: tuple = ()

    def __str__(self) -> str:
        text = ",".join(render(t) for t in self.terms)
        if self.condition:
            text += ":" + ",".join(str(c) for c in self.condition)
        return text


@dataclass(frozen=True)
class Aggregate:
    """``target = #kind{elements}``; the target is a variable or a ground term."""

    target: object
    kind: str
    elements: tuple

    def __str__(self) -> str:
        inner = ";".join(str(e) for e in self.elements)
        return f"{render(self.target)}=#{self.kind}{{{inner}}}"


@dataclass(frozen=True)
class ChoiceElement:
    atom: object
    condition: tuple = ()

    def __str__(self) -> str:
        text = render(self.atom)
        if self.condition:
            text += ":" + ",".join(str(c) for c in self.condition)
        return text


@dataclass(frozen=True)
class ChoiceHead:
    lower: object
    upper: object
    elements: tuple

    def __str__(self) -> str:
        inner = ";".join(str(e) for e in self.elements)
        text = f"{{{inner}}}"
        if self.lower is not None:
            text = f"{render(self.lower)}{text}"
        if self.upper is not None:
            text = f"{text}{render(self.upper)}"
        return text


BodyLiteral = Union[Literal, Comparison, RangeBind, Aggregate]
Head = Union[None, ChoiceHead, object]


@dataclass(frozen=True)
class Rule:
    head: Head
    body: tuple = ()

    @property
    def is_constraint(self) -> bool:
        return self.head is None

    @property
    def is_choice(self) -> bool:
        return isinstance(self.head, ChoiceHead)

    def __str__(self) -> str:
        body = ",".join(str(b) for b in self.body)
        if self.head is None:
            return f":-{body}." if body else ":-."
        head = str(self.head) if self.is_choice else render(self.head)
        return f"{head}:-{body}." if body else f"{head}."


@dataclass(frozen=True)
class OptimizeElement:
    terms: tuple
    condition: tuple = ()

    def __str__(self) -> str:
        text = ",".join(render(t) for t in self.terms)
        if self.condition:
            text += ":" + ",".join(str(c) for c in self.condition)
        return text


@dataclass(frozen=True)
class Optimize:
    sense: str
    elements: tuple

    def __str__(self) -> str:
        inner = ";".join(str(e) for e in self.elements)
        return f"#{self.sense}{{{inner}}}."


@dataclass(frozen=True)
class Program:
    rules: tuple = ()
    optimize: tuple = ()

    def __str__(self) -> str:
        lines = [str(r) for r in self.rules] + [str(o) for o in self.optimize]
        return "".join(line + "\n" for line in lines)

    def __add__(self, other: "Program") -> "Program":
        return Program(self.rules + other.rules, self.optimize + other.optimize)


class UnsafeRule(ValueError):
    def __init__(self, rule_index: int, variable: str):
        super().__init__(f"rule {rule_index}: variable {variable} is unsafe")
        self.rule_index = rule_index
        self.variable = variable


def literal_variables(lit) -> set:
    if isinstance(lit, Literal):
        return {v.name for v in variables(lit.atom)}
    if isinstance(lit, Comparison):
        return {v.name for v in variables(lit.lhs)} | {v.name for v in variables(lit.rhs)}
    if isinstance(lit, RangeBind):
        return (
            {lit.var.name}
            | {v.name for v in variables(lit.lo)}
            | {v.name for v in variables(lit.hi)}
        )
    if isinstance(lit, Aggregate):
        out = {v.name for v in variables(lit.target)}
        for el in lit.elements:
            out |= _element_variables(el.terms, el.condition)
        return out
    raise TypeError(lit)


def _element_variables(terms, condition) -> set:
    out = set()
    for t in terms:
        out |= {v.name for v in variables(t)}
    for c in condition:
        out |= literal_variables(c)
    return out


def _binding_variables(t) -> set:
    """Variables an atom argument can bind: those outside arithmetic."""
    tt = type(t)
    if tt is Variable:
        return {t.name}
    if tt is Function:
        out = set()
        for a in t.args:
            out |= _binding_variables(a)
        return out
    return set()


def head_variables(head) -> set:
    if head is None:
        return set()
    if isinstance(head, ChoiceHead):
        out = set()
        for b in (head.lower, head.upper):
            if b is not None:
                out |= {v.name for v in variables(b)}
        return out
    return {v.name for v in variables(head)}


def outside_variables(rule: Rule) -> set:
    """Variables of a rule that are visible outside aggregate elements."""
    out = head_variables(rule.head)
    for lit in rule.body:
        if isinstance(lit, Aggregate):
            out |= {v.name for v in variables(lit.target)}
        else:
            out |= literal_variables(lit)
    return out


def aggregate_globals(agg: Aggregate, outside: set) -> set:
    inner = set()
    for el in agg.elements:
        inner |= _element_variables(el.terms, el.condition)
    return inner & outside


def binds(lit, bound: set, outside: set) -> set:
    """Variables ``lit`` can bind once the variables in ``bound`` are known."""
    if isinstance(lit, Literal):
        return set() if lit.negated else _binding_variables(lit.atom)
    if isinstance(lit, RangeBind):
        if literal_variables(lit) - {lit.var.name} <= bound:
            return {lit.var.name}
        return set()
    if isinstance(lit, Comparison):
        new = set()
        if lit.op == "=":
            for side, other in ((lit.lhs, lit.rhs), (lit.rhs, lit.lhs)):
                if type(side) is Variable and {v.name for v in variables(other)} <= bound:
                    new.add(side.name)
        return new
    if isinstance(lit, Aggregate) and type(lit.target) is Variable:
        if aggregate_globals(lit, outside) - {lit.target.name} <= bound:
            return {lit.target.name}
    return set()


def close_bindings(literals, bound: set, outside: set) -> set:
    bound = set(bound)
    changed = True
    while changed:
        changed = False
        for lit in literals:
            new = binds(lit, bound, outside)
            if not new <= bound:
                bound |= new
                changed = True
    return bound


def check_rule_safety(rule: Rule, index: int) -> None:
    outside = outside_variables(rule)
    bound = close_bindings(rule.body, set(), outside)
    for name in sorted(outside):
        if name not in bound:
            raise UnsafeRule(index, name)
    for lit in rule.body:
        if isinstance(lit, Aggregate):
            for el in lit.elements:
                _check_element(el.terms, el.condition, bound, index)
    if isinstance(rule.head, ChoiceHead):
        for el in rule.head.elements:
            _check_element((el.atom,), el.condition, bound, index)


def _check_element(terms, condition, bound, index) -> None:
    names = _element_variables(terms, condition)
    local = close_bindings(condition, bound, names | bound)
    for name in sorted(names):
        if name not in local:
            raise UnsafeRule(index, name)


def check_program_safety(program: Program) -> None:
    for i, rule in enumerate(program.rules):
        check_rule_safety(rule, i)
    for j, opt in enumerate(program.optimize):
        for el in opt.elements:
            _check_element(el.terms, el.condition, set(), len(program.rules) + j)
