"""Value types shared by the runtime: data sets, output rules, context specs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

from ..asp.evaluation import match, substitute
from ..asp.syntax import Program
from ..asp.terms import is_ground, render, term_key, variables
from ..packing.buffer import EOC


class UnknownStakeholder(LookupError):
    pass


class ContextBusy(RuntimeError):
    pass


class UnsafeOutputRule(ValueError):
    pass


@dataclass(frozen=True)
class DataSet:
    source: str
    info: frozenset

    @property
    def is_eoc(self) -> bool:
        return self.info == frozenset((EOC,))


@dataclass(frozen=True)
class BeliefSet:
    beliefs: frozenset

    def sorted(self) -> list:
        return sorted(self.beliefs, key=term_key)


def _names(terms: Iterable) -> set:
    return {v.name for t in terms for v in variables(t)}


@dataclass(frozen=True)
class OutputRule:
    """``stakeholder: info <- positive_body, not negative_body``.

    Rules may contain variables as long as every variable of ``info`` and
    of the negative body also occurs in the positive body; each match of the
    positive body against a belief set yields one instance.
    """

    stakeholder: str
    info: object
    positive_body: tuple = ()
    negative_body: tuple = ()

    def __post_init__(self):
        bound = _names(self.positive_body)
        loose = (_names((self.info,)) | _names(self.negative_body)) - bound
        if loose:
            raise UnsafeOutputRule(
                f"output rule for {self.stakeholder}: unbound {sorted(loose)[0]}"
            )

    @property
    def is_ground(self) -> bool:
        return is_ground(self.info) and all(
            is_ground(t) for t in self.positive_body + self.negative_body
        )

    def instances(self, beliefs: frozenset) -> Iterator:
        """Info terms of all instances active under ``beliefs``."""
        ordered = sorted(beliefs, key=term_key)

        def walk(i: int, binding: dict):
            if i == len(self.positive_body):
                yield binding
                return
            pattern = self.positive_body[i]
            if is_ground(pattern):
                if pattern in beliefs:
                    yield from walk(i + 1, binding)
                return
            for b in ordered:
                extended = match(pattern, b, binding)
                if extended is not None:
                    yield from walk(i + 1, extended)

        for binding in walk(0, {}):
            if any(substitute(n, binding) in beliefs for n in self.negative_body):
                continue
            info = substitute(self.info, binding)
            if info is not None:
                yield info

    def __str__(self) -> str:
        body = [render(t) for t in self.positive_body]
        body += ["not " + render(t) for t in self.negative_body]
        head = f"{self.stakeholder}: {render(self.info)}"
        return head + (" <- " + ", ".join(body) if body else "")


def relout(context_name: str, bs: BeliefSet, rules: Iterable[OutputRule], stakeholder: str) -> DataSet:
    """The data set ``context_name`` sends to ``stakeholder`` for belief set ``bs``."""
    info = set()
    for r in rules:
        if r.stakeholder == stakeholder:
            info.update(r.instances(bs.beliefs))
    return DataSet(context_name, frozenset(info))


def stakeholders(rules: Iterable[OutputRule]) -> tuple:
    """Distinct rule heads' stakeholders in order of first appearance."""
    out = []
    for r in rules:
        if r.stakeholder not in out:
            out.append(r.stakeholder)
    return tuple(out)


@dataclass(frozen=True)
class TagRule:
    """Tag every data set that carries an info term matching ``pattern``."""

    pattern: object
    tag: object

    def __post_init__(self):
        loose = _names((self.tag,)) - _names((self.pattern,))
        if loose:
            raise UnsafeOutputRule(f"tag rule: unbound {sorted(loose)[0]}")


def tags_for(rules: Iterable[TagRule], info: Iterable) -> frozenset:
    out = set()
    ordered = sorted(info, key=term_key)
    for r in rules:
        for t in ordered:
            binding = match(r.pattern, t, {})
            if binding is not None:
                tag = substitute(r.tag, binding)
                if tag is not None:
                    out.add(tag)
    return frozenset(out)


@dataclass(frozen=True)
class Trigger:
    kind: str = "on_arrival"  # on_arrival | interval | manual
    interval: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ("on_arrival", "interval", "manual"):
            raise ValueError(f"unknown trigger {self.kind!r}")
        if (self.kind == "interval") != (self.interval is not None):
            raise ValueError("interval triggers need a period, others none")
        if self.interval is not None and self.interval <= 0:
            raise ValueError("interval must be positive")

    def __str__(self) -> str:
        return f"interval({self.interval})" if self.kind == "interval" else self.kind


@dataclass(frozen=True)
class SpecUpdate:
    """Replacement fields a behavior may hand back after a computation."""

    output_rules: Optional[tuple] = None
    send_tags: Optional[tuple] = None
    eval_mode: Optional[str] = None


@dataclass(frozen=True)
class ContextSpec:
    name: str
    behavior: object
    packing_program: Program
    trigger: Trigger = field(default_factory=Trigger)
    eval_mode: str = "first"
    output_rules: tuple = ()
    compute_latency: int = 0
    send_tags: tuple = ()
    receive_tags: tuple = ()
    arrival_facts: bool = False

    def __post_init__(self):
        if self.eval_mode not in ("first", "optimal"):
            raise ValueError(f"unknown eval mode {self.eval_mode!r}")
        if self.compute_latency < 0:
            raise ValueError("compute latency must be nonnegative")


@dataclass(frozen=True)
class Emission:
    t: int
    info: frozenset
    id: object = None
    tags: frozenset = frozenset()


@dataclass(frozen=True)
class SensorSpec:
    name: str
    targets: tuple
    script: tuple = ()

    def __post_init__(self):
        times = [e.t for e in self.script]
        if any(t < 0 for t in times) or times != sorted(times):
            raise ValueError(f"sensor {self.name}: emission times must be sorted and nonnegative")
