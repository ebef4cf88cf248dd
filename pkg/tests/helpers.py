"""Shared test utilities: example loading, random programs, reference semantics."""

from __future__ import annotations

import functools
import itertools
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from amcs.asp import Function, Program, Rule, ground, parse, parse_facts, parse_term
from amcs.packing import BufferState, ingest

DATA = Path(__file__).resolve().parent.parent / "src" / "amcs" / "data"
EXAMPLES = DATA / "examples"
DEMO = DATA / "scenarios" / "caet" / "scenario.yaml"


def example_paths(n: int) -> tuple:
    d = EXAMPLES / f"ex{n}"
    return d / "program.lp", d / "facts.lp"


def load_example(n: int):
    program, facts = example_paths(n)
    return parse(program.read_bytes()), parse_facts(facts.read_bytes())


def ground_example(n: int):
    program, facts = load_example(n)
    return ground(program, facts)


def atoms(*texts) -> frozenset:
    return frozenset(parse_term(t) for t in texts)


def T(text: str):
    return parse_term(text)


def buffer_of(*entries, clock: int = 0) -> BufferState:
    """Build a buffer from ``(id, source[, comp[, tags]])`` tuples."""
    b = BufferState(clock=clock)
    for entry in entries:
        ds_id, source = entry[0], entry[1]
        comp = T(entry[2]) if len(entry) > 2 and entry[2] else None
        tags = [T(t) for t in entry[3]] if len(entry) > 3 else []
        b = ingest(b, source, comp, [T("x")], tags=tags, ds_id=T(ds_id))
    return b


EX1_BUFFER = (
    ("ca_ds11", "ctxt_case_anl"),
    ("ca_ds12", "ctxt_case_anl"),
    ("am_ds54", "ctxt_amb_mng"),
    ("am_ds55", "ctxt_amb_mng"),
    ("am_ds56", "ctxt_amb_mng"),
)

EX3_BUFFER = (
    ("ca_ds26", "ctxt_case_anl", "comp37", ["case(c1,1)"]),
    ("ca_ds27", "ctxt_case_anl", "comp38", ["case(c2,1)"]),
    ("ca_ds28", "ctxt_case_anl", "comp39", ["case(c1,2)"]),
)


# random ground programs and an independent reference semantics


@dataclass(frozen=True)
class RefRule:
    kind: str  # normal | constraint | choice
    head: tuple  # one atom for normal rules, the element atoms for choices
    pos: tuple
    neg: tuple
    lower: object = None
    upper: object = None


def random_program(rng: random.Random, max_atoms: int = 12, max_rules: int = 15) -> tuple:
    """Returns ``(text, rules, atom_names)`` of a random ground program."""
    n = rng.randint(1, max_atoms)
    names = [f"a{i}" for i in range(n)]
    rules = []
    for _ in range(rng.randint(1, max_rules)):
        body = rng.sample(names, rng.randint(0, min(3, n)))
        pos = tuple(a for a in body if rng.random() < 0.5)
        neg = tuple(a for a in body if a not in pos)
        roll = rng.random()
        if roll < 0.2:
            if not body:
                continue
            rules.append(RefRule("constraint", (), pos, neg))
        elif roll < 0.45:
            elems = tuple(rng.sample(names, rng.randint(1, min(3, n))))
            lower = rng.choice([None, 0, 1, 2])
            upper = rng.choice([None, 1, 2, 3])
            rules.append(RefRule("choice", elems, pos, neg, lower, upper))
        else:
            rules.append(RefRule("normal", (rng.choice(names),), pos, neg))
    return render_program(rules), tuple(rules), tuple(names)


def render_program(rules) -> str:
    lines = []
    for r in rules:
        body = list(r.pos) + ["not " + a for a in r.neg]
        tail = (" :- " + ", ".join(body)) if body else ""
        if r.kind == "constraint":
            lines.append(":- " + ", ".join(body) + ".")
        elif r.kind == "choice":
            lo = "" if r.lower is None else f"{r.lower} "
            hi = "" if r.upper is None else f" {r.upper}"
            lines.append(f"{lo}{{{'; '.join(r.head)}}}{hi}{tail}.")
        else:
            lines.append(f"{r.head[0]}{tail}.")
    return "\n".join(lines) + "\n"


def reference_answer_sets(rules, names) -> set:
    """Brute force over all interpretations, straight from the reduct definition."""
    found = set()
    for bits in itertools.product((False, True), repeat=len(names)):
        m = frozenset(a for a, b in zip(names, bits) if b)
        if _reference_stable(rules, m):
            found.add(m)
    return found


def _reference_stable(rules, m: frozenset) -> bool:
    definite = []
    for r in rules:
        applies = all(a in m for a in r.pos) and not any(a in m for a in r.neg)
        if r.kind == "constraint":
            if applies:
                return False
        elif r.kind == "normal":
            if applies and r.head[0] not in m:
                return False
            if not any(a in m for a in r.neg):
                definite.append((r.head[0], r.pos))
        else:
            if applies:
                count = len({a for a in r.head if a in m})
                if r.lower is not None and count < r.lower:
                    return False
                if r.upper is not None and count > r.upper:
                    return False
            if not any(a in m for a in r.neg):
                for a in r.head:
                    if a in m:
                        definite.append((a, r.pos))
    least = set()
    changed = True
    while changed:
        changed = False
        for head, pos in definite:
            if head not in least and all(a in least for a in pos):
                least.add(head)
                changed = True
    return least == m


def oracle_equivalence(count: int, seed: int = 2024) -> tuple:
    """Compare solve, the oracle and the reference on random programs; ``(count, mismatches)``."""
    import amcs.asp as asp

    rng = random.Random(seed)
    mismatches = 0
    for _ in range(count):
        text, rules, names = random_program(rng, 12, 15)
        gp = ground(parse(text))
        solved = asp.solve(gp, None)
        if len(solved) != len(set(solved)) or set(solved) != asp.oracle_answer_sets(gp):
            mismatches += 1
            continue
        reference = {frozenset(T(a) for a in m) for m in reference_answer_sets(rules, names)}
        if {a.atoms for a in solved} != reference:
            mismatches += 1
    return count, mismatches


# buffer algebra fuzz


def _check_apply(before, after, d, packages, ignored) -> list:
    problems = []
    idx = [r.arrival_index for r in after.records]
    if idx != sorted(idx) or len(set(idx)) != len(idx):
        problems.append("arrival order broken")
    order = {r.id: r.arrival_index for r in before.records}
    if any(r.id not in order or order[r.id] != r.arrival_index for r in after.records):
        problems.append("unknown or re-indexed record")
    ids_before = set(before.ids)
    packed = set()
    for p in packages:
        if not p.members or not set(p.members) <= ids_before:
            problems.append("package members outside the buffer")
        packed |= set(p.members)
    survivors = set(after.ids)
    if d.rm_pack and survivors & packed:
        problems.append("rm_pack left packaged data sets")
    if not d.rm_pack and not d.removals and not d.ignores and survivors != ids_before:
        problems.append("records vanished without a directive")
    comps = {c.id for c in after.computations}
    if any(r.computation is not None and r.computation not in comps for r in after.records):
        problems.append("record refers to a forgotten computation")
    problems += _ignore_violations(after, ignored)
    return problems


def _ignore_violations(buffer, ignored) -> list:
    from amcs.packing import encode_facts

    facts = encode_facts(buffer)
    avail = {f.args[0] for f in facts if f.name == "ds_avail"}
    bad = [f for f in facts if f.name == "ds_comp" and f.args[1] in ignored and f.args[0] in avail]
    for c in ignored:
        rec = buffer.computation(c)
        if rec is None or not rec.ignored:
            bad.append(c)
    return ["ignored computation resurfaced"] if bad else []


@functools.lru_cache(maxsize=None)
def _fuzz_rules(variant: str, rm_pack: bool) -> Program:
    rules = [
        "in_pack(D) :- pick(D), ds_avail(D).",
        "rm(X) :- kill(X).",
        "ignore(C) :- ign(C).",
        "add_tag(D,seen) :- tg(D).",
        "rm_tag(D,fresh) :- tg(D).",
    ]
    if variant == "single":
        rules.append("process_as_schema(s) :- pick(D).")
    elif variant == "multi":
        rules.append("process(s,[D|D]) :- pick(D).")
    if rm_pack:
        rules.append("rm_pack.")
    return parse(" ".join(rules))


def buffer_algebra(count: int, seed: int = 11, steps: int = 10, stats: Optional[dict] = None) -> tuple:
    """Random ingest/evaluate/apply sequences; returns ``(sequences, violations)``.

    ``stats``, when given, receives counts of the directives exercised.
    """
    stats = {} if stats is None else stats
    for key in ("applies", "packages", "rm_pack", "removals", "ignores", "dropped_ingests"):
        stats.setdefault(key, 0)
    from amcs.packing import EOC, MixedEoc, apply, decode, evaluate, fresh_computation_id

    rng = random.Random(seed)
    violations = []
    sources = ["ctxt_a", "ctxt_b", "sensor_s"]
    comps = [fresh_computation_id(i) for i in range(4)]
    for seq in range(count):
        b = BufferState()
        ignored = set()
        for step in range(steps):
            if rng.random() < 0.6 or not b.records:
                src = rng.choice(sources)
                comp = None if src == "sensor_s" else rng.choice(comps)
                if comp is not None and rng.random() < 0.15:
                    info = [EOC]
                else:
                    info = [T(f"v({rng.randint(0, 3)})")]
                if rng.random() < 0.05:
                    info = [EOC, T("v(0)")]
                try:
                    before = b
                    b = ingest(b, src, comp, info, [T(f"created({step})")], clock=step)
                    if comp in ignored and EOC not in info:
                        stats["dropped_ingests"] += before.records == b.records
                except MixedEoc:
                    pass
                except ValueError as exc:
                    if comp is not None or EOC not in info:
                        violations.append(f"seq {seq}: ingest failed: {exc}")
                problems = _ignore_violations(b, ignored)
            else:
                ids = list(b.ids)
                comp_ids = [c.id for c in b.computations]
                facts = []
                for x in rng.sample(ids, rng.randint(0, len(ids))):
                    facts.append(Function("pick", (x,)))
                for x in rng.sample(ids + comp_ids, min(len(ids) + len(comp_ids), rng.randint(0, 2))):
                    facts.append(Function("kill", (x,)))
                if comp_ids and rng.random() < 0.25:
                    facts.append(Function("ign", (rng.choice(comp_ids),)))
                for x in rng.sample(ids, min(len(ids), rng.randint(0, 2))):
                    facts.append(Function("tg", (x,)))
                roll = rng.random()
                variant = "single" if roll < 0.7 else "multi" if rng.random() < 0.5 else "none"
                program = _fuzz_rules(variant, rng.random() < 0.6)
                program = Program(tuple(Rule(f) for f in facts)) + program
                answer = evaluate(program, b)
                d = decode(answer, b, report=lambda w: None)
                after, packages = apply(b, d, report=lambda w: None)
                ignored |= set(d.ignores)
                stats["applies"] += 1
                stats["packages"] += len(packages)
                stats["rm_pack"] += bool(d.rm_pack and packages)
                stats["removals"] += len(d.removals)
                stats["ignores"] += len(d.ignores)
                problems = _check_apply(b, after, d, packages, ignored)
                b = after
            violations += [f"seq {seq} step {step}: {p}" for p in problems]
    return count, violations


# output rules against a naive reference


def relout_property(count: int, seed: int = 5) -> tuple:
    """Random ground rule and belief sets; returns ``(cases, mismatches)``."""
    from amcs.runtime import BeliefSet, OutputRule, relout

    rng = random.Random(seed)
    universe = [T(x) for x in ("a", "b", "c", "d", "f(1)", "f(2)", '"s"', "3")]
    targets = ["s1", "s2", "s3"]
    mismatches = []
    for case in range(count):
        rules = []
        for _ in range(rng.randint(0, 6)):
            pos = tuple(rng.sample(universe, rng.randint(0, 3)))
            neg = tuple(rng.sample(universe, rng.randint(0, 2)))
            rules.append(OutputRule(rng.choice(targets), T(f"i({rng.randint(0, 4)})"), pos, neg))
        bs = frozenset(rng.sample(universe, rng.randint(0, len(universe))))
        for target in targets:
            expected = {
                r.info
                for r in rules
                if r.stakeholder == target
                and set(r.positive_body) <= bs
                and not set(r.negative_body) & bs
            }
            got = relout("ctx", BeliefSet(bs), rules, target)
            if got.info != expected or got.source != "ctx":
                mismatches.append((case, target))
    return count, mismatches
