"""Scenario files: a YAML tree describing contexts, sensors and streams.

Logic programs are referenced by path (relative to the scenario file) and
parsed while loading, so syntax errors surface before a run starts.  Terms
are written in program syntax inside YAML strings, e.g. ``"case(C,I)"`` or
``'"available"'`` for a string term.

Layout::

    name: demo
    seed: 0
    delay: 10            # ms between sending and arrival
    jitter: 0            # extra random delay, bounded; links stay FIFO
    output_streams: [out]
    sensors:
      - name: s
        targets: [c]
        emissions:
          - {t: 100, info: ["call(c1,1,3)"], id: optional, tags: []}
    contexts:
      - name: c
        packing: c.lp
        trigger: on_arrival          # or manual, or {interval: 500}
        eval_mode: first             # or optimal
        compute_latency: 100
        arrival_facts: false
        behavior:
          scripted:
            - {schema: s1, match: ["call(C,I,P)"], beliefs: [["seen(C)"]]}
          # or: asp: {program: kb.lp, models: 1, show: [assign]}
        output_rules:
          - {to: out, info: "seen(C)", if: ["seen(C)"], unless: []}
        send_tags: [{match: "seen(C)", tag: "case(C)"}]
        receive_tags: []
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Optional

import yaml

from .asp.grounder import Limits
from .asp.parser import ParseError, parse, parse_term
from .asp.syntax import UnsafeRule
from .asp.terms import is_ground, render, term_key
from .packing.buffer import EOC, BufferState, ComputationRecord, ingest
from .runtime.behaviors import AspBehavior, ScriptCase, ScriptedBehavior
from .runtime.engine import Engine
from .runtime.model import (
    ContextSpec,
    Emission,
    OutputRule,
    SensorSpec,
    SpecUpdate,
    TagRule,
    Trigger,
    UnsafeOutputRule,
)


class ValidationError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path or '<root>'}: {message}")
        self.path = path
        self.message = message


@dataclass(frozen=True)
class ContextSource:
    """Where a context's programs came from (absolute paths)."""

    packing: str
    behavior: Optional[str] = None


@dataclass(frozen=True)
class ScenarioSpec:
    name: str = ""
    contexts: tuple = ()
    sensors: tuple = ()
    output_streams: tuple = ()
    clock: str = "ms"
    seed: int = 0
    delay: int = 0
    jitter: int = 0
    sources: tuple = ()  # ContextSource per context

    def engine(self, limits: Optional[Limits] = None) -> Engine:
        return Engine(
            self.contexts,
            self.sensors,
            self.output_streams,
            delay=self.delay,
            jitter=self.jitter,
            seed=self.seed,
            limits=limits,
        )


# loading


class _Loader:
    def __init__(self, base: str):
        self.base = base

    def fail(self, path: str, message: str):
        raise ValidationError(path, message)

    def mapping(self, node, path: str, allowed: set, required: set = frozenset()) -> dict:
        if node is None:
            node = {}
        if not isinstance(node, dict):
            self.fail(path, "expected a mapping")
        for key in node:
            if key not in allowed:
                self.fail(f"{path}.{key}" if path else str(key), "unknown field")
        for key in sorted(required):
            if key not in node:
                self.fail(f"{path}.{key}" if path else key, "missing field")
        return node

    def seq(self, node, path: str) -> list:
        if node is None:
            return []
        if not isinstance(node, list):
            self.fail(path, "expected a list")
        return node

    def integer(self, node, path: str, minimum: int = 0) -> int:
        if type(node) is not int or node < minimum:
            self.fail(path, f"expected an integer >= {minimum}")
        return node

    def name(self, node, path: str) -> str:
        if not isinstance(node, str) or not node:
            self.fail(path, "expected a name")
        return node

    def term(self, node, path: str, ground: bool = False):
        if isinstance(node, bool) or not isinstance(node, (str, int)):
            self.fail(path, "expected a term")
        try:
            t = parse_term(str(node))
        except ParseError as exc:
            self.fail(path, str(exc))
        if ground and not is_ground(t):
            self.fail(path, "term must be ground")
        return t

    def terms(self, node, path: str, ground: bool = False) -> tuple:
        return tuple(self.term(x, f"{path}[{i}]", ground) for i, x in enumerate(self.seq(node, path)))

    def program(self, node, path: str) -> tuple:
        rel = self.name(node, path)
        full = os.path.normpath(os.path.join(self.base, rel))
        try:
            with open(full, "rb") as fh:
                text = fh.read()
        except OSError as exc:
            self.fail(path, f"cannot read {rel}: {exc.strerror}")
        try:
            return full, parse(text)
        except (ParseError, UnsafeRule) as exc:
            self.fail(path, f"{rel}: {exc}")

    def output_rules(self, node, path: str) -> tuple:
        out = []
        for i, r in enumerate(self.seq(node, path)):
            p = f"{path}[{i}]"
            r = self.mapping(r, p, {"to", "info", "if", "unless"}, {"to", "info"})
            try:
                out.append(
                    OutputRule(
                        self.name(r["to"], p + ".to"),
                        self.term(r["info"], p + ".info"),
                        self.terms(r.get("if"), p + ".if"),
                        self.terms(r.get("unless"), p + ".unless"),
                    )
                )
            except UnsafeOutputRule as exc:
                self.fail(p, str(exc))
        return tuple(out)

    def tag_rules(self, node, path: str) -> tuple:
        out = []
        for i, r in enumerate(self.seq(node, path)):
            p = f"{path}[{i}]"
            r = self.mapping(r, p, {"match", "tag"}, {"match", "tag"})
            try:
                out.append(TagRule(self.term(r["match"], p + ".match"), self.term(r["tag"], p + ".tag")))
            except UnsafeOutputRule as exc:
                self.fail(p, str(exc))
        return tuple(out)

    def update(self, node, path: str) -> SpecUpdate:
        node = self.mapping(node, path, {"output_rules", "send_tags", "eval_mode"})
        mode = node.get("eval_mode")
        if mode is not None and mode not in ("first", "optimal"):
            self.fail(path + ".eval_mode", "expected first or optimal")
        return SpecUpdate(
            output_rules=self.output_rules(node["output_rules"], path + ".output_rules")
            if "output_rules" in node
            else None,
            send_tags=self.tag_rules(node["send_tags"], path + ".send_tags") if "send_tags" in node else None,
            eval_mode=mode,
        )

    def behavior(self, node, path: str) -> tuple:
        node = self.mapping(node, path, {"scripted", "asp"})
        if len(node) != 1:
            self.fail(path, "expected exactly one of scripted, asp")
        if "scripted" in node:
            cases = []
            for i, c in enumerate(self.seq(node["scripted"], path + ".scripted")):
                p = f"{path}.scripted[{i}]"
                c = self.mapping(c, p, {"schema", "match", "beliefs", "update"}, {"match", "beliefs"})
                beliefs = tuple(
                    self.terms(b, f"{p}.beliefs[{j}]") for j, b in enumerate(self.seq(c["beliefs"], p + ".beliefs"))
                )
                cases.append(
                    ScriptCase(
                        match=self.terms(c["match"], p + ".match"),
                        beliefs=beliefs,
                        schema=self.term(c["schema"], p + ".schema", True) if "schema" in c else None,
                        update=self.update(c["update"], p + ".update") if "update" in c else None,
                    )
                )
            return ScriptedBehavior(tuple(cases)), None
        p = path + ".asp"
        a = self.mapping(node["asp"], p, {"program", "models", "show"}, {"program"})
        full, program = self.program(a["program"], p + ".program")
        models = a.get("models", 1)
        if models == "all":
            models = None
        elif type(models) is not int or models < 1:
            self.fail(p + ".models", "expected a positive integer or 'all'")
        show = None
        if "show" in a:
            show = tuple(self.name(s, f"{p}.show[{i}]") for i, s in enumerate(self.seq(a["show"], p + ".show")))
        return AspBehavior(program, models, show), full

    def trigger(self, node, path: str) -> Trigger:
        if node is None or node == "on_arrival":
            return Trigger()
        if node == "manual":
            return Trigger("manual")
        if isinstance(node, dict) and set(node) == {"interval"}:
            return Trigger("interval", self.integer(node["interval"], path + ".interval", 1))
        self.fail(path, "expected on_arrival, manual or {interval: ms}")

    def context(self, node, path: str) -> tuple:
        node = self.mapping(
            node,
            path,
            {
                "name",
                "packing",
                "trigger",
                "eval_mode",
                "compute_latency",
                "arrival_facts",
                "behavior",
                "output_rules",
                "send_tags",
                "receive_tags",
            },
            {"name", "packing", "behavior"},
        )
        packing_path, packing = self.program(node["packing"], path + ".packing")
        behavior, behavior_path = self.behavior(node["behavior"], path + ".behavior")
        mode = node.get("eval_mode", "first")
        if mode not in ("first", "optimal"):
            self.fail(path + ".eval_mode", "expected first or optimal")
        arrival = node.get("arrival_facts", False)
        if not isinstance(arrival, bool):
            self.fail(path + ".arrival_facts", "expected a boolean")
        spec = ContextSpec(
            name=self.name(node["name"], path + ".name"),
            behavior=behavior,
            packing_program=packing,
            trigger=self.trigger(node.get("trigger"), path + ".trigger"),
            eval_mode=mode,
            output_rules=self.output_rules(node.get("output_rules"), path + ".output_rules"),
            compute_latency=self.integer(node.get("compute_latency", 0), path + ".compute_latency"),
            send_tags=self.tag_rules(node.get("send_tags"), path + ".send_tags"),
            receive_tags=self.tag_rules(node.get("receive_tags"), path + ".receive_tags"),
            arrival_facts=arrival,
        )
        return spec, ContextSource(packing_path, behavior_path)

    def sensor(self, node, path: str) -> SensorSpec:
        node = self.mapping(node, path, {"name", "targets", "emissions"}, {"name", "targets"})
        name = self.name(node["name"], path + ".name")
        targets = tuple(
            self.name(t, f"{path}.targets[{i}]") for i, t in enumerate(self.seq(node["targets"], path + ".targets"))
        )
        script = []
        last = 0
        for i, e in enumerate(self.seq(node.get("emissions"), path + ".emissions")):
            p = f"{path}.emissions[{i}]"
            e = self.mapping(e, p, {"t", "info", "id", "tags"}, {"t", "info"})
            t = self.integer(e["t"], p + ".t")
            if t < last:
                self.fail(p + ".t", "emission times must be sorted")
            last = t
            info = self.terms(e["info"], p + ".info", True)
            if not info:
                self.fail(p + ".info", "a data set needs information")
            if EOC in info:
                self.fail(p + ".info", "sensors cannot send eoc")
            ds_id = None
            if "id" in e:
                ds_id = self.term(e["id"], p + ".id", True)
                if len(targets) != 1:
                    self.fail(p + ".id", "explicit ids need exactly one target")
            tags = frozenset(self.terms(e.get("tags"), p + ".tags", True))
            script.append(Emission(t, frozenset(info), ds_id, tags))
        return SensorSpec(name, targets, tuple(script))


def scenario_from_tree(tree, base: str = ".") -> ScenarioSpec:
    ld = _Loader(base)
    tree = ld.mapping(
        tree,
        "",
        {"name", "seed", "clock", "delay", "jitter", "output_streams", "sensors", "contexts"},
    )
    clock = tree.get("clock", "ms")
    if clock != "ms":
        ld.fail("clock", "only millisecond clocks are supported")
    contexts, sources = [], []
    for i, c in enumerate(ld.seq(tree.get("contexts"), "contexts")):
        spec, src = ld.context(c, f"contexts[{i}]")
        contexts.append(spec)
        sources.append(src)
    sensors = [ld.sensor(s, f"sensors[{i}]") for i, s in enumerate(ld.seq(tree.get("sensors"), "sensors"))]
    streams = [
        ld.name(s, f"output_streams[{i}]") for i, s in enumerate(ld.seq(tree.get("output_streams"), "output_streams"))
    ]

    seen = {}
    for kind, names in (
        ("contexts", [c.name for c in contexts]),
        ("sensors", [s.name for s in sensors]),
        ("output_streams", streams),
    ):
        for i, n in enumerate(names):
            if n in seen:
                ld.fail(f"{kind}[{i}].name" if kind != "output_streams" else f"{kind}[{i}]", f"name {n!r} already used")
            seen[n] = kind
    receivers = {c.name for c in contexts} | set(streams)

    def check_rules(rules, path):
        for j, r in enumerate(rules):
            if r.stakeholder not in receivers:
                ld.fail(f"{path}[{j}].to", f"unknown stakeholder {r.stakeholder!r}")

    for i, c in enumerate(contexts):
        check_rules(c.output_rules, f"contexts[{i}].output_rules")
        if isinstance(c.behavior, ScriptedBehavior):
            for j, case in enumerate(c.behavior.cases):
                if case.update is not None and case.update.output_rules is not None:
                    check_rules(case.update.output_rules, f"contexts[{i}].behavior.scripted[{j}].update.output_rules")
    ids = set()
    for i, s in enumerate(sensors):
        for j, t in enumerate(s.targets):
            if t not in receivers:
                ld.fail(f"sensors[{i}].targets[{j}]", f"unknown stakeholder {t!r}")
        for j, e in enumerate(s.script):
            if e.id is not None:
                if e.id in ids:
                    ld.fail(f"sensors[{i}].emissions[{j}].id", f"duplicate id {render(e.id)}")
                ids.add(e.id)

    return ScenarioSpec(
        name=str(tree.get("name", "")),
        contexts=tuple(contexts),
        sensors=tuple(sensors),
        output_streams=tuple(streams),
        clock=clock,
        seed=ld.integer(tree.get("seed", 0), "seed"),
        delay=ld.integer(tree.get("delay", 0), "delay"),
        jitter=ld.integer(tree.get("jitter", 0), "jitter"),
        sources=tuple(sources),
    )


def load_scenario(path: str) -> ScenarioSpec:
    with open(path, encoding="utf-8") as fh:
        try:
            tree = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ValidationError("", f"not valid YAML: {exc}") from None
    return scenario_from_tree(tree, os.path.dirname(os.path.abspath(path)))


# saving


def _rules_tree(rules) -> list:
    out = []
    for r in rules:
        item = {"to": r.stakeholder, "info": render(r.info)}
        if r.positive_body:
            item["if"] = [render(t) for t in r.positive_body]
        if r.negative_body:
            item["unless"] = [render(t) for t in r.negative_body]
        out.append(item)
    return out


def _tags_tree(rules) -> list:
    return [{"match": render(r.pattern), "tag": render(r.tag)} for r in rules]


def _update_tree(u: SpecUpdate) -> dict:
    out = {}
    if u.output_rules is not None:
        out["output_rules"] = _rules_tree(u.output_rules)
    if u.send_tags is not None:
        out["send_tags"] = _tags_tree(u.send_tags)
    if u.eval_mode is not None:
        out["eval_mode"] = u.eval_mode
    return out


def scenario_to_tree(spec: ScenarioSpec, base: str = ".") -> dict:
    base = os.path.abspath(base)

    def rel(p: str) -> str:
        return os.path.relpath(p, base).replace(os.sep, "/")

    contexts = []
    for c, src in zip(spec.contexts, spec.sources):
        if isinstance(c.behavior, ScriptedBehavior):
            cases = []
            for case in c.behavior.cases:
                item = {}
                if case.schema is not None:
                    item["schema"] = render(case.schema)
                item["match"] = [render(t) for t in case.match]
                item["beliefs"] = [[render(t) for t in b] for b in case.beliefs]
                if case.update is not None:
                    item["update"] = _update_tree(case.update)
                cases.append(item)
            behavior = {"scripted": cases}
        else:
            asp = {"program": rel(src.behavior), "models": "all" if c.behavior.max_models is None else c.behavior.max_models}
            if c.behavior.show is not None:
                asp["show"] = list(c.behavior.show)
            behavior = {"asp": asp}
        trigger = c.trigger.kind if c.trigger.kind != "interval" else {"interval": c.trigger.interval}
        contexts.append(
            {
                "name": c.name,
                "packing": rel(src.packing),
                "trigger": trigger,
                "eval_mode": c.eval_mode,
                "compute_latency": c.compute_latency,
                "arrival_facts": c.arrival_facts,
                "behavior": behavior,
                "output_rules": _rules_tree(c.output_rules),
                "send_tags": _tags_tree(c.send_tags),
                "receive_tags": _tags_tree(c.receive_tags),
            }
        )
    sensors = []
    for s in spec.sensors:
        emissions = []
        for e in s.script:
            item = {"t": e.t, "info": sorted_terms(e.info)}
            if e.id is not None:
                item["id"] = render(e.id)
            if e.tags:
                item["tags"] = sorted_terms(e.tags)
            emissions.append(item)
        sensors.append({"name": s.name, "targets": list(s.targets), "emissions": emissions})
    return {
        "name": spec.name,
        "seed": spec.seed,
        "clock": spec.clock,
        "delay": spec.delay,
        "jitter": spec.jitter,
        "output_streams": list(spec.output_streams),
        "sensors": sensors,
        "contexts": contexts,
    }


def sorted_terms(ts) -> list:
    return [render(t) for t in sorted(ts, key=term_key)]


def save_scenario(spec: ScenarioSpec, path: str) -> None:
    tree = scenario_to_tree(spec, os.path.dirname(os.path.abspath(path)))
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(tree, fh, sort_keys=False, default_flow_style=None, allow_unicode=False)


# buffers (debug input for the encode subcommand)


def buffer_from_tree(tree) -> BufferState:
    """Build a buffer from ``{clock, computations: [...], records: [...]}``.

    A record's ``info`` defaults to its id, since encoding ignores content.
    """
    ld = _Loader(".")
    tree = ld.mapping(tree, "", {"clock", "computations", "records"})
    computations = []
    for i, c in enumerate(ld.seq(tree.get("computations"), "computations")):
        p = f"computations[{i}]"
        c = ld.mapping(c, p, {"id", "source", "ended", "tags", "ignored"}, {"id", "source"})
        computations.append(
            ComputationRecord(
                ld.term(c["id"], p + ".id", True),
                ld.name(c["source"], p + ".source"),
                bool(c.get("ended", False)),
                frozenset(ld.terms(c.get("tags"), p + ".tags", True)),
                bool(c.get("ignored", False)),
            )
        )
    buffer = BufferState(computations=tuple(computations), clock=ld.integer(tree.get("clock", 0), "clock"))
    for i, r in enumerate(ld.seq(tree.get("records"), "records")):
        p = f"records[{i}]"
        r = ld.mapping(r, p, {"id", "source", "comp", "info", "tags"}, {"id", "source"})
        ds_id = ld.term(r["id"], p + ".id", True)
        comp = ld.term(r["comp"], p + ".comp", True) if "comp" in r else None
        info = ld.terms(r["info"], p + ".info", True) if "info" in r else (ds_id,)
        try:
            buffer = ingest(
                buffer,
                ld.name(r["source"], p + ".source"),
                comp,
                info,
                tags=ld.terms(r.get("tags"), p + ".tags", True),
                ds_id=ds_id,
            )
        except ValueError as exc:
            ld.fail(p, str(exc))
    return buffer


def load_buffer(path: str) -> BufferState:
    with open(path, encoding="utf-8") as fh:
        try:
            tree = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ValidationError("", f"not valid YAML: {exc}") from None
    return buffer_from_tree(tree)
