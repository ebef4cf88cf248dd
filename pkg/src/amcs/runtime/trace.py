"""Trace records and their line-delimited JSON form.

Each record serializes as one JSON object whose first keys are always
``t, seq, kind, ctx``, followed by the kind-specific payload in insertion
order.  The first line of a trace file is a header object.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable

KINDS = (
    "append",
    "eval",
    "package",
    "compute_start",
    "belief",
    "output",
    "eoc",
    "directive_warning",
)

FORMAT = "amcs-trace"
VERSION = 1


@dataclass(frozen=True)
class TraceRecord:
    t: int
    seq: int
    kind: str
    ctx: str
    payload: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown trace kind {self.kind!r}")

    def to_dict(self) -> dict:
        out = {"t": self.t, "seq": self.seq, "kind": self.kind, "ctx": self.ctx}
        out.update(self.payload)
        return out

    def to_json(self) -> str:
        return _dumps(self.to_dict())


def _dumps(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=True)


def header(scenario: str, seed: int) -> str:
    return _dumps({"format": FORMAT, "version": VERSION, "scenario": scenario, "seed": seed})


def dumps(records: Iterable[TraceRecord], scenario: str = "", seed: int = 0) -> str:
    lines = [header(scenario, seed)]
    lines.extend(r.to_json() for r in records)
    return "".join(line + "\n" for line in lines)


def loads(text: str) -> tuple:
    """Parse a trace file into ``(header, records as dicts)``."""
    lines = [json.loads(line) for line in text.splitlines() if line.strip()]
    if not lines or lines[0].get("format") != FORMAT:
        raise ValueError("not a trace file")
    return lines[0], lines[1:]
