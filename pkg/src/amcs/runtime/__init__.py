"""Virtual-time runtime hosting contexts, sensors and output streams."""

from .behaviors import AspBehavior, Behavior, BehaviorResult, ScriptCase, ScriptedBehavior
from .engine import DuplicateName, Engine, QueueEmpty
from .model import (
    BeliefSet,
    ContextBusy,
    ContextSpec,
    DataSet,
    Emission,
    OutputRule,
    SensorSpec,
    SpecUpdate,
    TagRule,
    Trigger,
    UnknownStakeholder,
    UnsafeOutputRule,
    relout,
    stakeholders,
    tags_for,
)
from .trace import TraceRecord, dumps, loads

__all__ = [
    "AspBehavior",
    "Behavior",
    "BehaviorResult",
    "BeliefSet",
    "ContextBusy",
    "ContextSpec",
    "DataSet",
    "DuplicateName",
    "Emission",
    "Engine",
    "OutputRule",
    "QueueEmpty",
    "ScriptCase",
    "ScriptedBehavior",
    "SensorSpec",
    "SpecUpdate",
    "TagRule",
    "TraceRecord",
    "Trigger",
    "UnknownStakeholder",
    "UnsafeOutputRule",
    "dumps",
    "loads",
    "relout",
    "stakeholders",
    "tags_for",
]
