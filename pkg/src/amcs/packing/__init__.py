"""Packing layer: buffer encoding, directive decoding and application."""

from .buffer import (
    EOC,
    BufferState,
    ComputationRecord,
    DataSetRecord,
    MixedEoc,
    encode_facts,
    fresh_computation_id,
    fresh_dataset_id,
    ingest,
    render_facts,
)
from .directives import (
    DanglingInPack,
    DecodeError,
    DirectiveSet,
    DirectiveWarning,
    EmptyPackage,
    MixedVariants,
    MultipleSchemas,
    Package,
    TagConflict,
    UnknownId,
    apply,
    decode,
    evaluate,
    flatten_list,
    run_packing,
)

__all__ = [
    "EOC",
    "BufferState",
    "ComputationRecord",
    "DanglingInPack",
    "DataSetRecord",
    "DecodeError",
    "DirectiveSet",
    "DirectiveWarning",
    "EmptyPackage",
    "MixedEoc",
    "MixedVariants",
    "MultipleSchemas",
    "Package",
    "TagConflict",
    "UnknownId",
    "apply",
    "decode",
    "encode_facts",
    "evaluate",
    "flatten_list",
    "fresh_computation_id",
    "fresh_dataset_id",
    "ingest",
    "render_facts",
    "run_packing",
]
