"""Schema-version-aware message mapping onto a canonical data model.

The package maps attribute/value payloads from versioned extraction schemas
to versioned canonical-model entities through a sparse mapping matrix that
is block-partitioned, compacted to dense permutation-pattern sets, updated
automatically on schema evolution, and executed through a constant-time
column index.
"""

from .compaction import (
    BlockRunStore,
    DenseBlockSet,
    RunEntry,
    compact_to_dense,
    compact_to_runs,
    compaction_ratio,
    expand_dense,
    expand_runs,
    rebuild_dense_from_runs,
    square_blocks_equivalent,
)
from .engine import (
    DenseColumnBlock,
    EngineSnapshot,
    MappingEngine,
    Message,
    MessageSide,
    build_snapshot,
    densify,
    map_dense,
    map_sparse,
    sparsify,
)
from .errors import (
    CanonmapError,
    SchemaError,
    StateMismatchError,
    StoreError,
    UnknownVersionError,
    ValidityError,
    WorkloadError,
)
from .matrix import (
    BlockKind,
    BlockSupersets,
    MappingBlock,
    MappingMatrix,
    SquareBlock,
    VersionSuperBlock,
    block_supersets,
    build_matrix,
    largest_permutation_submatrix,
    load_mapping_csv,
    partition_blocks,
    partition_version_superblocks,
)
from .pipeline import (
    BenchReport,
    MapStats,
    StreamMapper,
    bench,
    inspect_progression,
    inspect_reverse,
    run_map,
    startup,
)
from .schema import (
    AttributeIndex,
    ChangeCase,
    ChangeEvent,
    SchemaRegistry,
    SchemaTree,
    Side,
    VersionedSchema,
    load_schema_definitions,
    parse_schema_definition,
    schema_definitions,
)
from .store import PipelineStore, load_run_store, run_store_document, save_run_store
from .updates import (
    Axis,
    NotificationKind,
    UpdateNotification,
    apply_change,
    copy_block_via_equivalence,
    replace_block,
)
from .workload import GeneratedWorkload, WorkloadConfig, generate_workload, write_workload

__version__ = "0.1.0"

__all__ = [
    "AttributeIndex",
    "Axis",
    "BenchReport",
    "BlockKind",
    "BlockRunStore",
    "BlockSupersets",
    "CanonmapError",
    "ChangeCase",
    "ChangeEvent",
    "DenseBlockSet",
    "DenseColumnBlock",
    "EngineSnapshot",
    "GeneratedWorkload",
    "MapStats",
    "MappingBlock",
    "MappingEngine",
    "MappingMatrix",
    "Message",
    "MessageSide",
    "NotificationKind",
    "PipelineStore",
    "RunEntry",
    "SchemaError",
    "SchemaRegistry",
    "SchemaTree",
    "Side",
    "SquareBlock",
    "StateMismatchError",
    "StoreError",
    "StreamMapper",
    "UnknownVersionError",
    "UpdateNotification",
    "ValidityError",
    "VersionSuperBlock",
    "VersionedSchema",
    "WorkloadConfig",
    "WorkloadError",
    "apply_change",
    "bench",
    "block_supersets",
    "build_matrix",
    "build_snapshot",
    "compact_to_dense",
    "compact_to_runs",
    "compaction_ratio",
    "copy_block_via_equivalence",
    "densify",
    "expand_dense",
    "expand_runs",
    "generate_workload",
    "inspect_progression",
    "inspect_reverse",
    "largest_permutation_submatrix",
    "load_mapping_csv",
    "load_run_store",
    "load_schema_definitions",
    "map_dense",
    "map_sparse",
    "parse_schema_definition",
    "partition_blocks",
    "partition_version_superblocks",
    "rebuild_dense_from_runs",
    "replace_block",
    "run_map",
    "run_store_document",
    "save_run_store",
    "schema_definitions",
    "sparsify",
    "square_blocks_equivalent",
    "startup",
    "write_workload",
]
