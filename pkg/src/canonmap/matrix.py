"""The sparse mapping matrix: element storage, block partitioning, validity.

The matrix for one state relates every domain attribute (columns) to every
range attribute (rows). It is stored in coordinate form as the set of its
1-elements; at realistic scale well over 99% of the matrix is zero, so a
dense array exists only as a debug renderer. Attribute ordinals come from
the two :class:`~canonmap.schema.AttributeIndex` snapshots embedded in the
matrix, which keeps a matrix self-describing for its state.

Blocks are the sub-rectangles induced by one (schema, version) column group
and one (entity, entity-version) row group. Every block is restrained to a
1:1 attribute mapping: at most one 1 per block row and per block column
(the VALIDITY rule). Under that rule the sub-matrix induced by a block's
non-zero rows and columns is always square and is its unique largest
permutation sub-matrix.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np

from .errors import SchemaError, ValidityError
from .schema import AttributeIndex, SchemaRegistry, Side

# (schema, schema_version, entity, entity_version)
BlockKey = tuple[str, int, str, int]
# (entity, entity_version, cdm_attribute, schema, schema_version, attribute)
NamedElement = tuple[str, int, str, str, int, str]


class BlockKind(enum.Enum):
    """Square-block flavours: a permutation pattern or an all-zero marker."""

    PERMUTATION = "pm"
    NULL = "null"


@dataclass(frozen=True)
class MappingBlock:
    """One (schema version) x (entity version) sub-rectangle of the matrix."""

    schema_id: str
    schema_version: int
    entity_id: str
    entity_version: int
    row_span: range
    col_span: range
    ones: frozenset[tuple[int, int]]
    one_names: frozenset[tuple[str, str]]  # (cdm_attribute, attribute) pairs

    @property
    def key(self) -> BlockKey:
        return (self.schema_id, self.schema_version, self.entity_id, self.entity_version)

    @property
    def dims(self) -> tuple[int, int]:
        return (len(self.row_span), len(self.col_span))

    @property
    def is_null(self) -> bool:
        return not self.ones


@dataclass(frozen=True)
class SquareBlock:
    """A block sized down to its permutation pattern, or a 1x1 null marker.

    For a permutation block ``size`` is the number of 1-elements; rows and
    columns that are entirely zero have been dropped. A null block has
    ``size`` 1 and no elements. Elements are stored as attribute-name pairs
    so a square block stays meaningful across states.
    """

    kind: BlockKind
    schema_id: str
    schema_version: int
    entity_id: str
    entity_version: int
    size: int
    ones: frozenset[tuple[str, str]]

    @property
    def key(self) -> BlockKey:
        return (self.schema_id, self.schema_version, self.entity_id, self.entity_version)


@dataclass(frozen=True)
class VersionSuperBlock:
    """All blocks of one schema against one entity version, across schema versions."""

    schema_id: str
    entity_id: str
    entity_version: int
    blocks: tuple[MappingBlock, ...]  # ascending schema_version


@dataclass(frozen=True)
class BlockSupersets:
    """Blocks grouped by column group (schema version) and row group (entity version)."""

    columns: Mapping[tuple[str, int], tuple[MappingBlock, ...]]
    rows: Mapping[tuple[str, int], tuple[MappingBlock, ...]]


@dataclass(frozen=True)
class MappingMatrix:
    """The full sparse matrix for one state, in coordinate form.

    Immutable after construction and safe to share across readers. Rows are
    range (canonical) attributes, columns are domain (source) attributes.
    """

    state: int
    domain_index: AttributeIndex
    range_index: AttributeIndex
    ones: frozenset[tuple[int, int]]  # (row, col) ordinals

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.range_index), len(self.domain_index))

    @property
    def element_count(self) -> int:
        rows, cols = self.shape
        return rows * cols

    @cached_property
    def _block_ones(self) -> dict[BlockKey, frozenset[tuple[int, int]]]:
        buckets: dict[BlockKey, set[tuple[int, int]]] = {}
        for q, p in self.ones:
            r, w, _ = self.range_index.entry(q)
            o, v, _ = self.domain_index.entry(p)
            buckets.setdefault((o, v, r, w), set()).add((q, p))
        return {key: frozenset(cells) for key, cells in buckets.items()}

    def nonnull_block_keys(self) -> tuple[BlockKey, ...]:
        """Keys of the blocks containing at least one 1, sorted."""
        return tuple(sorted(self._block_ones))

    def block(self, key: BlockKey) -> MappingBlock:
        o, v, r, w = key
        col_span = self.domain_index.span(o, v)
        row_span = self.range_index.span(r, w)
        cells = self._block_ones.get(key, frozenset())
        names = frozenset(
            (self.range_index.entry(q)[2], self.domain_index.entry(p)[2])
            for q, p in cells
        )
        return MappingBlock(o, v, r, w, row_span, col_span, cells, names)

    def blocks(self) -> tuple[MappingBlock, ...]:
        """Every block, column groups in index order within each row group."""
        return tuple(
            self.block((o, v, r, w))
            for r, w in self.range_index.groups
            for o, v in self.domain_index.groups
        )

    def column_blocks(self, schema_id: str, version: int) -> tuple[MappingBlock, ...]:
        """All blocks of one domain schema version, one per entity version."""
        self.domain_index.span(schema_id, version)
        return tuple(
            self.block((schema_id, version, r, w)) for r, w in self.range_index.groups
        )

    def row_blocks(self, entity_id: str, version: int) -> tuple[MappingBlock, ...]:
        """All blocks of one entity version, one per domain schema version."""
        self.range_index.span(entity_id, version)
        return tuple(
            self.block((o, v, entity_id, version)) for o, v in self.domain_index.groups
        )

    def named_ones(self) -> frozenset[NamedElement]:
        """The 1-elements as state-independent name tuples."""
        out = set()
        for q, p in self.ones:
            r, w, c = self.range_index.entry(q)
            o, v, a = self.domain_index.entry(p)
            out.add((r, w, c, o, v, a))
        return frozenset(out)

    def to_dense(self) -> np.ndarray:
        """Debug renderer: the matrix as a dense 0/1 array (small fixtures only)."""
        dense = np.zeros(self.shape, dtype=np.int8)
        for q, p in self.ones:
            dense[q, p] = 1
        return dense


def _check_block_validity(
    ones_by_block: Mapping[BlockKey, Iterable[tuple[int, int]]],
) -> None:
    for key, cells in ones_by_block.items():
        rows_seen: set[int] = set()
        cols_seen: set[int] = set()
        for q, p in cells:
            if q in rows_seen:
                raise ValidityError(f"two ones in one row of block {key}")
            if p in cols_seen:
                raise ValidityError(f"two ones in one column of block {key}")
            rows_seen.add(q)
            cols_seen.add(p)


def build_matrix(
    registry: SchemaRegistry,
    entries: Iterable[tuple[str, int, str, str, int, str]],
    state: int | None = None,
) -> MappingMatrix:
    """Build a matrix from 1-element declarations, enforcing block validity.

    Each entry is ``(schema, schema_version, attribute, entity,
    entity_version, cdm_attribute)``; everything not listed is zero.

    Raises:
        SchemaError: an entry references an unknown coordinate.
        ValidityError: two ones share a block row or block column.
    """
    domain_index = registry.attribute_index(Side.DOMAIN)
    range_index = registry.attribute_index(Side.RANGE)
    ones: set[tuple[int, int]] = set()
    by_block: dict[BlockKey, list[tuple[int, int]]] = {}
    for o, v, attr, r, w, cdm_attr in entries:
        p = domain_index.ordinal(o, v, attr)
        q = range_index.ordinal(r, w, cdm_attr)
        ones.add((q, p))
        by_block.setdefault((o, v, r, w), []).append((q, p))
    _check_block_validity(by_block)
    return MappingMatrix(
        state=registry.state if state is None else state,
        domain_index=domain_index,
        range_index=range_index,
        ones=frozenset(ones),
    )


def partition_blocks(matrix: MappingMatrix) -> tuple[MappingBlock, ...]:
    """Partition the matrix into its blocks; the blocks tile it exactly."""
    return matrix.blocks()


def largest_permutation_submatrix(block: MappingBlock) -> SquareBlock:
    """Size a block down to its largest permutation sub-matrix.

    The sub-matrix induced by the non-zero rows and columns of a valid block
    is a permutation matrix containing exactly the block's ones; a block
    without ones yields a 1x1 null marker.

    Raises:
        ValidityError: the block is not a partial permutation pattern.
    """
    if block.is_null:
        return SquareBlock(
            BlockKind.NULL,
            block.schema_id,
            block.schema_version,
            block.entity_id,
            block.entity_version,
            size=1,
            ones=frozenset(),
        )
    rows = {q for q, _ in block.ones}
    cols = {p for _, p in block.ones}
    if len(rows) != len(block.ones) or len(cols) != len(block.ones):
        raise ValidityError(f"block {block.key} is not a 1:1 mapping")
    return SquareBlock(
        BlockKind.PERMUTATION,
        block.schema_id,
        block.schema_version,
        block.entity_id,
        block.entity_version,
        size=len(block.ones),
        ones=block.one_names,
    )


def partition_version_superblocks(matrix: MappingMatrix) -> tuple[VersionSuperBlock, ...]:
    """Group blocks sharing (schema, entity, entity version) across schema versions."""
    groups: dict[tuple[str, str, int], list[MappingBlock]] = {}
    for block in matrix.blocks():
        groups.setdefault(
            (block.schema_id, block.entity_id, block.entity_version), []
        ).append(block)
    supers = []
    for (o, r, w), blocks in groups.items():
        blocks.sort(key=lambda b: b.schema_version)
        supers.append(VersionSuperBlock(o, r, w, tuple(blocks)))
    return tuple(supers)


def block_supersets(matrix: MappingMatrix) -> BlockSupersets:
    """Column super-sets keyed by (schema, version), row super-sets by (entity, version)."""
    columns: dict[tuple[str, int], list[MappingBlock]] = {}
    rows: dict[tuple[str, int], list[MappingBlock]] = {}
    for block in matrix.blocks():
        columns.setdefault((block.schema_id, block.schema_version), []).append(block)
        rows.setdefault((block.entity_id, block.entity_version), []).append(block)
    return BlockSupersets(
        columns={k: tuple(v) for k, v in columns.items()},
        rows={k: tuple(v) for k, v in rows.items()},
    )


def load_mapping_csv(path) -> list[tuple[str, int, str, str, int, str]]:
    """Read 1-element declarations from a CSV file.

    Expected header: ``schema,schema_version,attribute,entity,entity_version,
    cdm_attribute``. Each row declares one element with value 1.
    """
    import csv

    required = [
        "schema",
        "schema_version",
        "attribute",
        "entity",
        "entity_version",
        "cdm_attribute",
    ]
    entries = []
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != required:
            raise SchemaError(
                f"mapping CSV must have header {','.join(required)}; got "
                f"{reader.fieldnames}"
            )
        for lineno, row in enumerate(reader, start=2):
            try:
                entries.append(
                    (
                        row["schema"],
                        int(row["schema_version"]),
                        row["attribute"],
                        row["entity"],
                        int(row["entity_version"]),
                        row["cdm_attribute"],
                    )
                )
            except (TypeError, ValueError) as exc:
                raise SchemaError(f"{path}:{lineno}: bad mapping row ({exc})") from None
    return entries
