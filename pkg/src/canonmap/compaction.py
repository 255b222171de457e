"""Both compaction strategies for the mapping matrix and their inverses.

The balanced strategy keeps, per non-null block, exactly the 1-elements of
the block's permutation pattern (:class:`DenseBlockSet`); null blocks are
dropped entirely. It is the compute-side form: cheap to update and to index
by column for mapping.

The aggressive strategy additionally deduplicates across schema versions
(:class:`BlockRunStore`): within one (schema, entity, entity-version)
super-block, walking versions upward, a square block is stored only when it
is not equivalent, under attribute lineage, to the previously stored one. A
run of versions whose blocks are all-zero after a stored permutation is
recorded by a single null marker; leading all-zero versions are not stored
at all. It is the storage-side form: smallest on disk, but it must be
expanded before use.

Expansion replays each stored square block into every version from its own
up to the version before the next stored entry (or through the highest
registered version), re-indexing element columns into each target version
via lineage. Both expansions invert their compactions exactly on valid
matrices.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .errors import StateMismatchError, ValidityError
from .matrix import (
    BlockKey,
    BlockKind,
    MappingMatrix,
    SquareBlock,
    largest_permutation_submatrix,
    partition_version_superblocks,
)
from .schema import SchemaRegistry, Side

# (schema, entity, entity_version)
SuperBlockKey = tuple[str, str, int]


@dataclass(frozen=True)
class DenseBlockSet:
    """Per-block dense sets of 1-elements; the compute-side mapping matrix.

    ``blocks`` maps a block key to its (cdm_attribute, attribute) pairs.
    Contains no zero elements and no empty blocks; each block inherits the
    partial-permutation pattern of the matrix it was compacted from.
    """

    state: int
    blocks: Mapping[BlockKey, frozenset[tuple[str, str]]]

    @property
    def element_count(self) -> int:
        return sum(len(ones) for ones in self.blocks.values())

    def column_superset(self) -> dict[tuple[str, int], tuple[BlockKey, ...]]:
        """Block keys grouped by (schema, version), each group sorted by entity."""
        columns: dict[tuple[str, int], list[BlockKey]] = {}
        for key in self.blocks:
            columns.setdefault((key[0], key[1]), []).append(key)
        return {k: tuple(sorted(v)) for k, v in sorted(columns.items())}

    def row_superset(self) -> dict[tuple[str, int], tuple[BlockKey, ...]]:
        """Block keys grouped by (entity, entity_version)."""
        rows: dict[tuple[str, int], list[BlockKey]] = {}
        for key in self.blocks:
            rows.setdefault((key[2], key[3]), []).append(key)
        return {k: tuple(sorted(v)) for k, v in sorted(rows.items())}


@dataclass(frozen=True)
class RunEntry:
    """One stored square block starting a run of equivalent versions."""

    version: int
    kind: BlockKind
    ones: frozenset[tuple[str, str]]  # empty for a null marker


@dataclass(frozen=True)
class BlockRunStore:
    """Version-deduplicated square blocks per super-block; the storage-side form."""

    state: int
    superblocks: Mapping[SuperBlockKey, tuple[RunEntry, ...]]

    @property
    def element_count(self) -> int:
        """Stored 1-elements (null markers carry none)."""
        return sum(
            len(entry.ones)
            for entries in self.superblocks.values()
            for entry in entries
        )

    @property
    def null_marker_count(self) -> int:
        return sum(
            1
            for entries in self.superblocks.values()
            for entry in entries
            if entry.kind is BlockKind.NULL
        )


def compact_to_dense(matrix: MappingMatrix) -> DenseBlockSet:
    """Keep every non-null block's permutation elements; drop null blocks.

    The element count equals the matrix's 1-count: sizing blocks down to
    their permutation patterns drops only zero rows and columns.
    """
    blocks: dict[BlockKey, frozenset[tuple[str, str]]] = {}
    for key in matrix.nonnull_block_keys():
        square = largest_permutation_submatrix(matrix.block(key))
        if square.kind is BlockKind.PERMUTATION:
            blocks[key] = square.ones
    return DenseBlockSet(state=matrix.state, blocks=blocks)


def square_blocks_equivalent(
    earlier: SquareBlock,
    later: SquareBlock,
    registry: SchemaRegistry,
    positional: bool = False,
) -> bool:
    """Whether two square blocks of one super-block express the same mapping.

    Two null markers are equivalent. Two permutation blocks are equivalent
    when they target the same rows and the lineage image of the earlier
    block's columns in the later version reproduces the later block exactly.
    Lineage, not position, is the contract: versions may reorder attributes,
    and only lineage identifies a duplicated mapping. ``positional`` switches
    to comparing column positions within each version instead, as a debug
    aid when lineage data is suspect.
    """
    if (earlier.schema_id, earlier.entity_id, earlier.entity_version) != (
        later.schema_id,
        later.entity_id,
        later.entity_version,
    ):
        return False
    if earlier.kind is not later.kind:
        return False
    if earlier.kind is BlockKind.NULL:
        return True
    if len(earlier.ones) != len(later.ones):
        return False
    if positional:
        return _positions(earlier, registry) == _positions(later, registry)
    image = set()
    for cdm_attr, attr in earlier.ones:
        resolved = registry.resolve(
            Side.DOMAIN,
            earlier.schema_id,
            attr,
            earlier.schema_version,
            later.schema_version,
        )
        if resolved is None:
            return False
        image.add((cdm_attr, resolved))
    return image == set(later.ones)


def _positions(square: SquareBlock, registry: SchemaRegistry) -> set[tuple[str, int]]:
    attrs = registry.tree(Side.DOMAIN).get(square.schema_id, square.schema_version).attributes
    return {(cdm_attr, attrs.index(attr)) for cdm_attr, attr in square.ones}


def compact_to_runs(matrix: MappingMatrix, registry: SchemaRegistry) -> BlockRunStore:
    """Deduplicate square blocks along each super-block's version axis.

    Walking versions upward: a permutation block is stored unless it is
    equivalent to the latest stored entry; an all-zero block is stored as a
    null marker only when the latest stored entry is a permutation. All-zero
    versions before the first permutation are never stored, and super-blocks
    that are entirely zero are omitted.
    """
    superblocks: dict[SuperBlockKey, tuple[RunEntry, ...]] = {}
    for vsb in partition_version_superblocks(matrix):
        entries: list[RunEntry] = []
        last_stored: SquareBlock | None = None
        for block in vsb.blocks:
            square = largest_permutation_submatrix(block)
            if square.kind is BlockKind.PERMUTATION:
                if last_stored is None or not square_blocks_equivalent(
                    last_stored, square, registry
                ):
                    entries.append(
                        RunEntry(block.schema_version, BlockKind.PERMUTATION, square.ones)
                    )
                    last_stored = square
            else:
                if last_stored is not None and last_stored.kind is BlockKind.PERMUTATION:
                    entries.append(
                        RunEntry(block.schema_version, BlockKind.NULL, frozenset())
                    )
                    last_stored = square
        if entries:
            superblocks[(vsb.schema_id, vsb.entity_id, vsb.entity_version)] = tuple(
                entries
            )
    return BlockRunStore(state=matrix.state, superblocks=superblocks)


def expand_dense(dense: DenseBlockSet, registry: SchemaRegistry) -> MappingMatrix:
    """Restore the full matrix from a dense block set.

    Raises:
        StateMismatchError: an element does not resolve in the current
            attribute indexes (the set belongs to a different state).
        ValidityError: the set violates the 1:1 rule (corrupt input).
    """
    domain_index = registry.attribute_index(Side.DOMAIN)
    range_index = registry.attribute_index(Side.RANGE)
    ones: set[tuple[int, int]] = set()
    by_block: dict[BlockKey, list[tuple[int, int]]] = {}
    for (o, v, r, w), pairs in dense.blocks.items():
        for cdm_attr, attr in pairs:
            try:
                q = range_index.ordinal(r, w, cdm_attr)
                p = domain_index.ordinal(o, v, attr)
            except Exception as exc:
                raise StateMismatchError(
                    f"dense set of state {dense.state} does not match the current "
                    f"registry: {exc}"
                ) from None
            ones.add((q, p))
            by_block.setdefault((o, v, r, w), []).append((q, p))
    _revalidate(by_block)
    return MappingMatrix(
        state=dense.state,
        domain_index=domain_index,
        range_index=range_index,
        ones=frozenset(ones),
    )


def expand_runs(runs: BlockRunStore, registry: SchemaRegistry) -> MappingMatrix:
    """Replay stored square blocks across version runs to restore the matrix.

    Each entry fills every registered version from its own up to the version
    before the next stored entry, or through the schema's highest registered
    version for the last entry. Element columns are re-indexed into each
    target version via lineage; null markers fill their run with zeros.

    Raises:
        StateMismatchError: an entry references an unregistered version or an
            element that cannot be re-indexed into a target version.
    """
    domain_index = registry.attribute_index(Side.DOMAIN)
    range_index = registry.attribute_index(Side.RANGE)
    domain_tree = registry.tree(Side.DOMAIN)
    ones: set[tuple[int, int]] = set()
    by_block: dict[BlockKey, list[tuple[int, int]]] = {}
    for (o, r, w), entries in runs.superblocks.items():
        versions = domain_tree.versions(o)
        if not versions:
            raise StateMismatchError(f"run store references unknown schema {o!r}")
        for i, entry in enumerate(entries):
            if entry.version not in versions:
                raise StateMismatchError(
                    f"run store references unregistered version {o!r} v{entry.version}"
                )
            if entry.kind is BlockKind.NULL:
                continue
            stop = entries[i + 1].version - 1 if i + 1 < len(entries) else versions[-1]
            targets = [v for v in versions if entry.version <= v <= stop]
            for target in targets:
                for cdm_attr, attr in entry.ones:
                    try:
                        resolved = domain_tree.resolve_equivalent(
                            o, attr, entry.version, target
                        )
                    except Exception as exc:
                        raise StateMismatchError(
                            f"run store of state {runs.state} does not match the "
                            f"current registry: {exc}"
                        ) from None
                    if resolved is None:
                        raise StateMismatchError(
                            f"stored element ({cdm_attr!r}, {attr!r}) of {o!r} "
                            f"v{entry.version} has no equivalent in v{target}"
                        )
                    try:
                        q = range_index.ordinal(r, w, cdm_attr)
                        p = domain_index.ordinal(o, target, resolved)
                    except Exception as exc:
                        raise StateMismatchError(
                            f"run store of state {runs.state} does not match the "
                            f"current registry: {exc}"
                        ) from None
                    ones.add((q, p))
                    by_block.setdefault((o, target, r, w), []).append((q, p))
    _revalidate(by_block)
    return MappingMatrix(
        state=runs.state,
        domain_index=domain_index,
        range_index=range_index,
        ones=frozenset(ones),
    )


def rebuild_dense_from_runs(
    runs: BlockRunStore, registry: SchemaRegistry
) -> DenseBlockSet:
    """Recreate the compute-side set from the storage-side set.

    This is the startup path of the hybrid arrangement (store the run form,
    compute with the dense form) and is exactly expansion followed by
    compaction.
    """
    return compact_to_dense(expand_runs(runs, registry))


def compaction_ratio(stored_elements: int, matrix: MappingMatrix) -> float:
    """Fraction of matrix cells saved by storing only ``stored_elements``."""
    total = matrix.element_count
    if total == 0:
        return 0.0
    return 1.0 - stored_elements / total


def _revalidate(by_block: dict[BlockKey, list[tuple[int, int]]]) -> None:
    for key, cells in by_block.items():
        rows = {q for q, _ in cells}
        cols = {p for _, p in cells}
        if len(rows) != len(cells) or len(cols) != len(cells):
            raise ValidityError(f"expanded block {key} is not a 1:1 mapping")
