"""State transitions of the dense block set in response to schema changes.

Updates operate purely on the dense set: deletions subtract whole block
groups, additions copy 1-elements from the immediately previous version
into the new one for every attribute that has a lineage equivalent there.
When an attribute cannot be carried over, the candidate block comes out
smaller than its source (or empty), and a notification is emitted so a user
can double-check the automated result.

Adding a new entity version additionally deletes the blocks of the version
it supersedes: any extraction schema version is mapped to at most one
version of an entity, so outdated canonical-side rows leave the matrix.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .compaction import DenseBlockSet
from .errors import SchemaError, StateMismatchError, UnknownVersionError, ValidityError
from .matrix import BlockKey
from .schema import ChangeCase, ChangeEvent, SchemaRegistry, Side


class Axis(enum.Enum):
    """Which side of a block an equivalence copy works on."""

    COLUMN = "column"  # domain attributes (schema version added)
    ROW = "row"  # range attributes (entity version added)


class NotificationKind(enum.Enum):
    SHRUNKEN_PERMUTATION = "shrunken_permutation"
    NEW_NULL_BLOCK = "new_null_block"


@dataclass(frozen=True)
class UpdateNotification:
    """A candidate block came out smaller than its source during an update."""

    block: BlockKey
    kind: NotificationKind
    old_size: int
    new_size: int


def copy_block_via_equivalence(
    key: BlockKey,
    ones: frozenset[tuple[str, str]],
    to_version: int,
    registry: SchemaRegistry,
    axis: Axis,
) -> frozenset[tuple[str, str]]:
    """Map a block's elements into another version along one axis.

    Elements whose attribute has no lineage equivalent in ``to_version`` are
    dropped, by design; the result is therefore a (possibly smaller) partial
    permutation.
    """
    schema_id, from_version = (
        (key[0], key[1]) if axis is Axis.COLUMN else (key[2], key[3])
    )
    side = Side.DOMAIN if axis is Axis.COLUMN else Side.RANGE
    copied = set()
    for cdm_attr, attr in ones:
        moving = attr if axis is Axis.COLUMN else cdm_attr
        resolved = registry.resolve(side, schema_id, moving, from_version, to_version)
        if resolved is None:
            continue
        copied.add((cdm_attr, resolved) if axis is Axis.COLUMN else (resolved, attr))
    if len(copied) != len({c for c, _ in copied}) or len(copied) != len(
        {a for _, a in copied}
    ):
        raise ValidityError(
            f"equivalence copy of block {key} to v{to_version} broke the 1:1 rule"
        )
    return frozenset(copied)


def apply_change(
    dense: DenseBlockSet, event: ChangeEvent, registry: SchemaRegistry
) -> tuple[DenseBlockSet, list[UpdateNotification]]:
    """Transition the dense set to the next state for one schema change.

    The registry must already reflect the change and must be exactly one
    state ahead of ``dense``; re-applying an event therefore fails instead of
    corrupting the set. Returns the successor set together with the
    notifications for shrunken or emptied candidate blocks.

    Raises:
        StateMismatchError: the dense set is not one state behind the
            registry, or a deletion event does not match the registry.
        UnknownVersionError: an addition event references a version the
            registry does not contain.
    """
    if dense.state + 1 != registry.state:
        raise StateMismatchError(
            f"dense set at state {dense.state} cannot absorb a change against "
            f"registry state {registry.state}"
        )
    blocks = dict(dense.blocks)
    notifications: list[UpdateNotification] = []

    if event.case in (ChangeCase.DELETED_DOMAIN_VERSION, ChangeCase.DELETED_RANGE_VERSION):
        side = (
            Side.DOMAIN
            if event.case is ChangeCase.DELETED_DOMAIN_VERSION
            else Side.RANGE
        )
        if registry.has_version(side, event.schema_id, event.version):
            raise StateMismatchError(
                f"registry still contains {event.schema_id!r} v{event.version}; "
                "it does not reflect the deletion"
            )
        selector = (0, 1) if side is Side.DOMAIN else (2, 3)
        for key in list(blocks):
            if (key[selector[0]], key[selector[1]]) == (event.schema_id, event.version):
                del blocks[key]
    else:
        side = (
            Side.DOMAIN
            if event.case is ChangeCase.ADDED_DOMAIN_VERSION
            else Side.RANGE
        )
        if not registry.has_version(side, event.schema_id, event.version):
            raise UnknownVersionError(
                f"registry does not contain the added version "
                f"{event.schema_id!r} v{event.version}"
            )
        axis = Axis.COLUMN if side is Side.DOMAIN else Axis.ROW
        previous = event.version - 1
        selector = (0, 1) if side is Side.DOMAIN else (2, 3)
        for key in sorted(dense.blocks):
            if (key[selector[0]], key[selector[1]]) != (event.schema_id, previous):
                continue
            source = dense.blocks[key]
            candidate = copy_block_via_equivalence(
                key, source, event.version, registry, axis
            )
            new_key: BlockKey = (
                (key[0], event.version, key[2], key[3])
                if axis is Axis.COLUMN
                else (key[0], key[1], key[2], event.version)
            )
            if candidate:
                blocks[new_key] = candidate
                if len(candidate) < len(source):
                    notifications.append(
                        UpdateNotification(
                            new_key,
                            NotificationKind.SHRUNKEN_PERMUTATION,
                            old_size=len(source),
                            new_size=len(candidate),
                        )
                    )
            else:
                notifications.append(
                    UpdateNotification(
                        new_key,
                        NotificationKind.NEW_NULL_BLOCK,
                        old_size=len(source),
                        new_size=0,
                    )
                )
        if event.case is ChangeCase.ADDED_RANGE_VERSION and previous >= 1:
            # One entity version per extraction schema: drop the superseded rows.
            for key in list(blocks):
                if (key[2], key[3]) == (event.schema_id, previous):
                    del blocks[key]

    notifications.sort(key=lambda n: n.block)
    return DenseBlockSet(state=registry.state, blocks=blocks), notifications


def replace_block(
    dense: DenseBlockSet,
    key: BlockKey,
    ones: frozenset[tuple[str, str]],
    registry: SchemaRegistry,
) -> DenseBlockSet:
    """Replace one block's elements after a manual edit (registry state bumped first).

    Validates coordinates and the 1:1 rule the same way matrix construction
    does; an empty element set removes the block.
    """
    if dense.state + 1 != registry.state:
        raise StateMismatchError(
            "bump the registry state before installing a manual block edit"
        )
    o, v, r, w = key
    domain_attrs = registry.attribute_index(Side.DOMAIN).attributes_of(o, v)
    range_attrs = registry.attribute_index(Side.RANGE).attributes_of(r, w)
    rows = [c for c, _ in ones]
    cols = [a for _, a in ones]
    for cdm_attr, attr in ones:
        if cdm_attr not in range_attrs or attr not in domain_attrs:
            raise SchemaError(
                f"element ({cdm_attr!r}, {attr!r}) does not belong to block {key}"
            )
    if len(set(rows)) != len(rows) or len(set(cols)) != len(cols):
        raise ValidityError(f"manual edit of block {key} breaks the 1:1 rule")
    blocks = dict(dense.blocks)
    if ones:
        blocks[key] = frozenset(ones)
    else:
        blocks.pop(key, None)
    return DenseBlockSet(state=registry.state, blocks=blocks)
