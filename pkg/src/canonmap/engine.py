"""Message mapping: the sparse sequential baseline and the dense production path.

The sparse path walks every block of the incoming message's column group,
pre-fills each output with explicit nulls, and applies the two-valued
mapping function element by element. It is the reference semantics and the
oracle the dense path is checked against.

The dense path works on an immutable snapshot whose column index resolves a
(schema, version) pair to its dense blocks in constant time. Payloads carry
no nulls; the mapping function degenerates to a set lookup (an element is
stored only if its parameter is 1, an attribute is present only if its
value is non-null), and outputs that end up empty are suppressed. Element
results are independent of each other, so any scheduling of the per-element
and per-block work yields the same outputs; results are normalized by
entity and attribute order to keep runs byte-comparable.

Mapping is pure: replaying a duplicated incoming message produces identical
outputs, which is what makes at-least-once delivery workable upstream.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Mapping

from .compaction import DenseBlockSet
from .errors import SchemaError, StateMismatchError, UnknownVersionError
from .matrix import MappingMatrix
from .schema import SchemaRegistry, Side


class MessageSide(enum.Enum):
    INCOMING = "incoming"
    OUTGOING = "outgoing"


@dataclass(frozen=True)
class Message:
    """A schema-tagged payload of attribute/value pairs.

    Sparse form: the payload lists every attribute of the schema version,
    nulls included. Dense form: only non-null attributes appear. Values are
    opaque; mapping relabels them without conversion.
    """

    side: MessageSide
    schema_id: str
    version: int
    state: int
    payload: Mapping[str, object]

    def densified(self) -> Message:
        """This message without null values (absent attributes stay absent)."""
        return Message(
            self.side,
            self.schema_id,
            self.version,
            self.state,
            {k: v for k, v in self.payload.items() if v is not None},
        )


def densify(message: Message) -> Message:
    return message.densified()


def sparsify(message: Message, registry: SchemaRegistry) -> Message:
    """Fill the payload out to the schema's full attribute list, nulls explicit."""
    side = Side.DOMAIN if message.side is MessageSide.INCOMING else Side.RANGE
    schema = registry.tree(side).get(message.schema_id, message.version)
    unknown = set(message.payload) - set(schema.attributes)
    if unknown:
        raise SchemaError(
            f"payload attributes {sorted(unknown)} are not part of "
            f"{message.schema_id!r} v{message.version}"
        )
    payload = {a: message.payload.get(a) for a in schema.attributes}
    return Message(message.side, message.schema_id, message.version, message.state, payload)


@dataclass(frozen=True)
class DenseColumnBlock:
    """One dense block as the snapshot's column index stores it."""

    entity_id: str
    entity_version: int
    # (cdm_attribute, attribute) pairs, ordered by the target schema's attribute order
    elements: tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class EngineSnapshot:
    """Immutable view of one state: dense columns plus the known version set.

    Column lookup is a single dict access, independent of how many schema
    versions are registered. Snapshots are shared freely across concurrent
    mapper workers and never mutated; publishing a new state swaps the whole
    snapshot.
    """

    state: int
    columns: Mapping[tuple[str, int], tuple[DenseColumnBlock, ...]]
    known_versions: frozenset[tuple[str, int]]

    @property
    def cached_element_count(self) -> int:
        return sum(len(b.elements) for blocks in self.columns.values() for b in blocks)


def build_snapshot(dense: DenseBlockSet, registry: SchemaRegistry) -> EngineSnapshot:
    """Index a dense block set by column for O(1) lookup during mapping.

    Raises:
        StateMismatchError: the dense set and registry disagree on state.
    """
    if dense.state != registry.state:
        raise StateMismatchError(
            f"dense set state {dense.state} disagrees with registry state "
            f"{registry.state}"
        )
    range_index = registry.attribute_index(Side.RANGE)
    columns: dict[tuple[str, int], list[DenseColumnBlock]] = {}
    for (o, v, r, w), ones in sorted(dense.blocks.items()):
        order = {attr: i for i, attr in enumerate(range_index.attributes_of(r, w))}
        elements = tuple(sorted(ones, key=lambda pair: order[pair[0]]))
        columns.setdefault((o, v), []).append(DenseColumnBlock(r, w, elements))
    known = frozenset(
        (schema.schema_id, schema.version)
        for schema in registry.tree(Side.DOMAIN).iter_registered()
    )
    return EngineSnapshot(
        state=registry.state,
        columns={k: tuple(v) for k, v in columns.items()},
        known_versions=known,
    )


def map_sparse(message: Message, matrix: MappingMatrix) -> list[Message]:
    """Baseline mapping of one sparse message through every block of its column.

    Produces one sparse outgoing message per entity version, all-null outputs
    included. The payload must list exactly the schema version's attributes.

    Raises:
        StateMismatchError / UnknownVersionError / SchemaError: on state
            disagreement, an unregistered schema version, or a payload that
            does not match the schema.
    """
    if message.side is not MessageSide.INCOMING:
        raise SchemaError("map_sparse expects an incoming message")
    if message.state != matrix.state:
        raise StateMismatchError(
            f"message state {message.state} does not match matrix state {matrix.state}"
        )
    expected = set(
        matrix.domain_index.attributes_of(message.schema_id, message.version)
    )
    if set(message.payload) != expected:
        raise SchemaError(
            f"sparse payload keys do not match {message.schema_id!r} "
            f"v{message.version} exactly"
        )
    outputs = []
    for block in matrix.column_blocks(message.schema_id, message.version):
        target_attrs = matrix.range_index.attributes_of(
            block.entity_id, block.entity_version
        )
        payload: dict[str, object] = {c: None for c in target_attrs}
        for cdm_attr, attr in block.one_names:
            value = message.payload[attr]
            present = 0 if value is None else 1
            if 1 * present == 1:
                payload[cdm_attr] = value
        outputs.append(
            Message(
                MessageSide.OUTGOING,
                block.entity_id,
                block.entity_version,
                matrix.state,
                payload,
            )
        )
    outputs.sort(key=lambda m: (m.schema_id, m.version))
    return outputs


def map_dense(message: Message, snapshot: EngineSnapshot) -> list[Message]:
    """Map one dense message via the snapshot's column index.

    Emits one dense outgoing message per block that transfers at least one
    value; empty outputs are suppressed. Null values in the payload count as
    absent. Output order is normalized by (entity, version).

    Raises:
        StateMismatchError: message and snapshot belong to different states.
        UnknownVersionError: the schema version is not known to the snapshot
            (an out-of-sync sign in a distributed setup).
    """
    if message.side is not MessageSide.INCOMING:
        raise SchemaError("map_dense expects an incoming message")
    if message.state != snapshot.state:
        raise StateMismatchError(
            f"message state {message.state} does not match snapshot state "
            f"{snapshot.state}"
        )
    key = (message.schema_id, message.version)
    if key not in snapshot.known_versions:
        raise UnknownVersionError(
            f"unknown schema version {message.schema_id!r} v{message.version}"
        )
    payload = message.payload
    outputs = []
    for block in snapshot.columns.get(key, ()):
        out: dict[str, object] = {}
        for cdm_attr, attr in block.elements:
            value = payload.get(attr)
            if value is not None:
                out[cdm_attr] = value
        if out:
            outputs.append(
                Message(
                    MessageSide.OUTGOING,
                    block.entity_id,
                    block.entity_version,
                    snapshot.state,
                    out,
                )
            )
    outputs.sort(key=lambda m: (m.schema_id, m.version))
    return outputs


class MappingEngine:
    """Holds the published snapshot and swaps it atomically on updates.

    Readers keep whatever snapshot they grabbed; in-flight mappings finish on
    the old state while the writer publishes the next one. Publishing the
    same state twice is rejected, mirroring the cache eviction discipline of
    one snapshot per configuration state.
    """

    def __init__(self, registry: SchemaRegistry) -> None:
        self.registry = registry
        self._snapshot: EngineSnapshot | None = None

    @property
    def snapshot(self) -> EngineSnapshot:
        if self._snapshot is None:
            raise StateMismatchError("no snapshot has been published yet")
        return self._snapshot

    def publish(self, dense: DenseBlockSet) -> EngineSnapshot:
        snapshot = build_snapshot(dense, self.registry)
        if self._snapshot is not None and self._snapshot.state == snapshot.state:
            raise StateMismatchError(
                f"state {snapshot.state} is already published; apply a change first"
            )
        self._snapshot = snapshot
        return snapshot

    def map_message(self, message: Message) -> list[Message]:
        return map_dense(message, self.snapshot)
