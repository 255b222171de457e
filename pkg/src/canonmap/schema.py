"""Versioned schema trees, attribute lineage, and global attribute indexing.

The mapping network has two sides: the *domain* side holds the versioned
extraction schemas of the source systems, the *range* side holds the
versioned business entities of the canonical data model. Each schema
version is an ordered block of attributes plus equivalence links to its
predecessor version; chains of these links form attribute lineages that
the compaction and update machinery rely on.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .errors import SchemaError, UnknownVersionError


class Side(enum.Enum):
    """Which half of the mapping network a schema tree describes."""

    DOMAIN = "domain"  # extraction schemas (message sources)
    RANGE = "range"  # canonical-model business entities (message targets)


class ChangeCase(enum.IntEnum):
    """The four schema-change triggers the update engine reacts to."""

    DELETED_DOMAIN_VERSION = 1
    DELETED_RANGE_VERSION = 2
    ADDED_DOMAIN_VERSION = 3
    ADDED_RANGE_VERSION = 4


@dataclass(frozen=True)
class ChangeEvent:
    """One schema mutation, addressed the way the update engine consumes it."""

    case: ChangeCase
    schema_id: str
    version: int


@dataclass(frozen=True)
class VersionedSchema:
    """One version of a schema: an ordered attribute block plus predecessor links.

    ``equivalences`` maps an attribute of this version to the attribute of
    ``version - 1`` it duplicates. Links must be injective: no two
    attributes may share a predecessor.
    """

    schema_id: str
    version: int
    attributes: tuple[str, ...]
    equivalences: Mapping[str, str]

    def successor_of(self, predecessor_attr: str) -> str | None:
        """Return the attribute of this version that duplicates ``predecessor_attr``."""
        for attr, pred in self.equivalences.items():
            if pred == predecessor_attr:
                return attr
        return None


class SchemaTree:
    """All versioned schemas of one side, in registration order.

    Mutations happen through a single writer; readers work on immutable
    snapshots (:class:`AttributeIndex`) taken between mutations.
    """

    def __init__(self, side: Side) -> None:
        self.side = side
        self._schemas: dict[str, dict[int, VersionedSchema]] = {}
        # Insertion log of live (schema_id, version) pairs; defines index order.
        self._log: list[tuple[str, int]] = []

    def __contains__(self, key: tuple[str, int]) -> bool:
        schema_id, version = key
        return version in self._schemas.get(schema_id, {})

    def schema_ids(self) -> list[str]:
        return [s for s in self._schemas if self._schemas[s]]

    def versions(self, schema_id: str) -> list[int]:
        return sorted(self._schemas.get(schema_id, {}))

    def get(self, schema_id: str, version: int) -> VersionedSchema:
        try:
            return self._schemas[schema_id][version]
        except KeyError:
            raise UnknownVersionError(
                f"unknown schema version {schema_id!r} v{version} on {self.side.value} side"
            ) from None

    def iter_registered(self) -> Iterator[VersionedSchema]:
        """Yield live schema versions in registration order."""
        for schema_id, version in self._log:
            yield self._schemas[schema_id][version]

    def register(
        self,
        schema_id: str,
        version: int,
        attributes: Iterable[str],
        equivalences: Mapping[str, str] | None = None,
    ) -> VersionedSchema:
        """Register the next version of ``schema_id``.

        Versions are contiguous: the first version of a schema is 1 and every
        later registration must use the current highest version plus one.
        When ``equivalences`` is omitted, attributes that share a name with an
        attribute of the previous version are linked automatically; pass an
        explicit mapping (possibly empty) to override.

        Raises:
            SchemaError: on duplicate versions, duplicate attribute names,
                non-contiguous version numbers, or invalid equivalence links.
        """
        attrs = tuple(attributes)
        if not schema_id:
            raise SchemaError("schema_id must be non-empty")
        if len(set(attrs)) != len(attrs):
            raise SchemaError(f"duplicate attribute name in {schema_id!r} v{version}")
        existing = self._schemas.get(schema_id, {})
        expected = max(existing) + 1 if existing else 1
        if version in existing:
            raise SchemaError(f"duplicate version {schema_id!r} v{version}")
        if version != expected:
            raise SchemaError(
                f"version {version} of {schema_id!r} is not contiguous; expected v{expected}"
            )

        previous = existing.get(version - 1)
        if equivalences is None:
            links = {a: a for a in attrs if previous and a in previous.attributes}
        else:
            links = dict(equivalences)
        for attr, pred in links.items():
            if attr not in attrs:
                raise SchemaError(
                    f"equivalence source {attr!r} is not an attribute of {schema_id!r} v{version}"
                )
            if previous is None or pred not in previous.attributes:
                raise SchemaError(
                    f"dangling equivalence {attr!r} -> {pred!r}: no such attribute in "
                    f"{schema_id!r} v{version - 1}"
                )
        if len(set(links.values())) != len(links):
            raise SchemaError(
                f"equivalences of {schema_id!r} v{version} are not injective"
            )

        schema = VersionedSchema(schema_id, version, attrs, links)
        self._schemas.setdefault(schema_id, {})[version] = schema
        self._log.append((schema_id, version))
        return schema

    def delete(self, schema_id: str, version: int) -> VersionedSchema:
        """Remove a schema version. Raises UnknownVersionError if absent."""
        schema = self.get(schema_id, version)
        del self._schemas[schema_id][version]
        self._log.remove((schema_id, version))
        return schema

    def resolve_equivalent(
        self, schema_id: str, attr: str, from_version: int, to_version: int
    ) -> str | None:
        """Return the attribute of ``to_version`` sharing ``attr``'s lineage, if any.

        Lineage is walked one version at a time, so every intermediate version
        must still be registered. Resolution is symmetric and injective where
        defined.
        """
        source = self.get(schema_id, from_version)
        self.get(schema_id, to_version)
        if attr not in source.attributes:
            raise SchemaError(
                f"unknown attribute {attr!r} in {schema_id!r} v{from_version}"
            )
        current: str | None = attr
        if to_version >= from_version:
            for v in range(from_version + 1, to_version + 1):
                current = self.get(schema_id, v).successor_of(current)
                if current is None:
                    return None
        else:
            for v in range(from_version, to_version, -1):
                current = self.get(schema_id, v).equivalences.get(current)
                if current is None:
                    return None
        return current


@dataclass(frozen=True)
class AttributeIndex:
    """Immutable global ordering of one side's attributes for one state.

    Every live (schema_id, version, attribute) triple gets a dense ordinal in
    registration order. Attributes of one schema version occupy a contiguous
    span, which is what makes matrix blocks contiguous sub-rectangles.
    """

    side: Side
    entries: tuple[tuple[str, int, str], ...]

    @classmethod
    def from_tree(cls, tree: SchemaTree) -> AttributeIndex:
        entries = tuple(
            (s.schema_id, s.version, attr)
            for s in tree.iter_registered()
            for attr in s.attributes
        )
        return cls(tree.side, entries)

    def __len__(self) -> int:
        return len(self.entries)

    @cached_property
    def _ordinals(self) -> dict[tuple[str, int, str], int]:
        return {entry: i for i, entry in enumerate(self.entries)}

    @cached_property
    def _spans(self) -> dict[tuple[str, int], range]:
        spans: dict[tuple[str, int], range] = {}
        start = 0
        for i, (schema_id, version, _) in enumerate(self.entries):
            key = (schema_id, version)
            if key not in spans:
                spans[key] = range(i, i)
                start = i
            spans[key] = range(start, i + 1)
        return spans

    @property
    def groups(self) -> tuple[tuple[str, int], ...]:
        """(schema_id, version) pairs in registration order."""
        return tuple(self._spans)

    def ordinal(self, schema_id: str, version: int, attr: str) -> int:
        try:
            return self._ordinals[(schema_id, version, attr)]
        except KeyError:
            raise SchemaError(
                f"attribute {attr!r} of {schema_id!r} v{version} is not in the "
                f"{self.side.value} index"
            ) from None

    def entry(self, ordinal: int) -> tuple[str, int, str]:
        return self.entries[ordinal]

    def span(self, schema_id: str, version: int) -> range:
        try:
            return self._spans[(schema_id, version)]
        except KeyError:
            raise UnknownVersionError(
                f"unknown schema version {schema_id!r} v{version} in the "
                f"{self.side.value} index"
            ) from None

    def attributes_of(self, schema_id: str, version: int) -> tuple[str, ...]:
        return tuple(self.entries[i][2] for i in self.span(schema_id, version))


class SchemaRegistry:
    """Both schema trees plus the configuration-state counter.

    The state counter is the epoch shared by matrices, dense sets, snapshots
    and messages: every registration, deletion, or manual mapping edit bumps
    it by one. A single writer mutates the registry; everything derived from
    it is immutable and tagged with the state it was derived at.
    """

    def __init__(self) -> None:
        self.trees: dict[Side, SchemaTree] = {
            Side.DOMAIN: SchemaTree(Side.DOMAIN),
            Side.RANGE: SchemaTree(Side.RANGE),
        }
        self._state = 0
        # Mutation journal; replaying it reproduces trees, indexes, and state.
        # Needed because a live-state dump cannot express deleted versions
        # (registration enforces contiguity from version 1).
        self.journal: list[dict[str, object]] = []

    @property
    def state(self) -> int:
        return self._state

    def bump_state(self) -> int:
        """Advance the configuration state without a tree change (manual edits)."""
        self._state += 1
        self.journal.append({"op": "bump"})
        return self._state

    def restore_state(self, state: int) -> None:
        """Reset the epoch counter, e.g. after reloading from a store."""
        if state < 0:
            raise SchemaError("state must be non-negative")
        self._state = state

    def tree(self, side: Side) -> SchemaTree:
        return self.trees[side]

    def has_version(self, side: Side, schema_id: str, version: int) -> bool:
        return (schema_id, version) in self.trees[side]

    def register(
        self,
        side: Side,
        schema_id: str,
        version: int,
        attributes: Iterable[str],
        equivalences: Mapping[str, str] | None = None,
    ) -> tuple[VersionedSchema, ChangeEvent]:
        schema = self.trees[side].register(schema_id, version, attributes, equivalences)
        self._state += 1
        self.journal.append(
            {
                "side": side.value,
                "schema": schema.schema_id,
                "version": schema.version,
                "attributes": list(schema.attributes),
                "equivalences": dict(schema.equivalences),
            }
        )
        case = (
            ChangeCase.ADDED_DOMAIN_VERSION
            if side is Side.DOMAIN
            else ChangeCase.ADDED_RANGE_VERSION
        )
        return schema, ChangeEvent(case, schema_id, version)

    def delete(self, side: Side, schema_id: str, version: int) -> ChangeEvent:
        self.trees[side].delete(schema_id, version)
        self._state += 1
        self.journal.append(
            {"op": "delete", "side": side.value, "schema": schema_id, "version": version}
        )
        case = (
            ChangeCase.DELETED_DOMAIN_VERSION
            if side is Side.DOMAIN
            else ChangeCase.DELETED_RANGE_VERSION
        )
        return ChangeEvent(case, schema_id, version)

    def resolve(
        self, side: Side, schema_id: str, attr: str, from_version: int, to_version: int
    ) -> str | None:
        return self.trees[side].resolve_equivalent(
            schema_id, attr, from_version, to_version
        )

    def attribute_index(self, side: Side) -> AttributeIndex:
        return AttributeIndex.from_tree(self.trees[side])


# ---------------------------------------------------------------------------
# Schema definition files (JSON lines, one object per line)
#
# A line is normally a definition object; a line with "op": "delete" removes
# a version instead, and "op": "bump" advances the state without a tree
# change. That makes the format double as the registry's replayable journal:
# states in which early versions have since been deleted are expressible.
# ---------------------------------------------------------------------------


def parse_schema_definition(
    obj: Mapping[str, object],
) -> tuple[Side, str, int, tuple[str, ...], dict[str, str] | None]:
    """Validate one schema-definition object and return registration arguments."""
    try:
        side = Side(obj["side"])
        schema_id = obj["schema"]
        version = obj["version"]
        attributes = obj["attributes"]
    except (KeyError, ValueError) as exc:
        raise SchemaError(f"invalid schema definition: {exc}") from None
    if not isinstance(schema_id, str) or not schema_id:
        raise SchemaError("schema definition needs a non-empty 'schema' string")
    if not isinstance(version, int) or version < 1:
        raise SchemaError("schema definition needs a positive integer 'version'")
    if not isinstance(attributes, list) or not all(
        isinstance(a, str) for a in attributes
    ):
        raise SchemaError("'attributes' must be a list of strings")
    equivalences = obj.get("equivalences")
    if equivalences is not None:
        if not isinstance(equivalences, dict) or not all(
            isinstance(k, str) and isinstance(v, str) for k, v in equivalences.items()
        ):
            raise SchemaError("'equivalences' must map attribute names to attribute names")
        equivalences = dict(equivalences)
    return side, schema_id, version, tuple(attributes), equivalences


def load_schema_definitions(
    path: str | Path, registry: SchemaRegistry
) -> list[ChangeEvent]:
    """Apply every line of a JSON-lines definition file, in file order."""
    events = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}:{lineno}: invalid JSON ({exc})") from None
            op = obj.get("op")
            if op == "bump":
                registry.bump_state()
                continue
            if op == "delete":
                try:
                    side = Side(obj["side"])
                    schema_id = obj["schema"]
                    version = obj["version"]
                except (KeyError, ValueError) as exc:
                    raise SchemaError(f"{path}:{lineno}: bad delete line ({exc})") from None
                events.append(registry.delete(side, schema_id, version))
                continue
            if op is not None:
                raise SchemaError(f"{path}:{lineno}: unknown op {op!r}")
            side, schema_id, version, attributes, equivalences = (
                parse_schema_definition(obj)
            )
            _, event = registry.register(
                side, schema_id, version, attributes, equivalences
            )
            events.append(event)
    return events


def schema_definitions(registry: SchemaRegistry) -> list[dict[str, object]]:
    """Dump every live schema version as definition objects, domain side first.

    Replay through :func:`load_schema_definitions` reproduces both attribute
    indexes when the registry's history holds no deletions; a registry with
    deleted versions is only reproducible from its ``journal``.
    """
    defs = []
    for side in (Side.DOMAIN, Side.RANGE):
        for schema in registry.trees[side].iter_registered():
            defs.append(
                {
                    "side": side.value,
                    "schema": schema.schema_id,
                    "version": schema.version,
                    "attributes": list(schema.attributes),
                    "equivalences": dict(schema.equivalences),
                }
            )
    return defs
