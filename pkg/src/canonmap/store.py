"""Persistence: the run-store JSON format of record and the pipeline store directory.

Only the storage-side (run-deduplicated) set is persisted; on startup the
compute-side set is rebuilt from it. The run-store file is written
canonically (sorted keys, sorted super-blocks, sorted elements, compact
separators), so saving the same logical content always produces identical
bytes.

A pipeline store is a directory holding everything a mapper process needs:

    schemas.jsonl        schema definitions, replayable in order
    mapping.json         the run store (format of record)
    notifications.json   pending update notifications
"""

from __future__ import annotations

import json
from pathlib import Path

from .compaction import BlockRunStore, RunEntry
from .errors import StoreError
from .matrix import BlockKind
from .schema import SchemaRegistry, load_schema_definitions
from .updates import UpdateNotification

STORE_SCHEMAS = "schemas.jsonl"
STORE_MAPPING = "mapping.json"
STORE_NOTIFICATIONS = "notifications.json"


def run_store_document(runs: BlockRunStore) -> dict:
    """The run store as a canonical JSON-able document."""
    superblocks = []
    for (schema_id, entity_id, entity_version) in sorted(runs.superblocks):
        entries = []
        for entry in sorted(runs.superblocks[(schema_id, entity_id, entity_version)],
                            key=lambda e: e.version):
            if entry.kind is BlockKind.NULL:
                entries.append({"version": entry.version, "kind": "null"})
            else:
                entries.append(
                    {
                        "version": entry.version,
                        "kind": "pm",
                        "ones": sorted([c, a] for c, a in entry.ones),
                    }
                )
        superblocks.append(
            {
                "schema": schema_id,
                "entity": entity_id,
                "entity_version": entity_version,
                "entries": entries,
            }
        )
    return {"state": runs.state, "superblocks": superblocks}


def save_run_store(runs: BlockRunStore, path: str | Path) -> None:
    """Write the run store canonically; identical content yields identical bytes."""
    text = json.dumps(run_store_document(runs), sort_keys=True, separators=(",", ":"))
    Path(path).write_text(text + "\n", encoding="utf-8")


def load_run_store(path: str | Path) -> BlockRunStore:
    """Read and structurally validate a run-store file.

    Raises:
        StoreError: the file is missing, unparsable, or violates the run
            invariants (ascending versions, no leading null marker, no two
            null markers in a row, permutation entries with valid elements).
    """
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise StoreError(f"cannot read store file {path}: {exc}") from None
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise StoreError(f"corrupt store file {path}: {exc}") from None
    if not isinstance(doc, dict) or "state" not in doc or "superblocks" not in doc:
        raise StoreError(f"store file {path} lacks 'state'/'superblocks'")
    state = doc["state"]
    if not isinstance(state, int) or state < 0:
        raise StoreError("store state must be a non-negative integer")
    superblocks: dict[tuple[str, str, int], tuple[RunEntry, ...]] = {}
    for sb in doc["superblocks"]:
        try:
            key = (sb["schema"], sb["entity"], sb["entity_version"])
            raw_entries = sb["entries"]
        except (TypeError, KeyError) as exc:
            raise StoreError(f"malformed super-block in {path}: {exc}") from None
        if key in superblocks:
            raise StoreError(f"duplicate super-block {key} in {path}")
        entries: list[RunEntry] = []
        for raw_entry in raw_entries:
            entries.append(_parse_entry(raw_entry, key))
        _check_run_invariants(key, entries)
        if not entries:
            raise StoreError(f"super-block {key} has no entries")
        superblocks[key] = tuple(entries)
    return BlockRunStore(state=state, superblocks=superblocks)


def _parse_entry(raw: dict, key: tuple) -> RunEntry:
    try:
        version = raw["version"]
        kind = BlockKind(raw["kind"])
    except (TypeError, KeyError, ValueError) as exc:
        raise StoreError(f"malformed entry in super-block {key}: {exc}") from None
    if not isinstance(version, int) or version < 1:
        raise StoreError(f"bad version in super-block {key}")
    if kind is BlockKind.NULL:
        return RunEntry(version, kind, frozenset())
    raw_ones = raw.get("ones")
    if not isinstance(raw_ones, list) or not raw_ones:
        raise StoreError(f"permutation entry without elements in super-block {key}")
    ones = set()
    for pair in raw_ones:
        if (
            not isinstance(pair, list)
            or len(pair) != 2
            or not all(isinstance(x, str) for x in pair)
        ):
            raise StoreError(f"bad element {pair!r} in super-block {key}")
        ones.add((pair[0], pair[1]))
    rows = {c for c, _ in ones}
    cols = {a for _, a in ones}
    if len(rows) != len(ones) or len(cols) != len(ones):
        raise StoreError(f"entry v{version} of super-block {key} is not a 1:1 mapping")
    return RunEntry(version, kind, frozenset(ones))


def _check_run_invariants(key: tuple, entries: list[RunEntry]) -> None:
    previous: RunEntry | None = None
    for entry in entries:
        if previous is not None and entry.version <= previous.version:
            raise StoreError(f"entries of super-block {key} are not version-ascending")
        if entry.kind is BlockKind.NULL:
            if previous is None:
                raise StoreError(f"super-block {key} starts with a null marker")
            if previous.kind is BlockKind.NULL:
                raise StoreError(f"super-block {key} repeats a null marker")
        previous = entry


class PipelineStore:
    """Directory-backed pipeline state: schemas, the run store, notifications."""

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)

    @property
    def schemas_path(self) -> Path:
        return self.root / STORE_SCHEMAS

    @property
    def mapping_path(self) -> Path:
        return self.root / STORE_MAPPING

    @property
    def notifications_path(self) -> Path:
        return self.root / STORE_NOTIFICATIONS

    def exists(self) -> bool:
        return self.schemas_path.exists() and self.mapping_path.exists()

    def save(self, registry: SchemaRegistry, runs: BlockRunStore) -> None:
        """Write the full pipeline state; the schema file is the mutation journal."""
        self.root.mkdir(parents=True, exist_ok=True)
        with open(self.schemas_path, "w", encoding="utf-8") as handle:
            for entry in registry.journal:
                handle.write(json.dumps(entry, sort_keys=True) + "\n")
        save_run_store(runs, self.mapping_path)
        if not self.notifications_path.exists():
            self._write_notifications([])

    def load(self) -> tuple[SchemaRegistry, BlockRunStore]:
        """Rebuild the registry and run store; the registry resumes the stored state."""
        if not self.exists():
            raise StoreError(f"no pipeline store at {self.root}")
        runs = load_run_store(self.mapping_path)
        registry = SchemaRegistry()
        try:
            load_schema_definitions(self.schemas_path, registry)
        except Exception as exc:
            raise StoreError(f"corrupt schema file in {self.root}: {exc}") from None
        registry.restore_state(runs.state)
        return registry, runs

    # -- pending notifications -------------------------------------------

    def _write_notifications(self, items: list[dict]) -> None:
        text = json.dumps(items, sort_keys=True, indent=2)
        self.notifications_path.write_text(text + "\n", encoding="utf-8")

    def notifications(self) -> list[dict]:
        if not self.notifications_path.exists():
            return []
        try:
            items = json.loads(self.notifications_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise StoreError(f"corrupt notifications file: {exc}") from None
        return items

    def append_notifications(
        self, notes: list[UpdateNotification], state: int
    ) -> list[dict]:
        items = self.notifications()
        next_id = max((item["id"] for item in items), default=0) + 1
        for note in notes:
            items.append(
                {
                    "id": next_id,
                    "state": state,
                    "block": list(note.block),
                    "kind": note.kind.value,
                    "old_size": note.old_size,
                    "new_size": note.new_size,
                }
            )
            next_id += 1
        self._write_notifications(items)
        return items

    def ack_notification(self, note_id: int) -> bool:
        items = self.notifications()
        remaining = [item for item in items if item["id"] != note_id]
        if len(remaining) == len(items):
            return False
        self._write_notifications(remaining)
        return True
