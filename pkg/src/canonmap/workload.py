"""Synthetic desk-scale workloads: schema trees, mappings, and message streams.

The generator models how extraction schemas actually evolve: each new
version duplicates most of the previous version's attributes under fresh
names (recorded as equivalence links) and replaces the rest. Every schema
maps one block per version onto a single entity; the block of version 1 is
drawn at random and later versions carry the lineage image of it, so blocks
shrink exactly where lineage breaks. Everything is a pure function of the
seed, so a config generates byte-identical artifacts on every run.
"""

from __future__ import annotations

import dataclasses
import json
import random
from dataclasses import dataclass
from pathlib import Path

from .errors import WorkloadError
from .schema import SchemaRegistry, Side

#: Attributes a version may lose relative to its predecessor.
MAX_DROPPED_PER_VERSION = 2


@dataclass
class WorkloadConfig:
    """Shape of a synthetic workload; defaults follow the estimated production scale
    of ten-attribute schema versions, ten live versions per schema."""

    schemas: int = 100
    versions_per_schema: int = 10
    attrs_per_version: int = 10
    cdm_entities: int = 10
    cdm_attrs: int = 10
    mapped_fraction: float = 0.5
    messages: int = 1000
    seed: int = 0

    def __post_init__(self) -> None:
        for name in (
            "schemas",
            "versions_per_schema",
            "attrs_per_version",
            "cdm_entities",
            "cdm_attrs",
        ):
            if getattr(self, name) < 1:
                raise WorkloadError(f"{name} must be at least 1")
        if self.messages < 0:
            raise WorkloadError("messages must be non-negative")
        if not 0.0 <= self.mapped_fraction <= 1.0:
            raise WorkloadError("mapped_fraction must be within [0, 1]")

    @classmethod
    def from_file(cls, path: str | Path) -> WorkloadConfig:
        with open(path, encoding="utf-8") as handle:
            raw = json.load(handle)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise WorkloadError(f"unknown workload config keys: {sorted(unknown)}")
        return cls(**raw)


@dataclass
class GeneratedWorkload:
    """In-memory form of one generated workload."""

    config: WorkloadConfig
    schema_definitions: list[dict]
    mapping_entries: list[tuple[str, int, str, str, int, str]]
    messages: list[dict]
    state: int  # registry state after loading every definition

    def build_registry(self) -> SchemaRegistry:
        registry = SchemaRegistry()
        for definition in self.schema_definitions:
            registry.register(
                Side(definition["side"]),
                definition["schema"],
                definition["version"],
                definition["attributes"],
                definition["equivalences"],
            )
        return registry


def generate_workload(config: WorkloadConfig) -> GeneratedWorkload:
    """Generate schemas, a valid mapping, and a dense message stream.

    Raises:
        WorkloadError: the requested mapped-attribute count cannot fit into
            a block.
    """
    rng = random.Random(config.seed)
    definitions: list[dict] = []
    schema_attrs: dict[tuple[str, int], list[str]] = {}

    for s in range(1, config.schemas + 1):
        schema_id = f"s{s}"
        counter = 0
        previous: list[str] = []
        for version in range(1, config.versions_per_schema + 1):
            if version == 1:
                attrs = [f"a{counter + i + 1}" for i in range(config.attrs_per_version)]
                counter += len(attrs)
                equivalences: dict[str, str] = {}
            else:
                dropped = rng.randint(0, min(MAX_DROPPED_PER_VERSION, len(previous)))
                kept_idx = sorted(rng.sample(range(len(previous)), len(previous) - dropped))
                kept = [previous[i] for i in kept_idx]
                attrs = []
                equivalences = {}
                for old in kept:
                    counter += 1
                    new = f"a{counter}"
                    attrs.append(new)
                    equivalences[new] = old
                while len(attrs) < config.attrs_per_version:
                    counter += 1
                    attrs.append(f"a{counter}")
            definitions.append(
                {
                    "side": "domain",
                    "schema": schema_id,
                    "version": version,
                    "attributes": attrs,
                    "equivalences": equivalences,
                }
            )
            schema_attrs[(schema_id, version)] = attrs
            previous = attrs

    entity_attrs: dict[str, list[str]] = {}
    for e in range(1, config.cdm_entities + 1):
        entity_id = f"be{e}"
        attrs = [f"c{j + 1}" for j in range(config.cdm_attrs)]
        entity_attrs[entity_id] = attrs
        definitions.append(
            {
                "side": "range",
                "schema": entity_id,
                "version": 1,
                "attributes": attrs,
                "equivalences": {},
            }
        )

    mapped = round(
        config.mapped_fraction * min(config.attrs_per_version, config.cdm_attrs)
    )
    if mapped > min(config.attrs_per_version, config.cdm_attrs):
        raise WorkloadError(
            f"cannot map {mapped} attributes into a "
            f"{config.cdm_attrs}x{config.attrs_per_version} block"
        )

    entries: list[tuple[str, int, str, str, int, str]] = []
    pairings: dict[str, list[tuple[str, str]]] = {}
    targets: dict[str, str] = {}
    for s in range(1, config.schemas + 1):
        schema_id = f"s{s}"
        entity_id = f"be{rng.randint(1, config.cdm_entities)}"
        targets[schema_id] = entity_id
        source_attrs = rng.sample(schema_attrs[(schema_id, 1)], mapped)
        target_attrs = rng.sample(entity_attrs[entity_id], mapped)
        pairings[schema_id] = list(zip(target_attrs, source_attrs))
        for cdm_attr, attr in pairings[schema_id]:
            entries.append((schema_id, 1, attr, entity_id, 1, cdm_attr))

    # Later versions carry the lineage image of the version-1 block.
    lineage: dict[tuple[str, int], dict[str, str]] = {}
    for definition in definitions:
        if definition["side"] == "domain" and definition["version"] > 1:
            lineage[(definition["schema"], definition["version"])] = {
                pred: new for new, pred in definition["equivalences"].items()
            }
    for s in range(1, config.schemas + 1):
        schema_id = f"s{s}"
        entity_id = targets[schema_id]
        current = dict(pairings[schema_id])
        for version in range(2, config.versions_per_schema + 1):
            successors = lineage[(schema_id, version)]
            current = {
                cdm_attr: successors[attr]
                for cdm_attr, attr in current.items()
                if attr in successors
            }
            for cdm_attr, attr in current.items():
                entries.append((schema_id, version, attr, entity_id, 1, cdm_attr))

    state = len(definitions)
    messages: list[dict] = []
    for i in range(config.messages):
        schema_id = f"s{rng.randint(1, config.schemas)}"
        version = rng.randint(1, config.versions_per_schema)
        payload = {
            attr: f"d{i}_{j}"
            for j, attr in enumerate(schema_attrs[(schema_id, version)])
        }
        messages.append(
            {
                "schema": schema_id,
                "version": version,
                "state": state,
                "payload": payload,
            }
        )

    return GeneratedWorkload(
        config=config,
        schema_definitions=definitions,
        mapping_entries=sorted(entries),
        messages=messages,
        state=state,
    )


def write_workload(
    workload: GeneratedWorkload, outdir: str | Path
) -> tuple[Path, Path, Path]:
    """Write schemas.jsonl, mappings.csv, and messages.jsonl into ``outdir``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    schemas_path = outdir / "schemas.jsonl"
    csv_path = outdir / "mappings.csv"
    messages_path = outdir / "messages.jsonl"

    with open(schemas_path, "w", encoding="utf-8") as handle:
        for definition in workload.schema_definitions:
            handle.write(json.dumps(definition, sort_keys=True) + "\n")
    with open(csv_path, "w", encoding="utf-8") as handle:
        handle.write(
            "schema,schema_version,attribute,entity,entity_version,cdm_attribute\n"
        )
        for o, v, attr, r, w, cdm_attr in workload.mapping_entries:
            handle.write(f"{o},{v},{attr},{r},{w},{cdm_attr}\n")
    with open(messages_path, "w", encoding="utf-8") as handle:
        for message in workload.messages:
            handle.write(json.dumps(message) + "\n")
    return schemas_path, csv_path, messages_path
