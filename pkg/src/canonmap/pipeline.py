"""Desk-scale pipeline harness: JSON-lines stream mapping, inspection, benchmarks.

Input streams stand in for broker partitions: one JSON object per line,
either a plain message ``{"schema", "version", "payload", "state"?}`` or a
change-capture envelope that additionally carries ``"op"`` plus ``"before"``
and/or ``"after"`` payloads. Envelope sides are mapped independently and
one outgoing envelope is emitted per target entity version, preserving the
operation. Records that cannot be mapped (unknown version, state mismatch,
malformed JSON) go to an error stream with a reason and do not stop the
run. Several processes can work distinct partition files against the same
store, provided they share the same state.
"""

from __future__ import annotations

import json
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import IO, Iterable

from .compaction import BlockRunStore, DenseBlockSet, compact_to_dense, compact_to_runs
from .engine import (
    EngineSnapshot,
    Message,
    MessageSide,
    build_snapshot,
    map_dense,
    map_sparse,
    sparsify,
)
from .errors import CanonmapError, SchemaError
from .matrix import MappingMatrix, build_matrix
from .schema import SchemaRegistry, Side
from .workload import WorkloadConfig, generate_workload

ENVELOPE_OPS = ("create", "update", "delete")


@dataclass
class MapStats:
    """Bookkeeping for one stream run; inputs = produced + suppressed + errors."""

    inputs: int = 0
    produced: int = 0  # inputs that yielded at least one output record
    suppressed: int = 0  # inputs that mapped cleanly to nothing
    errors: int = 0
    outputs: int = 0  # output records written

    def as_dict(self) -> dict:
        return {
            "inputs": self.inputs,
            "produced": self.produced,
            "suppressed": self.suppressed,
            "errors": self.errors,
            "outputs": self.outputs,
        }


class StreamMapper:
    """Maps one parsed stream record to its output records.

    In dense mode payloads go through the snapshot's column index. In
    sparse-oracle mode each payload is expanded to the full sparse form,
    mapped by the baseline path over the full matrix, and densified again;
    both modes emit identical streams, which is the point of keeping the
    slow path around.
    """

    def __init__(
        self,
        snapshot: EngineSnapshot,
        registry: SchemaRegistry,
        matrix: MappingMatrix | None = None,
        sparse_oracle: bool = False,
    ) -> None:
        if sparse_oracle and matrix is None:
            raise ValueError("sparse-oracle mode needs the full matrix")
        self.snapshot = snapshot
        self.registry = registry
        self.matrix = matrix
        self.sparse_oracle = sparse_oracle

    def _map_payload(
        self, schema_id: str, version: int, state: int, payload: dict
    ) -> dict[tuple[str, int], dict]:
        message = Message(MessageSide.INCOMING, schema_id, version, state, payload)
        if self.sparse_oracle:
            sparse = sparsify(message, self.registry)
            outputs = [m.densified() for m in map_sparse(sparse, self.matrix)]
            outputs = [m for m in outputs if m.payload]
        else:
            outputs = map_dense(message.densified(), self.snapshot)
        return {(m.schema_id, m.version): dict(m.payload) for m in outputs}

    def map_record(self, record: dict) -> list[dict]:
        """Map one record; raises CanonmapError subtypes on unmappable input."""
        try:
            schema_id = record["schema"]
            version = record["version"]
        except KeyError as exc:
            raise SchemaError(f"record lacks {exc} field") from None
        state = record.get("state", self.snapshot.state)
        if "op" in record:
            return self._map_envelope(record, schema_id, version, state)
        payload = record.get("payload")
        if not isinstance(payload, dict):
            raise SchemaError("record lacks a payload object")
        mapped = self._map_payload(schema_id, version, state, payload)
        return [
            {
                "entity": entity,
                "entity_version": entity_version,
                "state": state,
                "payload": out_payload,
            }
            for (entity, entity_version), out_payload in sorted(mapped.items())
        ]

    def _map_envelope(
        self, record: dict, schema_id: str, version: int, state: int
    ) -> list[dict]:
        op = record["op"]
        if op not in ENVELOPE_OPS:
            raise SchemaError(f"unknown envelope op {op!r}")
        before = record.get("before")
        after = record.get("after")
        if op == "create" and before is not None:
            raise SchemaError("create envelope must not carry a 'before' payload")
        if op == "delete" and after is not None:
            raise SchemaError("delete envelope must not carry an 'after' payload")
        sides: dict[str, dict[tuple[str, int], dict]] = {}
        for name, payload in (("before", before), ("after", after)):
            if payload is None:
                continue
            if not isinstance(payload, dict):
                raise SchemaError(f"envelope {name!r} payload must be an object")
            sides[name] = self._map_payload(schema_id, version, state, payload)
        targets = sorted({key for mapped in sides.values() for key in mapped})
        outputs = []
        for entity, entity_version in targets:
            envelope: dict = {
                "entity": entity,
                "entity_version": entity_version,
                "state": state,
                "op": op,
            }
            for name in ("before", "after"):
                if name in sides and (entity, entity_version) in sides[name]:
                    envelope[name] = sides[name][(entity, entity_version)]
            outputs.append(envelope)
        return outputs


def run_map(
    mapper: StreamMapper,
    lines: Iterable[str],
    out: IO[str],
    errors: IO[str],
    workers: int = 1,
) -> MapStats:
    """Map a JSON-lines stream; bad records go to the error stream with a reason.

    With ``workers`` > 1 records are mapped by a thread pool; the per-record
    output set does not depend on scheduling, and results are written in
    input order.
    """
    stats = MapStats()

    def handle(numbered: tuple[int, str]) -> tuple[list[dict], dict | None] | None:
        lineno, line = numbered
        line = line.strip()
        if not line:
            return None
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            return [], {"line": lineno, "reason": f"invalid JSON: {exc}"}
        try:
            return mapper.map_record(record), None
        except CanonmapError as exc:
            return [], {"line": lineno, "reason": str(exc), "record": record}

    numbered = ((i, line) for i, line in enumerate(lines, start=1))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(handle, numbered))
    else:
        results = [handle(item) for item in numbered]

    for result in results:
        if result is None:
            continue  # blank line
        outputs, error = result
        stats.inputs += 1
        if error is not None:
            stats.errors += 1
            errors.write(json.dumps(error) + "\n")
        elif outputs:
            stats.produced += 1
            stats.outputs += len(outputs)
            for output in outputs:
                out.write(json.dumps(output) + "\n")
        else:
            stats.suppressed += 1
    return stats


def inspect_reverse(
    dense: DenseBlockSet, entity_id: str, entity_version: int
) -> list[tuple[str, int]]:
    """Which (schema, version) sources map into one entity version."""
    return [
        (key[0], key[1])
        for key in sorted(dense.blocks)
        if (key[2], key[3]) == (entity_id, entity_version)
    ]


def inspect_progression(
    dense: DenseBlockSet, registry: SchemaRegistry, schema_id: str
) -> dict[int, list[tuple[str, int]]]:
    """Per-version mapped blocks of one extraction schema, every version listed."""
    versions = registry.tree(Side.DOMAIN).versions(schema_id)
    if not versions:
        raise SchemaError(f"unknown schema {schema_id!r}")
    progression: dict[int, list[tuple[str, int]]] = {v: [] for v in versions}
    for o, v, r, w in sorted(dense.blocks):
        if o == schema_id and v in progression:
            progression[v].append((r, w))
    return progression


@dataclass
class BenchReport:
    """Mapping throughput, latency distribution, and compaction figures."""

    message_count: int
    latency_us: dict[str, float]
    matrix_cells: int
    matrix_ones: int
    dense_elements: int
    run_elements: int
    run_null_markers: int
    compaction_ratio_dense: float
    compaction_ratio_runs: float
    cache_columns: int
    cache_elements: int
    stats: MapStats = field(default_factory=MapStats)

    def as_dict(self) -> dict:
        out = {
            "message_count": self.message_count,
            "latency_us": self.latency_us,
            "matrix_cells": self.matrix_cells,
            "matrix_ones": self.matrix_ones,
            "dense_elements": self.dense_elements,
            "run_elements": self.run_elements,
            "run_null_markers": self.run_null_markers,
            "compaction_ratio_dense": self.compaction_ratio_dense,
            "compaction_ratio_runs": self.compaction_ratio_runs,
            "cache_columns": self.cache_columns,
            "cache_elements": self.cache_elements,
        }
        out.update(self.stats.as_dict())
        return out

    def table(self) -> str:
        lines = [
            f"messages mapped        {self.message_count}",
            "latency (us)           "
            + "  ".join(f"{k}={self.latency_us[k]:.1f}" for k in
                        ("min", "median", "mean", "p95", "max")),
            f"matrix cells           {self.matrix_cells}",
            f"matrix ones            {self.matrix_ones}",
            f"dense elements stored  {self.dense_elements} "
            f"(ratio saved {self.compaction_ratio_dense:.4f})",
            f"run elements stored    {self.run_elements} + "
            f"{self.run_null_markers} null markers "
            f"(ratio saved {self.compaction_ratio_runs:.4f})",
            f"cache columns          {self.cache_columns}",
            f"cache elements         {self.cache_elements}",
            f"stream counts          inputs={self.stats.inputs} "
            f"produced={self.stats.produced} suppressed={self.stats.suppressed} "
            f"errors={self.stats.errors}",
        ]
        return "\n".join(lines)


def latency_summary(samples_us: list[float]) -> dict[str, float]:
    ordered = sorted(samples_us)
    return {
        "min": ordered[0],
        "median": statistics.median(ordered),
        "mean": statistics.fmean(ordered),
        "p95": ordered[min(len(ordered) - 1, int(0.95 * (len(ordered) - 1)))],
        "max": ordered[-1],
    }


def bench(config: WorkloadConfig, warmup: int = 100) -> BenchReport:
    """Generate a workload, map its stream, and report latency and compaction."""
    workload = generate_workload(config)
    registry = workload.build_registry()
    matrix = build_matrix(registry, workload.mapping_entries)
    dense = compact_to_dense(matrix)
    runs = compact_to_runs(matrix, registry)
    snapshot = build_snapshot(dense, registry)

    messages = [
        Message(
            MessageSide.INCOMING,
            record["schema"],
            record["version"],
            record["state"],
            record["payload"],
        )
        for record in workload.messages
    ]
    for message in messages[:warmup]:
        map_dense(message, snapshot)

    stats = MapStats()
    samples: list[float] = []
    for message in messages:
        start = time.perf_counter_ns()
        outputs = map_dense(message, snapshot)
        samples.append((time.perf_counter_ns() - start) / 1000.0)
        stats.inputs += 1
        if outputs:
            stats.produced += 1
            stats.outputs += len(outputs)
        else:
            stats.suppressed += 1

    cells = matrix.element_count
    return BenchReport(
        message_count=len(messages),
        latency_us=latency_summary(samples) if samples else
        {"min": 0.0, "median": 0.0, "mean": 0.0, "p95": 0.0, "max": 0.0},
        matrix_cells=cells,
        matrix_ones=len(matrix.ones),
        dense_elements=dense.element_count,
        run_elements=runs.element_count,
        run_null_markers=runs.null_marker_count,
        compaction_ratio_dense=1.0 - dense.element_count / cells if cells else 0.0,
        compaction_ratio_runs=1.0 - runs.element_count / cells if cells else 0.0,
        cache_columns=len(snapshot.columns),
        cache_elements=snapshot.cached_element_count,
        stats=stats,
    )


def startup(
    registry: SchemaRegistry, runs: BlockRunStore
) -> tuple[DenseBlockSet, EngineSnapshot]:
    """The hybrid startup path: rebuild the compute-side set, then snapshot it."""
    from .compaction import rebuild_dense_from_runs

    dense = rebuild_dense_from_runs(runs, registry)
    snapshot = build_snapshot(dense, registry)
    return dense, snapshot
