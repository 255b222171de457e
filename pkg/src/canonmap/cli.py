"""Command-line front end for the mapping pipeline.

Exit codes: 0 success, 1 usage error, 2 state/store error, 3 validation
error. Stream mapping keeps running on bad records (they go to the error
stream) and still exits 0.
"""

from __future__ import annotations

import argparse
import json
import random
import sys

from .compaction import (
    compact_to_dense,
    compact_to_runs,
    expand_dense,
    expand_runs,
    rebuild_dense_from_runs,
)
from .engine import Message, MessageSide, build_snapshot, map_dense, map_sparse
from .errors import (
    CanonmapError,
    SchemaError,
    StateMismatchError,
    StoreError,
    UnknownVersionError,
    ValidityError,
    WorkloadError,
)
from .matrix import build_matrix, load_mapping_csv
from .pipeline import (
    StreamMapper,
    bench,
    inspect_progression,
    inspect_reverse,
    run_map,
    startup,
)
from .schema import (
    ChangeCase,
    SchemaRegistry,
    Side,
    load_schema_definitions,
    parse_schema_definition,
)
from .store import PipelineStore
from .updates import apply_change
from .workload import WorkloadConfig, generate_workload, write_workload

USAGE_EXIT = 1
STATE_EXIT = 2
VALIDATION_EXIT = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # exit 1 on usage errors, not argparse's 2
        self.print_usage(sys.stderr)
        self.exit(USAGE_EXIT, f"{self.prog}: error: {message}\n")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="canonmap", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_init = sub.add_parser("init", help="build a pipeline store from schemas + mappings")
    p_init.add_argument("--schemas", required=True, help="schema definitions (JSON lines)")
    p_init.add_argument("--mappings", required=True, help="mapping elements (CSV)")
    p_init.add_argument("--store", required=True, help="store directory to create")
    p_init.add_argument(
        "--force", action="store_true", help="rebuild from scratch over an existing store"
    )

    p_map = sub.add_parser("map", help="map a JSON-lines stream against a store")
    p_map.add_argument("--store", required=True)
    p_map.add_argument("--in", dest="infile", default=None, help="input stream (default stdin)")
    p_map.add_argument("--out", default=None, help="output stream (default stdout)")
    p_map.add_argument("--errors", default=None, help="error stream (default stderr)")
    p_map.add_argument("--workers", type=int, default=1)
    mode = p_map.add_mutually_exclusive_group()
    mode.add_argument("--dense", action="store_true", help="dense path (default)")
    mode.add_argument(
        "--sparse-oracle",
        action="store_true",
        help="map through the sequential baseline instead (same outputs, slower)",
    )

    p_update = sub.add_parser("update", help="apply a schema change to the store")
    p_update.add_argument("--store", required=True)
    p_update.add_argument("--case", type=int, required=True, choices=[1, 2, 3, 4])
    p_update.add_argument("--schema", required=True)
    p_update.add_argument("--version", type=int, required=True)
    p_update.add_argument(
        "--file", default=None, help="schema definition JSON for added versions (case 3/4)"
    )

    p_notes = sub.add_parser("notifications", help="list or acknowledge update notifications")
    p_notes.add_argument("--store", required=True)
    p_notes.add_argument("--ack", type=int, default=None, metavar="ID")

    p_inspect = sub.add_parser("inspect", help="reverse search and version progression")
    inspect_sub = p_inspect.add_subparsers(dest="what", required=True)
    p_rev = inspect_sub.add_parser("reverse", help="sources mapping into one entity version")
    p_rev.add_argument("--store", required=True)
    p_rev.add_argument("--entity", required=True)
    p_rev.add_argument("--version", type=int, required=True)
    p_prog = inspect_sub.add_parser("progression", help="per-version mappings of a schema")
    p_prog.add_argument("--store", required=True)
    p_prog.add_argument("--schema", required=True)

    p_workload = sub.add_parser("workload", help="generate a synthetic workload")
    p_workload.add_argument("--config", required=True, help="workload config JSON")
    p_workload.add_argument("--seed", type=int, default=None, help="override config seed")
    p_workload.add_argument("--out", required=True, help="output directory")

    p_bench = sub.add_parser("bench", help="benchmark dense mapping on a workload")
    p_bench.add_argument("--config", required=True)
    p_bench.add_argument("--json", action="store_true", help="emit the report as JSON")

    p_verify = sub.add_parser("verify", help="run round-trip and oracle self-checks")
    p_verify.add_argument("--seeds", type=int, default=20)
    p_verify.add_argument("--messages", type=int, default=200)

    return parser


def _load_store(path: str) -> tuple[PipelineStore, SchemaRegistry, object]:
    store = PipelineStore(path)
    registry, runs = store.load()
    return store, registry, runs


def _cmd_init(args: argparse.Namespace) -> int:
    store = PipelineStore(args.store)
    if store.exists() and not args.force:
        raise StoreError(f"store {args.store} already exists (use --force to rebuild)")
    registry = SchemaRegistry()
    load_schema_definitions(args.schemas, registry)
    entries = load_mapping_csv(args.mappings)
    matrix = build_matrix(registry, entries)
    runs = compact_to_runs(matrix, registry)
    dense = compact_to_dense(matrix)
    store.save(registry, runs)
    print(
        f"store initialized at {args.store}: state={registry.state} "
        f"matrix={matrix.shape[0]}x{matrix.shape[1]} ones={len(matrix.ones)} "
        f"dense={dense.element_count} run={runs.element_count}"
        f"+{runs.null_marker_count}null"
    )
    return 0


def _cmd_map(args: argparse.Namespace) -> int:
    store, registry, runs = _load_store(args.store)
    dense, snapshot = startup(registry, runs)
    matrix = None
    if args.sparse_oracle:
        matrix = expand_runs(runs, registry)
    mapper = StreamMapper(
        snapshot, registry, matrix=matrix, sparse_oracle=args.sparse_oracle
    )

    infile = open(args.infile, encoding="utf-8") if args.infile else sys.stdin
    outfile = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    errfile = open(args.errors, "w", encoding="utf-8") if args.errors else sys.stderr
    try:
        stats = run_map(mapper, infile, outfile, errfile, workers=max(1, args.workers))
    finally:
        if args.infile:
            infile.close()
        if args.out:
            outfile.close()
        if args.errors:
            errfile.close()
    print(
        f"mapped stream: inputs={stats.inputs} produced={stats.produced} "
        f"suppressed={stats.suppressed} errors={stats.errors} outputs={stats.outputs}",
        file=sys.stderr,
    )
    return 0


def _cmd_update(args: argparse.Namespace) -> int:
    store, registry, runs = _load_store(args.store)
    dense = rebuild_dense_from_runs(runs, registry)
    case = ChangeCase(args.case)

    if case in (ChangeCase.ADDED_DOMAIN_VERSION, ChangeCase.ADDED_RANGE_VERSION):
        if not args.file:
            raise SchemaError("cases 3 and 4 need --file with the new version definition")
        with open(args.file, encoding="utf-8") as handle:
            obj = json.load(handle)
        side, schema_id, version, attributes, equivalences = parse_schema_definition(obj)
        expected_side = (
            Side.DOMAIN if case is ChangeCase.ADDED_DOMAIN_VERSION else Side.RANGE
        )
        if side is not expected_side:
            raise SchemaError(
                f"case {args.case} expects a {expected_side.value}-side definition"
            )
        if schema_id != args.schema or version != args.version:
            raise SchemaError("--schema/--version do not match the definition file")
        _, event = registry.register(side, schema_id, version, attributes, equivalences)
    else:
        side = (
            Side.DOMAIN if case is ChangeCase.DELETED_DOMAIN_VERSION else Side.RANGE
        )
        event = registry.delete(side, args.schema, args.version)

    dense_next, notes = apply_change(dense, event, registry)
    matrix_next = expand_dense(dense_next, registry)
    runs_next = compact_to_runs(matrix_next, registry)
    store.save(registry, runs_next)
    store.append_notifications(notes, registry.state)
    print(
        f"state {dense.state} -> {dense_next.state}: "
        f"dense {dense.element_count} -> {dense_next.element_count} elements, "
        f"{len(notes)} notification(s)"
    )
    for note in notes:
        print(f"  {note.kind.value} {note.block}: {note.old_size} -> {note.new_size}")
    return 0


def _cmd_notifications(args: argparse.Namespace) -> int:
    store = PipelineStore(args.store)
    if args.ack is not None:
        if store.ack_notification(args.ack):
            print(f"acknowledged notification {args.ack}")
            return 0
        raise StoreError(f"no pending notification with id {args.ack}")
    items = store.notifications()
    if not items:
        print("no pending notifications")
        return 0
    for item in items:
        block = tuple(item["block"])
        print(
            f"[{item['id']}] state={item['state']} {item['kind']} block={block} "
            f"{item['old_size']} -> {item['new_size']}"
        )
    return 0


def _cmd_inspect(args: argparse.Namespace) -> int:
    _, registry, runs = _load_store(args.store)
    dense = rebuild_dense_from_runs(runs, registry)
    if args.what == "reverse":
        sources = inspect_reverse(dense, args.entity, args.version)
        if not sources:
            print(f"{args.entity} v{args.version}: no mapped sources")
        for schema_id, version in sources:
            print(f"{args.entity} v{args.version} <- {schema_id} v{version}")
    else:
        progression = inspect_progression(dense, registry, args.schema)
        for version, blocks in progression.items():
            rendered = (
                ", ".join(f"{r} v{w}" for r, w in blocks) if blocks else "(unmapped)"
            )
            print(f"{args.schema} v{version}: {rendered}")
    return 0


def _cmd_workload(args: argparse.Namespace) -> int:
    config = WorkloadConfig.from_file(args.config)
    if args.seed is not None:
        config.seed = args.seed
    workload = generate_workload(config)
    schemas, mappings, messages = write_workload(workload, args.out)
    print(f"workload written: {schemas} {mappings} {messages}")
    return 0


def _cmd_bench(args: argparse.Namespace) -> int:
    config = WorkloadConfig.from_file(args.config)
    report = bench(config)
    if args.json:
        print(json.dumps(report.as_dict(), sort_keys=True))
    else:
        print(report.table())
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    failures = 0
    for name, ok, detail in run_self_checks(args.seeds, args.messages):
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        if not ok:
            failures += 1
    if failures:
        raise ValidityError(f"{failures} self-check suite(s) failed")
    return 0


def run_self_checks(seeds: int, messages: int) -> list[tuple[str, bool, str]]:
    """Round-trip and oracle suites over randomized workloads."""
    results = []

    roundtrips = 0
    ok = True
    for seed in range(seeds):
        config = WorkloadConfig(
            schemas=3,
            versions_per_schema=3,
            attrs_per_version=5,
            cdm_entities=3,
            cdm_attrs=5,
            mapped_fraction=0.6,
            messages=0,
            seed=seed,
        )
        workload = generate_workload(config)
        registry = workload.build_registry()
        matrix = build_matrix(registry, workload.mapping_entries)
        dense = compact_to_dense(matrix)
        runs = compact_to_runs(matrix, registry)
        if expand_dense(dense, registry).ones != matrix.ones:
            ok = False
            break
        if expand_runs(runs, registry).ones != matrix.ones:
            ok = False
            break
        if rebuild_dense_from_runs(runs, registry).blocks != dense.blocks:
            ok = False
            break
        roundtrips += 1
    results.append(
        ("round-trips", ok, f"{roundtrips}/{seeds} workloads expanded losslessly")
    )

    rng = random.Random(2024)
    config = WorkloadConfig(
        schemas=4,
        versions_per_schema=3,
        attrs_per_version=5,
        cdm_entities=3,
        cdm_attrs=5,
        mapped_fraction=0.6,
        messages=0,
        seed=99,
    )
    workload = generate_workload(config)
    registry = workload.build_registry()
    matrix = build_matrix(registry, workload.mapping_entries)
    snapshot = build_snapshot(compact_to_dense(matrix), registry)
    agreed = 0
    ok = True
    for _ in range(messages):
        schema_id = f"s{rng.randint(1, config.schemas)}"
        version = rng.randint(1, config.versions_per_schema)
        attrs = registry.attribute_index(Side.DOMAIN).attributes_of(schema_id, version)
        payload = {
            a: (None if rng.random() < 0.4 else f"x{rng.randint(0, 999)}") for a in attrs
        }
        sparse = Message(
            MessageSide.INCOMING, schema_id, version, registry.state, payload
        )
        via_sparse = [
            (m.schema_id, m.version, tuple(sorted(m.densified().payload.items())))
            for m in map_sparse(sparse, matrix)
            if m.densified().payload
        ]
        via_dense = [
            (m.schema_id, m.version, tuple(sorted(m.payload.items())))
            for m in map_dense(sparse.densified(), snapshot)
        ]
        if sorted(via_sparse) != sorted(via_dense):
            ok = False
            break
        agreed += 1
    results.append(
        ("mapping-oracle", ok, f"{agreed}/{messages} messages agreed across both paths")
    )
    return results


_DISPATCH = {
    "init": _cmd_init,
    "map": _cmd_map,
    "update": _cmd_update,
    "notifications": _cmd_notifications,
    "inspect": _cmd_inspect,
    "workload": _cmd_workload,
    "bench": _cmd_bench,
    "verify": _cmd_verify,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _DISPATCH[args.command](args)
    except (StoreError, StateMismatchError, UnknownVersionError) as exc:
        print(f"canonmap: state/store error: {exc}", file=sys.stderr)
        return STATE_EXIT
    except (ValidityError, SchemaError, WorkloadError) as exc:
        print(f"canonmap: validation error: {exc}", file=sys.stderr)
        return VALIDATION_EXIT
    except CanonmapError as exc:
        print(f"canonmap: error: {exc}", file=sys.stderr)
        return STATE_EXIT
    except OSError as exc:
        print(f"canonmap: {exc}", file=sys.stderr)
        return USAGE_EXIT


if __name__ == "__main__":
    sys.exit(main())
