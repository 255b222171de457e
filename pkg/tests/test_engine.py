import json
import random

import pytest

from canonmap import (
    MappingEngine,
    Message,
    MessageSide,
    SchemaError,
    Side,
    StateMismatchError,
    UnknownVersionError,
    apply_change,
    build_snapshot,
    compact_to_dense,
    densify,
    map_dense,
    map_sparse,
    sparsify,
)

from helpers import golden_matrix, golden_registry, random_case


def _incoming(schema_id, version, state, payload):
    return Message(MessageSide.INCOMING, schema_id, version, state, payload)


@pytest.fixture()
def golden():
    registry = golden_registry()
    matrix = golden_matrix(registry)
    dense = compact_to_dense(matrix)
    snapshot = build_snapshot(dense, registry)
    return registry, matrix, dense, snapshot


def test_sparsify_fills_nulls_and_orders_by_schema(golden):
    registry, matrix, _, _ = golden
    msg = _incoming("s1", 1, matrix.state, {"a3": "Y"})
    sparse = sparsify(msg, registry)
    assert sparse.payload == {"a1": None, "a2": None, "a3": "Y"}
    with pytest.raises(SchemaError):
        sparsify(_incoming("s1", 1, matrix.state, {"zz": 1}), registry)


def test_densify_strips_nulls():
    msg = _incoming("s1", 1, 0, {"a1": "X", "a2": None})
    assert densify(msg).payload == {"a1": "X"}


def test_map_sparse_golden_example(golden):
    _, matrix, _, _ = golden
    msg = _incoming("s1", 1, matrix.state, {"a1": "X", "a2": None, "a3": "Y"})
    outputs = map_sparse(msg, matrix)
    as_tuples = [(m.schema_id, m.version, dict(m.payload)) for m in outputs]
    assert as_tuples == [
        ("be1", 2, {"c3": "X", "c4": "Y"}),
        ("be2", 1, {"c5": None}),
        ("be3", 1, {"c6": None, "c7": "X"}),
    ]
    assert all(m.side is MessageSide.OUTGOING and m.state == matrix.state for m in outputs)


def test_map_sparse_all_null_payload_yields_all_null_outputs(golden):
    _, matrix, _, _ = golden
    msg = _incoming("s1", 1, matrix.state, {"a1": None, "a2": None, "a3": None})
    outputs = map_sparse(msg, matrix)
    assert len(outputs) == 3
    assert all(v is None for m in outputs for v in m.payload.values())


def test_map_sparse_unknown_version_errors(golden):
    _, matrix, _, _ = golden
    with pytest.raises(UnknownVersionError):
        map_sparse(_incoming("s1", 9, matrix.state, {}), matrix)


def test_map_sparse_payload_must_match_schema_exactly(golden):
    _, matrix, _, _ = golden
    with pytest.raises(SchemaError):
        map_sparse(_incoming("s1", 1, matrix.state, {"a1": "X"}), matrix)


def test_map_sparse_state_mismatch_errors(golden):
    _, matrix, _, _ = golden
    msg = _incoming("s1", 1, matrix.state + 1, {"a1": None, "a2": None, "a3": None})
    with pytest.raises(StateMismatchError):
        map_sparse(msg, matrix)


def test_map_dense_golden_example(golden):
    *_, snapshot = golden
    outputs = map_dense(_incoming("s1", 1, snapshot.state, {"a1": "X", "a3": "Y"}), snapshot)
    assert [(m.schema_id, m.version, dict(m.payload)) for m in outputs] == [
        ("be1", 2, {"c3": "X", "c4": "Y"}),
        ("be3", 1, {"c7": "X"}),
    ]


def test_map_dense_single_element_column(golden):
    *_, snapshot = golden
    outputs = map_dense(_incoming("s2", 1, snapshot.state, {"a6": "Z"}), snapshot)
    assert [(m.schema_id, m.version, dict(m.payload)) for m in outputs] == [
        ("be2", 1, {"c5": "Z"})
    ]


def test_map_dense_second_version_column(golden):
    *_, snapshot = golden
    outputs = map_dense(_incoming("s1", 2, snapshot.state, {"a5": "Q"}), snapshot)
    assert [(m.schema_id, m.version, dict(m.payload)) for m in outputs] == [
        ("be1", 2, {"c4": "Q"})
    ]


def test_map_dense_null_values_count_as_absent(golden):
    *_, snapshot = golden
    outputs = map_dense(
        _incoming("s1", 1, snapshot.state, {"a1": None, "a3": "Y"}), snapshot
    )
    assert [(m.schema_id, m.version, dict(m.payload)) for m in outputs] == [
        ("be1", 2, {"c4": "Y"})
    ]


def test_map_dense_unknown_version_and_state_mismatch(golden):
    *_, snapshot = golden
    with pytest.raises(UnknownVersionError):
        map_dense(_incoming("s9", 1, snapshot.state, {"x": 1}), snapshot)
    with pytest.raises(StateMismatchError):
        map_dense(_incoming("s1", 1, snapshot.state + 1, {"a1": "X"}), snapshot)


def test_registered_but_unmapped_version_yields_no_outputs(golden):
    registry, matrix, dense, _ = golden
    _, event = registry.register(Side.DOMAIN, "s3", 1, ["z1"])
    dense2, _ = apply_change(dense, event, registry)
    snapshot = build_snapshot(dense2, registry)
    assert map_dense(_incoming("s3", 1, snapshot.state, {"z1": "v"}), snapshot) == []


def test_snapshot_column_index_keys(golden):
    *_, snapshot = golden
    assert set(snapshot.columns) == {("s1", 1), ("s1", 2), ("s2", 1)}
    assert snapshot.cached_element_count == 7


def test_publish_requires_fresh_state(golden):
    registry, matrix, dense, _ = golden
    engine = MappingEngine(registry)
    engine.publish(dense)
    with pytest.raises(StateMismatchError, match="already published"):
        engine.publish(dense)
    event = registry.delete(Side.DOMAIN, "s2", 1)
    dense_next, _ = apply_change(dense, event, registry)
    snapshot = engine.publish(dense_next)
    assert snapshot.state == dense.state + 1


def test_publish_rejects_state_disagreement(golden):
    registry, matrix, dense, _ = golden
    registry.bump_state()
    with pytest.raises(StateMismatchError):
        build_snapshot(dense, registry)


def test_engine_maps_through_current_snapshot(golden):
    registry, _, dense, _ = golden
    engine = MappingEngine(registry)
    with pytest.raises(StateMismatchError):
        engine.snapshot
    engine.publish(dense)
    outputs = engine.map_message(_incoming("s2", 1, dense.state, {"a6": "Z"}))
    assert len(outputs) == 1


def _normalized(messages):
    return sorted(
        (m.schema_id, m.version, tuple(sorted(m.payload.items()))) for m in messages
    )


@pytest.mark.parametrize("seed", range(8))
def test_dense_path_agrees_with_sparse_oracle(seed):
    rng = random.Random(seed)
    registry, matrix = random_case(rng)
    snapshot = build_snapshot(compact_to_dense(matrix), registry)
    groups = list(matrix.domain_index.groups)
    for _ in range(40):
        schema_id, version = rng.choice(groups)
        attrs = matrix.domain_index.attributes_of(schema_id, version)
        payload = {
            a: (None if rng.random() < 0.4 else f"v{rng.randint(0, 99)}") for a in attrs
        }
        sparse_msg = _incoming(schema_id, version, matrix.state, payload)
        via_sparse = [
            m.densified() for m in map_sparse(sparse_msg, matrix) if m.densified().payload
        ]
        via_dense = map_dense(sparse_msg.densified(), snapshot)
        assert _normalized(via_sparse) == _normalized(via_dense)


def test_duplicate_message_maps_identically(golden):
    *_, snapshot = golden
    msg = _incoming("s1", 1, snapshot.state, {"a1": "X", "a3": "Y"})
    first = map_dense(msg, snapshot)
    second = map_dense(msg, snapshot)
    serialize = lambda out: json.dumps(
        [[m.schema_id, m.version, dict(m.payload)] for m in out]
    )
    assert serialize(first) == serialize(second)
