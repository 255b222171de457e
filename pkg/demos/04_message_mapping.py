"""
Mapping messages: sequential baseline vs dense production path
==============================================================

The baseline path walks every block of the incoming message's column and
emits sparse outputs with explicit nulls. The production path looks the
column up in a snapshot index, touches only stored elements and non-null
values, and suppresses empty outputs. Densifying the baseline's outputs
always reproduces the dense path's outputs.
"""

from canonmap import (
    Message,
    MessageSide,
    SchemaRegistry,
    Side,
    build_matrix,
    build_snapshot,
    compact_to_dense,
    map_dense,
    map_sparse,
)

registry = SchemaRegistry()
registry.register(Side.DOMAIN, "s1", 1, ["a1", "a2", "a3"])
registry.register(Side.DOMAIN, "s2", 1, ["a6"])
registry.register(Side.RANGE, "be1", 1, ["c3", "c4"])
registry.register(Side.RANGE, "be2", 1, ["c5"])
registry.register(Side.RANGE, "be3", 1, ["c6", "c7"])

matrix = build_matrix(
    registry,
    [
        ("s1", 1, "a1", "be1", 1, "c3"),
        ("s1", 1, "a3", "be1", 1, "c4"),
        ("s2", 1, "a6", "be2", 1, "c5"),
        ("s1", 1, "a2", "be3", 1, "c6"),
        ("s1", 1, "a1", "be3", 1, "c7"),
    ],
)
snapshot = build_snapshot(compact_to_dense(matrix), registry)

# Sparse form: every attribute present, nulls explicit.
sparse = Message(
    MessageSide.INCOMING, "s1", 1, matrix.state, {"a1": "X", "a2": None, "a3": "Y"}
)
print("baseline outputs (nulls explicit):")
for out in map_sparse(sparse, matrix):
    print(f"  {out.schema_id} v{out.version}: {dict(out.payload)}")

# Dense form: nulls omitted; empty outputs suppressed.
print("\ndense outputs:")
for out in map_dense(sparse.densified(), snapshot):
    print(f"  {out.schema_id} v{out.version}: {dict(out.payload)}")

# The two paths agree once nulls are stripped.
densified = [m.densified() for m in map_sparse(sparse, matrix) if m.densified().payload]
direct = map_dense(sparse.densified(), snapshot)
assert [(m.schema_id, m.version, dict(m.payload)) for m in densified] == [
    (m.schema_id, m.version, dict(m.payload)) for m in direct
]
print("\nbaseline (densified) == dense path: agreed")
