"""
Automated updates on schema evolution
=====================================

Two external events hit a live configuration: a new extraction-schema
version (one column survives, so the copied block shrinks and a
notification fires), then a new canonical-entity version (rows are copied
and the superseded rows are deleted, keeping one entity version per
extraction schema).
"""

from canonmap import SchemaRegistry, Side, apply_change, build_matrix, compact_to_dense

registry = SchemaRegistry()
registry.register(Side.DOMAIN, "s1", 1, ["a1", "a2", "a3"])
registry.register(Side.DOMAIN, "s1", 2, ["a4", "a5", "a6"], {"a4": "a1", "a6": "a2"})
registry.register(Side.RANGE, "be1", 1, ["c1", "c2"])
registry.register(Side.RANGE, "be2", 1, ["c6", "c7"])

dense = compact_to_dense(
    build_matrix(
        registry,
        [
            ("s1", 1, "a1", "be1", 1, "c1"),
            ("s1", 1, "a3", "be1", 1, "c2"),
            ("s1", 2, "a4", "be1", 1, "c1"),
            ("s1", 2, "a6", "be1", 1, "c2"),
            ("s1", 1, "a2", "be2", 1, "c6"),
            ("s1", 1, "a1", "be2", 1, "c7"),
        ],
    )
)
print("state", dense.state, "elements", dense.element_count)

# Event 1: version 3 of s1 keeps only a4 (as a7). The copied block shrinks.
_, event = registry.register(Side.DOMAIN, "s1", 3, ["a7"], {"a7": "a4"})
dense, notes = apply_change(dense, event, registry)
print("\nafter adding s1 v3:")
print("  new block:", sorted(dense.blocks[("s1", 3, "be1", 1)]))
for note in notes:
    print(f"  notification: {note.kind.value} {note.block} {note.old_size}->{note.new_size}")

# Event 2: a new entity version duplicates both rows; old rows are deleted.
_, event = registry.register(Side.RANGE, "be1", 2, ["c3", "c4"], {"c3": "c1", "c4": "c2"})
dense, notes = apply_change(dense, event, registry)
print("\nafter adding be1 v2 (notifications:", len(notes), "):")
for key, ones in sorted(dense.blocks.items()):
    print(" ", key, sorted(ones))
assert all((k[2], k[3]) != ("be1", 1) for k in dense.blocks)
print("\nold be1 v1 rows are gone; state is now", dense.state)
