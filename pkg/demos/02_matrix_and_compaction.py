"""
The mapping matrix and both compaction strategies
=================================================

The worked 5x6 example: two extraction schemas (one with a duplicated
second version) map onto three canonical entities. The sparse matrix has
30 cells and 7 ones. The balanced strategy keeps the 7 permutation
elements; the aggressive strategy additionally deduplicates across versions
and gets down to 5 elements plus one null marker.
"""

from canonmap import (
    SchemaRegistry,
    Side,
    build_matrix,
    compact_to_dense,
    compact_to_runs,
    expand_dense,
    expand_runs,
    partition_blocks,
)

registry = SchemaRegistry()
registry.register(Side.DOMAIN, "s1", 1, ["a1", "a2", "a3"])
registry.register(Side.DOMAIN, "s1", 2, ["a4", "a5"], {"a4": "a1", "a5": "a3"})
registry.register(Side.DOMAIN, "s2", 1, ["a6"])
registry.register(Side.RANGE, "be1", 1, ["c1", "c2"])
registry.register(Side.RANGE, "be1", 2, ["c3", "c4"], {"c3": "c1", "c4": "c2"})
registry.register(Side.RANGE, "be2", 1, ["c5"])
registry.register(Side.RANGE, "be3", 1, ["c6", "c7"])
registry.delete(Side.RANGE, "be1", 1)  # outdated canonical versions leave the matrix

matrix = build_matrix(
    registry,
    [
        ("s1", 1, "a1", "be1", 2, "c3"),
        ("s1", 2, "a4", "be1", 2, "c3"),
        ("s1", 1, "a3", "be1", 2, "c4"),
        ("s1", 2, "a5", "be1", 2, "c4"),
        ("s2", 1, "a6", "be2", 1, "c5"),
        ("s1", 1, "a2", "be3", 1, "c6"),
        ("s1", 1, "a1", "be3", 1, "c7"),
    ],
)
print("matrix shape:", matrix.shape, "cells:", matrix.element_count)
print(matrix.to_dense())

blocks = partition_blocks(matrix)
print("blocks:", len(blocks), "of which null:", sum(b.is_null for b in blocks))

dense = compact_to_dense(matrix)
print(f"\nbalanced strategy: {dense.element_count} elements in {len(dense.blocks)} blocks")
for key, ones in sorted(dense.blocks.items()):
    print(" ", key, sorted(ones))

runs = compact_to_runs(matrix, registry)
print(
    f"\naggressive strategy: {runs.element_count} elements"
    f" + {runs.null_marker_count} null marker in {len(runs.superblocks)} super-blocks"
)
for key, entries in sorted(runs.superblocks.items()):
    print(" ", key, [(e.version, e.kind.value, sorted(e.ones)) for e in entries])

# Both forms restore the matrix exactly.
assert expand_dense(dense, registry).ones == matrix.ones
assert expand_runs(runs, registry).ones == matrix.ones
print("\nround-trips exact; saved cells:",
      f"dense {1 - dense.element_count / matrix.element_count:.1%},",
      f"runs {1 - runs.element_count / matrix.element_count:.1%}")
