"""Shared fixtures and independent oracles for the test suite.

The "golden" fixture is the worked 5x6 example: two extraction schemas
(one with a duplicated second version) against three entities, 30 matrix
cells, 7 ones. The "update scenario" fixture is the worked two-event
evolution example built on the same duplication pattern. Both element
lists are frozen here and every derived expectation in the tests was
computed from them by hand or by the brute-force oracles below.
"""

from __future__ import annotations

import random
from itertools import combinations

from canonmap import (
    ChangeCase,
    ChangeEvent,
    MappingMatrix,
    SchemaRegistry,
    Side,
    build_matrix,
)

# (schema, schema_version, attribute, entity, entity_version, cdm_attribute)
GOLDEN_ONES = [
    ("s1", 1, "a1", "be1", 2, "c3"),
    ("s1", 2, "a4", "be1", 2, "c3"),
    ("s1", 1, "a3", "be1", 2, "c4"),
    ("s1", 2, "a5", "be1", 2, "c4"),
    ("s2", 1, "a6", "be2", 1, "c5"),
    ("s1", 1, "a2", "be3", 1, "c6"),
    ("s1", 1, "a1", "be3", 1, "c7"),
]


def golden_registry() -> SchemaRegistry:
    """Registry behind the 5x6 worked matrix.

    The first entity's initial version is registered and then deleted:
    outdated canonical versions leave the matrix, so only its version 2
    contributes rows.
    """
    registry = SchemaRegistry()
    registry.register(Side.DOMAIN, "s1", 1, ["a1", "a2", "a3"])
    registry.register(Side.DOMAIN, "s1", 2, ["a4", "a5"], {"a4": "a1", "a5": "a3"})
    registry.register(Side.DOMAIN, "s2", 1, ["a6"])
    registry.register(Side.RANGE, "be1", 1, ["c1", "c2"])
    registry.register(Side.RANGE, "be1", 2, ["c3", "c4"], {"c3": "c1", "c4": "c2"})
    registry.register(Side.RANGE, "be2", 1, ["c5"])
    registry.register(Side.RANGE, "be3", 1, ["c6", "c7"])
    registry.delete(Side.RANGE, "be1", 1)
    return registry


def golden_matrix(registry: SchemaRegistry | None = None) -> MappingMatrix:
    return build_matrix(registry or golden_registry(), GOLDEN_ONES)


# Two-event evolution scenario: schema version added, then entity version added.
UPDATE_SCENARIO_ONES = [
    ("s1", 1, "a1", "be1", 1, "c1"),
    ("s1", 1, "a3", "be1", 1, "c2"),
    ("s1", 2, "a4", "be1", 1, "c1"),
    ("s1", 2, "a6", "be1", 1, "c2"),
    ("s1", 1, "a2", "be2", 1, "c6"),
    ("s1", 1, "a1", "be2", 1, "c7"),
]


def update_scenario_registry() -> SchemaRegistry:
    registry = SchemaRegistry()
    registry.register(Side.DOMAIN, "s1", 1, ["a1", "a2", "a3"])
    registry.register(Side.DOMAIN, "s1", 2, ["a4", "a5", "a6"], {"a4": "a1", "a6": "a2"})
    registry.register(Side.RANGE, "be1", 1, ["c1", "c2"])
    registry.register(Side.RANGE, "be2", 1, ["c6", "c7"])
    return registry


def random_case(
    rng: random.Random,
    n_schemas: int = 3,
    versions: int = 3,
    attrs: int = 5,
    n_entities: int = 3,
    entity_attrs: int = 5,
    duplicate_probability: float = 0.6,
) -> tuple[SchemaRegistry, MappingMatrix]:
    """A randomized registry plus valid matrix with lineage-duplicated blocks.

    Each schema version duplicates a random subset of its predecessor's
    attributes under fresh names; blocks either carry the lineage image of
    the previous version's block (exercising run deduplication) or are drawn
    fresh.
    """
    registry = SchemaRegistry()
    schema_attrs: dict[tuple[str, int], list[str]] = {}
    for s in range(1, n_schemas + 1):
        sid = f"s{s}"
        count = 0
        prev: list[str] = []
        for v in range(1, versions + 1):
            if v == 1:
                names = [f"{sid}x{count + i + 1}" for i in range(attrs)]
                count += attrs
                links: dict[str, str] = {}
            else:
                dropped = rng.randint(0, min(2, len(prev)))
                keep_idx = sorted(rng.sample(range(len(prev)), len(prev) - dropped))
                names, links = [], {}
                for i in keep_idx:
                    count += 1
                    names.append(f"{sid}x{count}")
                    links[f"{sid}x{count}"] = prev[i]
                while len(names) < attrs:
                    count += 1
                    names.append(f"{sid}x{count}")
            registry.register(Side.DOMAIN, sid, v, names, links)
            schema_attrs[(sid, v)] = names
            prev = names
    entity_names: dict[str, list[str]] = {}
    for e in range(1, n_entities + 1):
        eid = f"e{e}"
        names = [f"{eid}y{j + 1}" for j in range(entity_attrs)]
        registry.register(Side.RANGE, eid, 1, names)
        entity_names[eid] = names

    entries = []
    for s in range(1, n_schemas + 1):
        sid = f"s{s}"
        chosen = rng.sample(
            [f"e{e}" for e in range(1, n_entities + 1)],
            rng.randint(1, min(2, n_entities)),
        )
        for eid in chosen:
            prev_pairs: list[tuple[str, str]] = []
            for v in range(1, versions + 1):
                if v > 1 and rng.random() < duplicate_probability:
                    links = registry.tree(Side.DOMAIN).get(sid, v).equivalences
                    successor = {pred: new for new, pred in links.items()}
                    pairs = [(c, successor[a]) for c, a in prev_pairs if a in successor]
                else:
                    k = rng.randint(0, min(attrs, entity_attrs))
                    cs = rng.sample(entity_names[eid], k)
                    as_ = rng.sample(schema_attrs[(sid, v)], k)
                    pairs = list(zip(cs, as_))
                for c, a in pairs:
                    entries.append((sid, v, a, eid, 1, c))
                prev_pairs = pairs
    return registry, build_matrix(registry, entries)


def brute_force_largest_pm(
    n_rows: int, n_cols: int, ones: set[tuple[int, int]]
) -> tuple[int, frozenset[tuple[int, int]]]:
    """Exhaustive largest permutation sub-matrix of a small block.

    Tries every (row subset, column subset) pair from the largest size down
    and returns the first selection whose induced sub-matrix has exactly one
    1 in every selected row and column. Size 0 means no 1 exists.
    """
    for k in range(min(n_rows, n_cols), 0, -1):
        for rows in combinations(range(n_rows), k):
            for cols in combinations(range(n_cols), k):
                cells = {(r, c) for r, c in ones if r in rows and c in cols}
                if (
                    len(cells) == k
                    and {r for r, _ in cells} == set(rows)
                    and {c for _, c in cells} == set(cols)
                ):
                    return k, frozenset(cells)
    return 0, frozenset()


def oracle_apply(
    named_ones: frozenset[tuple[str, int, str, str, int, str]],
    event: ChangeEvent,
    registry: SchemaRegistry,
) -> frozenset[tuple[str, int, str, str, int, str]]:
    """Full-coordinate-set oracle for one schema change.

    Works directly on the complete set of named 1-elements using only the
    raw equivalence declarations of the added version; independent of the
    set-based update path and of lineage resolution.
    """
    case = event.case
    if case is ChangeCase.DELETED_DOMAIN_VERSION:
        return frozenset(
            t for t in named_ones if (t[3], t[4]) != (event.schema_id, event.version)
        )
    if case is ChangeCase.DELETED_RANGE_VERSION:
        return frozenset(
            t for t in named_ones if (t[0], t[1]) != (event.schema_id, event.version)
        )
    if case is ChangeCase.ADDED_DOMAIN_VERSION:
        links = registry.tree(Side.DOMAIN).get(event.schema_id, event.version).equivalences
        successor = {pred: new for new, pred in links.items()}
        added = {
            (r, w, c, o, event.version, successor[a])
            for (r, w, c, o, v, a) in named_ones
            if o == event.schema_id and v == event.version - 1 and a in successor
        }
        return frozenset(named_ones) | added
    links = registry.tree(Side.RANGE).get(event.schema_id, event.version).equivalences
    successor = {pred: new for new, pred in links.items()}
    added = {
        (r, event.version, successor[c], o, v, a)
        for (r, w, c, o, v, a) in named_ones
        if r == event.schema_id and w == event.version - 1 and c in successor
    }
    return frozenset(
        t
        for t in (set(named_ones) | added)
        if (t[0], t[1]) != (event.schema_id, event.version - 1)
    )
