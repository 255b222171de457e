"""
Versioned schemas and attribute lineage
=======================================

Every source system's extraction schema and every canonical-model entity is
registered version by version. A new version lists its attributes and links
each duplicated attribute to its predecessor; chains of links form lineages
that drive compaction and automated updates later on.
"""

from canonmap import SchemaRegistry, Side

registry = SchemaRegistry()

# An extraction schema evolves: version 2 renames a1 -> a4 and a3 -> a5,
# and drops a2.
registry.register(Side.DOMAIN, "payments", 1, ["a1", "a2", "a3"])
registry.register(Side.DOMAIN, "payments", 2, ["a4", "a5"], {"a4": "a1", "a5": "a3"})

# A canonical entity with a single version.
registry.register(Side.RANGE, "customer", 1, ["c1", "c2"])

print("state:", registry.state)
print("payments versions:", registry.tree(Side.DOMAIN).versions("payments"))

# Lineage resolution is symmetric and walks one version at a time.
print("a1 in v2:", registry.resolve(Side.DOMAIN, "payments", "a1", 1, 2))
print("a4 back in v1:", registry.resolve(Side.DOMAIN, "payments", "a4", 2, 1))
print("a2 in v2:", registry.resolve(Side.DOMAIN, "payments", "a2", 1, 2))  # dropped

# The attribute index assigns dense global ordinals in registration order;
# they define the mapping matrix's rows and columns.
index = registry.attribute_index(Side.DOMAIN)
for i, (schema, version, attr) in enumerate(index.entries):
    print(f"  column {i}: {schema} v{version} {attr}")
