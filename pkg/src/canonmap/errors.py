"""Exception hierarchy shared by every engine module."""


class CanonmapError(Exception):
    """Base class for all canonmap errors."""


class SchemaError(CanonmapError):
    """Invalid schema registration, definition, or attribute lookup."""


class UnknownVersionError(SchemaError):
    """A (schema, version) pair is not registered."""


class ValidityError(CanonmapError):
    """A mapping block violates the one-to-one attribute-mapping rule."""


class StateMismatchError(CanonmapError):
    """Operands belong to different configuration states."""


class StoreError(CanonmapError):
    """A persisted store file is missing, corrupt, or incompatible."""


class WorkloadError(CanonmapError):
    """A synthetic workload configuration cannot be satisfied."""
