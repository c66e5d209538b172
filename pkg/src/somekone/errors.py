"""Engine-wide error vocabulary.

Every error that can cross the wire maps to a short machine code so the
protocol layer can emit ``{"code": ..., "message": ...}`` without guessing.
"""


class SomekoneError(Exception):
    """Base class; ``code`` is the wire-level error code."""

    code = "error"


class CatalogError(SomekoneError):
    code = "catalog"


class OrderingError(SomekoneError):
    """Timestamp or sequence-number regression in the action log."""

    code = "ordering"


class ReferentialError(SomekoneError):
    """An id does not resolve against the catalog or roster."""

    code = "referential"


class UsageError(SomekoneError):
    """Caller violated an operation precondition."""

    code = "usage"


class ConfigError(SomekoneError):
    code = "config"


class RoleError(SomekoneError):
    """Connection role does not authorize the attempted operation."""

    code = "role"


class AuthorizationError(SomekoneError):
    """Bad, expired, or reused pairing code / admin token."""

    code = "auth"


class JoinError(SomekoneError):
    code = "join"


class PersistenceError(SomekoneError):
    code = "persistence"


class ReplayError(SomekoneError):
    code = "replay"
