"""Exception taxonomy shared across the engine, service, and CLI."""


class VectorLensError(Exception):
    """Base class for all engine errors."""


class DimensionMismatch(VectorLensError):
    """Vector width disagrees with the deployment dimension or a peer vector."""


class DegenerateVector(VectorLensError):
    """A weighted combination cancelled out to (near-)zero norm."""


class AntipodalVectors(VectorLensError):
    """Geodesic between two vectors is undefined (angle ~ pi)."""


class NonPositiveWeight(VectorLensError):
    """Slerp-family operations require strictly positive weights."""


class BadPayload(VectorLensError):
    """Malformed embed request or request body."""


class ProviderUnavailable(VectorLensError):
    """Remote embedding or expansion provider could not be reached."""


class NotFound(VectorLensError):
    """Referenced document id does not exist in the index."""


class MalformedDocument(VectorLensError):
    """Document violates its structural invariants."""


class FileUnreadable(VectorLensError):
    """Ingest or restore source could not be opened."""


class EmptyIndex(VectorLensError):
    """Operation requires at least one indexed document."""


class UnknownTemplate(VectorLensError):
    """Template id not present in the registry."""


class InvalidQuerySpec(VectorLensError):
    """QuerySpec violates its invariants."""
