"""Exception types shared across the package."""


class MitraError(Exception):
    """Base class for every error this package raises deliberately."""


class ConfigError(MitraError):
    """Service configuration is invalid or unreadable."""


class FormatError(MitraError):
    """A persisted file is corrupt or structurally invalid."""


class UnknownAnalysis(MitraError):
    """Referenced analysis_id is not registered in the corpus."""


class StaleVersion(MitraError):
    """Incoming document version is not newer than the stored one (no-op)."""


class UnknownChunk(MitraError):
    """Referenced chunk_id does not exist in the index."""


class EmptyCorpus(MitraError):
    """Operation requires at least one analysis in the corpus."""


class DimensionMismatch(MitraError):
    """Vector length disagrees with the configured dimension."""


class ZeroVector(MitraError):
    """Cannot normalize a vector with no nonzero component."""


class EmbedderUnavailable(MitraError):
    """Remote embedding server could not be reached or misbehaved."""


class RerankerUnavailable(MitraError):
    """Remote reranking server could not be reached or misbehaved."""


class GeneratorUnavailable(MitraError):
    """Local generation server could not be reached or misbehaved."""


class GenerationTimeout(MitraError):
    """Generation request exceeded its timeout."""


class EmptyQuery(MitraError):
    """Query text is empty or whitespace."""


class QueryBeforeConfirmation(MitraError):
    """A query arrived while the session awaits candidate confirmation."""


class NotAwaitingConfirmation(MitraError):
    """confirm() called on a session that has no pending candidate."""


class UnknownSession(MitraError):
    """Referenced session_id does not exist (or was evicted)."""


class EmptyRelevantSet(MitraError):
    """Metric requires a non-empty set of relevant items."""


class MissingIndex(MitraError):
    """Evaluation needs an index that has not been built."""
