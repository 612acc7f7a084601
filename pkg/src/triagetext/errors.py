"""Exception types shared across the package.

Everything raised on a user-facing path derives from TriageError, so the CLI
can tell bad input or configuration (exit status 2) apart from genuine bugs
(exit status 1). Each subclass carries the subsystem it belongs to and
prefixes its message with it.
"""


class TriageError(Exception):
    """Base class for errors caused by user input, data, or configuration."""

    subsystem = "triagetext"

    def __str__(self) -> str:
        return f"{self.subsystem}: {super().__str__()}"


class CorpusError(TriageError):
    subsystem = "corpus"


class LexiconError(TriageError):
    subsystem = "lexicons"


class EmbeddingError(TriageError):
    subsystem = "embeddings"


class FeatureError(TriageError):
    subsystem = "features"


class ClassifyError(TriageError):
    subsystem = "classify"


class EvaluationError(TriageError):
    subsystem = "eval"


class ModelFileError(TriageError):
    subsystem = "model-file"


class FingerprintError(ModelFileError):
    """Model and feature pipeline were not fitted together."""
