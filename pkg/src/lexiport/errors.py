"""Exception hierarchy. Every toolkit error derives from LexiportError."""


class LexiportError(Exception):
    """Base class for all toolkit errors."""


class CorpusError(LexiportError):
    """Corpus ingestion failure: undecodable bytes, unreadable paths."""


class VocabError(LexiportError):
    """Vocabulary construction failure: induction, capacity, screening."""


class FormatError(LexiportError):
    """Malformed file content (.vec tables, lexicons, binary matrices)."""


class EmbeddingError(LexiportError):
    """Embedding training or query failure."""


class AlignmentError(LexiportError):
    """Orthogonal map fitting failure: too few or degenerate pairs."""


class TransplantError(LexiportError):
    """Transplant failure, including table/vocabulary contract mismatches."""


class ConfigError(LexiportError):
    """Invalid pipeline configuration: unknown keys, bad types or values."""


class StageError(LexiportError):
    """A pipeline stage failed; carries the stage name."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"stage '{stage}': {message}")
        self.stage = stage
