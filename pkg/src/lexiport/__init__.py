"""Vocabulary expansion toolkit.

Expands a base model's token vocabulary for a new language and initializes
the appended embedding rows by similarity-weighted transfer from a screened
source-language vocabulary: screen the base vocabulary, train/ingest static
embeddings for both languages, fit an orthogonal alignment from a bilingual
lexicon, synthesize per-token vectors (subwords as character n-gram sums),
and transplant top-k softmax-weighted combinations of base rows.
"""

__version__ = "0.1.0"

from .errors import (
    AlignmentError,
    ConfigError,
    CorpusError,
    EmbeddingError,
    FormatError,
    LexiportError,
    StageError,
    TransplantError,
    VocabError,
)

__all__ = [
    "__version__",
    "LexiportError",
    "CorpusError",
    "VocabError",
    "FormatError",
    "EmbeddingError",
    "AlignmentError",
    "TransplantError",
    "ConfigError",
    "StageError",
]
