"""Convergence probe for vocabulary-expansion exports.

Loads an export (vocab.txt, matrix.bin + sidecar, provenance.jsonl) into a
miniature masked-language model and measures whether transplant-initialized
appended rows train faster than Gaussian-random ones.
"""

from .artifacts import TransplantArtifacts, load_artifacts
from .errors import AdapterError
from .harness import run_convergence_comparison
from .model import ToyMLM, ToyMLMConfig, load_checkpoint, make_checkpoint
from .patch import patch_embeddings
from .tokenizer import WordPieceTokenizer

__version__ = "0.1.0"

__all__ = [
    "AdapterError", "ToyMLM", "ToyMLMConfig", "TransplantArtifacts",
    "WordPieceTokenizer", "load_artifacts", "load_checkpoint",
    "make_checkpoint", "patch_embeddings", "run_convergence_comparison",
    "__version__",
]
