"""Plain-text corpus ingestion.

Reads one-sentence-per-line UTF-8 corpora (single file or a directory read in
lexicographic filename order) and emits normalized lines and whitespace
tokens. Normalization is Unicode NFC plus whitespace collapsing, with
optional lowercasing (off by default: several target scripts are case-less).
Word/subword segmentation does not happen here; this layer only splits on
whitespace.
"""

from __future__ import annotations

import os
import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

from .errors import CorpusError

MAX_LINE_BYTES = 1 << 20  # longer lines are split at the last whitespace


@dataclass
class NormalizationConfig:
    nfc: bool = True
    lowercase: bool = False


def normalize_line(raw: str, config: NormalizationConfig | None = None) -> str:
    """Normalize one line: NFC, optional lowercasing, whitespace collapse.

    Interior NUL bytes are treated as whitespace so emitted lines never
    contain them.
    """
    config = config or NormalizationConfig()
    text = raw
    if config.nfc:
        text = unicodedata.normalize("NFC", text)
    if config.lowercase:
        text = text.lower()
    return " ".join(text.replace("\x00", " ").split())


def _split_long_line(chunk: bytes) -> list[bytes]:
    """Split an over-long byte line at whitespace before MAX_LINE_BYTES.

    Falls back to a UTF-8 character boundary when a window holds no
    whitespace, so no multi-byte character is ever cut.
    """
    pieces = []
    while len(chunk) > MAX_LINE_BYTES:
        cut = max(chunk.rfind(b" ", 0, MAX_LINE_BYTES + 1),
                  chunk.rfind(b"\t", 0, MAX_LINE_BYTES + 1))
        if cut <= 0:
            cut = MAX_LINE_BYTES
            while cut > 0 and (chunk[cut] & 0xC0) == 0x80:
                cut -= 1
        pieces.append(chunk[:cut])
        chunk = chunk[cut:]
    pieces.append(chunk)
    return pieces


class CorpusStream:
    """Re-iterable stream of normalized lines from a file or directory.

    Each full iteration resets and then updates `line_count` and
    `token_count`. A directory source reads its files in lexicographic
    name order, so two reads of the same tree are identical.
    """

    def __init__(self, source: str | os.PathLike,
                 config: NormalizationConfig | None = None):
        self.source = Path(source)
        self.config = config or NormalizationConfig()
        self.line_count = 0
        self.token_count = 0
        if not self.source.exists():
            raise CorpusError(f"corpus path does not exist: {self.source}")

    def _files(self) -> list[Path]:
        if self.source.is_dir():
            files = sorted(p for p in self.source.iterdir() if p.is_file())
            if not files:
                raise CorpusError(f"corpus directory is empty: {self.source}")
            return files
        return [self.source]

    def lines(self) -> Iterator[str]:
        """Yield normalized lines in document order."""
        self.line_count = 0
        self.token_count = 0
        for path in self._files():
            try:
                fh = open(path, "rb")
            except OSError as exc:
                raise CorpusError(f"cannot open corpus file {path}: {exc}") from exc
            with fh:
                offset = 0
                while True:
                    try:
                        chunk = fh.readline()
                    except OSError as exc:
                        raise CorpusError(f"read failure in {path}: {exc}") from exc
                    if not chunk:
                        break
                    raw_len = len(chunk)
                    chunk = chunk.rstrip(b"\r\n")
                    for piece_off, piece in _pieces_with_offsets(chunk):
                        try:
                            text = piece.decode("utf-8")
                        except UnicodeDecodeError as exc:
                            raise CorpusError(
                                f"invalid UTF-8 in {path} at byte offset "
                                f"{offset + piece_off + exc.start}"
                            ) from exc
                        line = normalize_line(text, self.config)
                        self.line_count += 1
                        if line:
                            self.token_count += line.count(" ") + 1
                        yield line
                    offset += raw_len

    def tokens(self) -> Iterator[str]:
        """Yield whitespace-delimited tokens in document order."""
        for line in self.lines():
            if line:
                yield from line.split(" ")


def _pieces_with_offsets(chunk: bytes) -> list[tuple[int, bytes]]:
    if len(chunk) <= MAX_LINE_BYTES:
        return [(0, chunk)]
    out = []
    pos = 0
    for piece in _split_long_line(chunk):
        out.append((pos, piece))
        pos += len(piece)
    return out


def iterate_tokens(stream: CorpusStream) -> Iterator[str]:
    """Token stream over a corpus; `stream.token_count` is valid afterwards."""
    return stream.tokens()
