"""Greedy longest-match subword tokenizer over an exported vocabulary.

Continuation pieces carry the ## prefix. A word with no full cover maps to
the single unknown token.
"""

from .errors import AdapterError

UNK = "[UNK]"


class WordPieceTokenizer:
    def __init__(self, tokens: list[str], unk: str = UNK):
        self._ids = {tok: i for i, tok in enumerate(tokens)}
        if len(self._ids) != len(tokens):
            raise AdapterError("duplicate token in vocabulary")
        if unk not in self._ids:
            raise AdapterError(f"vocabulary lacks the unknown token {unk!r}")
        self.unk_id = self._ids[unk]
        self.vocab_size = len(tokens)
        self._max_len = max(len(t) for t in tokens)

    def id_of(self, token: str) -> int:
        return self._ids[token]

    def __contains__(self, token: str) -> bool:
        return token in self._ids

    def encode_word(self, word: str) -> list[int]:
        if not word:
            return []
        pieces: list[int] = []
        start = 0
        while start < len(word):
            prefix = "##" if start > 0 else ""
            end = min(len(word), start + self._max_len)
            found = None
            while end > start:
                candidate = prefix + word[start:end]
                if candidate in self._ids:
                    found = self._ids[candidate]
                    break
                end -= 1
            if found is None:
                return [self.unk_id]
            pieces.append(found)
            start = end
        return pieces

    def encode_line(self, line: str) -> list[int]:
        out: list[int] = []
        for word in line.split():
            out.extend(self.encode_word(word))
        return out
