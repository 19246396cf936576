"""Reader for a vocabulary-expansion export directory.

The contract is three files: vocab.txt (one token per line, base tokens
first), matrix.bin with a matrix.json shape sidecar (little-endian float32
rows aligned with vocab.txt), and provenance.jsonl (one record per appended
token, in row order). Nothing else is consumed.
"""

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import AdapterError


@dataclass
class TransplantArtifacts:
    tokens: list[str]
    matrix: np.ndarray  # (len(tokens), dim) float32
    appended: list[str]
    records: list[dict]
    _ids: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        if self.matrix.ndim != 2 or self.matrix.shape[0] != len(self.tokens):
            raise AdapterError(
                f"matrix shape {self.matrix.shape} does not match "
                f"{len(self.tokens)} tokens")
        self._ids = {}
        for i, tok in enumerate(self.tokens):
            if tok in self._ids:
                raise AdapterError(f"duplicate token {tok!r}")
            self._ids[tok] = i

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def base_count(self) -> int:
        return len(self.tokens) - len(self.appended)

    def id_of(self, token: str) -> int:
        return self._ids[token]

    def __contains__(self, token: str) -> bool:
        return token in self._ids


def _read_matrix(export_dir: Path) -> np.ndarray:
    sidecar_path = export_dir / "matrix.json"
    bin_path = export_dir / "matrix.bin"
    for p in (sidecar_path, bin_path):
        if not p.exists():
            raise AdapterError(f"missing export file: {p}")
    try:
        sidecar = json.loads(sidecar_path.read_text(encoding="utf-8"))
        rows, dim = int(sidecar["rows"]), int(sidecar["dim"])
    except (ValueError, KeyError, TypeError):
        raise AdapterError(
            f"{sidecar_path}: sidecar must carry integer 'rows' and 'dim'"
        ) from None
    expected = rows * dim * 4
    actual = bin_path.stat().st_size
    if actual != expected:
        raise AdapterError(
            f"{bin_path}: {actual} bytes but sidecar implies {expected}")
    return np.fromfile(bin_path, dtype="<f4").reshape(rows, dim)


def load_artifacts(export_dir: str | os.PathLike) -> TransplantArtifacts:
    """Load and cross-validate the three export files."""
    export_dir = Path(export_dir)
    vocab_path = export_dir / "vocab.txt"
    prov_path = export_dir / "provenance.jsonl"
    for p in (vocab_path, prov_path):
        if not p.exists():
            raise AdapterError(f"missing export file: {p}")
    tokens = vocab_path.read_text(encoding="utf-8").splitlines()
    if not tokens or any(not t for t in tokens):
        raise AdapterError(f"{vocab_path}: empty token line")
    matrix = _read_matrix(export_dir)

    records: list[dict] = []
    with open(prov_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError:
                raise AdapterError(
                    f"{prov_path}: line {lineno}: invalid JSON") from None
            for key in ("token", "id", "provenance"):
                if key not in obj:
                    raise AdapterError(
                        f"{prov_path}: line {lineno}: missing '{key}'")
            records.append(obj)

    base_count = len(tokens) - len(records)
    if base_count < 0:
        raise AdapterError("more provenance records than vocabulary rows")
    for offset, obj in enumerate(records):
        expected_id = base_count + offset
        if obj["id"] != expected_id:
            raise AdapterError(
                f"provenance row {offset}: id {obj['id']} but appended "
                f"region starts at {base_count} (expected {expected_id})")
        if tokens[expected_id] != obj["token"]:
            raise AdapterError(
                f"provenance row {offset}: token {obj['token']!r} does not "
                f"match vocab row {expected_id} ({tokens[expected_id]!r})")
    appended = [obj["token"] for obj in records]
    return TransplantArtifacts(tokens, matrix, appended, records)
