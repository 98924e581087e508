"""Deterministic text embeddings via signed feature hashing.

Stands in for a frozen pretrained text encoder: lowercase, split on
non-alphanumerics, hash each token into D_TEXT buckets with a sign hash,
L2-normalize.  Fixed keyed hashes keep vectors identical across processes
and platforms.  An external embedding table (e.g. real encoder outputs) can
be loaded to override the hashing path per string.
"""

from __future__ import annotations

import hashlib
import re

import numpy as np

D_TEXT = 64

_TOKEN_RE = re.compile(r"[a-z0-9]+")


class FormatError(Exception):
    """Malformed external embedding table."""


def _hash(token: str, person: bytes) -> int:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8, person=person).digest()
    return int.from_bytes(digest, "big")


class Embedder:
    """Hashing embedder with an optional lookup-table override."""

    def __init__(self, table: dict[str, np.ndarray] | None = None):
        self._table = dict(table or {})

    def embed(self, text: str | None) -> np.ndarray:
        if text is None:
            return np.zeros(D_TEXT)
        key = " ".join(text.strip().lower().split())
        if key in self._table:
            return self._table[key]
        return _hash_embed(key)


def _hash_embed(text: str) -> np.ndarray:
    vec = np.zeros(D_TEXT)
    for token in _TOKEN_RE.findall(text.lower()):
        idx = _hash(token, b"hl-index") % D_TEXT
        sign = 1.0 if _hash(token, b"hl-sign-") % 2 == 0 else -1.0
        vec[idx] += sign
    norm = np.linalg.norm(vec)
    if norm > 0:
        vec /= norm
    return vec


_DEFAULT = Embedder()


def embed(text: str | None) -> np.ndarray:
    """Embed with the process-default embedder (hashing only)."""
    return _DEFAULT.embed(text)


def _adapt(vec: np.ndarray) -> np.ndarray:
    if len(vec) >= D_TEXT:
        out = np.array(vec[:D_TEXT], dtype=float)
    else:
        out = np.zeros(D_TEXT)
        out[: len(vec)] = vec
    norm = np.linalg.norm(out)
    if norm > 0:
        out /= norm
    return out


def load_external(path) -> Embedder:
    """Load an embedding table: one quoted string plus D decimals per line.

    All rows must share the same dimension; vectors are truncated or
    zero-padded to D_TEXT and unit-normalized.  Raises FormatError on
    ragged rows or unparseable lines.
    """
    table: dict[str, np.ndarray] = {}
    dim: int | None = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if not line.startswith('"'):
                raise FormatError(f"line {lineno}: expected quoted string")
            end = line.find('"', 1)
            if end < 0:
                raise FormatError(f"line {lineno}: unterminated quote")
            key = " ".join(line[1:end].strip().lower().split())
            try:
                values = [float(tok) for tok in line[end + 1 :].split()]
            except ValueError as exc:
                raise FormatError(f"line {lineno}: bad decimal ({exc})") from exc
            if not values:
                raise FormatError(f"line {lineno}: no vector values")
            if dim is None:
                dim = len(values)
            elif len(values) != dim:
                raise FormatError(f"line {lineno}: expected {dim} values, got {len(values)}")
            table[key] = _adapt(np.array(values))
    return Embedder(table)
