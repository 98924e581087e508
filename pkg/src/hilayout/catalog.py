"""Asset retrieval: map object descriptions to parametric box assets.

Stands in for mesh retrieval: assets are named boxes with tags; selection
is cosine similarity between the description embedding and the asset's
name+tags embedding, deterministic lexicographic tie-break.  The returned
scale never feeds back into the solver; layout sizes stay authoritative.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass

import numpy as np

from . import text_embed


class EmptyCatalog(Exception):
    pass


class CatalogFormatError(Exception):
    pass


@dataclass(frozen=True)
class Asset:
    id: str
    category: str
    name: str
    size: tuple[float, float, float]
    tags: tuple[str, ...]
    embedding: np.ndarray


@dataclass(frozen=True)
class Retrieval:
    asset: Asset
    score: float
    scale: tuple[float, float, float]


def _parse_line(line: str, lineno: int, embedder) -> Asset:
    head, sep, rest = line.partition('"')
    if not sep:
        raise CatalogFormatError(f"line {lineno}: missing quoted name")
    name_end = rest.find('"')
    if name_end < 0:
        raise CatalogFormatError(f"line {lineno}: unterminated name")
    name = rest[:name_end]
    prefix = head.split()
    tail = rest[name_end + 1 :].split()
    if len(prefix) != 2 or len(tail) < 3:
        raise CatalogFormatError(f"line {lineno}: expected 'id category \"name\" w d h tags...'")
    try:
        size = (float(tail[0]), float(tail[1]), float(tail[2]))
    except ValueError as exc:
        raise CatalogFormatError(f"line {lineno}: bad size ({exc})") from exc
    tags = tuple(tail[3:])
    return Asset(
        id=prefix[0],
        category=prefix[1],
        name=name,
        size=size,
        tags=tags,
        embedding=embedder(name + " " + " ".join(tags)),
    )


def load_catalog(path=None, embedder=None) -> list[Asset]:
    emb = embedder.embed if embedder is not None else text_embed.embed
    if path is None:
        text = (importlib.resources.files("hilayout") / "data" / "catalog.txt").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    assets = []
    seen = set()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        asset = _parse_line(line, lineno, emb)
        if asset.id in seen:
            raise CatalogFormatError(f"line {lineno}: duplicate id {asset.id}")
        seen.add(asset.id)
        assets.append(asset)
    return assets


def retrieve(description: str, target_size: tuple[float, float, float], assets: list[Asset],
             embedder=None) -> Retrieval:
    """Best asset by embedding cosine; ties break on the smaller id."""
    if not assets:
        raise EmptyCatalog("catalog has no assets")
    emb = embedder.embed if embedder is not None else text_embed.embed
    query = emb(description)
    best: tuple[float, str] | None = None
    best_asset = None
    for asset in assets:
        score = float(np.dot(query, asset.embedding))
        key = (-score, asset.id)
        if best is None or key < best:
            best = key
            best_asset = asset
    scale = tuple(t / c for t, c in zip(target_size, best_asset.size))
    return Retrieval(asset=best_asset, score=-best[0], scale=scale)
