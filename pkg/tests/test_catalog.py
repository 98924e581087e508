import numpy as np
import pytest

from hilayout.catalog import (
    CatalogFormatError,
    EmptyCatalog,
    load_catalog,
    retrieve,
)
from hilayout.text_embed import embed


def test_default_catalog_loads():
    assets = load_catalog()
    assert len(assets) >= 60
    ids = [a.id for a in assets]
    assert len(ids) == len(set(ids))
    for a in assets:
        assert all(s > 0 for s in a.size)


def test_retrieve_single_match():
    assets = [a for a in load_catalog() if a.category == "bed"]
    hit = retrieve("double bed", (1.5, 2.0, 0.5), assets)
    assert hit.asset.category == "bed"


def test_retrieve_shared_token_wins():
    assets = [a for a in load_catalog() if a.id in ("bed_double", "desk_study", "sofa_three")]
    hit = retrieve("king size bed", (1.9, 2.1, 0.5), assets)
    # Hand-check: only the bed asset shares the "bed" token.
    scores = {a.id: float(np.dot(embed("king size bed"), a.embedding)) for a in assets}
    assert max(scores, key=scores.get) == "bed_double"
    assert hit.asset.id == "bed_double"


def test_retrieve_tie_breaks_on_id(tmp_path):
    path = tmp_path / "cat.txt"
    path.write_text(
        'b_twin bed "twin thing" 1.0 1.0 1.0 twin\n'
        'a_twin bed "twin thing" 1.0 1.0 1.0 twin\n'
    )
    assets = load_catalog(path)
    hit = retrieve("twin thing", (1.0, 1.0, 1.0), assets)
    assert hit.asset.id == "a_twin"


def test_retrieve_scale_factor():
    assets = load_catalog()
    hit = retrieve("double bed", (1.8, 2.2, 0.6), assets)
    c = hit.asset.size
    assert hit.scale == pytest.approx((1.8 / c[0], 2.2 / c[1], 0.6 / c[2]))


def test_retrieve_empty_catalog():
    with pytest.raises(EmptyCatalog):
        retrieve("bed", (1.0, 1.0, 1.0), [])


def test_catalog_format_errors(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("only_two_fields bed\n")
    with pytest.raises(CatalogFormatError):
        load_catalog(bad)
    dup = tmp_path / "dup.txt"
    dup.write_text('x bed "a" 1 1 1\nx bed "b" 1 1 1\n')
    with pytest.raises(CatalogFormatError):
        load_catalog(dup)
