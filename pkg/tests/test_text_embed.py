import numpy as np
import pytest

from hilayout.text_embed import D_TEXT, Embedder, FormatError, embed, load_external


def test_empty_text_is_zero_vector():
    assert np.all(embed("") == 0.0)
    assert np.all(embed(None) == 0.0)
    assert len(embed("")) == D_TEXT


def test_deterministic():
    a = embed("double bed")
    b = embed("double bed")
    assert np.array_equal(a, b)


def test_bag_of_words_order_invariant():
    assert np.array_equal(embed("bed double"), embed("double bed"))


def test_unit_norm_nonzero_inputs():
    for text in ("bed", "a king size bed", "coffee-table!", "x y z w"):
        assert np.linalg.norm(embed(text)) == pytest.approx(1.0, abs=1e-6)


def test_case_and_punctuation_normalization():
    assert np.array_equal(embed("Double Bed"), embed("double bed"))
    assert np.array_equal(embed("double, bed."), embed("double bed"))


def test_distinct_tokens_differ():
    assert not np.array_equal(embed("bed"), embed("sofa"))


def test_load_external_overrides(tmp_path):
    v = np.zeros(D_TEXT)
    v[0] = 2.0
    path = tmp_path / "table.txt"
    path.write_text('"bed" ' + " ".join(str(x) for x in v) + "\n")
    emb = load_external(path)
    out = emb.embed("bed")
    assert out[0] == pytest.approx(1.0)
    assert np.linalg.norm(out) == pytest.approx(1.0)
    # Misses fall back to hashing.
    assert np.array_equal(emb.embed("sofa"), embed("sofa"))


def test_load_external_dimension_adaptation(tmp_path):
    path = tmp_path / "table.txt"
    path.write_text('"bed" 3.0 4.0\n"sofa" 0.0 1.0\n')
    emb = load_external(path)
    out = emb.embed("bed")
    assert len(out) == D_TEXT
    assert out[0] == pytest.approx(0.6)
    assert out[1] == pytest.approx(0.8)
    assert np.all(out[2:] == 0.0)


def test_load_external_empty_table(tmp_path):
    path = tmp_path / "table.txt"
    path.write_text("")
    emb = load_external(path)
    assert np.array_equal(emb.embed("bed"), embed("bed"))


def test_load_external_ragged_rows(tmp_path):
    path = tmp_path / "table.txt"
    path.write_text('"bed" 1.0 2.0\n"sofa" 1.0\n')
    with pytest.raises(FormatError):
        load_external(path)


def test_embedder_table_constructor():
    v = np.zeros(D_TEXT)
    v[3] = 1.0
    emb = Embedder({"lamp": v})
    assert np.array_equal(emb.embed("LAMP "), v)
