"""Vector I/O, matrix persistence, and Gaussian estimation tests."""

import numpy as np
import pytest

from lexiport.errors import EmbeddingError, FormatError
from lexiport.vecio import (GaussianInit, VectorTable, fit_gaussian,
                            load_matrix, load_vec, sample_gaussian,
                            save_matrix, save_vec)


def _table(rng, n=6, d=4):
    mat = rng.normal(size=(n, d)).astype(np.float32)
    return VectorTable([f"tok{i}" for i in range(n)], mat)


def test_vec_roundtrip_exact_float32(tmp_path, rng):
    table = _table(rng)
    # include values that stress the %.9g formatting
    table.matrix[0, 0] = np.float32(1e-38)
    table.matrix[0, 1] = np.float32(3.14159274)
    table.matrix[1, 0] = np.float32(-0.0)
    path = tmp_path / "v.vec"
    save_vec(table, path)
    loaded = load_vec(path)
    assert loaded.tokens == table.tokens
    assert np.array_equal(loaded.matrix, table.matrix)
    assert loaded.matrix.dtype == np.float32


def test_vec_roundtrip_property(tmp_path, rng):
    # random float32 bit patterns survive the text round trip
    for trial in range(5):
        bits = rng.integers(0, 2 ** 32, size=(8, 3), dtype=np.uint32)
        mat = bits.view(np.float32)
        mat = np.where(np.isfinite(mat), mat, np.float32(0.5))
        table = VectorTable([f"t{i}" for i in range(8)],
                            np.ascontiguousarray(mat, dtype=np.float32))
        path = tmp_path / f"p{trial}.vec"
        save_vec(table, path)
        assert np.array_equal(load_vec(path).matrix, table.matrix)


def test_vec_header_and_row_errors(tmp_path):
    bad = tmp_path / "bad.vec"
    bad.write_text("2 3\na 1 2 3\na 4 5 6\n")
    with pytest.raises(FormatError, match="duplicate"):
        load_vec(bad)
    bad.write_text("2 3\na 1 2 3\n")
    with pytest.raises(FormatError, match="2"):
        load_vec(bad)
    bad.write_text("1 3\na 1 2\n")
    with pytest.raises(FormatError, match="line 2"):
        load_vec(bad)
    bad.write_text("1 3\na 1 2 x\n")
    with pytest.raises(FormatError):
        load_vec(bad)


def test_matrix_roundtrip_and_sidecar(tmp_path, rng):
    mat = rng.normal(size=(5, 7)).astype(np.float32)
    path = tmp_path / "m.bin"
    save_matrix(mat, path)
    assert (tmp_path / "m.json").exists()
    loaded = load_matrix(path)
    assert np.array_equal(loaded, mat)
    assert loaded.dtype == np.float32


def test_matrix_missing_sidecar(tmp_path, rng):
    mat = rng.normal(size=(2, 2)).astype(np.float32)
    path = tmp_path / "m.bin"
    save_matrix(mat, path)
    (tmp_path / "m.json").unlink()
    with pytest.raises(FormatError, match="sidecar"):
        load_matrix(path)


def test_matrix_size_mismatch(tmp_path, rng):
    mat = rng.normal(size=(2, 2)).astype(np.float32)
    path = tmp_path / "m.bin"
    save_matrix(mat, path)
    path.write_bytes(path.read_bytes()[:-4])
    with pytest.raises(FormatError):
        load_matrix(path)


def test_vector_table_validation():
    with pytest.raises(FormatError):
        VectorTable(["a", "a"], np.zeros((2, 2), dtype=np.float32))
    with pytest.raises(FormatError):
        VectorTable(["a"], np.zeros((2, 2), dtype=np.float32))


def test_apply_linear_maps_rows(rng):
    table = _table(rng, n=4, d=3)
    w = rng.normal(size=(3, 3))
    mapped = table.apply_linear(w)
    expected = (table.matrix.astype(np.float64) @ w).astype(np.float32)
    assert np.array_equal(mapped.matrix, expected)
    assert mapped.tokens == table.tokens


# hand oracle: rows (0,2) and (2,0) -> mean (1,1), population var (1,1)
def test_fit_gaussian_hand_values():
    rows = np.array([[0.0, 2.0], [2.0, 0.0]], dtype=np.float32)
    g = fit_gaussian(rows)
    assert np.allclose(g.mean, [1.0, 1.0])
    assert np.allclose(g.var, [1.0, 1.0])
    assert g.source_row_count == 2


def test_fit_gaussian_requires_two_rows():
    with pytest.raises(EmbeddingError):
        fit_gaussian(np.ones((1, 3), dtype=np.float32))


def test_sample_gaussian_zero_variance_returns_mean_exactly():
    g = GaussianInit(np.array([1.5, -2.0]), np.array([0.0, 0.0]))
    out = sample_gaussian(g, np.random.default_rng(0))
    assert np.array_equal(out, np.array([1.5, -2.0]))


def test_sample_gaussian_statistics():
    g = GaussianInit(np.array([3.0, -1.0]), np.array([4.0, 0.25]))
    gen = np.random.default_rng(7)
    samples = np.stack([sample_gaussian(g, gen) for _ in range(4000)])
    err = np.abs(samples.mean(axis=0) - g.mean)
    assert np.all(err < 4.0 * np.sqrt(g.var / 4000))
    assert np.allclose(samples.var(axis=0), g.var, rtol=0.2)


def test_sample_gaussian_deterministic_per_rng_state():
    g = GaussianInit(np.zeros(3), np.ones(3))
    a = sample_gaussian(g, np.random.default_rng(5))
    b = sample_gaussian(g, np.random.default_rng(5))
    assert np.array_equal(a, b)
