import math

import numpy as np
import pytest

from kernspec import kernelmodel as km
from kernspec import linalg, montecarlo


def test_substream_reproducible_and_distinct():
    a = montecarlo.substream(42, 3).random(5)
    b = montecarlo.substream(42, 3).random(5)
    c = montecarlo.substream(42, 4).random(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_sample_points_sphere():
    k = km.linear_kernel(0.5, 0.1, 5)
    s = montecarlo.sample_points(k, 200, seed=0)
    assert s.points.shape == (200, 5)
    assert np.allclose(np.linalg.norm(s.points, axis=1), 1.0, atol=1e-12)
    assert len(s) == 200


def test_sample_points_line():
    s = montecarlo.sample_points("gaussian-line", 20000, seed=1)
    assert s.points.shape == (20000,)
    # Var X = 1/2 under the density e^{-x^2}/sqrt(pi)
    assert np.var(s.points) == pytest.approx(0.5, abs=0.02)


def test_sample_points_validation():
    with pytest.raises(ValueError):
        montecarlo.sample_points("sphere", 0, seed=0)
    with pytest.raises(ValueError):
        montecarlo.sample_points(("sphere", 2), 10, seed=0)
    with pytest.raises(ValueError):
        montecarlo.sample_points("torus", 10, seed=0)


def test_sample_set_csv(tmp_path):
    s = montecarlo.sample_points("gaussian-line", 5, seed=0)
    path = tmp_path / "pts.csv"
    s.to_csv(path)
    rows = path.read_text().strip().splitlines()
    assert rows[0] == "x0"
    assert [float(r) for r in rows[1:]] == pytest.approx(list(s.points))


def test_kernel_matrix_entries():
    k = km.linear_kernel(0.5, 0.1, 5)
    s = montecarlo.sample_points(k, 50, seed=2)
    t = montecarlo.kernel_matrix(k, s)
    w = k.pair_values(s.points)
    assert np.abs(t - w / 50).max() < 1e-14
    assert np.abs(t - t.T).max() == 0.0


def test_kernel_matrix_rejects_nonfinite():
    k = km.constant_kernel(0.3)
    bad = km.SpectralKernel(
        name="bad", eigenvalues=np.array([1.0]), domain="sphere", dimension=3,
        pair_fn=lambda x, y: np.full((len(x), len(y)), np.nan))
    s = montecarlo.sample_points(k, 4, seed=0)
    with pytest.raises(ValueError, match="non-finite"):
        montecarlo.kernel_matrix(bad, s)


def test_decompose_exact_finite_rank():
    # full-rank truncation of a finite-rank kernel leaves no residual
    d = 5
    k = km.linear_kernel(0.5, 0.1, d)
    s = montecarlo.sample_points(k, 200, seed=3)
    dec = montecarlo.decompose(k, s, R=d + 1)
    assert dec.er_norm < 1e-12
    assert dec.a_norm < 1e-12
    assert dec.p2ep2_norm < 1e-12
    t = montecarlo.kernel_matrix(k, s)
    recon = (dec.phi * dec.lam) @ dec.phi.T
    assert np.abs(t - recon).max() < 1e-12


def test_decompose_r_zero():
    k = km.constant_kernel(0.3)
    s = montecarlo.sample_points(k, 30, seed=4)
    dec = montecarlo.decompose(k, s, R=0)
    assert dec.gram_dev == 0.0
    assert dec.er_norm == pytest.approx(0.3, abs=1e-12)


def test_decompose_residual_split_consistency():
    # ||E_R|| <= ||A|| + ||P2 E P2|| and the Gram deviation matches the
    # direct computation
    k = km.linear_kernel(0.5, 0.1, 5)
    s = montecarlo.sample_points(k, 150, seed=5)
    dec = montecarlo.decompose(k, s, R=1)
    direct = montecarlo.gram_deviation(k, s, 1)
    assert dec.gram_dev == pytest.approx(direct, abs=1e-12)
    assert dec.er_norm <= dec.a_norm + dec.p2ep2_norm + 1e-10


def test_decompose_rank_deficient_errors():
    k = km.linear_kernel(0.5, 0.1, 5)
    s = montecarlo.sample_points(k, 6, seed=6)
    pts = np.repeat(s.points[:1], 6, axis=0)     # all points identical
    dup = montecarlo.SampleSet(points=pts, seed=6, domain="sphere")
    with pytest.raises(ValueError, match="rank deficient"):
        montecarlo.decompose(k, dup, R=6)


def test_decompose_r_too_large():
    k = km.constant_kernel(0.3)
    s = montecarlo.sample_points(k, 10, seed=7)
    with pytest.raises(ValueError, match="exceeds"):
        montecarlo.decompose(k, s, R=2)


def test_gram_deviation_shrinks_with_n():
    k = km.linear_kernel(0.5, 0.1, 5)
    small = montecarlo.gram_deviation(
        k, montecarlo.sample_points(k, 100, seed=8), 6)
    big = montecarlo.gram_deviation(
        k, montecarlo.sample_points(k, 6400, seed=8), 6)
    assert big < small


def test_sample_adjacency():
    k = km.linear_kernel(0.5, 0.1, 5)
    s = montecarlo.sample_points(k, 60, seed=9)
    a = montecarlo.sample_adjacency(k, s, montecarlo.substream(9, 1))
    assert np.array_equal(a, a.T)
    assert np.all(np.diag(a) == 0.0)
    assert set(np.unique(a)) <= {0.0, 1.0}
    # mean edge density close to the mean kernel value
    w = k.pair_values(s.points)
    iu = np.triu_indices(60, k=1)
    assert a[iu].mean() == pytest.approx(w[iu].mean(), abs=0.1)


def test_sample_adjacency_rejects_non_probability():
    bad = km.SpectralKernel(
        name="bad", eigenvalues=np.array([1.0]), domain="sphere", dimension=3,
        pair_fn=lambda x, y: np.full((len(x), len(y)), 1.5))
    k = km.constant_kernel(0.3)
    s = montecarlo.sample_points(k, 5, seed=0)
    with pytest.raises(ValueError, match="edge probability"):
        montecarlo.sample_adjacency(bad, s, montecarlo.substream(0, 0))


def test_orthonormality_diagnostic_example():
    # statistical orthonormality of the wide Hermite-Gaussian family
    k = km.gaussian_kernel("wide")
    s = montecarlo.sample_points(k, 5000, seed=1)
    dev = montecarlo.orthonormality_diagnostic(k, s, K=6)
    assert dev <= 0.1
    with pytest.raises(ValueError):
        montecarlo.orthonormality_diagnostic(k, s, K=1000)


def test_orthonormality_diagnostic_scaling():
    # O(1/sqrt(n)): averaged over seeds the diagnostic shrinks with n
    k = km.gaussian_kernel("wide")
    small = np.mean([montecarlo.orthonormality_diagnostic(
        k, montecarlo.sample_points(k, 500, seed=s), K=4) for s in range(5)])
    big = np.mean([montecarlo.orthonormality_diagnostic(
        k, montecarlo.sample_points(k, 8000, seed=s), K=4) for s in range(5)])
    assert big < small


def test_eigenfunction_matrix_scaling():
    k = km.linear_kernel(0.5, 0.1, 5)
    s = montecarlo.sample_points(k, 40, seed=10)
    phi = montecarlo.eigenfunction_matrix(k, s, 3)
    assert phi.shape == (40, 3)
    # first column is the constant 1/sqrt(n)
    assert np.allclose(phi[:, 0], 1.0 / math.sqrt(40))
