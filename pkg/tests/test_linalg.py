import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from kernspec import linalg

from oracles import delta2_exhaustive, jacobi_eigenvalues, power_iteration_norm


def _random_sym(rng, n, scale=1.0):
    a = rng.standard_normal((n, n)) * scale
    return 0.5 * (a + a.T)


def test_check_symmetric_rejects():
    with pytest.raises(ValueError):
        linalg.check_symmetric(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        linalg.check_symmetric(np.array([[0.0, 1.0], [2.0, 0.0]]))
    m = np.array([[0.0, np.nan], [np.nan, 0.0]])
    with pytest.raises(ValueError):
        linalg.check_symmetric(m)


def test_abs_sort_order_tie_rule():
    # ties in |v|: positive first, then original index
    v = np.array([-2.0, 1.0, 2.0, -1.0, 3.0])
    order = linalg.abs_sort_order(v)
    assert list(v[order]) == [3.0, 2.0, -2.0, 1.0, -1.0]


def test_spectrum_from_values_order_map():
    spec = linalg.Spectrum.from_values([0.1, -3.0, 2.0])
    assert list(spec.values) == [-3.0, 2.0, 0.1]
    # order maps original index -> sorted position
    assert list(spec.order) == [2, 0, 1]


def test_eig_sym_reconstruction_and_order():
    rng = np.random.default_rng(7)
    m = _random_sym(rng, 12)
    spec, vecs = linalg.eig_sym(m)
    assert np.all(np.diff(np.abs(spec.values)) <= 1e-12)
    recon = vecs @ np.diag(spec.values) @ vecs.T
    assert np.abs(recon - m).max() < 1e-10
    assert np.abs(vecs.T @ vecs - np.eye(12)).max() < 1e-10


def test_eig_sym_matches_jacobi_oracle():
    rng = np.random.default_rng(11)
    for n in (3, 8, 15):
        m = _random_sym(rng, n)
        spec, _ = linalg.eig_sym(m)
        ref = jacobi_eigenvalues(m)
        assert np.allclose(np.sort(spec.values), ref, atol=1e-10)


def test_op_norm_matches_power_iteration():
    rng = np.random.default_rng(3)
    for n in (5, 20):
        m = _random_sym(rng, n)
        assert linalg.op_norm(m) == pytest.approx(power_iteration_norm(m),
                                                  rel=1e-6)
    assert linalg.op_norm(np.zeros((0, 0))) == 0.0


def test_delta2_examples():
    assert linalg.delta2([3.0, 1.0], [3.0, 1.0]) == 0.0
    # padding: shorter spectrum is zero-extended; optimal pairing is
    # (3,4), (0,3) with cost sqrt(1 + 9)
    assert linalg.delta2([3.0], [3.0, 4.0]) == pytest.approx(math.sqrt(10.0))
    # optimal pairing is by decreasing signed order
    assert linalg.delta2([1.0, -1.0], [-1.0, 1.0]) == 0.0


def test_delta2_matches_exhaustive_oracle():
    rng = np.random.default_rng(5)
    for _ in range(200):
        na, nb = rng.integers(0, 6, size=2)
        a = rng.standard_normal(na)
        b = rng.standard_normal(nb)
        assert linalg.delta2(a, b) == pytest.approx(
            delta2_exhaustive(a, b), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(hnp.arrays(np.float64, st.integers(1, 5),
                  elements=st.floats(-10, 10)),
       hnp.arrays(np.float64, st.integers(1, 5),
                  elements=st.floats(-10, 10)),
       hnp.arrays(np.float64, st.integers(1, 5),
                  elements=st.floats(-10, 10)))
def test_delta2_metric_properties(a, b, c):
    dab = linalg.delta2(a, b)
    assert dab == pytest.approx(linalg.delta2(b, a), abs=1e-12)
    assert linalg.delta2(a, a) == 0.0
    assert dab <= linalg.delta2(a, c) + linalg.delta2(c, b) + 1e-9


def test_weyl_property_random():
    rng = np.random.default_rng(17)
    for _ in range(500):
        n = int(rng.integers(2, 9))
        a = _random_sym(rng, n)
        b = a + _random_sym(rng, n, scale=0.3)
        gap = linalg.weyl_gap(a, b)
        assert gap.gap_value_sorted <= gap.bound + 1e-9
        assert gap.gap_abs_sorted >= 0.0


def test_weyl_shape_mismatch():
    with pytest.raises(ValueError):
        linalg.weyl_gap(np.zeros((2, 2)), np.zeros((3, 3)))


def _ostrowski_draw(rng):
    """A draw in the regime of the relative perturbation theorem.

    The |lambda|-sorted pairing is only guaranteed when magnitude gaps
    exceed the multiplicative distortion, so magnitudes are kept separated
    by a factor 2 while ||S^T S - Id|| stays well below 1/3.
    """
    n = int(rng.integers(2, 10))
    r = int(rng.integers(1, n + 1))
    q, _ = np.linalg.qr(rng.standard_normal((n, r)))
    s = q + 0.05 * rng.standard_normal((n, r)) / math.sqrt(n)
    mags = 2.0 ** -np.arange(r) * rng.uniform(1.0, 1.2, size=r)
    lam = mags * rng.choice([-1.0, 1.0], size=r)
    return s, lam


def test_ostrowski_property_random():
    rng = np.random.default_rng(23)
    for _ in range(500):
        s, lam = _ostrowski_draw(rng)
        assert linalg.ostrowski_gap(s, lam) <= 1e-9


def test_ostrowski_shape_check():
    with pytest.raises(ValueError):
        linalg.ostrowski_gap(np.zeros((4, 3)), np.zeros(2))


def test_pad_to_common_length():
    a, b = linalg.pad_to_common_length(np.array([1.0]), np.array([2.0, 3.0]))
    assert list(a) == [1.0, 0.0]
    assert list(b) == [2.0, 3.0]
