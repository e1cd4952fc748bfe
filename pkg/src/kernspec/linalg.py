"""Dense symmetric linear algebra for spectrum comparisons.

Eigendecomposition with decreasing-|lambda| ordering, the operator norm,
the permutation-minimal delta_2 spectral metric, and deterministic checkers
for the Weyl and Ostrowski perturbation inequalities.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Spectrum",
    "check_symmetric",
    "abs_sort_order",
    "eig_sym",
    "op_norm",
    "delta2",
    "pad_to_common_length",
    "weyl_gap",
    "WeylGap",
    "ostrowski_gap",
]


def check_symmetric(m: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Validate a dense symmetric matrix: square, finite, symmetric."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if m.shape[0] == 0:
        return m
    if not np.all(np.isfinite(m)):
        bad = np.argwhere(~np.isfinite(m))[0]
        raise ValueError(f"non-finite entry at {tuple(bad)}")
    scale = max(1.0, float(np.abs(m).max()))
    if np.abs(m - m.T).max() > tol * scale:
        raise ValueError("matrix is not symmetric")
    return m


def abs_sort_order(values: np.ndarray) -> np.ndarray:
    """Permutation sorting values by decreasing |v|.

    Ties in |v| are broken by placing the positive value first, then by
    original index, so the ordering is deterministic.
    """
    values = np.asarray(values, dtype=float)
    idx = np.arange(len(values))
    # lexsort uses the last key as primary; sign key puts positives first.
    return np.lexsort((idx, -np.sign(values), -np.abs(values)))


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues sorted by decreasing |lambda| plus the ordering map."""

    values: np.ndarray
    order: np.ndarray = field(default=None)  # original index -> sorted position

    @classmethod
    def from_values(cls, values) -> "Spectrum":
        values = np.asarray(values, dtype=float)
        perm = abs_sort_order(values)
        order = np.empty_like(perm)
        order[perm] = np.arange(len(perm))
        return cls(values=values[perm], order=order)

    def __len__(self):
        return len(self.values)


def eig_sym(m: np.ndarray) -> tuple[Spectrum, np.ndarray]:
    """Full symmetric eigendecomposition, spectrum in decreasing-|lambda| order.

    Returns (spectrum, vectors) with vectors[:, i] the eigenvector of
    spectrum.values[i].
    """
    m = check_symmetric(m)
    try:
        vals, vecs = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"symmetric eigensolve failed to converge: {exc}") from exc
    perm = abs_sort_order(vals)
    order = np.empty_like(perm)
    order[perm] = np.arange(len(perm))
    return Spectrum(values=vals[perm], order=order), vecs[:, perm]


def op_norm(m: np.ndarray) -> float:
    """Operator (spectral) norm of a symmetric matrix: max |lambda_i|."""
    m = check_symmetric(m)
    if m.shape[0] == 0:
        return 0.0
    vals = np.linalg.eigvalsh(m)
    return float(np.abs(vals).max())


def pad_to_common_length(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = max(len(a), len(b))
    return (np.pad(a, (0, n - len(a))), np.pad(b, (0, n - len(b))))


def delta2(a, b) -> float:
    """Permutation-minimal l2 distance between two spectra.

    The infimum over permutations of the zero-padded sequences is attained
    by pairing both sequences in decreasing signed order (rearrangement
    inequality), so a sort is exact.
    """
    av = a.values if isinstance(a, Spectrum) else np.asarray(a, dtype=float)
    bv = b.values if isinstance(b, Spectrum) else np.asarray(b, dtype=float)
    av, bv = pad_to_common_length(av, bv)
    return float(np.linalg.norm(np.sort(av)[::-1] - np.sort(bv)[::-1]))


@dataclass(frozen=True)
class WeylGap:
    """Weyl inequality check for a concrete matrix pair."""

    gap_value_sorted: float   # max per-index gap under decreasing-value pairing
    gap_abs_sorted: float     # same under decreasing-|lambda| pairing (reported)
    bound: float              # ||A - B||_op


def weyl_gap(a: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> WeylGap:
    """Check max_i |lambda_i(A) - lambda_i(B)| <= ||A - B||_op.

    The inequality is asserted under decreasing-value pairing (where it is
    a theorem); the decreasing-|lambda| pairing can permute indices when
    signs flip, so that gap is reported but not asserted.
    """
    a = check_symmetric(a)
    b = check_symmetric(b)
    if a.shape != b.shape:
        raise ValueError("matrices must have the same order")
    va = np.linalg.eigvalsh(a)
    vb = np.linalg.eigvalsh(b)
    gap_val = float(np.abs(va - vb).max()) if len(va) else 0.0
    sa = va[abs_sort_order(va)]
    sb = vb[abs_sort_order(vb)]
    gap_abs = float(np.abs(sa - sb).max()) if len(sa) else 0.0
    bound = op_norm(a - b)
    if gap_val > bound + tol * (1.0 + bound):
        raise RuntimeError(
            f"Weyl inequality violated: gap {gap_val} > bound {bound}")
    return WeylGap(gap_value_sorted=gap_val, gap_abs_sorted=gap_abs, bound=bound)


def ostrowski_gap(s: np.ndarray, lam: np.ndarray) -> float:
    """Relative perturbation check for M = S diag(lam) S^T vs diag(lam).

    Verifies |lambda_i(M) - lambda_i| <= |lambda_i| * ||S^T S - Id||_op for
    all i under decreasing-|lambda| indexing, padding the shorter spectrum
    with zeros.  Returns the maximum slack (positive means violated).
    """
    s = np.asarray(s, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if s.ndim != 2 or s.shape[1] != len(lam):
        raise ValueError("S must be n x R with R = len(lam)")
    m = s @ np.diag(lam) @ s.T
    spec_m = np.linalg.eigvalsh(m)
    spec_m = spec_m[abs_sort_order(spec_m)]
    ref = lam[abs_sort_order(lam)]
    a, b = pad_to_common_length(spec_m, ref)
    dev = op_norm(s.T @ s - np.eye(s.shape[1]))
    slack = np.abs(a - b) - np.abs(b) * dev
    return float(slack.max()) if len(slack) else 0.0
