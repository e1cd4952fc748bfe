"""Sampling, kernel-matrix assembly, and the truncation decomposition.

Points are drawn uniformly on S^{d-1} (normalized Gaussians) or from the
Gaussian line measure with density e^{-x^2}/sqrt(pi).  The decomposition
splits T_n = Phi_R Lambda_R Phi_R^T + E_R and measures the Gram deviation,
||A||_op and ||E_R||_op used by the perturbation bounds.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import linalg
from .kernelmodel import SpectralKernel

__all__ = [
    "SampleSet",
    "TruncationDecomposition",
    "substream",
    "sample_points",
    "kernel_matrix",
    "decompose",
    "sample_adjacency",
    "orthonormality_diagnostic",
]


@dataclass(frozen=True)
class SampleSet:
    """n i.i.d. sample points with the seed recorded for exact replay."""

    points: np.ndarray          # (n, d) unit rows for spheres, (n,) for the line
    seed: int
    domain: str

    def __len__(self):
        return len(self.points)

    def to_csv(self, path):
        pts = np.atleast_2d(self.points.T).T
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"x{j}" for j in range(pts.shape[1])])
            for row in pts:
                writer.writerow([repr(float(v)) for v in row])


def substream(seed: int, trial: int) -> np.random.Generator:
    """Counter-based generator for one trial: key = seed XOR trial index."""
    return np.random.Generator(np.random.Philox(key=seed ^ trial))


def sample_points(kernel_or_domain, n: int, seed: int,
                  rng: np.random.Generator = None) -> SampleSet:
    """Draw n points from the kernel's domain measure.

    Sphere: normalized standard Gaussian vectors (uniform surface measure).
    Gaussian line: Normal(0, 1/sqrt(2)), density e^{-x^2}/sqrt(pi).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if isinstance(kernel_or_domain, SpectralKernel):
        domain, d = kernel_or_domain.domain, kernel_or_domain.dimension
    elif isinstance(kernel_or_domain, tuple):
        domain, d = kernel_or_domain
    else:
        domain, d = kernel_or_domain, 0
    gen = rng if rng is not None else substream(seed, 0)
    if domain == "sphere":
        if d < 3:
            raise ValueError("sphere domain needs dimension >= 3")
        g = gen.standard_normal((n, d))
        pts = g / np.linalg.norm(g, axis=1, keepdims=True)
    elif domain == "gaussian-line":
        pts = gen.normal(0.0, 1.0 / np.sqrt(2.0), size=n)
    else:
        raise ValueError(f"unknown domain {domain!r}")
    return SampleSet(points=pts, seed=seed, domain=domain)


def kernel_matrix(kernel: SpectralKernel, sample: SampleSet) -> np.ndarray:
    """Kernel matrix (T_n)_{ij} = W(X_i, X_j) / n, diagonal included."""
    n = len(sample)
    w = kernel.pair_values(sample.points)
    if not np.all(np.isfinite(w)):
        i, j = np.argwhere(~np.isfinite(w))[0]
        raise ValueError(f"non-finite kernel value at sample pair ({i}, {j})")
    t = w / n
    return 0.5 * (t + t.T)  # symmetrize away pointwise round-off


@dataclass(frozen=True)
class TruncationDecomposition:
    """Per-sample realization of T_n = Phi_R Lambda_R Phi_R^T + E_R."""

    R: int
    phi: np.ndarray          # n x R, columns phi_k(X_i)/sqrt(n)
    lam: np.ndarray          # lambda_1..lambda_R
    er: np.ndarray           # residual matrix E_R
    gram_dev: float          # ||Phi^T Phi - Id||_op
    a_norm: float            # ||P1 E P2 + P2 E P1 + P1 E P1||_op
    er_norm: float           # ||E_R||_op
    p2ep2_norm: float        # ||P2 E P2||_op (residual block)


def eigenfunction_matrix(kernel: SpectralKernel, sample: SampleSet,
                         K: int) -> np.ndarray:
    """n x K matrix with columns phi_k(X_i)/sqrt(n) for k = 1..K."""
    n = len(sample)
    cols = [kernel.eigenfunction_values(k, sample.points) for k in range(1, K + 1)]
    return np.column_stack(cols) / np.sqrt(n)


def gram_deviation(kernel: SpectralKernel, sample: SampleSet, R: int) -> float:
    """||Phi_R^T Phi_R - Id||_op alone, without assembling the kernel matrix.

    O(n R^2) — used by coverage experiments where only the Gram event
    matters.
    """
    if R < 1:
        raise ValueError("R must be >= 1")
    phi = eigenfunction_matrix(kernel, sample, R)
    return linalg.op_norm(phi.T @ phi - np.eye(R))


def decompose(kernel: SpectralKernel, sample: SampleSet, R: int,
              rank_tol: float = 1e-10) -> TruncationDecomposition:
    """Build the rank-R truncation split of the kernel matrix.

    P1 projects onto the column span of Phi_R (via the Gram system, no
    explicit inverse); P2 = Id - P1.  A rank-deficient Gram matrix is an
    error: the orthogonal split is undefined in that event.
    """
    n = len(sample)
    if R > min(n, kernel.k_max):
        raise ValueError(f"R = {R} exceeds min(n, K_max) = {min(n, kernel.k_max)}")
    t = kernel_matrix(kernel, sample)
    if R == 0:
        er_norm = linalg.op_norm(t)
        return TruncationDecomposition(
            R=0, phi=np.zeros((n, 0)), lam=np.zeros(0), er=t,
            gram_dev=0.0, a_norm=0.0, er_norm=er_norm, p2ep2_norm=er_norm)
    phi = eigenfunction_matrix(kernel, sample, R)
    lam = kernel.eigenvalues[:R]
    er = t - (phi * lam) @ phi.T
    gram = phi.T @ phi
    gram_dev = linalg.op_norm(gram - np.eye(R))
    svals = np.linalg.eigvalsh(gram)
    if svals.min() <= rank_tol:
        raise ValueError(
            f"Phi_R is numerically rank deficient (smallest Gram eigenvalue "
            f"{svals.min():.3e} <= {rank_tol}); the projection split is undefined")
    # P1 = Phi (Phi^T Phi)^{-1} Phi^T via the Gram solve
    p1 = phi @ np.linalg.solve(gram, phi.T)
    p1e = p1 @ er
    p2e = er - p1e
    a = p1e - p1e @ p1 + p2e @ p1 + p1e @ p1  # P1EP2 + P2EP1 + P1EP1
    a = 0.5 * (a + a.T)
    p2ep2 = p2e - p2e @ p1
    return TruncationDecomposition(
        R=R, phi=phi, lam=np.asarray(lam), er=er,
        gram_dev=gram_dev,
        a_norm=linalg.op_norm(a),
        er_norm=linalg.op_norm(er),
        p2ep2_norm=linalg.op_norm(0.5 * (p2ep2 + p2ep2.T)),
    )


def sample_adjacency(kernel: SpectralKernel, sample: SampleSet,
                     rng: np.random.Generator) -> np.ndarray:
    """W-random graph draw: independent Bernoulli(W_ij) edges, zero diagonal."""
    w = kernel.pair_values(sample.points)
    n = len(sample)
    iu = np.triu_indices(n, k=1)
    probs = w[iu]
    bad = (probs < -1e-12) | (probs > 1.0 + 1e-12)
    if np.any(bad):
        k = int(np.argmax(bad))
        raise ValueError(
            f"edge probability {probs[k]} outside [0,1] at pair "
            f"({iu[0][k]}, {iu[1][k]})")
    edges = rng.random(len(probs)) < np.clip(probs, 0.0, 1.0)
    a = np.zeros((n, n))
    a[iu] = edges
    return a + a.T


def orthonormality_diagnostic(kernel: SpectralKernel, sample: SampleSet,
                              K: int) -> float:
    """Max |(Phi_K^T Phi_K - Id)_{jk}| — the statistical orthonormality check.

    O(1/sqrt(n)) for a true orthonormal family under the sample measure.
    """
    if K > kernel.k_max:
        raise ValueError(f"K = {K} exceeds K_max = {kernel.k_max}")
    phi = eigenfunction_matrix(kernel, sample, K)
    return float(np.abs(phi.T @ phi - np.eye(K)).max())
