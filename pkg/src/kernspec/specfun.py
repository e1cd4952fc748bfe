"""Special functions for dot-product kernel spectra.

Gegenbauer (ultraspherical) polynomials, spherical-harmonic dimensions,
zonal harmonics, Pochhammer symbols, Gauss-Jacobi quadrature for the
weight (1-t^2)^(gamma-1/2), and Hermite-Gaussian eigenfunctions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln

__all__ = [
    "GegenbauerParam",
    "QuadratureRule",
    "pochhammer_rising",
    "gegenbauer_eval",
    "gegenbauer_table",
    "gegenbauer_l2_norm",
    "harmonic_dim",
    "cumulative_harmonic_dim",
    "zonal_eval",
    "gauss_jacobi_rule",
    "weight_mass",
    "hermite_eval",
    "gaussian_eigenfunction",
]


@dataclass(frozen=True)
class GegenbauerParam:
    """Ultraspherical index gamma; gamma = (d-2)/2 for the sphere S^{d-1}."""

    gamma: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")

    @classmethod
    def from_dimension(cls, d: int) -> "GegenbauerParam":
        if d < 3:
            raise ValueError(f"ambient dimension must be >= 3, got {d}")
        return cls((d - 2) / 2)


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes/weights for integration against (1-t^2)^(gamma-1/2) on [-1,1]."""

    nodes: np.ndarray
    weights: np.ndarray
    order: int

    def integrate(self, fvals: np.ndarray) -> float:
        return float(np.dot(self.weights, fvals))


def pochhammer_rising(a: float, l: int) -> float:
    """Rising factorial a(a+1)...(a+l-1), with the empty product equal to 1."""
    if l < 0:
        raise ValueError("l must be nonnegative")
    out = 1.0
    for j in range(l):
        out *= a + j
    return out


def gegenbauer_eval(param: GegenbauerParam, l: int, t):
    """Evaluate G_l^gamma(t) by the stable forward three-term recurrence."""
    if l < 0:
        raise ValueError("l must be nonnegative")
    g = param.gamma
    t = np.asarray(t, dtype=float)
    g0 = np.ones_like(t)
    if l == 0:
        return g0 if g0.ndim else float(g0)
    g1 = 2.0 * g * t
    for k in range(2, l + 1):
        g0, g1 = g1, (2.0 * t * (k + g - 1.0) * g1 - (k + 2.0 * g - 2.0) * g0) / k
    return g1 if g1.ndim else float(g1)


def gegenbauer_table(param: GegenbauerParam, L: int, t: np.ndarray) -> np.ndarray:
    """Array of shape (L+1, len(t)) with rows G_0^gamma(t) .. G_L^gamma(t)."""
    g = param.gamma
    t = np.asarray(t, dtype=float)
    out = np.empty((L + 1,) + t.shape)
    out[0] = 1.0
    if L >= 1:
        out[1] = 2.0 * g * t
    for k in range(2, L + 1):
        out[k] = (2.0 * t * (k + g - 1.0) * out[k - 1]
                  - (k + 2.0 * g - 2.0) * out[k - 2]) / k
    return out


def weight_mass(param: GegenbauerParam) -> float:
    """Total mass of the weight: integral of (1-t^2)^(gamma-1/2) over [-1,1].

    Equals Beta(1/2, gamma+1/2) = sqrt(pi)*Gamma(gamma+1/2)/Gamma(gamma+1).
    """
    g = param.gamma
    return math.sqrt(math.pi) * math.exp(gammaln(g + 0.5) - gammaln(g + 1.0))


def _norm_const(param: GegenbauerParam) -> float:
    """c_gamma = 2^{-2 gamma} Gamma(2 gamma + 1) / Gamma(gamma + 1/2)^2."""
    g = param.gamma
    return math.exp(-2.0 * g * math.log(2.0) + gammaln(2.0 * g + 1.0)
                    - 2.0 * gammaln(g + 0.5))


def gegenbauer_l2_norm(param: GegenbauerParam, l: int) -> float:
    """Weighted L2 norm of G_l^gamma from the closed orthogonality relation.

    c_gamma * int G_l^2 rho_gamma = (gamma/(l+gamma)) * G_l^gamma(1).
    """
    if l < 0:
        raise ValueError("l must be nonnegative")
    g = param.gamma
    endpoint = pochhammer_rising(2.0 * g, l) / math.factorial(l)
    return math.sqrt(g / (l + g) * endpoint / _norm_const(param))


def harmonic_dim(d: int, l: int) -> int:
    """Dimension d_l of the space of degree-l spherical harmonics on S^{d-1}."""
    if d < 3:
        raise ValueError(f"dimension must be >= 3, got {d}")
    if l < 0:
        raise ValueError("l must be nonnegative")
    if l < 2:
        return 1 if l == 0 else d
    return math.comb(l + d - 1, l) - math.comb(l + d - 3, l - 2)


def cumulative_harmonic_dim(d: int, L: int) -> int:
    """kappa(L) = sum of d_l for l = 0..L."""
    return sum(harmonic_dim(d, l) for l in range(L + 1))


def zonal_eval(d: int, l: int, s):
    """Zonal harmonic Z_l as a function of the inner product s.

    Z_l(s) = c_l * G_l^gamma(s) with c_l = (2l+d-2)/(d-2); Z_l(1) = d_l.
    """
    if d < 3:
        raise ValueError(f"dimension must be >= 3, got {d}")
    param = GegenbauerParam.from_dimension(d)
    c_l = (2 * l + d - 2) / (d - 2)
    return c_l * gegenbauer_eval(param, l, s)


def gauss_jacobi_rule(param: GegenbauerParam, order: int) -> QuadratureRule:
    """Gauss rule for the weight (1-t^2)^(gamma-1/2) via Golub-Welsch.

    The symmetric Jacobi matrix has zero diagonal and off-diagonal entries
    sqrt(beta_k) with beta_k = k(k+2g-1) / (4(k+g)(k+g-1)) for the monic
    recurrence of the ultraspherical weight.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    g = param.gamma
    k = np.arange(1, order)
    beta = k * (k + 2.0 * g - 1.0) / (4.0 * (k + g) * (k + g - 1.0))
    diag = np.zeros(order)
    try:
        vals, vecs = eigh_tridiagonal(diag, np.sqrt(beta))
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise RuntimeError(f"tridiagonal eigensolve failed: {exc}") from exc
    weights = weight_mass(param) * vecs[0] ** 2
    return QuadratureRule(nodes=vals, weights=weights, order=order)


def hermite_eval(k: int, x):
    """Physicists' Hermite polynomial H_k(x) by H_{k+1} = 2x H_k - 2k H_{k-1}."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    x = np.asarray(x, dtype=float)
    h0 = np.ones_like(x)
    if k == 0:
        return h0 if h0.ndim else float(h0)
    h1 = 2.0 * x
    for j in range(1, k):
        h0, h1 = h1, 2.0 * x * h1 - 2.0 * j * h0
    return h1 if h1.ndim else float(h1)


_ROOT2 = math.sqrt(2.0)
_NARROW_COEF = _ROOT2 / 2.0          # exponent coefficient x^2/sqrt(2)
_WIDE_COEF = (_ROOT2 - 1.0) / 2.0    # exponent coefficient (sqrt(2)-1) x^2 / 2


def gaussian_eigenfunction(k: int, x, variant: str = "narrow"):
    """Hermite-Gaussian eigenfunction phi_k for the Gaussian kernels.

    phi_k(x) = 2^{1/8} / sqrt(2^k k!) * exp(-c x^2) * H_k(2^{1/4} x), with
    c = 1/sqrt(2) for the narrow variant and c = (sqrt(2)-1)/2 for the wide
    one.  The normalization is folded into the recurrence: with
    h~_k = H_k(y) / sqrt(2^k k!) the recurrence reads
    h~_{k+1} = sqrt(2/(k+1)) y h~_k - sqrt(k/(k+1)) h~_{k-1},
    so 2^k k! is never formed explicitly.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    if variant not in ("narrow", "wide"):
        raise ValueError(f"variant must be 'narrow' or 'wide', got {variant!r}")
    coef = _NARROW_COEF if variant == "narrow" else _WIDE_COEF
    x = np.asarray(x, dtype=float)
    y = 2.0 ** 0.25 * x
    env = 2.0 ** 0.125 * np.exp(-coef * x * x)
    h0 = np.ones_like(x)
    if k == 0:
        out = env * h0
        return out if out.ndim else float(out)
    h1 = _ROOT2 * y
    for j in range(1, k):
        h0, h1 = h1, math.sqrt(2.0 / (j + 1)) * y * h1 - math.sqrt(j / (j + 1)) * h0
    out = env * h1
    return out if out.ndim else float(out)
