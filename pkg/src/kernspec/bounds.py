"""Theoretical quantities of the concentration pipeline.

Variance proxies, tail sums b_R / b_{2,R}, the noise terms gamma_1 / gamma_2,
the Gram Bernstein bound, the truncation level R(i), the per-index relative
bound, and the regime rate table B(i,n) with its exact-rational exponent
generator.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from fractions import Fraction

import numpy as np

from . import specfun
from .kernelmodel import RegularityClass, SpectralKernel

__all__ = [
    "VarianceProxies",
    "TailSums",
    "BoundReport",
    "variance_proxies",
    "tail_sums",
    "noise_terms",
    "gram_bernstein_bound",
    "R_of_i",
    "theorem1_bound",
    "Theorem1Bound",
    "theorem2_rate",
    "rate_exponent",
]


@dataclass(frozen=True)
class VarianceProxies:
    """Callable proxies V1, V1', V2, V3 as functions of the truncation level.

    V1(i)  = ||sum_{k<=i} phi_k^2||_inf
    V1'(R) = sum_{k<=R} ||phi_k||_inf^2
    V2(R)  = (sum_{k>R} |lambda_k| ||phi_k||_inf^2) * b_R
    V3(R)  = sum_{k>R} |lambda_k| ||phi_k||_inf
    """

    V1: object
    V1p: object
    V2: object
    V3: object
    diag_sup: object   # diagnostic: sup of the tail diagonal sum_{k>R} |l_k| phi_k^2


def variance_proxies(kernel: SpectralKernel) -> VarianceProxies:
    """Variance proxies from the kernel's declared sup-norms.

    For dot-product kernels V1 at a full level boundary is exact via the
    addition theorem (the diagonal of each zonal level is d_l); elsewhere the
    sup-norm sum is used as the upper bound.
    """
    if kernel.sup_norms is None:
        raise ValueError(f"kernel {kernel.name!r} declares no sup-norm data")
    sup = kernel.sup_norms
    lam = np.abs(kernel.eigenvalues)
    supsq = sup ** 2
    cum_supsq = np.concatenate(([0.0], np.cumsum(supsq)))
    tail_w = np.concatenate((np.cumsum((lam * supsq)[::-1])[::-1], [0.0]))
    tail_v3 = np.concatenate((np.cumsum((lam * sup)[::-1])[::-1], [0.0]))
    levels = kernel.levels
    d = kernel.dimension

    # uniform sup bound for analytic tail corrections beyond K_max
    tail_supsq = float(supsq[-1]) if len(supsq) else 1.0

    def v1(i: int) -> float:
        i = min(i, len(sup))
        if levels is not None:
            # exact at level boundaries: sum of d_l over completed levels
            lmax = int(levels[i - 1]) if i > 0 else -1
            boundary = specfun.cumulative_harmonic_dim(d, lmax) if lmax >= 0 else 0
            if i == boundary:
                return float(boundary)
        return float(cum_supsq[i])

    def v1p(r: int) -> float:
        r = min(r, len(sup))
        return float(cum_supsq[r])

    def v2(r: int) -> float:
        return _tail_weighted(kernel, r, tail_w, tail_supsq) * _tail_abs(kernel, r)

    def v3(r: int) -> float:
        if r >= len(lam):
            return kernel.tail.tail_abs(max(r, len(lam))) * math.sqrt(tail_supsq)
        return float(tail_v3[r]) + kernel.tail.tail_abs(len(lam)) * math.sqrt(tail_supsq)

    def diag_sup(r: int, grid: np.ndarray = None) -> float:
        """sup_x sum_{k>R} |lambda_k| phi_k(x)^2, bounded through sup-norms
        (no grid search unless one is supplied with an evaluator)."""
        if grid is not None and kernel.eigfn is not None:
            total = np.zeros(len(np.atleast_1d(grid)))
            for k in range(r + 1, kernel.k_max + 1):
                total += lam[k - 1] * kernel.eigenfunction_values(k, grid) ** 2
            return float(total.max())
        return _tail_weighted(kernel, r, tail_w, tail_supsq)

    return VarianceProxies(V1=v1, V1p=v1p, V2=v2, V3=v3, diag_sup=diag_sup)


def _tail_abs(kernel: SpectralKernel, r: int) -> float:
    lam = np.abs(kernel.eigenvalues)
    mat = float(lam[r:].sum()) if r < len(lam) else 0.0
    return mat + kernel.tail.tail_abs(max(r, len(lam)))


def _tail_weighted(kernel: SpectralKernel, r: int, tail_w, tail_supsq) -> float:
    if r >= len(kernel.eigenvalues):
        return kernel.tail.tail_weighted(max(r, len(kernel.eigenvalues)), tail_supsq)
    return float(tail_w[r]) + kernel.tail.tail_weighted(len(kernel.eigenvalues),
                                                        tail_supsq)


@dataclass(frozen=True)
class TailSums:
    """b_R and b_{2,R}, with materialized and analytic parts kept separate."""

    b_r: float
    b2_r: float
    b_r_materialized: float
    b_r_tail: float
    b2_r_materialized: float
    b2_r_tail: float


def tail_sums(kernel: SpectralKernel, R: int,
              negligible: float = 1e-8) -> TailSums:
    """b_R = sum_{k>R} |lambda_k| and b_{2,R} = sum_{k>R} lambda_k^2.

    The materialized partial sums are completed by the analytic integral
    bound of the kernel's declared tail model beyond K_max; a kernel without
    a tail model must have negligible truncation mass.
    """
    if R < 0:
        raise ValueError("R must be >= 0")
    lam = np.abs(kernel.eigenvalues)
    k_max = len(lam)
    mat_abs = float(lam[R:].sum()) if R < k_max else 0.0
    mat_sq = float((lam[R:] ** 2).sum()) if R < k_max else 0.0
    k0 = max(R, k_max)
    tail_abs = kernel.tail.tail_abs(k0)
    tail_sq = kernel.tail.tail_sq(k0)
    if kernel.tail.kind == "undeclared" and k_max >= 1 and lam[-1] > negligible:
        raise ValueError(
            f"kernel {kernel.name!r} has no tail model and non-negligible "
            f"mass |lambda_Kmax| = {lam[-1]:.3e} at the cutoff; raise K_max")
    return TailSums(b_r=mat_abs + tail_abs, b2_r=mat_sq + tail_sq,
                    b_r_materialized=mat_abs, b_r_tail=tail_abs,
                    b2_r_materialized=mat_sq, b2_r_tail=tail_sq)


def noise_terms(kernel: SpectralKernel, n: int, R: int, alpha: float,
                proxies: VarianceProxies = None):
    """(gamma_1, gamma_2, tau) for the truncation level R at sample size n.

    gamma_1 = sqrt(b_{2,R} V1'(R) / n)
    gamma_2 = b_R + max(sqrt(V2(R) b_R / n), V2(R)/n)
    tau     = sqrt(V1(R) log(R/alpha) / n)
    """
    if not 1 <= R < n:
        raise ValueError(f"require 1 <= R < n (R = {R}, n = {n})")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    proxies = proxies or variance_proxies(kernel)
    ts = tail_sums(kernel, R)
    gamma1 = math.sqrt(ts.b2_r * proxies.V1p(R) / n)
    v2 = proxies.V2(R)
    gamma2 = ts.b_r + max(math.sqrt(v2 * ts.b_r / n), v2 / n)
    tau = math.sqrt(proxies.V1(R) * math.log(R / alpha) / n)
    return gamma1, gamma2, tau


def gram_bernstein_bound(V1R: float, R: int, n: int, alpha: float) -> float:
    """High-probability bound sqrt(3 V1(R) log(2R/alpha) / n) on the Gram
    deviation ||Phi_R^T Phi_R - Id||_op."""
    if not 1 <= R < n:
        raise ValueError(f"require 1 <= R < n (R = {R}, n = {n})")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    return math.sqrt(3.0 * V1R * math.log(2.0 * R / alpha) / n)


def R_of_i(kernel: SpectralKernel, i: int, r_max: int = None) -> int:
    """Minimal R with |lambda_i| > max(b_R, sqrt(R * b_{2,R})), by scan.

    The comparison carries a 1e-12 relative margin so that exact-equality
    cases (where the strict inequality fails mathematically) are not
    accepted through summation round-off.
    """
    lam_i = abs(kernel.eigenvalue(i))
    if lam_i == 0.0:
        raise ValueError(f"lambda_{i} = 0: R(i) undefined")
    r_max = r_max or kernel.k_max
    for r in range(1, r_max + 1):
        ts = tail_sums(kernel, r)
        if lam_i > max(ts.b_r, math.sqrt(r * ts.b2_r)) * (1.0 + 1e-12):
            return r
    raise ValueError(
        f"R(i) scan for i = {i} did not terminate by R = {r_max}; raise K_max")


@dataclass(frozen=True)
class Theorem1Bound:
    """Relative per-index bound |lambda_i| sqrt(V1(R(i)) log(R(i)/alpha)/n).

    ``value`` is None in the pre-asymptotic regime, with the blocking
    inequality recorded.
    """

    i: int
    n: int
    alpha: float
    Ri: int
    value: float = None
    pre_asymptotic: bool = False
    blocking: str = ""
    gamma2: float = 0.0
    tau: float = 0.0


def theorem1_bound(kernel: SpectralKernel, i: int, n: int, alpha: float,
                   proxies: VarianceProxies = None) -> Theorem1Bound:
    """Evaluate the relative bound with unit leading constant.

    Requires the sample size past the threshold where gamma_2(n, R(i)) <
    |lambda_i| and tau < 1/2; otherwise the result is flagged
    pre-asymptotic and carries no numeric value.
    """
    lam_i = abs(kernel.eigenvalue(i))
    if lam_i == 0.0:
        raise ValueError(f"lambda_{i} = 0: the relative bound is undefined")
    proxies = proxies or variance_proxies(kernel)
    ri = R_of_i(kernel, i)
    _, gamma2, tau = noise_terms(kernel, n, ri, alpha, proxies) if ri < n else (
        math.inf, math.inf, math.inf)
    if ri >= n:
        return Theorem1Bound(i=i, n=n, alpha=alpha, Ri=ri, pre_asymptotic=True,
                             blocking=f"R(i) = {ri} >= n = {n}",
                             gamma2=math.inf, tau=math.inf)
    blocking = []
    if not gamma2 < lam_i:
        blocking.append(f"gamma2(n, R(i)) = {gamma2:.3e} >= |lambda_i| = {lam_i:.3e}")
    if not tau < 0.5:
        blocking.append(f"tau = {tau:.3e} >= 1/2")
    if blocking:
        return Theorem1Bound(i=i, n=n, alpha=alpha, Ri=ri, pre_asymptotic=True,
                             blocking="; ".join(blocking), gamma2=gamma2, tau=tau)
    value = lam_i * math.sqrt(proxies.V1(ri) * math.log(max(ri, 1) / alpha) / n)
    return Theorem1Bound(i=i, n=n, alpha=alpha, Ri=ri, value=value,
                         gamma2=gamma2, tau=tau)


# ---------------------------------------------------------------------------
# Theorem 2 regime table


def theorem2_rate(reg: RegularityClass, i: int, n: int):
    """Rate B(i, n) and the label of the active regime row.

    Rows are selected by comparing i against the breakpoints
    n^{((delta-1)/delta)/(2s+1)} and n^{1/(2s)} (polynomial decay, s >= 1)
    or n^{1/(2s)} (exponential decay, s >= 1).
    """
    if not 1 <= i <= n:
        raise ValueError(f"require 1 <= i <= n (i = {i}, n = {n})")
    d, s = reg.delta, reg.s
    sqn = math.sqrt(n)
    if reg.tag in ("H", "H1"):
        if s == 0:
            return i ** (-d + 0.5) / sqn, "H1 s=0"
        cut1 = n ** (((d - 1.0) / d) / (2.0 * s + 1.0))
        cut2 = n ** (1.0 / (2.0 * s))
        if i <= cut1:
            return i ** (-d + (d / (d - 1.0)) * (s + 0.5)) / sqn, "H1 s>=1 small i"
        if i <= cut2:
            return i ** (-d + 1.0 + ((d - 1.0) / d) * (s + 0.5)) / sqn, \
                "H1 s>=1 middle i"
        return i ** (-d + s + 1.0) / sqn, "H1 s>=1 large i"
    if reg.tag == "H2":
        if s == 0:
            return math.exp(-d * i + 0.5 * math.log(i)) / sqn, "H2 s=0"
        cut = n ** (1.0 / (2.0 * s))
        if i <= cut:
            return math.exp(-d * i + (s + 0.5) * math.log(i)) / sqn, "H2 s>=1 small i"
        return math.exp(-d * i + s * math.log(i)) / sqn, "H2 s>=1 large i"
    if reg.tag == "H3":
        if s >= 1:
            return math.exp((-d + s) * i) / sqn, "H3 s>=1"
        return math.exp(-d * i) / sqn, "H3 s=0"
    raise ValueError(f"no Theorem 2 row covers tag {reg.tag!r} with s = {s}")


def rate_exponent(reg: RegularityClass, beta) -> Fraction:
    """Exponent h with |lambda_i(T_n) - lambda_i| ~ n^h at i = n^beta.

    Exact rational arithmetic; s = 0 polynomial decay only, where
    h = beta (1/2 - delta) - 1/2.
    """
    if reg.tag not in ("H", "H1"):
        raise ValueError("rate exponents are tabulated for polynomial decay only")
    if reg.s != 0:
        raise ValueError("rate exponents are tabulated for s = 0 only")
    beta = Fraction(beta).limit_denominator(10 ** 6)
    if not 0 <= beta < 1:
        raise ValueError("beta must lie in [0, 1)")
    delta = Fraction(reg.delta).limit_denominator(10 ** 6)
    return beta * (Fraction(1, 2) - delta) - Fraction(1, 2)


@dataclass(frozen=True)
class BoundReport:
    """All pipeline quantities for one (kernel, i, n, alpha, R)."""

    kernel: str
    i: int
    n: int
    alpha: float
    R: int
    b_r: float
    b2_r: float
    b_r_tail: float
    b2_r_tail: float
    gamma1: float
    gamma2: float
    tau: float
    gram_bound: float
    Ri: int = None
    theorem1: float = None
    pre_asymptotic: bool = False
    blocking: str = ""
    B: float = None
    regime: str = ""
    inputs: dict = field(default_factory=dict)

    def to_json(self, **extra) -> str:
        payload = asdict(self)
        payload.update(extra)
        return json.dumps(payload, indent=2, default=_jsonable)


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Fraction):
        return str(obj)
    raise TypeError(f"not JSON serializable: {type(obj)}")


def bound_report(kernel: SpectralKernel, i: int, n: int, alpha: float, R: int,
                 reg: RegularityClass = None, k_max: int = None) -> BoundReport:
    """Assemble the full report for one configuration."""
    proxies = variance_proxies(kernel)
    ts = tail_sums(kernel, R)
    gamma1, gamma2, tau = noise_terms(kernel, n, R, alpha, proxies)
    gram = gram_bernstein_bound(proxies.V1(R), R, n, alpha)
    t1 = theorem1_bound(kernel, i, n, alpha, proxies)
    b = regime = None
    if reg is not None:
        b, regime = theorem2_rate(reg, i, n)
    return BoundReport(
        kernel=kernel.name, i=i, n=n, alpha=alpha, R=R,
        b_r=ts.b_r, b2_r=ts.b2_r, b_r_tail=ts.b_r_tail, b2_r_tail=ts.b2_r_tail,
        gamma1=gamma1, gamma2=gamma2, tau=tau, gram_bound=gram,
        Ri=t1.Ri, theorem1=t1.value, pre_asymptotic=t1.pre_asymptotic,
        blocking=t1.blocking, B=b, regime=regime or "",
        inputs={"K_max": k_max or kernel.k_max,
                "tail_model": asdict(kernel.tail)},
    )
