"""Closed-form constants, recursive bounds and path-sum identities.

Everything in this module is a deterministic function of the parameters; the
Monte Carlo side of each inequality lives in the experiments.  The central
constant is the fractional diagonal-Green moment

    c_s^s = E[ G(i,i)^s ]  with  1/(2 G(i,i)) ~ Gamma(1/2, 1),

finite exactly for s < 1/2.  It is computed canonically through the Gamma
function and cross-checked by quadrature; a further reconciliation shows that
the double-integral expression sometimes quoted for ``c_s`` actually equals
``c_s**s`` (tail integral of G^s), which is recorded by
:func:`cs_double_integral`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.integrate
import scipy.optimize
import scipy.special


@dataclass(frozen=True)
class BoundParams:
    """Fractional exponent and graph parameters used by the bound formulas.

    ``n`` is the box scale; ``k`` and ``m`` are block scales whose meaning is
    per-operation (noted in each docstring).
    """

    s: float
    rho: float
    wbar: float
    n: int = 0
    k: int = 0
    m: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.s < 0.5:
            raise ValueError(f"fractional exponent must lie in (0, 1/2), got {self.s}")
        if not self.rho > 1:
            raise ValueError(f"rho must be > 1, got {self.rho}")
        if not self.wbar > 0:
            raise ValueError(f"wbar must be > 0, got {self.wbar}")


def const_c_s(s: float) -> float:
    """The constant with c_s^s = E[G(i,i)^s]: c_s = (2^-s Gamma(1/2 - s) / Gamma(1/2))^(1/s)."""
    if not 0.0 < s < 0.5:
        raise ValueError(f"Green fractional moment diverges unless 0 < s < 1/2, got {s}")
    log_cs_s = -s * math.log(2.0) + scipy.special.gammaln(0.5 - s) - scipy.special.gammaln(0.5)
    return math.exp(log_cs_s / s)


def cs_power_quadrature(s: float) -> float:
    """Independent quadrature of c_s^s = E[(2 gamma)^-s], gamma ~ Gamma(1/2, 1)."""
    if not 0.0 < s < 0.5:
        raise ValueError(f"need 0 < s < 1/2, got {s}")

    def integrand(x: float) -> float:
        # substitution gamma = x^2 removes half of the endpoint singularity
        return (2.0 * x * x) ** (-s) * math.exp(-x * x)

    val, _ = scipy.integrate.quad(integrand, 0.0, np.inf, limit=200)
    return 2.0 / math.sqrt(math.pi) * val


def cs_double_integral(s: float) -> float:
    """Tail-probability double integral int_0^inf P(gamma < 1/(2 b^{1/s})) db.

    Writing the inner probability as P(G^s > b) shows the integral equals
    E[G^s] = c_s^s, i.e. the s-th power of :func:`const_c_s`, not c_s itself.
    """
    if not 0.0 < s < 0.5:
        raise ValueError(f"need 0 < s < 1/2, got {s}")

    def integrand(b: float) -> float:
        return scipy.special.gammainc(0.5, 0.5 * b ** (-1.0 / s))

    val, _ = scipy.integrate.quad(integrand, 0.0, np.inf, limit=400)
    return val


def const_c_wbar_s(wbar: float, s: float) -> float:
    """Critical-decay base c(wbar, s) = 2 / (1 + (1 + t^s) t^s)^(1/s), t = c_s wbar / 4.

    Tends to 2 as wbar -> 0 and decreases in wbar; values above 1 give decay
    of the critical fractional moments.
    """
    if not wbar > 0:
        raise ValueError(f"wbar must be > 0, got {wbar}")
    t = (const_c_s(s) * wbar / 4.0) ** s
    return 2.0 / (1.0 + (1.0 + t) * t) ** (1.0 / s)


def wbar_threshold(s: float, hi: float = 1e6) -> float:
    """Largest weight scale with c(wbar, s) >= 1, found by bisection."""
    f = lambda w: const_c_wbar_s(w, s) - 1.0
    if f(hi) > 0:
        raise ValueError("threshold above search bracket")
    return float(scipy.optimize.brentq(f, 1e-12, hi, xtol=1e-12, rtol=1e-12))


DECAY_KINDS = (
    "delta_pin_subcritical",
    "delta_pin_critical",
    "two_point_subcritical",
    "two_point_critical",
)


def decay_bound(kind: str, params: BoundParams, big_c: float) -> float:
    """Right-hand side of the fractional-moment decay estimates.

    delta_pin kinds use the box scale ``params.n``; two_point kinds use
    ``params.m`` as the hierarchical distance between the two sites.  The
    critical kinds are only defined at rho == 2, where the decay base is
    c(wbar, s) (pin) or 2 c(wbar, s) (two-point) instead of rho or 2 rho.
    """
    s, rho = params.s, params.rho
    if kind not in DECAY_KINDS:
        raise ValueError(f"unknown bound kind {kind!r}")
    if kind.endswith("critical") and not kind.endswith("subcritical") and rho != 2:
        raise ValueError(f"{kind} requires rho == 2, got rho={rho}")
    if kind == "delta_pin_subcritical":
        return big_c * rho ** (-s * params.n)
    if kind == "delta_pin_critical":
        return big_c * const_c_wbar_s(params.wbar, s) ** (-s * params.n)
    if kind == "two_point_subcritical":
        return big_c * (2.0 * rho) ** (-s * params.m)
    return big_c * (2.0 * const_c_wbar_s(params.wbar, s)) ** (-s * params.m)


# --- block weights of the one-point coarse family (closed forms) -----------

def block_weight(j: int, k: int, rho: float, wbar: float) -> float:
    """Merged weight between dyadic blocks at scales j != k: 2^(j+k) wbar (2 rho)^(-max-1)."""
    if j == k:
        raise ValueError("distinct block scales required")
    return 2.0 ** (j + k) * wbar * (2.0 * rho) ** (-max(j, k) - 1)


def sibling_block_weight(k: int, rho: float, wbar: float) -> float:
    """Merged weight between the two sibling blocks at scale k: 2^(2k) wbar (2 rho)^(-k-1)."""
    return 2.0 ** (2 * k) * wbar * (2.0 * rho) ** (-k - 1)


def boundary_block_weight(j: int, n: int, rho: float, wbar: float) -> float:
    """Merged weight between a scale-j block and the boundary: 2^j wbar rho^-n / (2 (rho-1))."""
    return 2.0**j * wbar * rho ** (-n) / (2.0 * (rho - 1.0))


def recursion_rhs(k: int, n: int, params: BoundParams, moments) -> float:
    """Right-hand side of the one-step moment recursion at resolution ``k``:

        (1 + c_s^s W(Bk', Bk)^s) c_s^s sum_{l=k+1}^{n} W(Bk, Bl)^s m_l,

    with ``moments`` holding m_{k+1} .. m_n (the last entry is the boundary
    block, whose field vanishes, so m_n = 1).
    """
    moments = np.asarray(moments, dtype=float)
    if len(moments) != n - k:
        raise ValueError(f"need {n - k} moments for scales {k + 1}..{n}")
    if np.any(moments < 0):
        raise ValueError("moments must be nonnegative")
    s, rho, wbar = params.s, params.rho, params.wbar
    css = const_c_s(s) ** s
    total = 0.0
    for offset, ell in enumerate(range(k + 1, n + 1)):
        if ell == n:
            w = boundary_block_weight(k, n, rho, wbar)
        else:
            w = block_weight(k, ell, rho, wbar)
        total += w**s * moments[offset]
    return (1.0 + css * sibling_block_weight(k, rho, wbar) ** s) * css * total


@dataclass(frozen=True)
class PathSumResult:
    exact: float  # brute-force sum over increasing paths
    closed_form: float  # A_k * prod_{i=k+1}^{n-1} (1 + A_i)
    product_form: float  # prod_{i=k}^{n-1} (1 + A_i), the weaker upper bound


def pathsum_exact(k: int, n: int, a_values) -> PathSumResult:
    """Sum over increasing paths k = k_0 < ... < k_l = n of prod_i A_{k_i}.

    The product runs over the starting point of every jump.  Enumerated
    exhaustively over the subsets of intermediate points {k+1, ..., n-1}
    (hence the range cap), and compared with two closed forms: the exact
    one, A_k prod_{i>k} (1 + A_i), and the slightly larger all-(1+A) product.
    """
    a = np.asarray(a_values, dtype=float)
    if len(a) != n - k:
        raise ValueError(f"need A_k..A_(n-1): {n - k} values")
    if n - k < 1:
        raise ValueError("need n > k")
    if n - k > 20:
        raise ValueError("exhaustive enumeration capped at n - k <= 20")
    if np.any(a < 0):
        raise ValueError("path factors must be nonnegative")
    interior = list(range(k + 1, n))
    exact = 0.0
    for r in range(len(interior) + 1):
        for subset in itertools.combinations(interior, r):
            path = (k, *subset, n)
            prod = 1.0
            for vertex in path[:-1]:
                prod *= a[vertex - k]
            exact += prod
    closed = a[0] * float(np.prod(1.0 + a[1:]))
    product = float(np.prod(1.0 + a))
    return PathSumResult(exact=exact, closed_form=closed, product_form=product)


def product_bound(k: int, n: int, params: BoundParams) -> float:
    """Displayed product bound (1/(4 (rho-1) rho))^s rho^(-s (n-k)) prod_i [1 + (1+t_i^s) t_i^s]

    with t_i = (c_s wbar / (2 rho)) (2 / rho)^i, i = k .. n-1.  For rho > 2
    the product increases to a finite limit; at rho == 2 each factor is
    constant and must stay below 2^s for the critical decay to win.
    """
    s, rho, wbar = params.s, params.rho, params.wbar
    base = (1.0 / (4.0 * (rho - 1.0) * rho)) ** s * rho ** (-s * (n - k))
    prod = 1.0
    for i in range(k, n):
        t = (const_c_s(s) * wbar / (2.0 * rho)) * (2.0 / rho) ** i
        prod *= 1.0 + (1.0 + t**s) * t**s
    return base * prod


def critical_factor(wbar: float, s: float) -> float:
    """Per-scale factor at rho == 2: 1 + (1 + t^s) t^s with t = c_s wbar / 4.

    Strong reinforcement (decay) requires this to stay below 2^s.
    """
    t = const_c_s(s) * wbar / 4.0
    return 1.0 + (1.0 + t**s) * t**s


def _jump_factor(a: int, b: int, n: int, params: BoundParams) -> float:
    s, rho, wbar = params.s, params.rho, params.wbar
    css = const_c_s(s) ** s
    w = boundary_block_weight(a, n, rho, wbar) if b == n else block_weight(a, b, rho, wbar)
    return (1.0 + css * sibling_block_weight(a, rho, wbar) ** s) * css * w**s


def one_particle_pathsum(start: int, target: int, n: int, params: BoundParams) -> float:
    """Exact sum over increasing block paths start -> target of the per-jump factors

        (1 + c_s^s W(Ba', Ba)^s) c_s^s W(Ba, Bb)^s,

    evaluated by backward dynamic programming (empty path at start == target
    counts 1)."""
    if not 0 <= start <= target <= n:
        raise ValueError("need 0 <= start <= target <= n")
    f = {target: 1.0}
    for x in range(target - 1, start - 1, -1):
        f[x] = sum(_jump_factor(x, b, n, params) * f[b] for b in range(x + 1, target + 1))
    return f[start]


def twoparticle_bound(k: int, m: int, n: int, params: BoundParams) -> float:
    """Two-point iteration bound: two rightward particles from k and m meeting at
    some common scale, sum_{meet=m}^{n} [pathsum k->meet] [pathsum m->meet].

    All block weights zeroed (wbar -> 0) drives this to 0; for rho > 2 it is
    dominated by const * rho^(-s (m - k)) / (1 - rho^(-2s)).
    """
    if not k < m <= n:
        raise ValueError("need k < m <= n")
    return sum(
        one_particle_pathsum(k, meet, n, params) * one_particle_pathsum(m, meet, n, params)
        for meet in range(m, n + 1)
    )
