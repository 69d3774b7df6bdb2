"""Assembly and inversion of the random operator; pinned fields and moments.

For a potential sample beta on a weighted graph the operator is the dense
symmetric matrix H with diagonal 2 beta_i and off-diagonal -W_ij.  Valid
samples make H positive definite, and because the graph is complete there is
no sparsity to exploit: one Cholesky factorization per sample, reused for
every requested column of G = H^{-1}.

The pinned field at vertex p is u_i = log G(p, i) - log G(p, p); it is kept in
the log domain throughout because ratios of Green entries span many orders of
magnitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .betafield import BetaSample
from .errors import NotPositiveDefiniteError, NumericalError
from .robust import DEFAULT_GROUPS, MomentEstimate, mom_estimate

#: Residual tolerance of a column solve, relative to the column's sup norm.
#: Cholesky is backward stable and the operator norm is O(10) at the
#: parameters in use, so honest solves sit far below this.
COLUMN_RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class SchrodingerMatrix:
    """Dense symmetric operator H = 2 diag(beta) - W."""

    h: np.ndarray

    def __post_init__(self) -> None:
        h = np.asarray(self.h, dtype=float)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise ValueError("operator must be square")
        h.flags.writeable = False
        object.__setattr__(self, "h", h)

    @property
    def n(self) -> int:
        return self.h.shape[0]


def assemble_H(beta: BetaSample | np.ndarray, graph=None) -> SchrodingerMatrix:
    """Build H from a potential sample (or raw beta vector) and its graph."""
    if isinstance(beta, BetaSample):
        graph = graph if graph is not None else beta.graph
        values = beta.beta
    else:
        values = np.asarray(beta, dtype=float)
    if graph is None:
        raise ValueError("graph required when beta is a bare array")
    h = -graph.weight_matrix()
    h[np.diag_indices_from(h)] = 2.0 * values
    return SchrodingerMatrix(h=h)


class GreenView:
    """Factorized inverse of H, serving columns of G on demand.

    The factorization handle is confined to the worker that created it;
    cross-worker traffic should carry derived numbers only.
    """

    def __init__(self, hmat: SchrodingerMatrix | np.ndarray):
        h = hmat.h if isinstance(hmat, SchrodingerMatrix) else np.asarray(hmat, dtype=float)
        try:
            self._cf = scipy.linalg.cho_factor(h, lower=True, check_finite=False)
        except scipy.linalg.LinAlgError as exc:
            raise NotPositiveDefiniteError(
                "operator is not positive definite: invalid potential sample"
            ) from exc
        self._h = h
        self.n = h.shape[0]

    def column(self, j: int, check: bool = True) -> np.ndarray:
        """Column j of G, with a residual acceptance test."""
        e = np.zeros(self.n)
        e[j] = 1.0
        g = scipy.linalg.cho_solve(self._cf, e, check_finite=False)
        if check:
            resid = float(np.abs(self._h @ g - e).max())
            if resid > COLUMN_RESIDUAL_TOL * float(np.abs(g).max()):
                raise NumericalError(
                    f"column {j} solve residual {resid:.3e} exceeds tolerance"
                )
        return g

    def entry(self, i: int, j: int) -> float:
        return float(self.column(j)[i])

    def matrix(self) -> np.ndarray:
        """Full G; intended for small graphs and tests."""
        return scipy.linalg.cho_solve(self._cf, np.eye(self.n), check_finite=False)


def green(hmat: SchrodingerMatrix | np.ndarray) -> GreenView:
    return GreenView(hmat)


@dataclass(frozen=True)
class UField:
    """Field pinned at one vertex: u_pin = 0 exactly, u_i = log of a G ratio."""

    pin: int
    u: np.ndarray
    g_pin: float

    def __post_init__(self) -> None:
        u = np.asarray(self.u, dtype=float)
        u.flags.writeable = False
        object.__setattr__(self, "u", u)

    @property
    def gamma(self) -> float:
        """Pivot 1 / (2 G(pin, pin)); Gamma(1/2, 1) distributed for exact samples."""
        return 1.0 / (2.0 * self.g_pin)

    def exp_u(self) -> np.ndarray:
        return np.exp(self.u)


def ufield_pinned(g: GreenView, pin: int) -> UField:
    """Pinned field from a factorized inverse."""
    col = g.column(pin)
    if np.any(col <= 0.0):
        raise NumericalError("Green column lost positivity; sample unusable")
    u = np.log(col) - math.log(col[pin])
    u[pin] = 0.0
    return UField(pin=pin, u=u, g_pin=float(col[pin]))


def ufield_from_sample(sample: BetaSample, pin: int | None = None) -> UField:
    """Assemble, factorize and pin in one step (the common hot path)."""
    if pin is None:
        pin = getattr(sample.graph, "boundary", None)
        if pin is None:
            raise ValueError("graph has no boundary vertex; pass pin explicitly")
    return ufield_pinned(green(assemble_H(sample)), pin)


def moment_values(
    samples: Sequence[UField], s: float, selector: int | Sequence[int]
) -> np.ndarray:
    """Per-sample values of e^{s u} at a vertex, or of the block field for a
    vertex collection (arithmetic mean of e^u over the block, then power s)."""
    if isinstance(selector, (int, np.integer)):
        return np.array([math.exp(s * f.u[selector]) for f in samples])
    block = list(selector)
    return np.array([np.exp(f.u[block]).mean() ** s for f in samples])


def fractional_moment(
    samples: Sequence[UField],
    s: float,
    selector: int | Sequence[int],
    n_groups: int = DEFAULT_GROUPS,
) -> MomentEstimate:
    """Robust estimate of E e^{s u} at a vertex or block, 0 < s < 1/2.

    The exponent range is a hard precondition: at s >= 1/2 the underlying
    diagonal-Green moment diverges and no amount of averaging helps.  Unit
    exponents (used by the exact mean-one identity of e^u) go through the
    dedicated experiment path instead.
    """
    if not 0.0 < s < 0.5:
        raise ValueError(f"fractional exponent must lie in (0, 1/2), got {s}")
    if len(samples) < 8:
        raise ValueError("need at least 8 samples for a grouped estimate")
    return mom_estimate(moment_values(samples, s, selector), n_groups=n_groups)
