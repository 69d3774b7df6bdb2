"""Dyadic hierarchical graph: ultrametric distance, edge weights, finite boxes.

Sites are the positive integers.  The distance between two sites is the order
of the smallest dyadic block ``{2^k(m-1)+1, ..., m 2^k}`` containing both, an
ultrametric computed exactly as the bit length of ``(i-1) XOR (j-1)``.  Every
pair of distinct sites carries a weight that decays geometrically in that
distance, so the graph is complete but summable.

A finite box holds the first ``2^n`` sites plus one extra "wired boundary"
vertex that absorbs, edge by edge, the total weight toward everything outside
the box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError

#: Largest number of vertices ``build_finite_box`` will materialize by default.
#: A dense double matrix at this size is ~0.5 GB, which is the practical cap
#: for the dense kernels downstream.
DEFAULT_MAX_VERTICES = 2**13 + 1


@dataclass(frozen=True)
class LatticeParams:
    """Parameters of the weighted hierarchical box.

    rho        geometric decay base of the weights, > 1
    wbar       overall weight scale, > 0
    n          box scale; the box holds 2**n sites
    q_exponent exponent k of the polynomial correction Q(x) = x**k applied to
               the weights at the critical decay rho == 2 (0 disables it)
    """

    rho: float
    wbar: float
    n: int
    q_exponent: int = 0

    def __post_init__(self) -> None:
        if not self.rho > 1:
            raise ValueError(f"rho must be > 1, got {self.rho}")
        if not self.wbar > 0:
            raise ValueError(f"wbar must be > 0, got {self.wbar}")
        if self.n < 0:
            raise ValueError(f"n must be >= 0, got {self.n}")
        if self.q_exponent != 0 and self.rho != 2:
            raise ValueError("q_exponent != 0 requires rho == 2 exactly")

    @property
    def n_sites(self) -> int:
        return 2**self.n


def hier_distance(i: int, j: int) -> int:
    """Ultrametric distance between sites ``i, j >= 1``.

    Equals min{k >= 0 : i and j share an order-k dyadic block}; 0 iff i == j.
    """
    if i < 1 or j < 1:
        raise ValueError("sites are indexed from 1")
    return ((i - 1) ^ (j - 1)).bit_length()


def spectral_dimension(rho: float) -> float:
    """Dimension of the lattice with decay base ``rho``: 2 log2 / log rho.

    Below 2 for rho > 2, above 2 for rho < 2, exactly 2 at rho == 2.
    """
    if not rho > 1:
        raise ValueError(f"rho must be > 1, got {rho}")
    return 2.0 * math.log(2.0) / math.log(rho)


def rho_for_dimension(d: float) -> float:
    """Inverse of :func:`spectral_dimension`: the decay base giving dimension d."""
    if not d > 0:
        raise ValueError(f"dimension must be > 0, got {d}")
    return 2.0 ** (2.0 / d)


def _poly_correction(distance: int, q_exponent: int) -> float:
    # Only reached with distance >= 1; Q(0) is never evaluated because
    # distance 0 means i == j and the weight is 0 by definition.
    if q_exponent == 0:
        return 1.0
    return float(distance) ** q_exponent


def edge_weight(i: int, j: int, params: LatticeParams) -> float:
    """Weight of the edge {i, j} between sites: wbar (2 rho)^-d(i,j), 0 on the diagonal.

    At rho == 2 the weight additionally carries the polynomial factor
    Q(d(i,j)) = d(i,j)**q_exponent.
    """
    if i == j:
        return 0.0
    d = hier_distance(i, j)
    return params.wbar * (2.0 * params.rho) ** (-d) * _poly_correction(d, params.q_exponent)


def site_row_sum(params: LatticeParams) -> float:
    """Total weight from one site to all other sites of the infinite graph.

    There are 2^(d-1) sites at distance exactly d, so the sum telescopes to
    wbar / (2 (rho - 1)) when no polynomial correction is present; with a
    correction the geometric series is summed numerically.
    """
    if params.q_exponent == 0:
        return params.wbar / (2.0 * (params.rho - 1.0))
    return _tail_sum(params, 1)


def boundary_weight(i: int, params: LatticeParams) -> float:
    """Weight between site ``i`` of the box and the wired boundary vertex.

    Aggregates the weights from i to every site outside the box,
    wbar rho^-n / (2 (rho - 1)); by the hierarchical structure the value does
    not depend on i.
    """
    if not 1 <= i <= params.n_sites:
        raise ValueError(f"site {i} outside box of scale n={params.n}")
    if params.q_exponent == 0:
        return params.wbar * params.rho ** (-params.n) / (2.0 * (params.rho - 1.0))
    return _tail_sum(params, params.n + 1)


def _tail_sum(params: LatticeParams, d_min: int) -> float:
    """sum_{d >= d_min} 2^(d-1) wbar (2 rho)^-d Q(d), truncated at machine precision."""
    total = 0.0
    d = d_min
    while True:
        term = 0.5 * params.wbar * (2.0 / (2.0 * params.rho)) ** d * _poly_correction(
            d, params.q_exponent
        )
        total += term
        d += 1
        if term <= 1e-18 * total and d > d_min + 4:
            return total


class HierGraph:
    """Finite box: sites 1..2^n plus the wired boundary vertex, fully connected.

    Vertices are 0-indexed internally: index v < 2^n is site v + 1, and the
    last index is the boundary vertex.  Weights are derived from
    ``(distance, params)`` on access; the dense matrix is materialized only on
    request, so the object itself stays small.  Instances are immutable and
    safe for concurrent reads.
    """

    def __init__(self, params: LatticeParams, max_vertices: int = DEFAULT_MAX_VERTICES):
        n_vertices = params.n_sites + 1
        if n_vertices > max_vertices:
            raise CapacityError(
                f"box at scale n={params.n} needs {n_vertices} vertices, "
                f"cap is {max_vertices}"
            )
        self.params = params
        self.n_vertices = n_vertices
        self.boundary = n_vertices - 1
        self._boundary_weight = boundary_weight(1, params)

    def weight(self, i: int, j: int) -> float:
        """Weight between internal vertex indices ``i`` and ``j``."""
        if i == j:
            return 0.0
        if i == self.boundary or j == self.boundary:
            return self._boundary_weight
        return edge_weight(i + 1, j + 1, self.params)

    def weight_matrix(self) -> np.ndarray:
        """Dense symmetric weight matrix with zero diagonal (freshly built)."""
        m = self.params.n_sites
        sites = np.arange(m, dtype=np.int64)
        xor = sites[:, None] ^ sites[None, :]
        # bit_length via the binary exponent; exact for values below 2**52
        dist = np.frexp(xor.astype(np.float64))[1]
        w = self.params.wbar * (2.0 * self.params.rho) ** (-dist.astype(np.float64))
        if self.params.q_exponent != 0:
            with np.errstate(divide="ignore"):
                q = dist.astype(np.float64) ** self.params.q_exponent
            np.fill_diagonal(q, 0.0)
            w = w * q
        np.fill_diagonal(w, 0.0)
        full = np.empty((self.n_vertices, self.n_vertices))
        full[:m, :m] = w
        full[self.boundary, :] = self._boundary_weight
        full[:, self.boundary] = self._boundary_weight
        full[self.boundary, self.boundary] = 0.0
        return full

    def __repr__(self) -> str:  # pragma: no cover
        return f"HierGraph(n={self.params.n}, rho={self.params.rho}, wbar={self.params.wbar})"


def build_finite_box(params: LatticeParams, max_vertices: int = DEFAULT_MAX_VERTICES) -> HierGraph:
    """Construct the finite box graph for ``params``.

    Raises :class:`CapacityError` when 2^n + 1 vertices exceed ``max_vertices``.
    """
    return HierGraph(params, max_vertices=max_vertices)
