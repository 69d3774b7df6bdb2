"""Generic weighted-graph container used by samplers, solvers and walks.

Any graph object in this package exposes the same small surface:

    n_vertices      number of vertices (0-indexed)
    boundary        index of the distinguished wired-boundary vertex, or None
    weight(i, j)    symmetric nonnegative weight, zero on the diagonal
    weight_matrix() dense symmetric weight matrix

Graphs are immutable after construction and safe to share across workers.
"""

from __future__ import annotations

import numpy as np


class ArrayGraph:
    """Weighted graph backed by an explicit dense matrix."""

    def __init__(self, weights: np.ndarray, boundary: int | None = None):
        w = np.asarray(weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError("weights must be a square matrix")
        if not np.allclose(w, w.T):
            raise ValueError("weights must be symmetric")
        if np.any(np.diag(w) != 0.0):
            raise ValueError("weights must have a zero diagonal")
        if np.any(w < 0.0):
            raise ValueError("weights must be nonnegative")
        w = 0.5 * (w + w.T)  # exact symmetry for downstream factorizations
        w.flags.writeable = False
        self._w = w
        self.n_vertices = w.shape[0]
        if boundary is not None and not 0 <= boundary < self.n_vertices:
            raise ValueError(f"boundary index {boundary} out of range")
        self.boundary = boundary

    def weight(self, i: int, j: int) -> float:
        return float(self._w[i, j])

    def weight_matrix(self) -> np.ndarray:
        return self._w.copy()

    def __repr__(self) -> str:  # pragma: no cover
        return f"ArrayGraph(n_vertices={self.n_vertices}, boundary={self.boundary})"


def two_vertex_graph(w: float) -> ArrayGraph:
    """Smallest nontrivial graph: two vertices joined by weight ``w``."""
    return ArrayGraph(np.array([[0.0, w], [w, 0.0]]))


def single_vertex_graph() -> ArrayGraph:
    return ArrayGraph(np.zeros((1, 1)))
