"""Block partitions and coarse-grained graphs.

Merging a set of vertices into one block vertex produces a new weighted graph
whose block-to-block weight is the sum of the original weights across the two
blocks.  On the dyadic hierarchy this operation maps boxes to smaller boxes,
and two standard partition families recur throughout the package:

* the one-point family, which keeps the block containing site 1 and its
  sibling at scale k and merges every coarser sibling into one vertex each;
* the two-point family, which does the same around a second marked site
  ``2^m + 1`` so that both marked sites stay visible at resolution k.

Block averages of per-vertex fields are taken in the exponential scale
(arithmetic mean of e^u), which is the scale in which the merged model
reproduces the law of the fine one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import PartitionError


@dataclass(frozen=True)
class Partition:
    """Ordered disjoint blocks of vertex indices, one label per block.

    Blocks are stored sorted by smallest member so that identical block sets
    always produce the identical partition object.
    """

    blocks: tuple[tuple[int, ...], ...]
    labels: tuple[str, ...]
    _index: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        if len(self.blocks) != len(self.labels):
            raise PartitionError("one label required per block")
        index: dict[int, int] = {}
        for b, block in enumerate(self.blocks):
            if len(block) == 0:
                raise PartitionError("empty block")
            for v in block:
                if v in index:
                    raise PartitionError(f"vertex {v} appears in more than one block")
                index[v] = b
        object.__setattr__(self, "_index", index)

    @classmethod
    def from_blocks(cls, blocks, labels=None) -> "Partition":
        """Build a partition, sorting blocks (with their labels) by smallest member."""
        blocks = [tuple(sorted(int(v) for v in block)) for block in blocks]
        if labels is None:
            labels = [f"b{i}" for i in range(len(blocks))]
        labels = [str(lab) for lab in labels]
        if len(labels) != len(blocks):
            raise PartitionError("one label required per block")
        order = sorted(range(len(blocks)), key=lambda i: blocks[i][0] if blocks[i] else -1)
        return cls(
            blocks=tuple(blocks[i] for i in order),
            labels=tuple(labels[i] for i in order),
        )

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    def block_of(self, vertex: int) -> int:
        """Index of the block containing ``vertex``."""
        return self._index[vertex]

    def index_of_label(self, label: str) -> int:
        return self.labels.index(label)

    def check_covers(self, n_vertices: int) -> None:
        """Raise unless the blocks exactly cover {0, ..., n_vertices - 1}."""
        covered = self._index.keys()
        if len(covered) != n_vertices or not all(0 <= v < n_vertices for v in covered):
            raise PartitionError(
                f"blocks cover {len(covered)} vertices, graph has {n_vertices}"
            )

    def restrict_labels(self) -> dict[str, tuple[int, ...]]:
        return dict(zip(self.labels, self.blocks))


class CoarseGraph:
    """Graph obtained by merging the blocks of a partition of a parent graph.

    The block-to-block weight is the double sum of parent weights across the
    two blocks; it is computed once at construction since the number of blocks
    is small and reuse is heavy.
    """

    def __init__(self, parent, partition: Partition):
        partition.check_covers(parent.n_vertices)
        w_parent = parent.weight_matrix()
        nb = partition.n_blocks
        wb = np.zeros((nb, nb))
        idx = [np.fromiter(block, dtype=np.intp) for block in partition.blocks]
        for a in range(nb):
            for b in range(a + 1, nb):
                wb[a, b] = wb[b, a] = w_parent[np.ix_(idx[a], idx[b])].sum()
        wb.flags.writeable = False
        self.parent = parent
        self.partition = partition
        self.n_vertices = nb
        self._w = wb
        parent_boundary = getattr(parent, "boundary", None)
        self.boundary = None if parent_boundary is None else partition.block_of(parent_boundary)

    def weight(self, i: int, j: int) -> float:
        return float(self._w[i, j])

    def weight_matrix(self) -> np.ndarray:
        return self._w.copy()

    def label(self, i: int) -> str:
        return self.partition.labels[i]

    def vertex_of_label(self, label: str) -> int:
        return self.partition.index_of_label(label)

    def __repr__(self) -> str:  # pragma: no cover
        return f"CoarseGraph(blocks={list(self.partition.labels)})"


def coarsen(graph, partition: Partition) -> CoarseGraph:
    """Merge the blocks of ``partition``; cross-block edge mass is conserved."""
    return CoarseGraph(graph, partition)


def singleton_partition(n_vertices: int) -> Partition:
    """The identity partition: every vertex its own block."""
    return Partition.from_blocks(
        [(v,) for v in range(n_vertices)], labels=[str(v) for v in range(n_vertices)]
    )


def standard_partition(n: int, k: int) -> Partition:
    """One-point block family at resolution ``k`` for the box of scale ``n``.

    Blocks, over internal vertex indices of the box graph:

        B{k}'  = sites 1 .. 2^k          (contains site 1)
        B{k}   = sites 2^k + 1 .. 2^(k+1)
        B{j}   = sites 2^j + 1 .. 2^(j+1)   for j = k+1 .. n-1
        delta  = the boundary vertex

    The merged weights have the closed forms
    W(Bj, Bk) = 2^(j+k) wbar (2 rho)^(-max(j,k)-1) and
    W(delta, Bj) = 2^j wbar rho^-n / (2 (rho-1)).
    """
    if not 0 <= k < n:
        raise ValueError(f"need 0 <= k < n, got k={k}, n={n}")
    blocks = [tuple(range(0, 2**k)), tuple(range(2**k, 2 ** (k + 1)))]
    labels = [f"B{k}'", f"B{k}"]
    for j in range(k + 1, n):
        blocks.append(tuple(range(2**j, 2 ** (j + 1))))
        labels.append(f"B{j}")
    blocks.append((2**n,))
    labels.append("delta")
    return Partition.from_blocks(blocks, labels)


def twopoint_partition(n: int, m: int, k: int) -> Partition:
    """Two-point block family keeping sites 1 and 2^m + 1 visible at resolution k.

    The second marked site is always ``2^m + 1``: a general pair (i, j) is
    first moved onto (1, 2^m + 1) with m = d(i, j) - 1 by a distance-preserving
    relabeling of the lattice (see :func:`canonical_two_point_scale`).

    Blocks, over internal vertex indices of the box of scale ``n``:

        B0'   = {site 1},  B0 = {site 2},  B{i} = sites 2^i+1 .. 2^(i+1)
                for i = 1 .. m-1 and i = m+1 .. n-1
        C{k}' = sites 2^m+1 .. 2^m+2^k     (contains site 2^m + 1)
        C{k}  = sites 2^m+2^k+1 .. 2^m+2^(k+1)
        C{i}  = sites 2^m+2^i+1 .. 2^m+2^(i+1)   for i = k+1 .. m-1
        delta = the boundary vertex
    """
    if not 1 <= m <= n - 1:
        raise ValueError(f"need 1 <= m <= n-1, got m={m}, n={n}")
    if not 0 <= k < m:
        raise ValueError(f"need 0 <= k < m, got k={k}")
    blocks: list[tuple[int, ...]] = [(0,), (1,)]
    labels = ["B0'", "B0"]
    for i in range(1, n):
        if i == m:
            continue
        blocks.append(tuple(range(2**i, 2 ** (i + 1))))
        labels.append(f"B{i}")
    off = 2**m
    blocks.append(tuple(range(off, off + 2**k)))
    labels.append(f"C{k}'")
    blocks.append(tuple(range(off + 2**k, off + 2 ** (k + 1))))
    labels.append(f"C{k}")
    for i in range(k + 1, m):
        blocks.append(tuple(range(off + 2**i, off + 2 ** (i + 1))))
        labels.append(f"C{i}")
    blocks.append((2**n,))
    labels.append("delta")
    return Partition.from_blocks(blocks, labels)


def canonical_two_point_scale(i: int, j: int) -> int:
    """Scale ``m`` such that the pair (i, j) is equivalent to (1, 2^m + 1).

    The automorphisms of the dyadic hierarchy act transitively on ordered
    pairs at a fixed distance, so a two-point study of (i, j) reduces to the
    canonical pair at m = d(i, j) - 1.
    """
    from .lattice import hier_distance

    d = hier_distance(i, j)
    if d == 0:
        raise ValueError("two-point reduction needs distinct sites")
    return d - 1


def block_average(values: np.ndarray, partition: Partition) -> np.ndarray:
    """Arithmetic mean of per-vertex values over each block, in block order.

    Applied to e^u this is the exponential-scale block field; singleton blocks
    pass through unchanged.
    """
    values = np.asarray(values, dtype=float)
    return np.array([values[list(block)].mean() for block in partition.blocks])
