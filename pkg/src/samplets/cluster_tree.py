"""
Binary cluster trees induced by the fixed dyadic partition of the unit cube.

The partition does not depend on the sample: level ``j`` bisects along axis
``j mod d``, so two point sets with equal ``(d, J)`` get identical cells and
cluster ids. Cluster ids follow heap order, ``id = 2**level - 1 + position``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, UnderResolvedLeafError
from .geometry import Cell
from .sampling import PointSet, as_coords


@dataclass(frozen=True)
class Cluster:
    id: int
    level: int
    position: int
    cell: Cell
    begin: int
    end: int
    children: tuple = ()

    @property
    def size(self):
        return self.end - self.begin

    @property
    def is_leaf(self):
        return not self.children


def dyadic_cells(d, J):
    """All cells of the partition, heap ordered (``2**(J+1) - 1`` of them)."""
    cells = [Cell.unit(d)]
    for j in range(J):
        start = 2 ** j - 1
        for p in range(2 ** j):
            cells.extend(cells[start + p].split(j % d))
    return cells


def leaf_codes(x, J):
    """Leaf position of every point: one bisection bit per level."""
    N, d = x.shape
    codes = np.zeros(N, dtype=np.int64)
    splits = [0] * d
    for j in range(J):
        axis = j % d
        splits[axis] += 1
        scale = 2 ** splits[axis]
        # ties on the splitting value land in the upper child; x == 1 is clipped
        cellidx = np.minimum(np.floor(x[:, axis] * scale).astype(np.int64), scale - 1)
        codes = (codes << 1) | (cellidx & 1)
    return codes


class ClusterTree:
    """Full binary cluster tree of uniform depth over a point set.

    Attributes
    ----------
    points : PointSet or None
        Source points (None for trees restored from a file).
    depth : int
    clusters : list of Cluster
        Level-ordered; ``clusters[c.id] is c``.
    permutation : ndarray
        Tree order to original index: ``x_tree = x_original[permutation]``.
    """

    def __init__(self, points, depth, clusters, permutation):
        self.points = points
        self.depth = depth
        self.clusters = clusters
        self.permutation = permutation

    @property
    def dim(self):
        return self.root.cell.dim

    @property
    def N(self):
        return self.root.size

    @property
    def root(self):
        return self.clusters[0]

    @property
    def leaves(self):
        return self.clusters_at_level(self.depth)

    def clusters_at_level(self, j):
        if not 0 <= j <= self.depth:
            raise ConfigError(f"level {j} outside [0, {self.depth}]")
        return self.clusters[2 ** j - 1: 2 ** (j + 1) - 1]

    @property
    def non_leaves(self):
        return self.clusters[: 2 ** self.depth - 1]

    @property
    def min_leaf_size(self):
        return min(c.size for c in self.leaves)

    def inverse_permutation(self):
        inv = np.empty_like(self.permutation)
        inv[self.permutation] = np.arange(self.permutation.size)
        return inv

    def tree_points(self, cluster=None):
        """Coordinates in tree order, optionally restricted to one cluster."""
        x = as_coords(self.points)[self.permutation]
        return x if cluster is None else x[cluster.begin:cluster.end]

    def same_partition(self, other):
        return (self.depth == other.depth and self.dim == other.dim
                and all(a.cell == b.cell for a, b in zip(self.clusters, other.clusters)))

    def summary_text(self):
        lines = []
        for c in self.clusters:
            bounds = " ".join(f"{a:.17g} {b:.17g}" for a, b in zip(c.cell.lower, c.cell.upper))
            lines.append(f"{c.id} {c.level} {bounds} {c.size}")
        return "\n".join(lines) + "\n"


def build_tree(points, J, min_leaf=1):
    """Partition ``points`` by the depth-``J`` dyadic hierarchy.

    Raises :class:`UnderResolvedLeafError` if some leaf has fewer than
    ``min_leaf`` points.
    """
    if J < 0:
        raise ConfigError("depth must be non-negative")
    if min_leaf < 1:
        raise ConfigError("min_leaf must be positive")
    if not isinstance(points, PointSet):
        points = PointSet(points)
    x = points.coords
    d = x.shape[1]
    codes = leaf_codes(x, J)
    perm = np.argsort(codes, kind="stable")
    counts = np.bincount(codes, minlength=2 ** J)
    cells = dyadic_cells(d, J)
    for p, n in enumerate(counts):
        if n < min_leaf:
            raise UnderResolvedLeafError(cells[2 ** J - 1 + p], int(n), min_leaf)

    bounds = np.concatenate([[0], np.cumsum(counts)])
    clusters = [None] * len(cells)
    for j in range(J, -1, -1):
        width = 2 ** (J - j)
        for p in range(2 ** j):
            cid = 2 ** j - 1 + p
            children = () if j == J else (2 * cid + 1, 2 * cid + 2)
            clusters[cid] = Cluster(cid, j, p, cells[cid], int(bounds[p * width]),
                                    int(bounds[(p + 1) * width]), children)
    return ClusterTree(points, J, clusters, perm)


def clusters_at_level(tree, j):
    return tree.clusters_at_level(j)
