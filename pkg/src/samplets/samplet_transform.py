"""
Discrete samplet bases: moment matrices, per-cluster QR filters and the fast
orthogonal transform.

Moment matrices are assembled in the centered frame of each cluster's cell.
Changing from raw monomials to that frame multiplies ``M^T`` on the right by
an upper triangular matrix with positive diagonal, which leaves the
Householder reflectors of the QR, and hence every filter, unchanged; it only
keeps the factorization well conditioned on small cells.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .cluster_tree import ClusterTree, build_tree
from .errors import (ConfigError, DegenerateConfigurationError, DegenerateLeafError,
                     DimensionError, EmptyClusterError, UnderResolvedLeafError)
from .geometry import Cell, Frame
from .index_sets import IndexSet, parse_index_set, vandermonde
from .sampling import PointSet

ORDERING_VERSION = 1
RANK_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class MomentMatrix:
    """Entry ``(i, l)``: the ``l``-th basis distribution applied to ``t**alpha_i``."""

    cluster_id: int
    matrix: np.ndarray
    frame: Frame


@dataclass(frozen=True, eq=False)
class ClusterFilters:
    """Compact QR of one cluster's transposed moment matrix.

    ``Q = H_0 ... H_{k-1} diag(signs)`` with Householder vectors stored in
    ``h`` (LAPACK layout, unit diagonal implied). ``R`` holds the top
    ``k = min(|Lambda|, n)`` rows of the triangular factor.
    """

    cluster_id: int
    n: int
    m_phi: int
    h: np.ndarray
    tau: np.ndarray
    signs: np.ndarray
    R: np.ndarray

    @property
    def m_sigma(self):
        return self.n - self.m_phi

    def apply_qt(self, x):
        """``Q^T x`` for a vector or an ``(n, m)`` block."""
        y = np.array(x, dtype=float)
        for j in range(self.tau.size):
            v = self.h[j:, j].copy()
            v[0] = 1.0
            y[j:] -= self.tau[j] * np.multiply.outer(v, v @ y[j:])
        k = self.signs.size
        y[:k] *= self.signs.reshape((k,) + (1,) * (y.ndim - 1))
        return y

    def apply_q(self, y):
        x = np.array(y, dtype=float)
        k = self.signs.size
        x[:k] *= self.signs.reshape((k,) + (1,) * (x.ndim - 1))
        for j in range(self.tau.size - 1, -1, -1):
            v = self.h[j:, j].copy()
            v[0] = 1.0
            x[j:] -= self.tau[j] * np.multiply.outer(v, v @ x[j:])
        return x

    @property
    def Q(self):
        return self.apply_q(np.eye(self.n))

    @property
    def q_phi(self):
        return self.Q[:, :self.m_phi]

    @property
    def q_sigma(self):
        return self.Q[:, self.m_phi:]


def leaf_moment_matrix(cluster, index_set, points, N=None, frame=None):
    """``sqrt(N) * t_l**alpha_i`` for the points of a leaf (tree order)."""
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] == 0:
        raise EmptyClusterError(f"cluster {cluster.id} is empty")
    if x.shape[1] != index_set.dim:
        raise DimensionError("point and index set dimensions differ")
    N = x.shape[0] if N is None else N
    frame = frame or Frame.raw(index_set.dim)
    V = vandermonde(frame.to_local(x), index_set)
    return MomentMatrix(cluster.id, np.sqrt(N) * V.T, frame)


def cluster_qr(moments, strict=True, leaf=False):
    """Full QR of ``M^T`` with the sign convention ``diag(R) >= 0``."""
    M = np.asarray(moments.matrix)
    r_dim, n = M.shape
    if strict and n < r_dim:
        raise DegenerateLeafError(
            f"cluster {moments.cluster_id}: {n} distribution(s) for {r_dim} moments", index=n)
    (qr, tau), R = scipy.linalg.qr(M.T, mode="raw")
    k = min(r_dim, n)
    R = R[:k]
    signs = np.where(np.diag(R) < 0.0, -1.0, 1.0)
    R = signs[:, None] * R
    if strict:
        scale = np.max(np.abs(R)) if R.size else 0.0
        small = np.flatnonzero(np.abs(np.diag(R)) <= RANK_TOL * scale)
        if scale == 0.0 or small.size:
            i = int(small[0]) if small.size else 0
            cls = DegenerateLeafError if leaf else DegenerateConfigurationError
            raise cls(f"cluster {moments.cluster_id}: moment matrix has rank < {r_dim} "
                      f"(pivot {i})", index=i)
    return ClusterFilters(moments.cluster_id, n, k, np.asfortranarray(qr[:, :tau.size]),
                          tau, signs, R)


def internal_moment_matrix(parent, children, frame=None):
    """Parent moments from the children's scaling rows of ``R``.

    ``children`` holds ``(ClusterFilters, Frame, IndexSet)`` per child; the child's
    ``R`` is expressed in its frame and converted to ``frame``.
    """
    if len(children) != 2 or any(c is None for c in children):
        raise ConfigError(f"cluster {parent.id}: both child filters are required")
    index_set = None
    blocks = []
    for filt, child_frame, iset in children:
        index_set = iset
        R = filt.R[:filt.m_phi]
        if frame is not None and child_frame != frame:
            R = R @ frame.change_matrix(iset, child_frame)
        blocks.append(R.T)
    frame = frame or children[0][1]
    return MomentMatrix(parent.id, np.hstack(blocks), frame)


class SampletBasis:
    """Samplet basis of a cluster tree.

    Columns of the implicit orthogonal matrix ``U`` are ordered: root scaling
    distributions, then samplets by ascending level, cell position within a
    level and filter column within a cluster.
    """

    def __init__(self, tree, index_set, filters, frames, strict=True):
        self.tree = tree
        self.index_set = index_set
        self.filters = filters
        self.frames = frames
        self.strict = strict
        self.offsets = {}
        pos = filters[0].m_phi
        for c in tree.clusters:
            self.offsets[c.id] = pos
            pos += filters[c.id].m_sigma
        if pos != tree.N:
            raise DimensionError(f"basis has {pos} columns for {tree.N} points")

    @property
    def N(self):
        return self.tree.N

    @property
    def n_scaling(self):
        return self.filters[0].m_phi

    def samplet_columns(self):
        return range(self.n_scaling, self.N)

    def column_owner(self, col):
        """``(cluster_id, kind, local column)`` of a global column."""
        if not 0 <= col < self.N:
            raise ConfigError(f"column {col} outside [0, {self.N})")
        if col < self.n_scaling:
            return 0, "phi", col
        for c in self.tree.clusters:
            off, f = self.offsets[c.id], self.filters[c.id]
            if off <= col < off + f.m_sigma:
                return c.id, "sigma", f.m_phi + col - off
        raise AssertionError("unreachable")

    def _check(self, v):
        v = np.asarray(v, dtype=float)
        if v.shape[0] != self.N:
            raise DimensionError(f"length {v.shape[0]} does not match N = {self.N}")
        return v

    def _forward(self, v, keep=False):
        """Returns global coefficients and per-cluster scaling coefficients.

        Child entries are dropped once consumed unless ``keep`` is set.
        """
        x = v[self.tree.permutation] / np.sqrt(self.N)
        out = np.zeros_like(x)
        scal = {}
        for c in reversed(self.tree.clusters):
            f = self.filters[c.id]
            if c.is_leaf:
                local = x[c.begin:c.end]
            else:
                take = scal.get if keep else scal.pop
                local = np.concatenate([take(c.children[0]), take(c.children[1])])
            y = f.apply_qt(local)
            scal[c.id] = y[:f.m_phi]
            off = self.offsets[c.id]
            out[off:off + f.m_sigma] = y[f.m_phi:]
        out[:self.n_scaling] = scal[0]
        return out, scal

    def analyze(self, data):
        """Coefficients ``U^T (data / sqrt(N))``; ``data`` in original point order."""
        return self._forward(self._check(data))[0]

    def synthesize(self, coefficients):
        """Inverse of :meth:`analyze`."""
        c = self._check(coefficients)
        x = np.empty_like(c)
        scal = {0: c[:self.n_scaling]}
        for cl in self.tree.clusters:
            f = self.filters[cl.id]
            off = self.offsets[cl.id]
            y = f.apply_q(np.concatenate([scal.pop(cl.id), c[off:off + f.m_sigma]]))
            if cl.is_leaf:
                x[cl.begin:cl.end] = y
            else:
                m1 = self.filters[cl.children[0]].m_phi
                scal[cl.children[0]] = y[:m1]
                scal[cl.children[1]] = y[m1:]
        v = np.empty_like(x)
        v[self.tree.permutation] = x
        return v * np.sqrt(self.N)

    def dense_matrix(self):
        """Explicit ``U`` (original point order by rows); for small ``N`` only."""
        eye = np.eye(self.N)
        return self.synthesize(eye) / np.sqrt(self.N)

    def column(self, col):
        e = np.zeros(self.N)
        e[col] = 1.0
        return self.synthesize(e) / np.sqrt(self.N)

    def samplet_action(self, col, f):
        """``sum_i sqrt(N) u_i f(x_i)`` for column ``col`` of ``U``."""
        if not 0 <= col < self.N:
            raise ConfigError(f"column {col} outside [0, {self.N})")
        x = self.tree.points.coords
        return float(self.N * self.analyze(np.asarray(f(x), dtype=float))[col])

    def moment_residuals(self, index_set=None):
        """``|(u, S*_N x^alpha)| / ||S*_N x^alpha||`` for every samplet and alpha."""
        index_set = index_set or self.index_set
        V = vandermonde(self.tree.points.coords, index_set)
        coeffs = self.analyze(V)[self.n_scaling:]
        norms = np.linalg.norm(V, axis=0) / np.sqrt(self.N)
        return np.abs(coeffs) / np.where(norms > 0, norms, 1.0)

    def check_vanishing_moments(self, index_set=None):
        res = self.moment_residuals(index_set)
        return float(res.max()) if res.size else 0.0

    def to_text(self):
        t = self.tree
        lines = [f"# samplet-basis d={t.dim} J={t.depth} N={t.N} "
                 f"ordering={ORDERING_VERSION} strict={int(self.strict)}",
                 "# indices"]
        lines.extend(",".join(str(v) for v in a) for a in self.index_set)
        lines.append("# permutation")
        lines.append(" ".join(str(int(p)) for p in t.permutation))
        for c in t.clusters:
            f = self.filters[c.id]
            bounds = " ".join(f"{a:.17g} {b:.17g}" for a, b in zip(c.cell.lower, c.cell.upper))
            lines.append(f"# cluster {c.id} {c.level} {c.begin} {c.end} "
                         f"{f.n} {f.m_phi} {f.m_sigma} {f.tau.size} {bounds}")
            lines.append("tau " + " ".join(f"{v:.17g}" for v in f.tau))
            lines.append("signs " + " ".join(f"{v:.17g}" for v in f.signs))
            for row in f.h:
                lines.append(" ".join(f"{v:.17g}" for v in row))
            lines.append("R")
            for row in f.R:
                lines.append(" ".join(f"{v:.17g}" for v in row))
        return "\n".join(lines) + "\n"

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_text())

    @classmethod
    def from_text(cls, text, points=None):
        from .cluster_tree import Cluster
        lines = text.splitlines()
        head = dict(kv.split("=") for kv in lines[0].split()[2:])
        d, J, N = int(head["d"]), int(head["J"]), int(head["N"])
        if int(head["ordering"]) != ORDERING_VERSION:
            raise ConfigError(f"unsupported ordering version {head['ordering']}")
        i = 2
        idx = []
        while not lines[i].startswith("# permutation"):
            idx.append(lines[i])
            i += 1
        iset = parse_index_set("\n".join(idx))
        perm = np.array([int(v) for v in lines[i + 1].split()], dtype=np.int64)
        i += 2
        clusters, filters, frames = [], {}, {}
        while i < len(lines):
            parts = lines[i].split()
            cid, level, begin, end, n, m_phi, m_sigma, k = (int(v) for v in parts[2:10])
            b = [float(v) for v in parts[10:]]
            cell = Cell(tuple(b[0::2]), tuple(b[1::2]), level,
                        None if level == 0 else (level - 1) % d)
            tau = np.array([float(v) for v in lines[i + 1].split()[1:]])
            signs = np.array([float(v) for v in lines[i + 2].split()[1:]])
            h = np.array([[float(v) for v in lines[i + 3 + r].split()] for r in range(n)])
            h = h.reshape(n, k)
            i += 3 + n + 1
            R = np.array([[float(v) for v in lines[i + r].split()] for r in range(k)])
            R = R.reshape(k, len(iset))
            i += k
            children = () if level == J else (2 * cid + 1, 2 * cid + 2)
            clusters.append(Cluster(cid, level, cid - (2 ** level - 1), cell, begin, end,
                                    children))
            filters[cid] = ClusterFilters(cid, n, m_phi, np.asfortranarray(h), tau, signs, R)
            frames[cid] = cell.frame()
        if points is not None and not isinstance(points, PointSet):
            points = PointSet(points)
        tree = ClusterTree(points, J, clusters, perm)
        if tree.N != N:
            raise DimensionError("inconsistent basis file")
        return cls(tree, iset, filters, frames, bool(int(head["strict"])))

    @classmethod
    def load(cls, path, points=None):
        with open(path) as fh:
            return cls.from_text(fh.read(), points)


def build_basis(tree, index_set, strict=True):
    """Bottom-up construction of all cluster filters."""
    if tree.dim != index_set.dim:
        raise DimensionError(f"tree of dimension {tree.dim}, index set of {index_set.dim}")
    if strict:
        for leaf in tree.leaves:
            if leaf.size < len(index_set):
                raise UnderResolvedLeafError(leaf.cell, leaf.size, len(index_set))
    x = tree.tree_points()
    N = tree.N
    filters, frames = {}, {}
    for c in reversed(tree.clusters):
        frame = c.cell.frame()
        frames[c.id] = frame
        if c.is_leaf:
            if c.size == 0:
                # only reachable in best-effort mode
                filters[c.id] = ClusterFilters(c.id, 0, 0, np.zeros((0, 0)), np.zeros(0),
                                               np.zeros(0), np.zeros((0, len(index_set))))
                continue
            M = leaf_moment_matrix(c, index_set, x[c.begin:c.end], N, frame)
            filters[c.id] = cluster_qr(M, strict, leaf=True)
        else:
            kids = [(filters[k], frames[k], index_set) for k in c.children]
            M = internal_moment_matrix(c, kids, frame)
            filters[c.id] = cluster_qr(M, strict)
    return SampletBasis(tree, index_set, filters, frames, strict)


def samplet_basis(points, depth, index_set, strict=True):
    """Convenience: tree plus basis in one call."""
    tree = build_tree(points, depth, min_leaf=len(index_set) if strict else 1)
    return build_basis(tree, index_set, strict)


def analyze(basis, data):
    return basis.analyze(data)


def synthesize(basis, coefficients):
    return basis.synthesize(coefficients)


def check_vanishing_moments(basis, index_set=None):
    return basis.check_vanishing_moments(index_set)


def samplet_action(basis, col, f):
    return basis.samplet_action(col, f)
