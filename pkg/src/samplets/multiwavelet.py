"""
Continuous counterpart of the samplet construction on dyadic cells.

Broken polynomials live on the two children of a parent cell. Each child
carries its Lebesgue-orthonormal family (in the child's centered frame), and
a detail basis is a ``2|Lambda| x 2|Lambda|`` orthogonal matrix ``Q`` in the
coordinates of those two families, obtained by QR of the transposed
continuous moment matrix. Moments are taken against centered parent-frame
monomials, which is what makes the filters identical on congruent cells.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .cluster_tree import dyadic_cells
from .errors import ConfigError, DegenerateConfigurationError, GeometryError, TreeMismatchError
from .geometry import Cell, Frame
from .index_sets import IndexSet, total_degree_set, vandermonde
from .ortho_poly import (PolynomialFamily, cell_grid, continuous_orthonormal,
                         gauss_legendre_cell)

NULL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class BrokenPolynomial:
    """Sum of polynomial pieces, each restricted to its (disjoint) cell."""

    index_set: IndexSet
    pieces: tuple  # of (cell, frame, coefficient vector)

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[:, None] if self.index_set.dim == 1 else x[None, :]
        out = np.zeros(x.shape[0])
        for cell, frame, c in self.pieces:
            mask = cell.contains(x)
            if mask.any():
                out[mask] = vandermonde(frame.to_local(x[mask]), self.index_set) @ c
        return out

    def __call__(self, x):
        return self.evaluate(x)

    def integrate(self, g, order):
        """``int g(x) p(x) dx`` over the pieces; ``g`` maps ``(M, d) -> (M, ...)``."""
        total = 0.0
        for cell, frame, c in self.pieces:
            x, w = gauss_legendre_cell(cell, order)
            p = vandermonde(frame.to_local(x), self.index_set) @ c
            gx = np.asarray(g(x), dtype=float)
            total = total + np.tensordot(w * p, gx, axes=(0, 0))
        return total

    def to_text(self):
        lines = [f"# broken-polynomial pieces={len(self.pieces)}"]
        for cell, frame, c in self.pieces:
            lines.append("piece " + " ".join(f"{a:.17g} {b:.17g}"
                                             for a, b in zip(cell.lower, cell.upper)))
            lines.append(" ".join(f"{v:.17g}" for v in c))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Reflection:
    """Mirror across ``x[axis] = offset``; ``half_width`` is the parent's."""

    axis: int
    offset: float
    half_width: float

    @classmethod
    def for_cell(cls, cell, axis=None):
        axis = cell.split_axis if axis is None else axis
        return cls(axis, cell.center[axis], cell.half_widths[axis])

    def __call__(self, x):
        y = np.array(x, dtype=float, copy=True)
        y[..., self.axis] = 2.0 * self.offset - y[..., self.axis]
        return y

    def centered(self, x):
        """Coordinate ``t_o = (x_o - offset) / half_width`` along the axis."""
        return (np.asarray(x)[..., self.axis] - self.offset) / self.half_width


@dataclass(frozen=True, eq=False)
class DetailBasis:
    """Scaling functions ``phi`` and multiwavelets ``sigma`` of one parent cell.

    Column ``m`` of ``q`` gives member ``m`` in the coordinates of the
    concatenated child families (child 1 first).
    """

    parent: Cell
    children: tuple
    index_set: IndexSet
    child_families: tuple
    q: np.ndarray
    m_phi: int
    labels: tuple = ()
    R: np.ndarray | None = field(default=None, repr=False)

    @property
    def q_phi(self):
        return self.q[:, :self.m_phi]

    @property
    def q_sigma(self):
        return self.q[:, self.m_phi:]

    def _member(self, col):
        n = len(self.index_set)
        pieces = []
        for k, (cell, fam) in enumerate(zip(self.children, self.child_families)):
            c = fam.coeffs @ col[k * n:(k + 1) * n]
            pieces.append((cell, fam.frame, c))
        return BrokenPolynomial(self.index_set, tuple(pieces))

    @property
    def phi(self):
        return [self._member(c) for c in self.q_phi.T]

    @property
    def sigma(self):
        return [self._member(c) for c in self.q_sigma.T]

    def child_values(self, x):
        """``(M, 2|Lambda|)`` values of the child families (zero off their cell)."""
        n = len(self.index_set)
        out = np.zeros((np.shape(x)[0], 2 * n))
        for k, (cell, fam) in enumerate(zip(self.children, self.child_families)):
            mask = cell.contains(x)
            if mask.any():
                out[mask, k * n:(k + 1) * n] = fam.evaluate(x[mask])
        return out

    def values(self, x):
        """``(M, 2|Lambda|)`` values of ``[phi, sigma]``."""
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        return self.child_values(x) @ self.q

    def quadrature(self, extra_degree=0):
        order = self.index_set.max_total_degree + 1 + (extra_degree + 1) // 2
        xs, ws = zip(*(gauss_legendre_cell(c, order) for c in self.children))
        return np.vstack(xs), np.concatenate(ws)

    def gram(self):
        """Lebesgue Gram matrix of ``[phi, sigma]`` by quadrature."""
        x, w = self.quadrature()
        V = self.values(x)
        return V.T @ (w[:, None] * V)

    def moments(self, index_set=None, frame=None):
        """``int t**alpha g dx`` for all members ``g``; rows follow ``index_set``."""
        index_set = index_set or self.index_set
        frame = frame or self.parent.frame()
        x, w = self.quadrature(index_set.max_total_degree)
        P = vandermonde(frame.to_local(x), index_set)
        return P.T @ (w[:, None] * self.values(x))

    def to_text(self):
        lines = [f"# detail-basis d={self.parent.dim} n={len(self.index_set)} "
                 f"m_phi={self.m_phi}",
                 "# parent " + " ".join(f"{a:.17g} {b:.17g}"
                                        for a, b in zip(self.parent.lower, self.parent.upper)),
                 "# indices"]
        lines.extend(",".join(str(v) for v in a) for a in self.index_set)
        if self.labels:
            lines.append("# labels " + " ".join(self.labels))
        lines.append("# q")
        lines.extend(" ".join(f"{v:.17g}" for v in row) for row in self.q)
        for k, fam in enumerate(self.child_families):
            lines.append(f"# child {k + 1}")
            lines.append(fam.to_text().rstrip("\n"))
        return "\n".join(lines) + "\n"


def cell_orthonormal(cell, index_set):
    """Lebesgue-orthonormal polynomials on ``cell`` (centered cell frame)."""
    return continuous_orthonormal(index_set, cell)


def _check_tiling(parent, children):
    if len(children) != 2:
        raise GeometryError("a parent cell needs exactly two children")
    for axis in range(parent.dim):
        lo, up = parent.split(axis)
        if (children[0].lower, children[0].upper) == (lo.lower, lo.upper) and \
                (children[1].lower, children[1].upper) == (up.lower, up.upper):
            return axis
    raise GeometryError(f"children do not bisect {parent}")


def continuous_moment_matrix(parent, child_families, frame=None):
    """``|Lambda| x 2|Lambda|`` moments ``int t**alpha_i pihat_l`` (child 1 first)."""
    children = tuple(f.cell for f in child_families)
    _check_tiling(parent, children)
    index_set = child_families[0].index_set
    frame = frame or parent.frame()
    order = index_set.max_total_degree + 1
    blocks = []
    for fam in child_families:
        x, w = gauss_legendre_cell(fam.cell, order)
        V = vandermonde(frame.to_local(x), index_set)
        blocks.append(V.T @ (w[:, None] * fam.evaluate(x)))
    return np.hstack(blocks)


def coarsen(parent, child_families, index_set=None):
    """Detail basis of ``parent`` from QR of the transposed moment matrix."""
    index_set = index_set or child_families[0].index_set
    M = continuous_moment_matrix(parent, child_families)
    Q, R = scipy.linalg.qr(M.T)
    n = len(index_set)
    signs = np.where(np.diag(R) < 0.0, -1.0, 1.0)
    Q[:, :n] *= signs
    R = signs[:, None] * R[:n]
    if np.min(np.abs(np.diag(R))) <= 1e-12 * np.max(np.abs(R)):
        raise DegenerateConfigurationError(f"continuous moment matrix of {parent} is rank deficient")
    return DetailBasis(parent, tuple(f.cell for f in child_families), index_set,
                       tuple(child_families), Q, n, R=R)


def detail_basis(parent, index_set, axis=None):
    """Children families plus :func:`coarsen` for one parent cell."""
    kids = parent.split(axis)
    fams = tuple(cell_orthonormal(c, index_set) for c in kids)
    return coarsen(parent, fams, index_set)


def reflection_matrix(detail, reflection):
    """Matrix of ``g -> g o rho`` in child-family coordinates."""
    x, w = detail.quadrature()
    B = detail.child_values(x)
    B_rho = detail.child_values(reflection(x))
    return B.T @ (w[:, None] * B_rho)


def _canonical_group(detail, G, parity):
    """Fixed orthonormal basis of ``span(G)`` ordered by first nonzero moment."""
    r = G.shape[1]
    if r == 0:
        return G
    d = detail.index_set.dim
    # each parity group sees only about half the monomials, so the panel
    # must reach well past the degree of the index set
    top = detail.index_set.max_total_degree + 2 * r + 1
    extra = [b for b in total_degree_set(d, top) if b not in detail.index_set]
    panel = IndexSet(d, tuple(extra))
    x, w = detail.quadrature(panel.max_total_degree)
    P = vandermonde(detail.parent.frame().to_local(x), panel)
    H = P.T @ (w[:, None] * (detail.child_values(x) @ G))  # |panel| x r
    picked, basis = [], np.zeros((0, r))
    for i, row in enumerate(H):
        if len(picked) == r:
            break
        rest = row - basis.T @ (basis @ row) if basis.size else row
        if np.linalg.norm(rest) > 1e-8 * max(1.0, np.linalg.norm(row)):
            picked.append(i)
            basis = np.vstack([basis, rest / np.linalg.norm(rest)])
    if len(picked) < r:
        raise DegenerateConfigurationError(f"cannot canonicalize {parity} group of {detail.parent}")
    O, Rm = scipy.linalg.qr(H[picked].T)
    O = O * np.where(np.diag(Rm) < 0.0, -1.0, 1.0)
    return G @ O


def symmetrize_parity(detail, reflection=None):
    """Split the multiwavelets into odd and even parts under the reflection.

    Returns a new :class:`DetailBasis` whose multiwavelets are ordered odd
    group first, then even, each labelled.
    """
    reflection = reflection or Reflection.for_cell(detail.parent)
    axis = _check_tiling(detail.parent, detail.children)
    if axis != reflection.axis or reflection.offset != detail.parent.center[axis]:
        raise GeometryError("reflection does not swap the two children")
    Rm = reflection_matrix(detail, reflection)
    I = np.eye(Rm.shape[0])
    groups, labels = [], []
    for parity, sign in (("odd", -1.0), ("even", 1.0)):
        S = 0.5 * (I + sign * Rm) @ detail.q_sigma
        Qp, Rp, _ = scipy.linalg.qr(S, pivoting=True)
        rank = int(np.sum(np.abs(np.diag(Rp)) > NULL_TOL))
        G = _canonical_group(detail, Qp[:, :rank], parity)
        groups.append(G)
        labels.extend([parity] * rank)
    q_sigma = np.hstack(groups)
    if q_sigma.shape[1] != detail.q_sigma.shape[1]:
        raise DegenerateConfigurationError(
            f"parity split found {q_sigma.shape[1]} members, expected {detail.q_sigma.shape[1]}")
    q = np.hstack([detail.q_phi, q_sigma])
    return DetailBasis(detail.parent, detail.children, detail.index_set, detail.child_families,
                       q, detail.m_phi, tuple(labels), detail.R)


def parity_residual(detail, reflection=None, resolution=64):
    """Max of ``|s(rho x) - p s(x)|`` over an interior grid, ``p = -1`` for odd."""
    reflection = reflection or Reflection.for_cell(detail.parent)
    if not detail.labels:
        raise ConfigError("detail basis has no parity labels")
    axes = [a + (np.arange(resolution) + 0.5) * (b - a) / resolution
            for a, b in zip(detail.parent.lower, detail.parent.upper)]
    x = np.column_stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")])
    V = detail.values(x)[:, detail.m_phi:]
    Vr = detail.values(reflection(x))[:, detail.m_phi:]
    p = np.array([-1.0 if s == "odd" else 1.0 for s in detail.labels])
    return float(np.max(np.abs(Vr - p * V))) if V.size else 0.0


def align_columns(A, B):
    """``B`` with each column sign-flipped to best match ``A``."""
    s = np.where(np.sum(A * B, axis=0) < 0.0, -1.0, 1.0)
    return B * s


def filter_scale_independence(cells, index_set):
    """Max entrywise deviation between the ``Q`` filters of congruent cells."""
    cells = list(cells)
    axes = {c.split_axis for c in cells}
    if len(axes) != 1:
        raise GeometryError("cells are split along different axes")
    qs = [detail_basis(c, index_set).q for c in cells]
    ref = qs[0]
    return float(max(np.max(np.abs(ref - align_columns(ref, q))) for q in qs))


def continuous_hierarchy(d, J, index_set):
    """Detail bases for every non-leaf cell of the depth-``J`` partition."""
    cells = dyadic_cells(d, J)
    return {cid: detail_basis(cells[cid], index_set) for cid in range(2 ** J - 1)}


def two_scale_deviation(detail):
    """Coefficient gap between ``phi`` and the parent's own orthonormal family.

    Both are expanded piecewise in the child frames; signs are aligned per
    member.
    """
    direct = cell_orthonormal(detail.parent, detail.index_set)
    worst = 0.0
    for cell, fam, (lo, hi) in zip(detail.children, detail.child_families,
                                   ((0, len(detail.index_set)),
                                    (len(detail.index_set), 2 * len(detail.index_set)))):
        phi_c = fam.coeffs @ detail.q_phi[lo:hi]
        ref = direct.in_frame(fam.frame).coeffs
        worst = max(worst, float(np.max(np.abs(ref - align_columns(ref, phi_c)))))
    return worst


def limit_compare(basis, details, level, panel_degree=None):
    """Discrete vs continuous actions on a monomial panel for clusters at ``level``.

    Discrete actions are ``sigma(x**beta) / N`` (the analysis coefficients);
    continuous ones are Lebesgue integrals of the detail basis members. The
    continuous columns are rotated onto the discrete ones blockwise with
    ``Q_cont^T Q_disc`` so that sign and in-span choices do not count.
    Returns ``{cluster_id: max discrepancy}``.
    """
    tree = basis.tree
    if level >= tree.depth:
        raise ConfigError("limit_compare needs non-leaf clusters")
    iset = basis.index_set
    panel = total_degree_set(iset.dim, panel_degree if panel_degree is not None
                             else iset.max_total_degree + 2)
    V = vandermonde(tree.points.coords, panel)
    coeffs, scal = basis._forward(V, keep=True)
    out = {}
    n = len(iset)
    raw = Frame.raw(iset.dim)
    for c in tree.clusters_at_level(level):
        if c.id not in details:
            raise TreeMismatchError(f"no continuous detail basis for cluster {c.id}")
        det = details[c.id]
        if (det.parent.lower, det.parent.upper) != (c.cell.lower, c.cell.upper):
            raise TreeMismatchError(f"cluster {c.id} cell differs from {det.parent}")
        f = basis.filters[c.id]
        off = basis.offsets[c.id]
        A_disc = np.hstack([scal[c.id].T, coeffs[off:off + f.m_sigma].T])
        A_cont = det.moments(panel, raw)
        Qd = f.Q
        W = np.zeros((2 * n, f.n))
        W[:n, :f.m_phi] = det.q_phi.T @ Qd[:, :f.m_phi]
        W[n:, f.m_phi:] = det.q_sigma.T @ Qd[:, f.m_phi:]
        out[c.id] = float(np.max(np.abs(A_disc - A_cont @ W)))
    return out


def project_function(f, depth, index_set, order=None):
    """L2 projection of ``f`` onto broken polynomials on the depth-``n`` leaves.

    Returns the projection and the quadrature L2 error on the unit cube.
    """
    d = index_set.dim
    order = order or max(index_set.max_total_degree + 1, 16)
    leaves = dyadic_cells(d, depth)[2 ** depth - 1:]
    pieces, err2 = [], 0.0
    for cell in leaves:
        fam = cell_orthonormal(cell, index_set)
        x, w = gauss_legendre_cell(cell, order)
        fx = np.asarray(f(x), dtype=float).reshape(-1)
        P = fam.evaluate(x)
        c = P.T @ (w * fx)
        r = fx - P @ c
        err2 += float(np.dot(w, r * r))
        pieces.append((cell, fam.frame, fam.coeffs @ c))
    return BrokenPolynomial(index_set, tuple(pieces)), float(np.sqrt(err2))


def write_plot_data(poly, path, resolution=257, cell=None):
    """Write ``x value`` (1D) or ``x y value`` (2D slice at the other axes' centers)."""
    d = poly.index_set.dim
    cell = cell or Cell.unit(d)
    if d == 1:
        x = cell_grid(cell, resolution)
    else:
        axes = [np.linspace(a, b, resolution) for a, b in zip(cell.lower[:2], cell.upper[:2])]
        g = np.meshgrid(*axes, indexing="ij")
        x = np.tile(np.asarray(cell.center), (g[0].size, 1))
        x[:, 0], x[:, 1] = g[0].ravel(), g[1].ravel()
    vals = poly.evaluate(x)
    cols = x[:, :min(d, 2)]
    np.savetxt(path, np.column_stack([cols, vals]), fmt="%.17g")
