"""
Gram matrices and orthogonal polynomial families over multi-index sets.

Every Gram matrix and family carries a :class:`~samplets.geometry.Frame`: the
monomials are ``t**alpha`` with ``t = (x - shift) / scale``. Raw monomials are
badly conditioned on small cells (a degree-6 Hilbert solve already loses nine
digits), so the cell helpers work in the centered cell frame and convert to raw
coefficients only on request.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import (ConfigError, DegenerateConfigurationError, DimensionError,
                     EmptyClusterError)
from .geometry import Cell, Frame
from .index_sets import IndexSet, parse_index_set, vandermonde
from .sampling import as_coords

RCOND_MIN = 1e-14


@dataclass(frozen=True, eq=False)
class GramMatrix:
    index_set: IndexSet
    matrix: np.ndarray
    measure: str
    frame: Frame

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        n = len(self.index_set)
        if m.shape != (n, n):
            raise DimensionError(f"Gram matrix of shape {m.shape} for |Lambda| = {n}")
        m = 0.5 * (m + m.T)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True, eq=False)
class PolynomialFamily:
    """Member ``i`` is ``sum_j coeffs[j, i] * t**alpha_j`` in ``frame``.

    ``coeffs`` is upper triangular with positive diagonal. Monic means a unit
    leading coefficient on the plain monomial ``x**alpha_i``, so the diagonal
    is exactly one in the raw frame.
    """

    index_set: IndexSet
    coeffs: np.ndarray
    frame: Frame
    cell: Cell | None = None
    normalization: str = "monic"
    measure: str = ""

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        n = len(self.index_set)
        if c.shape != (n, n):
            raise DimensionError(f"coefficient matrix of shape {c.shape} for |Lambda| = {n}")
        if self.normalization not in ("monic", "orthonormal"):
            raise ConfigError(f"unknown normalization {self.normalization!r}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def __len__(self):
        return len(self.index_set)

    def evaluate(self, x):
        """Values of all members at the rows of ``x``: shape ``(M, |Lambda|)``."""
        x = as_coords(x) if np.ndim(x) != 1 or self.index_set.dim == 1 \
            else np.asarray(x, dtype=float)[None, :]
        return vandermonde(self.frame.to_local(x), self.index_set) @ self.coeffs

    def in_frame(self, target):
        """Same polynomials expanded in ``target``."""
        c = self.frame.change_matrix(self.index_set, target) @ self.coeffs
        return PolynomialFamily(self.index_set, c, target, self.cell,
                                self.normalization, self.measure)

    def raw_coefficients(self):
        """Coefficients over plain monomials ``x**alpha``."""
        return self.in_frame(Frame.raw(self.index_set.dim)).coeffs

    def to_text(self):
        d = self.index_set.dim
        lines = [f"# family normalization={self.normalization} d={d} n={len(self)}",
                 "# shift " + " ".join(f"{v:.17g}" for v in self.frame.shift),
                 "# scale " + " ".join(f"{v:.17g}" for v in self.frame.scale)]
        if self.cell is not None:
            lines.append("# cell " + " ".join(f"{a:.17g} {b:.17g}"
                                              for a, b in zip(self.cell.lower, self.cell.upper)))
        lines.append("# indices")
        lines.extend(",".join(str(v) for v in a) for a in self.index_set)
        lines.append("# coefficients")
        lines.extend(" ".join(f"{v:.17g}" for v in row) for row in self.coeffs)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        header, shift, scale, cell, idx, rows = {}, None, None, None, [], []
        section = None
        for line in text.splitlines():
            if line.startswith("# family"):
                header = dict(kv.split("=") for kv in line.split()[2:])
            elif line.startswith("# shift"):
                shift = tuple(float(v) for v in line.split()[2:])
            elif line.startswith("# scale"):
                scale = tuple(float(v) for v in line.split()[2:])
            elif line.startswith("# cell"):
                v = [float(s) for s in line.split()[2:]]
                cell = Cell(tuple(v[0::2]), tuple(v[1::2]))
            elif line.startswith("# indices"):
                section = "idx"
            elif line.startswith("# coefficients"):
                section = "coef"
            elif line.strip():
                (idx if section == "idx" else rows).append(line)
        if not header or shift is None or scale is None:
            raise ConfigError("malformed family text")
        iset = parse_index_set("\n".join(idx))
        coeffs = np.array([[float(v) for v in r.split()] for r in rows])
        return cls(iset, coeffs, Frame(shift, scale), cell, header["normalization"])


def gauss_legendre_cell(cell, order):
    """Tensor Gauss-Legendre nodes ``(M, d)`` and weights on ``cell``."""
    t, w = leggauss(order)
    nodes, weights = [], []
    for a, b in zip(cell.lower, cell.upper):
        h = 0.5 * (b - a)
        nodes.append(a + h * (t + 1.0))
        weights.append(h * w)
    grids = np.meshgrid(*nodes, indexing="ij")
    x = np.column_stack([g.ravel() for g in grids])
    wt = weights[0]
    for w_axis in weights[1:]:
        wt = np.multiply.outer(wt, w_axis)
    return x, np.ravel(wt)


def required_order(index_set, extra_degree=0):
    """Smallest Gauss-Legendre order integrating all Gram products exactly."""
    return (2 * index_set.max_total_degree + extra_degree) // 2 + 1


def _frame_for(index_set, frame):
    if frame is None:
        return Frame.raw(index_set.dim)
    if frame.dim != index_set.dim:
        raise DimensionError("frame and index set dimensions differ")
    return frame


def empirical_gram(index_set, points, cell=None, frame=None):
    """Gram matrix under ``(1/N) sum_i`` restricted to the points in ``cell``.

    ``N`` is always the total number of points, so a restricted Gram matrix
    carries the cell mass ``|tau| / N``.
    """
    x = as_coords(points)
    if x.shape[1] != index_set.dim:
        raise DimensionError(f"points of dimension {x.shape[1]}, index set of {index_set.dim}")
    N = x.shape[0]
    frame = _frame_for(index_set, frame)
    if cell is not None:
        x = x[cell.contains(x)]
    if x.shape[0] == 0:
        raise EmptyClusterError(f"no points in {cell if cell is not None else 'the point set'}")
    V = vandermonde(frame.to_local(x), index_set)
    return GramMatrix(index_set, V.T @ V / N, f"empirical(N={N}, n={x.shape[0]}, cell={cell})",
                      frame)


def continuous_gram(index_set, cell, order=None, frame=None, density=None):
    """Lebesgue Gram matrix on ``cell`` by tensor Gauss-Legendre quadrature.

    With a ``density`` (callable on ``(M, d)`` arrays) the measure is
    ``density(x) dx``; exactness then depends on the caller's ``order``.
    """
    if cell.dim != index_set.dim:
        raise DimensionError("cell and index set dimensions differ")
    frame = _frame_for(index_set, frame)
    need = required_order(index_set)
    if order is None:
        order = need
    elif density is None and order < need:
        raise ConfigError(f"quadrature order {order} < {need} needed for exact Gram entries")
    if density is None:
        # separable: G_ij = prod_axis int t^(a_i + a_j) over the axis interval
        t, w = leggauss(order)
        expo = index_set.exponents
        G = np.ones((len(index_set), len(index_set)))
        for axis, (a, b) in enumerate(zip(cell.lower, cell.upper)):
            h = 0.5 * (b - a)
            s = (a + h * (t + 1.0) - frame.shift[axis]) / frame.scale[axis]
            pmax = 2 * int(expo[:, axis].max())
            moments = np.array([np.dot(h * w, s ** p) for p in range(pmax + 1)])
            G *= moments[expo[:, axis][:, None] + expo[:, axis][None, :]]
    else:
        x, wt = gauss_legendre_cell(cell, order)
        V = vandermonde(frame.to_local(x), index_set)
        G = V.T @ (V * (wt * np.asarray(density(x), dtype=float))[:, None])
    return GramMatrix(index_set, G, f"continuous(cell={cell}, order={order})", frame)


def _rcond(A):
    s = np.linalg.svd(A, compute_uv=False)
    return 0.0 if s[0] == 0.0 else s[-1] / s[0]


def monic_orthogonalize(gram, cell=None):
    """Monic orthogonal family from leading-block triangular solves.

    Column ``i`` is ``e_i + [l_i; 0]`` with ``G[:i, :i] l_i = -G[:i, i]``,
    then rescaled so the member is monic in ``x`` rather than in the frame
    coordinate. Raises
    :class:`DegenerateConfigurationError` carrying ``i`` when a leading block
    is numerically singular.
    """
    G = gram.matrix
    n = G.shape[0]
    C = np.eye(n)
    for i in range(1, n + 1):
        if _rcond(G[:i, :i]) < RCOND_MIN:
            raise DegenerateConfigurationError(
                f"leading Gram block of size {i} is singular "
                f"(index {gram.index_set[i - 1]})", index=i - 1)
        if i < n:
            C[:i, i] = np.linalg.solve(G[:i, :i], -G[:i, i])
    # t**alpha = x**alpha / prod(scale**alpha) + lower terms
    lead = np.prod(np.asarray(gram.frame.scale) ** gram.index_set.exponents, axis=1)
    C *= lead
    return PolynomialFamily(gram.index_set, C, gram.frame, cell, "monic", gram.measure)


def orthonormalize(family, gram):
    """Divide each member by its norm under ``gram``'s measure."""
    if family.frame != gram.frame:
        family = family.in_frame(gram.frame)
    C = family.coeffs
    sq = np.einsum("ji,jk,ki->i", C, gram.matrix, C)
    tiny = np.finfo(float).tiny
    bad = np.flatnonzero(~(sq > tiny))
    if bad.size:
        raise DegenerateConfigurationError(
            f"non-positive norm for member {int(bad[0])}", index=int(bad[0]))
    return PolynomialFamily(family.index_set, C / np.sqrt(sq), family.frame, family.cell,
                            "orthonormal", gram.measure)


def eval_family(family, x):
    """Values of all members at a single point ``x``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return family.evaluate(x[None, :])[0]


def discrete_orthonormal(index_set, points, cell=None):
    """Orthonormal family for the (restricted) empirical measure, cell frame."""
    c = cell if cell is not None else Cell.unit(index_set.dim)
    G = empirical_gram(index_set, points, cell, c.frame())
    return orthonormalize(monic_orthogonalize(G, c), G)


def continuous_orthonormal(index_set, cell, density=None, order=None):
    """Orthonormal family for Lebesgue (or ``density``) measure on ``cell``."""
    G = continuous_gram(index_set, cell, order, cell.frame(), density)
    return orthonormalize(monic_orthogonalize(G, cell), G)


def continuous_monic(index_set, cell):
    G = continuous_gram(index_set, cell, frame=cell.frame())
    return monic_orthogonalize(G, cell)


def cell_grid(cell, resolution):
    axes = [np.linspace(a, b, resolution) for a, b in zip(cell.lower, cell.upper)]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([g.ravel() for g in grids])


def family_sup_distance(A, B, resolution=257, cell=None):
    """Grid sup of ``|A_i - s_i B_i|`` with the per-member sign ``s_i`` chosen best."""
    if A.index_set.indices != B.index_set.indices:
        raise ConfigError("families over different index sets")
    cell = cell or A.cell or B.cell
    if cell is None:
        cell = Cell.unit(A.index_set.dim)
    x = cell_grid(cell, resolution)
    a, b = A.evaluate(x), B.evaluate(x)
    plus = np.max(np.abs(a - b), axis=0)
    minus = np.max(np.abs(a + b), axis=0)
    return float(np.max(np.minimum(plus, minus)))
