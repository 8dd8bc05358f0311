"""Dyadic cells of the unit cube and affine monomial frames."""
from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import DimensionError


@dataclass(frozen=True)
class Cell:
    """Axis-aligned sub-box of ``[0, 1]^d``.

    Cells are half-open ``[lower, upper)`` except on the global upper faces
    ``x_i = 1``, which are closed, so the cells of one level tile the cube.
    ``axis`` records the split that created the cell (``None`` for the root).
    """

    lower: tuple
    upper: tuple
    level: int = 0
    axis: int | None = None

    @classmethod
    def unit(cls, d):
        return cls((0.0,) * d, (1.0,) * d, 0, None)

    @property
    def dim(self):
        return len(self.lower)

    @property
    def center(self):
        return tuple(0.5 * (a + b) for a, b in zip(self.lower, self.upper))

    @property
    def half_widths(self):
        return tuple(0.5 * (b - a) for a, b in zip(self.lower, self.upper))

    @property
    def volume(self):
        return float(np.prod([b - a for a, b in zip(self.lower, self.upper)]))

    @property
    def split_axis(self):
        """Axis along which this cell is bisected (round-robin by level)."""
        return self.level % self.dim

    def split(self, axis=None):
        """Return the (lower, upper) halves across the center hyperplane."""
        if axis is None:
            axis = self.split_axis
        mid = self.center[axis]
        up1 = list(self.upper)
        up1[axis] = mid
        lo2 = list(self.lower)
        lo2[axis] = mid
        return (Cell(self.lower, tuple(up1), self.level + 1, axis),
                Cell(tuple(lo2), self.upper, self.level + 1, axis))

    def contains(self, x):
        """Boolean mask over the rows of ``x`` (or a scalar for one point)."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        x = np.atleast_2d(x)
        if x.shape[1] != self.dim:
            raise DimensionError(f"points of dimension {x.shape[1]}, cell of {self.dim}")
        lo = np.asarray(self.lower)
        up = np.asarray(self.upper)
        inside = (x >= lo) & ((x < up) | ((up == 1.0) & (x == 1.0)))
        mask = inside.all(axis=1)
        return bool(mask[0]) if single else mask

    def frame(self):
        """Centered, scaled frame mapping this cell onto ``[-1, 1]^d``."""
        return Frame(self.center, self.half_widths)

    def __str__(self):
        box = " x ".join(f"[{a:.6g},{b:.6g}]" for a, b in zip(self.lower, self.upper))
        return f"cell(level={self.level}, {box})"


@dataclass(frozen=True)
class Frame:
    """Affine coordinates ``t = (x - shift) / scale`` used to expand polynomials.

    Polynomials are stored as coefficient vectors over ``t**alpha``. The raw
    frame (shift 0, scale 1) gives plain monomials ``x**alpha``.
    """

    shift: tuple
    scale: tuple

    @classmethod
    def raw(cls, d):
        return cls((0.0,) * d, (1.0,) * d)

    @property
    def dim(self):
        return len(self.shift)

    @property
    def is_raw(self):
        return all(s == 0.0 for s in self.shift) and all(s == 1.0 for s in self.scale)

    def to_local(self, x):
        x = np.asarray(x, dtype=float)
        return (x - np.asarray(self.shift)) / np.asarray(self.scale)

    def change_matrix(self, index_set, target):
        """Matrix ``T`` with ``coeffs_target = T @ coeffs_self``.

        Writes ``t_self = a + b * t_target`` per axis and expands binomially;
        ``T`` is upper triangular in graded-lex order because the index set
        is downward closed.
        """
        if target.dim != self.dim or index_set.dim != self.dim:
            raise DimensionError("frame/index-set dimension mismatch")
        a = [(ts - s) / c for s, c, ts in zip(self.shift, self.scale, target.shift)]
        b = [tc / c for c, tc in zip(self.scale, target.scale)]
        n = len(index_set)
        T = np.zeros((n, n))
        for col, beta in enumerate(index_set):
            factors = []
            for axis, e in enumerate(beta):
                factors.append([comb(e, g) * a[axis] ** (e - g) * b[axis] ** g
                                for g in range(e + 1)])
            for gamma in np.ndindex(*[e + 1 for e in beta]):
                val = 1.0
                for axis, g in enumerate(gamma):
                    val *= factors[axis][g]
                T[index_set.position(tuple(int(g) for g in gamma)), col] += val
        return T
