"""
Multi-index sets.

Multi-indices are plain tuples of non-negative ints. An :class:`IndexSet` is an
immutable, graded-lexicographically sorted, downward closed collection of them;
its order fixes the order of monomials everywhere else in the package.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, IndexSetError

MultiIndex = tuple

MAX_EXPONENT = 62


def graded_lex_key(alpha):
    """Sort key: total degree first, then compare from the last coordinate."""
    return (sum(alpha), tuple(reversed(alpha)))


def graded_lex_compare(a, b):
    """Return -1, 0 or 1 as ``a`` is less than, equal to or greater than ``b``."""
    if len(a) != len(b):
        raise DimensionError(f"multi-indices of length {len(a)} and {len(b)}")
    ka, kb = graded_lex_key(a), graded_lex_key(b)
    return (ka > kb) - (ka < kb)


def validate_downward_closed(indices):
    """True iff ``indices`` is non-empty, contains zero and is downward closed."""
    members = {tuple(int(v) for v in a) for a in indices}
    if not members:
        return False
    dims = {len(a) for a in members}
    if len(dims) != 1:
        raise DimensionError("multi-indices of mixed length")
    d = dims.pop()
    if (0,) * d not in members:
        return False
    # checking the immediate predecessors suffices by induction
    for a in members:
        for i in range(d):
            if a[i] > 0:
                b = a[:i] + (a[i] - 1,) + a[i + 1:]
                if b not in members:
                    return False
    return True


@dataclass(frozen=True)
class IndexSet:
    """Ordered downward closed multi-index set.

    Use :func:`total_degree_set`, :func:`tensor_set` or :func:`custom_set`
    rather than the constructor.
    """

    dim: int
    indices: tuple
    kind: str = "custom"
    degree: int | None = None
    _position: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_position",
                           {a: i for i, a in enumerate(self.indices)})

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __getitem__(self, i):
        return self.indices[i]

    def __contains__(self, alpha):
        return tuple(alpha) in self._position

    def position(self, alpha):
        return self._position[tuple(alpha)]

    @property
    def exponents(self):
        """``(len, dim)`` integer array of the ordered multi-indices."""
        return np.array(self.indices, dtype=np.int64).reshape(len(self), self.dim)

    @property
    def max_total_degree(self):
        return max(sum(a) for a in self.indices)

    @property
    def max_exponents(self):
        return tuple(int(v) for v in self.exponents.max(axis=0))

    def prefix(self, r):
        return custom_set(self.indices[:r])

    def to_text(self):
        return "\n".join(",".join(str(v) for v in a) for a in self.indices) + "\n"

    def __str__(self):
        if self.kind == "total-degree":
            return f"Lambda_{self.degree}(d={self.dim})"
        if self.kind == "tensor-product":
            return f"Lambda^tp_{self.degree}(d={self.dim})"
        return f"custom(d={self.dim}, n={len(self)})"


def _check_exponents(indices):
    for a in indices:
        if any(v < 0 for v in a):
            raise IndexSetError(f"negative exponent in {a}")
        if any(v > MAX_EXPONENT for v in a):
            raise IndexSetError(f"exponent above {MAX_EXPONENT} in {a}")


def total_degree_set(d, k):
    """All multi-indices with modulus at most ``k``; size ``C(k+d, d)``."""
    if d < 1 or k < 0:
        raise IndexSetError(f"need d >= 1 and k >= 0, got d={d}, k={k}")
    indices = [a for a in itertools.product(range(k + 1), repeat=d) if sum(a) <= k]
    _check_exponents(indices)
    return IndexSet(d, tuple(sorted(indices, key=graded_lex_key)),
                    "total-degree", k)


def tensor_set(d, k):
    """All multi-indices with every entry at most ``k``; size ``(k+1)**d``."""
    if d < 1 or k < 0:
        raise IndexSetError(f"need d >= 1 and k >= 0, got d={d}, k={k}")
    indices = list(itertools.product(range(k + 1), repeat=d))
    _check_exponents(indices)
    return IndexSet(d, tuple(sorted(indices, key=graded_lex_key)),
                    "tensor-product", k)


def custom_set(indices: Iterable[Sequence[int]]):
    """Sort a user-supplied set; reject it unless it is downward closed."""
    members = []
    seen = set()
    for a in indices:
        a = tuple(int(v) for v in a)
        if a not in seen:
            seen.add(a)
            members.append(a)
    if not members:
        raise IndexSetError("empty index set")
    _check_exponents(members)
    if not validate_downward_closed(members):
        raise IndexSetError("index set is not downward closed or lacks the zero index")
    return IndexSet(len(members[0]), tuple(sorted(members, key=graded_lex_key)))


def parse_index_set(text):
    """Parse one comma-separated multi-index per line; ``#`` starts a comment."""
    rows = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            rows.append(tuple(int(v) for v in line.split(",")))
    return custom_set(rows)


def monomial_eval(alpha, x):
    """``x**alpha`` for a single point, with ``0**0 == 1``."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != len(alpha):
        raise DimensionError(f"point of dimension {x.shape[-1]} vs index {alpha}")
    return float(np.prod([x[i] ** int(a) for i, a in enumerate(alpha)]))


def vandermonde(points, index_set):
    """Generalized Vandermonde matrix ``[x_i**alpha_j]`` of shape ``(N, |index_set|)``."""
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None] if index_set.dim == 1 else x[None, :]
    if x.shape[1] != index_set.dim:
        raise DimensionError(f"points of dimension {x.shape[1]}, index set of {index_set.dim}")
    expo = index_set.exponents
    out = np.ones((x.shape[0], len(index_set)))
    for axis in range(index_set.dim):
        pmax = int(expo[:, axis].max())
        if pmax == 0:
            continue
        powers = np.empty((pmax + 1, x.shape[0]))
        powers[0] = 1.0
        for p in range(1, pmax + 1):
            powers[p] = powers[p - 1] * x[:, axis]
        out *= powers[expo[:, axis]].T
    return out
