"""
Point sets, empirical inner products and discrepancy.

Random streams use numpy's counter-based Philox generator keyed by
``SeedSequence([seed, run])``; this mapping is part of the reproducibility
contract and must not change between versions.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

import numpy as np

from .errors import ConfigError, DimensionError, UnsupportedDimensionError

PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53)


@dataclass(frozen=True, eq=False)
class PointSet:
    """Immutable ``(N, d)`` array of points in the unit cube plus provenance."""

    coords: np.ndarray
    provenance: str = "array"

    def __post_init__(self):
        c = np.array(self.coords, dtype=float, copy=True)
        if c.ndim == 1:
            c = c[:, None]
        if c.ndim != 2:
            raise DimensionError("coordinates must be an (N, d) array")
        if c.size and (c.min() < 0.0 or c.max() > 1.0):
            raise ConfigError("point coordinates must lie in [0, 1]")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @property
    def N(self):
        return self.coords.shape[0]

    @property
    def d(self):
        return self.coords.shape[1]

    def __len__(self):
        return self.N

    def head(self, n):
        return PointSet(self.coords[:n], f"{self.provenance}[:{n}]")

    def save(self, path):
        np.savetxt(path, self.coords, fmt="%.17g")

    @classmethod
    def load(cls, path, d=None):
        data = np.loadtxt(path, dtype=float, ndmin=2)
        if d is not None and data.size == 0:
            data = data.reshape(0, d)
        return cls(data, f"file({Path(path)})")


def as_coords(points):
    if isinstance(points, PointSet):
        return points.coords
    x = np.asarray(points, dtype=float)
    return x[:, None] if x.ndim == 1 else x


def rng_for(seed, run=0):
    """Independent generator for ``(seed, run)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(run)])))


def sample_uniform(N, d, seed, run=0):
    """``N`` i.i.d. uniform points in ``[0, 1]^d``."""
    if N < 0 or d < 1:
        raise ConfigError(f"need N >= 0 and d >= 1, got N={N}, d={d}")
    coords = rng_for(seed, run).random((N, d))
    return PointSet(coords, f"uniform(seed={seed},run={run})")


def sample_custom(sampler, N, d, seed, run=0):
    """Points from a user callback ``sampler(rng, N, d) -> (N, d)`` array."""
    coords = np.asarray(sampler(rng_for(seed, run), N, d), dtype=float).reshape(N, d)
    return PointSet(coords, f"custom(seed={seed},run={run})")


def radical_inverse(n, base):
    """Van der Corput radical inverse of the integers ``n`` in ``base``."""
    n = np.asarray(n, dtype=np.int64).copy()
    out = np.zeros(n.shape)
    f = 1.0 / base
    while np.any(n > 0):
        n, digit = np.divmod(n, base)
        out += digit * f
        f /= base
    return out


def halton(N, d, skip=0):
    """Unscrambled Halton points; point ``i`` uses the integer ``i + 1 + skip``."""
    if d > len(PRIMES):
        raise UnsupportedDimensionError(f"Halton supports d <= {len(PRIMES)}, got {d}")
    if N < 0 or d < 1 or skip < 0:
        raise ConfigError(f"bad Halton request N={N}, d={d}, skip={skip}")
    idx = np.arange(1 + skip, N + 1 + skip, dtype=np.int64)
    coords = np.column_stack([radical_inverse(idx, PRIMES[j]) for j in range(d)]) \
        if N else np.zeros((0, d))
    return PointSet(coords, f"halton(skip={skip})")


def empirical_inner(f, g, points, cell=None):
    """``(1/N) * sum f(x_i) g(x_i)`` over points inside ``cell`` (all if None).

    ``f`` and ``g`` take an ``(M, d)`` array and return ``M`` values.
    """
    x = as_coords(points)
    N = x.shape[0]
    if N == 0:
        raise ConfigError("empirical inner product of an empty point set")
    if cell is not None:
        x = x[cell.contains(x)]
    if x.shape[0] == 0:
        return 0.0
    return float(np.sum(np.asarray(f(x)) * np.asarray(g(x))) / N)


def star_discrepancy_1d(points):
    """Exact star discrepancy of a one-dimensional point set."""
    x = as_coords(points)
    if x.shape[1] != 1:
        raise DimensionError("exact star discrepancy is implemented for d = 1 only")
    N = x.shape[0]
    if N == 0:
        raise ConfigError("star discrepancy of an empty set")
    xs = np.sort(x[:, 0])
    i = np.arange(1, N + 1)
    return float(max(np.max(np.abs(xs - (i - 1) / N)), np.max(np.abs(xs - i / N))))


def star_discrepancy_bracket(points, resolution):
    """Bounds ``(lower, upper)`` on the star discrepancy from an axis grid.

    Anchored boxes with corners on the grid ``k / resolution`` give exact
    local values (lower bound); monotonicity of counts and volumes in each
    grid cell gives the upper bound.
    """
    x = as_coords(points)
    N, d = x.shape
    if resolution < 2:
        raise ConfigError("resolution must be at least 2")
    if N == 0:
        raise ConfigError("star discrepancy of an empty set")
    m = int(resolution)
    # bin b holds points with b/m <= x < (b+1)/m; x == 1 lands in bin m and is
    # never inside [0, t) for t <= 1
    bins = np.minimum(np.floor(x * m).astype(np.int64), m)
    hist = np.zeros((m + 1,) * d)
    np.add.at(hist, tuple(bins.T), 1.0)
    # count[k] = #{x < g_k} with g_k = k/m, k = 0..m
    count = hist[(slice(0, m),) * d]
    for axis in range(d):
        count = np.cumsum(count, axis=axis)
        pad = [(0, 0)] * d
        pad[axis] = (1, 0)
        count = np.pad(count, pad)
    count /= N
    g = np.arange(m + 1) / m
    vol = g
    for _ in range(d - 1):
        vol = np.multiply.outer(vol, g)
    lower = float(np.max(np.abs(count - vol)))
    hi = (slice(1, None),) * d
    lo = (slice(0, -1),) * d
    upper = float(max(np.max(count[hi] - vol[lo]), np.max(vol[hi] - count[lo])))
    return lower, max(upper, lower)


def hk_variation_bound(alpha):
    """Bound on the Hardy-Krause variation of ``x**alpha`` on the unit cube.

    Sums, over non-empty coordinate subsets ``u``, the integral of
    ``|d_u x**alpha|`` with the remaining coordinates pinned at 1. Each
    non-vanishing term integrates to exactly 1.
    """
    alpha = tuple(int(a) for a in alpha)
    total = 0.0
    d = len(alpha)
    for r in range(1, d + 1):
        for u in combinations(range(d), r):
            term = 1.0
            for j in u:
                if alpha[j] == 0:
                    term = 0.0
                    break
                # int_0^1 alpha_j x^(alpha_j - 1) dx = [x^alpha_j]_0^1
                term *= 1.0 ** alpha[j] - 0.0 ** alpha[j]
            total += term
    return total


def hk_polynomial_bound(coeffs, index_set):
    """Triangle-inequality bound for ``sum c_j x**alpha_j`` (raw monomials)."""
    return float(sum(abs(c) * hk_variation_bound(a) for c, a in zip(coeffs, index_set)))
