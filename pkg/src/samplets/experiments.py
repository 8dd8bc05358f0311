"""
Convergence experiments for discrete samplet filters.

Filters of a basis built on ``N`` samples are compared, cluster by cluster,
with those of a reference basis on many more samples. Clusters are matched by
cell, which the fixed dyadic partition makes possible for any two point sets.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, fields
from math import comb
from pathlib import Path

import numpy as np

from .cluster_tree import build_tree
from .errors import (ConfigError, TreeMismatchError, UnderResolvedLeafError)
from .geometry import Cell, Frame
from .index_sets import IndexSet, parse_index_set, tensor_set, total_degree_set
from .ortho_poly import (PolynomialFamily, empirical_gram, family_sup_distance,
                         monic_orthogonalize)
from .samplet_transform import build_basis
from .sampling import halton, sample_uniform, star_discrepancy_1d

log = logging.getLogger(__name__)

DEFAULT_DEPTH = {1: 8, 2: 4, 3: 3}
REFERENCE_RUN = 2 ** 31 - 1  # stream index reserved for the MC reference set


def parse_moments(spec, d):
    """``"k"`` -> total degree, ``"tp:k"`` -> tensor product, else an index-set file."""
    if isinstance(spec, IndexSet):
        return spec
    spec = str(spec).strip()
    if spec.isdigit():
        return total_degree_set(d, int(spec))
    if spec.startswith("tp:") and spec[3:].isdigit():
        return tensor_set(d, int(spec[3:]))
    path = Path(spec)
    if not path.exists():
        raise ConfigError(f"moments {spec!r} is neither a degree nor an index-set file")
    iset = parse_index_set(path.read_text())
    if iset.dim != d:
        raise ConfigError(f"index set file has dimension {iset.dim}, expected {d}")
    return iset


def parse_samples(text):
    """Comma list of sample counts; ``2^m`` is accepted for powers of two."""
    out = []
    for tok in str(text).split(","):
        tok = tok.strip()
        if not tok:
            continue
        if "^" in tok:
            b, e = tok.split("^")
            out.append(int(b) ** int(e))
        else:
            out.append(int(tok))
    if any(n <= 0 for n in out):
        raise ConfigError("sample counts must be positive")
    return out


@dataclass
class ExperimentConfig:
    d: int = 1
    moments: str = "2"
    depth: int | None = None
    samples: list = field(default_factory=lambda: [2 ** m for m in range(10, 19)])
    sampler: str = "mc"
    runs: int = 10
    seed: int = 0
    ref_samples: int = 2 ** 22
    out: str = "."
    prefix: str = "convergence"
    grid: int = 257

    def __post_init__(self):
        if self.depth is None:
            self.depth = DEFAULT_DEPTH.get(self.d, 3)
        if self.sampler not in ("mc", "halton"):
            raise ConfigError(f"unknown sampler {self.sampler!r}")
        if self.sampler == "halton":
            self.runs = 1
        if self.runs < 1:
            raise ConfigError("runs must be positive")
        self.samples = sorted(int(n) for n in self.samples)
        if not self.samples:
            raise ConfigError("no sample counts given")
        if self.ref_samples <= self.samples[-1]:
            raise ConfigError(f"ref_samples={self.ref_samples} must exceed max N={self.samples[-1]}")

    @property
    def index_set(self):
        return parse_moments(self.moments, self.d)

    @classmethod
    def from_file(cls, path, **overrides):
        """Read ``key = value`` lines; ``#`` starts a comment."""
        kw = {}
        names = {f.name for f in fields(cls)}
        for line in Path(path).read_text().splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"bad config line {line!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in names:
                raise ConfigError(f"unknown config key {key!r}")
            kw[key] = val
        kw.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**_coerce(kw))


def _coerce(kw):
    out = dict(kw)
    for key in ("d", "depth", "runs", "seed", "ref_samples", "grid"):
        if key in out and isinstance(out[key], str):
            out[key] = parse_samples(out[key])[0] if "^" in out[key] else int(out[key])
    if isinstance(out.get("samples"), str):
        out["samples"] = parse_samples(out["samples"])
    return out


@dataclass(frozen=True)
class ConvergenceRecord:
    n: int
    min_leaf: float
    mean: float
    std: float

    def line(self):
        return " ".join(f"{v:.16e}" for v in (self.n, self.min_leaf, self.mean, self.std))


def draw(config, N, run):
    if config.sampler == "halton":
        return halton(N, config.d)
    return sample_uniform(N, config.d, config.seed, run)


def projection_error(basis, reference, which="sigma"):
    """Per-cluster ``||Q - P_ref Q||_F / ||Q_ref||_F`` and its mean over non-leaves.

    ``which`` selects the scaling (``"phi"``) or samplet (``"sigma"``) block.
    """
    if which not in ("phi", "sigma"):
        raise ConfigError(f"which must be 'phi' or 'sigma', got {which!r}")
    t, r = basis.tree, reference.tree
    if not t.same_partition(r) or basis.index_set.indices != reference.index_set.indices:
        raise TreeMismatchError("bases differ in dimension, depth, cells or index set")
    errors = {}
    for c in t.non_leaves:
        f, g = basis.filters[c.id], reference.filters[c.id]
        if f.n != g.n:
            raise TreeMismatchError(f"cluster {c.id}: filter sizes {f.n} and {g.n}")
        Q, Qr = (f.q_phi, g.q_phi) if which == "phi" else (f.q_sigma, g.q_sigma)
        den = np.linalg.norm(Qr)
        errors[c.id] = float(np.linalg.norm(Q - Qr @ (Qr.T @ Q)) / den) if den > 0 else 0.0
    mean = float(np.mean(list(errors.values()))) if errors else 0.0
    return errors, mean


def _basis_for(points, config, iset):
    tree = build_tree(points, config.depth, min_leaf=len(iset))
    return build_basis(tree, iset)


def write_records(path, records):
    with open(path, "w") as fh:
        for rec in records:
            fh.write(rec.line() + "\n")


def read_records(path):
    data = np.loadtxt(path, ndmin=2)
    return [ConvergenceRecord(int(round(r[0])), float(r[1]), float(r[2]), float(r[3]))
            for r in data]


def run_convergence(config, write=True):
    """Errors of the scaling and samplet filters against a reference basis.

    Returns ``(sd_records, smp_records, skipped)`` where ``skipped`` lists
    ``(N, reason)`` for sample counts with an under-resolved leaf.
    """
    iset = config.index_set
    ref_points = draw(config, config.ref_samples, REFERENCE_RUN)
    reference = _basis_for(ref_points, config, iset)
    sd, smp, skipped, leaves = [], [], [], []
    for N in config.samples:
        e_phi, e_sig, mins = [], [], []
        try:
            for run in range(config.runs):
                basis = _basis_for(draw(config, N, run), config, iset)
                e_phi.append(projection_error(basis, reference, "phi")[1])
                e_sig.append(projection_error(basis, reference, "sigma")[1])
                mins.append(basis.tree.min_leaf_size)
        except UnderResolvedLeafError as exc:
            log.warning("skipping N=%d: %s", N, exc)
            skipped.append((N, str(exc)))
            continue
        ml = float(np.mean(mins))
        ddof = 1 if config.runs > 1 else 0
        sd.append(ConvergenceRecord(N, ml, float(np.mean(e_phi)), float(np.std(e_phi, ddof=ddof))))
        smp.append(ConvergenceRecord(N, ml, float(np.mean(e_sig)), float(np.std(e_sig, ddof=ddof))))
        leaves.append((N, mins))
    if write:
        out = Path(config.out)
        out.mkdir(parents=True, exist_ok=True)
        write_records(out / f"{config.prefix}_sd.txt", sd)
        write_records(out / f"{config.prefix}_smp.txt", smp)
        with open(out / f"{config.prefix}_leaves.txt", "w") as fh:
            for N, mins in leaves:
                fh.write(" ".join(str(int(v)) for v in [N, *mins]) + "\n")
        if skipped:
            with open(out / f"{config.prefix}_skipped.txt", "w") as fh:
                for N, reason in skipped:
                    fh.write(f"{N} {reason}\n")
    return sd, smp, skipped


def read_leaves(path):
    rows = []
    for line in Path(path).read_text().splitlines():
        vals = [int(v) for v in line.split()]
        rows.append((vals[0], vals[1:]))
    return rows


def rate_fit(records, x="min_leaf"):
    """Least-squares ``(slope, intercept)`` of log mean error against log ``x``."""
    pts = [(getattr(r, x), r.mean) for r in records if r.mean > 0 and getattr(r, x) > 0]
    if len(pts) < 3:
        raise ConfigError(f"rate fit needs at least 3 positive records, got {len(pts)}")
    xs, ys = np.log(np.array(pts, dtype=float)).T
    slope, intercept = np.polyfit(xs, ys, 1)
    return float(slope), float(intercept)


def shifted_legendre_monic(k):
    """Raw monomial coefficients of the monic Lebesgue-orthogonal family on [0, 1]."""
    C = np.zeros((k + 1, k + 1))
    for n in range(k + 1):
        for j in range(n + 1):
            C[j, n] = (-1) ** (n + j) * comb(n, j) * comb(n + j, j) / comb(2 * n, n)
    return C


@dataclass(frozen=True)
class KHRow:
    n: int
    discrepancy: float
    coeff_error: float
    sup_error: float

    @property
    def ratio(self):
        return self.coeff_error / self.discrepancy


def kh_rate_check(samples, k=2, sampler="halton", runs=1, seed=0, grid=1025):
    """Monic coefficient error against exact discrepancy, d = 1.

    In MC mode every column is the mean over ``runs`` independent draws.
    """
    iset = total_degree_set(1, k)
    exact = shifted_legendre_monic(k)
    unit = Cell.unit(1)
    raw = Frame.raw(1)
    ref = PolynomialFamily(iset, exact, raw, unit, "monic")
    runs = 1 if sampler == "halton" else runs
    rows = []
    for N in samples:
        if N < len(iset):
            raise ConfigError(f"N={N} is below |Lambda|={len(iset)}")
        acc = []
        for run in range(runs):
            pts = halton(N, 1) if sampler == "halton" else sample_uniform(N, 1, seed, run)
            fam = monic_orthogonalize(empirical_gram(iset, pts, None, unit.frame()), unit)
            fam = fam.in_frame(raw)
            err = float(np.linalg.norm(fam.coeffs - exact))
            acc.append((star_discrepancy_1d(pts), err, family_sup_distance(fam, ref, grid)))
        disc, err, sup = np.mean(acc, axis=0)
        rows.append(KHRow(N, float(disc), float(err), float(sup)))
    return rows
