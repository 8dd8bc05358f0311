"""Fast invariant checks run by ``samplets selftest``."""
from __future__ import annotations

import numpy as np

from .geometry import Cell
from .index_sets import total_degree_set
from .multiwavelet import continuous_hierarchy, symmetrize_parity, two_scale_deviation
from .ortho_poly import continuous_monic
from .samplet_transform import samplet_basis
from .sampling import halton, sample_uniform


def _checks():
    iset = total_degree_set(2, 2)
    basis = samplet_basis(sample_uniform(1024, 2, 7), 3, iset)
    U = basis.dense_matrix()
    yield "orthogonality", float(np.abs(U.T @ U - np.eye(basis.N)).max()), 1e-10
    yield "vanishing moments", basis.check_vanishing_moments(), 1e-10
    v = np.random.default_rng(0).standard_normal(basis.N)
    yield "roundtrip", float(np.abs(basis.synthesize(basis.analyze(v)) - v).max()), 1e-10
    fam = continuous_monic(total_degree_set(1, 2), Cell.unit(1)).raw_coefficients()
    yield "monic family", float(np.abs(fam[:, 2] - [1 / 6, -1, 1]).max()), 1e-12
    det = continuous_hierarchy(1, 2, total_degree_set(1, 1))
    yield "two-scale", max(two_scale_deviation(d) for d in det.values()), 1e-10
    sym = symmetrize_parity(det[0])
    yield "parity count", float(abs(len(sym.labels) - 2)), 0.5
    b1 = samplet_basis(halton(512, 1), 3, total_degree_set(1, 2))
    yield "halton moments", b1.check_vanishing_moments(), 1e-10


def run_selftest():
    ok = True
    for name, value, tol in _checks():
        passed = value < tol
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'} {name}: {value:.3e} (< {tol:.0e})")
    return 0 if ok else 1
