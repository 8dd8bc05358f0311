"""Command line front end: ``samplets <command> [options]``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .cluster_tree import build_tree, dyadic_cells
from .errors import SampletError
from .experiments import (DEFAULT_DEPTH, ExperimentConfig, kh_rate_check, parse_moments,
                          parse_samples, rate_fit, run_convergence)
from .multiwavelet import (continuous_hierarchy, filter_scale_independence, parity_residual,
                           symmetrize_parity, two_scale_deviation)
from .samplet_transform import SampletBasis, build_basis
from .sampling import PointSet, halton, sample_uniform


def _common(p, samples_default="1024"):
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--moments", default="2", help="k, tp:k or an index-set file")
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--samples", default=samples_default, help="comma list, 2^m allowed")
    p.add_argument("--sampler", choices=("mc", "halton"), default="mc")
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ref-samples", default=None)
    p.add_argument("--out", default=".")
    p.add_argument("--grid", type=int, default=257)


def make_parser():
    ap = argparse.ArgumentParser(prog="samplets", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="construct and serialize a samplet basis")
    _common(p)
    p.add_argument("--points", default=None, help="point file instead of sampling")

    p = sub.add_parser("transform", help="analyze or synthesize a data file")
    p.add_argument("--basis", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--inverse", action="store_true")

    p = sub.add_parser("converge", help="filter convergence against a reference basis")
    _common(p, samples_default="2^10,2^11,2^12,2^13,2^14,2^15,2^16,2^17,2^18")
    p.add_argument("--prefix", default="convergence")
    p.add_argument("--config", default=None, help="key = value file")

    p = sub.add_parser("multiwavelet", help="continuous detail bases, parity and filters")
    _common(p)

    p = sub.add_parser("khcheck", help="coefficient error against star discrepancy (d = 1)")
    _common(p, samples_default=",".join(f"2^{m}" for m in range(6, 17)))

    sub.add_parser("selftest", help="run a quick invariant suite")
    return ap


def _points(args, N):
    if args.sampler == "halton":
        return halton(N, args.dim)
    return sample_uniform(N, args.dim, args.seed, 0)


def cmd_build(args):
    iset = parse_moments(args.moments, args.dim)
    depth = args.depth if args.depth is not None else DEFAULT_DEPTH.get(args.dim, 3)
    if args.points:
        pts = PointSet.load(args.points)
    else:
        pts = _points(args, parse_samples(args.samples)[0])
    tree = build_tree(pts, depth, min_leaf=len(iset))
    basis = build_basis(tree, iset)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    pts.save(out / "points.txt")
    basis.save(out / "basis.txt")
    (out / "tree.txt").write_text(tree.summary_text())
    print(f"N={tree.N} d={tree.dim} J={depth} |Lambda|={len(iset)} "
          f"min_leaf={tree.min_leaf_size} moments={basis.check_vanishing_moments():.3e}")
    return 0


def cmd_transform(args):
    basis = SampletBasis.load(args.basis)
    data = np.loadtxt(args.input, ndmin=1)
    res = basis.synthesize(data) if args.inverse else basis.analyze(data)
    np.savetxt(args.out, res, fmt="%.17g")
    return 0


def cmd_converge(args):
    over = dict(d=args.dim, moments=args.moments, depth=args.depth, sampler=args.sampler,
                runs=args.runs, seed=args.seed, out=args.out, prefix=args.prefix, grid=args.grid,
                samples=args.samples, ref_samples=args.ref_samples)
    if args.config:
        cfg = ExperimentConfig.from_file(args.config, **over)
    else:
        from .experiments import _coerce
        cfg = ExperimentConfig(**_coerce({k: v for k, v in over.items() if v is not None}))
    sd, smp, skipped = run_convergence(cfg)
    for name, recs in (("scaling", sd), ("samplets", smp)):
        for r in recs:
            print(f"{name} {r.line()}")
        if len(recs) >= 3:
            print(f"{name} slope vs min leaf: {rate_fit(recs)[0]:.4f}, "
                  f"vs N: {rate_fit(recs, 'n')[0]:.4f}")
    for N, why in skipped:
        print(f"skipped N={N}: {why}")
    return 0


def cmd_multiwavelet(args):
    iset = parse_moments(args.moments, args.dim)
    depth = args.depth if args.depth is not None else 3
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    details = continuous_hierarchy(args.dim, depth, iset)
    cells = dyadic_cells(args.dim, depth)
    with open(out / "detail_bases.txt", "w") as fh:
        for cid, det in details.items():
            sym = symmetrize_parity(det)
            fh.write(f"# cluster {cid}\n")
            fh.write(sym.to_text())
            print(f"cell {cid}: two-scale {two_scale_deviation(det):.2e} "
                  f"parity {' '.join(sym.labels)} residual {parity_residual(sym):.2e}")
    for axis in range(args.dim):
        same = [cells[i] for i in range(2 ** depth - 1) if cells[i].split_axis == axis]
        print(f"axis {axis}: filter deviation across {len(same)} cells "
              f"{filter_scale_independence(same, iset):.2e}")
    np.savetxt(out / "filter_root.txt", details[0].q, fmt="%.17g")
    return 0


def cmd_khcheck(args):
    runs = args.runs if args.runs is not None else 10
    rows = kh_rate_check(parse_samples(args.samples), int(args.moments), args.sampler, runs,
                         args.seed, args.grid)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "khcheck.txt", "w") as fh:
        for r in rows:
            line = " ".join(f"{v:.16e}" for v in (r.n, r.discrepancy, r.coeff_error,
                                                   r.sup_error, r.ratio))
            fh.write(line + "\n")
            print(line)
    return 0


def cmd_selftest(args):
    from .selftest import run_selftest
    return run_selftest()


COMMANDS = {"build": cmd_build, "transform": cmd_transform, "converge": cmd_converge,
            "multiwavelet": cmd_multiwavelet, "khcheck": cmd_khcheck, "selftest": cmd_selftest}


def main(argv=None):
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except SampletError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
