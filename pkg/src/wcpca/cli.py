"""Command-line surface: ``wcpca fit | simulate | complete``.

fit       estimate a shared frame (baseline or worst-case objective) from a
          long CSV or from exported covariance files, write frame + report.
simulate  run one of the named desk-scale studies, write a long-format CSV.
complete  fit a multi-domain matrix-completion model, optionally reconstruct
          a held-out CSV row by row.

Exit codes: 0 success, 1 numerical failure, 2 input or schema error,
3 invalid configuration. Semantic flag validation happens here so that bad
combinations report code 3; argparse still exits with 2 for unparseable
command lines, which we treat as an input error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from .completion import fit_max_mc, fit_pool_mc, inductive_ols
from .datagen import sample_masks
from .errors import InvalidConfig, NoObservations, WcpcaError, exit_code_for
from .experiments import EXPERIMENTS, ExperimentConfig, run_experiment
from .losses import LossKind, loss, worst_case
from .preprocess import (
    load_covariances,
    load_csv,
    load_masked_csv,
    masked_dataset_from_blocks,
    preprocess,
)
from .rng import make_rng
from .solvers import SolverConfig, avgcov_pca, order_basis, pool_pca, sep_pca, solve_wcpca

__all__ = ["main", "build_parser", "cmd_fit", "cmd_simulate", "cmd_complete"]

_FLOAT_FMT = "%.17g"

_WC_OBJECTIVES = {
    "min": LossKind.VAR,
    "norm-min": LossKind.NORM_VAR,
    "max-rcs": LossKind.RCS,
    "norm-max-rcs": LossKind.NORM_RCS,
    "max-regret": LossKind.REG,
    "norm-max-regret": LossKind.NORM_REG,
}
_BASELINES = {"pool": pool_pca, "sep": sep_pca, "avgcov": avgcov_pca}


def _ensure_out(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def _write_frame(path: str, frame: np.ndarray) -> None:
    np.savetxt(path, np.atleast_2d(frame), delimiter=",", fmt=_FLOAT_FMT)


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_fit(args) -> int:
    """Fit one frame and write frame.csv, report.json, frame_ordered.csv."""
    if (args.csv is None) == (args.from_cov is None):
        raise InvalidConfig("exactly one of --csv or --from-cov is required")
    if args.k is None:
        raise InvalidConfig("--k is required")
    objective = args.objective
    if objective not in _BASELINES and objective not in _WC_OBJECTIVES:
        known = ", ".join([*_BASELINES, *_WC_OBJECTIVES])
        raise InvalidConfig(f"--objective must be one of {known}, got {objective!r}")

    if args.csv is not None:
        collection = preprocess(load_csv(args.csv, args.domain_col)).collection
    else:
        collection, _ = load_covariances(args.from_cov)

    cfg = SolverConfig(seed=args.seed)
    if objective in _BASELINES:
        result = _BASELINES[objective](collection, args.k)
    else:
        result = solve_wcpca(_WC_OBJECTIVES[objective], collection, args.k, cfg)

    out = _ensure_out(args.out)
    frame_path = os.path.join(out, "frame.csv")
    _write_frame(frame_path, result.frame)

    ids = [d.id for d in collection]
    per_domain = {}
    wc = {}
    for kind in LossKind:
        per_domain[kind.value] = [
            loss(kind, result.frame, d.covariance, k=args.k) for d in collection
        ]
        wc[kind.value] = worst_case(kind, result.frame, collection)
    report = {
        "objective": objective,
        "k": args.k,
        "seed": args.seed,
        "objective_value": result.objective,
        "active_domains": sorted(ids[i] for i in result.active_domains),
        "iterations_used": result.iterations_used,
        "restart_index": result.restart_index,
        "domain_ids": ids,
        "per_domain_losses": per_domain,
        "worst_case": wc,
    }
    _write_json(os.path.join(out, "report.json"), report)

    if args.order:
        order_kind = LossKind.NORM_VAR if objective.startswith("norm-") else LossKind.VAR
        ordered = order_basis(order_kind, result.frame, collection, cfg)
        _write_frame(os.path.join(out, "frame_ordered.csv"), ordered)

    print(frame_path)
    return 0


def cmd_simulate(args) -> int:
    """Run one named study; stream long-format rows to <out>/<name>.csv."""
    cfg = ExperimentConfig(
        name=args.name,
        p=args.p,
        n_domains=args.domains,
        alpha=args.alpha,
        beta=args.beta,
        n=args.n,
        k=args.k,
        replicates=args.replicates,
        missing_frac=args.missing_frac,
        paper_scale=args.paper_scale,
        seed=args.seed,
    )
    out = _ensure_out(args.out)
    table_path = os.path.join(out, f"{cfg.name}.csv")
    with open(table_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["replicate", "condition", "method", "metric", "value"])

        def sink(batch):
            # flush after each replicate so long runs leave partial results
            for row in batch:
                writer.writerow(
                    [
                        row["replicate"],
                        row["condition"],
                        row["method"],
                        row["metric"],
                        _FLOAT_FMT % row["value"],
                    ]
                )
            fh.flush()

        run_experiment(cfg, jobs=args.jobs, row_sink=sink)
    print(table_path)
    return 0


def _predict_csv(path: str, domain_col: str, features, r: np.ndarray, out_dir: str) -> str:
    feats, blocks = load_masked_csv(path, domain_col, feature_cols=features)
    pred_path = os.path.join(out_dir, "predictions.csv")
    with open(pred_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([domain_col, *feats])
        for label, (x, mask) in blocks.items():
            for i in range(x.shape[0]):
                if not mask[i].any():
                    raise NoObservations(
                        f"cannot predict row {i} of domain {label!r} in {path}: "
                        "no observed entries"
                    )
                _, recon = inductive_ols(x[i], mask[i], r)
                writer.writerow([label, *(_FLOAT_FMT % v for v in recon)])
    return pred_path


def cmd_complete(args) -> int:
    """Fit a completion model; write right_factor.csv, report.json, predictions."""
    if args.csv is None:
        raise InvalidConfig("--csv is required")
    method = args.objective
    if method not in ("pool", "max"):
        raise InvalidConfig(f"--objective must be pool or max, got {method!r}")
    k = 5 if args.k is None else args.k

    features, blocks = load_masked_csv(args.csv, args.domain_col)
    if args.missing_frac is not None:
        thinned = {}
        for e, (label, (x, mask)) in enumerate(blocks.items()):
            synth = sample_masks(x.shape[0], x.shape[1], args.missing_frac, make_rng(args.seed, e))
            thinned[label] = (x, mask * synth)
        blocks = thinned
    data = masked_dataset_from_blocks(blocks)

    fit = fit_pool_mc if method == "pool" else fit_max_mc
    model = fit(data, k)

    out = _ensure_out(args.out)
    factor_path = os.path.join(out, "right_factor.csv")
    _write_frame(factor_path, model.right_factor)

    per_domain = {}
    for d, l in zip(data, model.left_factors):
        resid = (d.x - l @ model.right_factor.T) * d.mask
        per_domain[d.id] = float((resid * resid).sum() / d.n)
    report = {
        "method": method,
        "k": k,
        "seed": args.seed,
        "rounds": model.rounds,
        "final_objective": float(model.objective_trace[-1]),
        "objective_trace": [float(v) for v in model.objective_trace],
        "unidentifiable_columns": [int(c) for c in model.unidentifiable_columns],
        "per_domain_objective": per_domain,
    }
    _write_json(os.path.join(out, "report.json"), report)

    if args.predict is not None:
        _predict_csv(args.predict, args.domain_col, features, model.right_factor, out)

    print(factor_path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wcpca",
        description="Worst-case PCA and matrix completion across data domains.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit a shared frame on multi-domain data")
    fit.add_argument("--csv", help="long CSV with a domain label column")
    fit.add_argument("--from-cov", dest="from_cov", help="covariance manifest file or directory")
    fit.add_argument("--domain-col", default="domain")
    fit.add_argument("--k", type=int, help="number of components")
    fit.add_argument(
        "--objective",
        help="pool | sep | avgcov | min | norm-min | max-rcs | norm-max-rcs "
        "| max-regret | norm-max-regret",
    )
    fit.add_argument("--order", action="store_true", help="also write a prefix-ordered basis")
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--out", default=".")
    fit.set_defaults(func=cmd_fit)

    sim = sub.add_parser("simulate", help="run one of the named studies")
    sim.add_argument("name", help=" | ".join(EXPERIMENTS))
    sim.add_argument("--p", type=int)
    sim.add_argument("--domains", type=int, default=5)
    sim.add_argument("--alpha", type=float)
    sim.add_argument("--beta", type=float)
    sim.add_argument("--n", type=int)
    sim.add_argument("--k", type=int)
    sim.add_argument("--replicates", type=int)
    sim.add_argument("--missing-frac", type=float, default=0.9)
    sim.add_argument("--paper-scale", action="store_true")
    sim.add_argument("--jobs", type=int, default=1)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", default=".")
    sim.set_defaults(func=cmd_simulate)

    comp = sub.add_parser("complete", help="fit a matrix-completion model")
    comp.add_argument("--csv", help="long CSV; empty cells are treated as missing")
    comp.add_argument("--domain-col", default="domain")
    comp.add_argument("--k", type=int)
    comp.add_argument("--objective", help="pool | max")
    comp.add_argument(
        "--missing-frac",
        type=float,
        default=None,
        help="additionally hide this fraction of entries per row",
    )
    comp.add_argument("--predict", help="held-out CSV to reconstruct row by row")
    comp.add_argument("--seed", type=int, default=0)
    comp.add_argument("--out", default=".")
    comp.set_defaults(func=cmd_complete)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except WcpcaError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exit_code_for(exc)
