"""Command-line entry point: ``clthres <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import exponents
from .core import ForestModel, PairwiseDist
from .datasets import DatasetSpec, beta_profile, cross_validate_beta, load_dataset
from .estimation import read_samples_csv, write_samples_csv
from .harness import ExperimentConfig, PROFILES, kl_decay, mc_error_sweep, write_csv
from .learning import RegSchedule, clthres
from .synthgen import SeededRng, StarForestSpec, build_random_forest, build_star_forest, sample


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text):
    return [int(v) for v in text.split(",") if v.strip()]


def cmd_generate(args):
    if args.topology == "star":
        model = build_star_forest(StarForestSpec(args.d, args.k, args.crossover))
    else:
        model = build_random_forest(args.d, args.k, args.r, SeededRng(args.seed, 0).generator())
    s = sample(model, args.n, SeededRng(args.seed, 1))
    write_samples_csv(s, args.out, header=args.header)
    if args.model_out:
        Path(args.model_out).write_text(model.to_json(indent=2))
    return 0


def cmd_learn(args):
    s = read_samples_csv(args.input, header=args.header, r=args.r)
    sched = RegSchedule.oracle(args.oracle_eps) if args.oracle_eps else RegSchedule.power(args.beta)
    learned = clthres(s, sched)
    Path(args.output).write_text(learned.model.to_json(indent=2))
    if args.ranking:
        scale = 1.0 / math.log(2) if args.bits else 1.0
        with open(args.ranking, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["rank", "i", "j", "mi_bits" if args.bits else "mi_nats", "kept"])
            for rank, ((i, j), mi) in enumerate(zip(learned.ranking.edges, learned.ranking.scores), 1):
                w.writerow([rank, i, j, repr(mi * scale), int(rank <= learned.k_hat)])
    print(f"n={s.n} d={s.d} eps={learned.eps:.6g} k_hat={learned.k_hat}", file=sys.stderr)
    return 0


def _load_dist(path) -> PairwiseDist:
    doc = json.loads(Path(path).read_text())
    return PairwiseDist(doc["table"] if isinstance(doc, dict) else doc)


def _rate_json(res: exponents.RateFunctionResult) -> dict:
    return {
        "value": res.value,
        "argmin": res.argmin.table.tolist(),
        "diagnostics": {
            "iterations": res.iterations,
            "grad_norm": res.grad_norm,
            "globally_certified": res.certified,
        },
        **({"surrogate": res.surrogate} if res.surrogate is not None else {}),
    }


def cmd_exponents(args):
    which = args.which
    if which == "converse":
        b = exponents.converse_sample_bound(args.d, args.k, args.r, args.rho)
        out = {"value": b._asdict()}
    elif which == "counts":
        out = {"value": exponents.forest_count_bounds(args.d, args.k)._asdict()}
    else:
        if not args.dist:
            raise SystemExit("--dist is required for this computation")
        p = _load_dist(args.dist)
        if which == "mu-star":
            out = {"value": exponents.mu_star(p)}
        elif which == "under":
            out = _rate_json(exponents.underestimation_rate(p, args.a))
        elif which == "over":
            if args.b is None:
                raise SystemExit("--b is required for 'over'")
            out = _rate_json(exponents.overestimation_rate(p, args.b))
        else:
            if not args.q:
                raise SystemExit("--q is required for 'euclid'")
            out = {"value": exponents.euclidean_kl_approx(p, _load_dist(args.q))._asdict()}
    print(json.dumps(out, indent=2))
    return 0


def _config(args) -> ExperimentConfig:
    doc = dict(PROFILES[args.profile]) if args.profile else {}
    if args.config:
        doc.update(json.loads(Path(args.config).read_text()))
    for key in ("trials", "seed", "out_dir"):
        if getattr(args, key) is not None:
            doc[key] = getattr(args, key)
    if args.n:
        doc["ns"] = _ints(args.n)
    if args.beta:
        doc["betas"] = [b if b == "oracle" else float(b) for b in args.beta.split(",")]
    return ExperimentConfig.from_dict(doc)


def cmd_mc_error(args):
    res = mc_error_sweep(_config(args))
    _print_rows(res.summary, ["n", "beta", "trials", "p_error", "p_over", "p_under", "p_top_k_wrong"])
    return 0


def cmd_kl_decay(args):
    res = kl_decay(_config(args))
    _print_rows(res.rows, ["n", "mean", "min", "max"])
    print(f"slope={res.slope:.4f}")
    return 0


def _dataset_spec(args) -> DatasetSpec:
    types = ["continuous" if t.strip() in ("c", "continuous") else "categorical"
             for t in args.types.split(",")]
    return DatasetSpec(args.data, types, header=not args.no_header,
                       train_fraction=args.train_fraction, seed=args.seed,
                       train_count=args.train_count, test_count=args.test_count)


def cmd_loglik(args):
    train, test, _ = load_dataset(_dataset_spec(args))
    rows = beta_profile(train, test, _floats(args.betas))
    if args.output:
        write_csv(rows, args.output)
    _print_rows(rows, list(rows[0].keys()))
    return 0


def cmd_cv_beta(args):
    train, _, _ = load_dataset(_dataset_spec(args))
    res = cross_validate_beta(train, args.folds, _floats(args.betas), seed=args.seed)
    if args.output:
        write_csv(res.table, args.output)
    for b, m in res.mean_scores.items():
        print(f"beta={b:g} mean_heldout_ll={m:.6f}")
    print(f"chosen beta={res.beta:g}")
    return 0


def _print_rows(rows, cols):
    print("\t".join(cols))
    for row in rows:
        print("\t".join(f"{row[c]:.6g}" if isinstance(row[c], float) else str(row[c]) for c in cols))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="clthres", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sample from a synthetic forest model")
    g.add_argument("--topology", choices=["star", "random"], default="star")
    g.add_argument("--d", type=int, required=True)
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--crossover", type=float, default=0.3)
    g.add_argument("--r", type=int, default=2)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--model-out")
    g.add_argument("--header", action="store_true")
    g.set_defaults(func=cmd_generate)

    lr = sub.add_parser("learn", help="run CLThres on a samples CSV")
    lr.add_argument("--input", required=True)
    lr.add_argument("--beta", type=float, default=0.625)
    lr.add_argument("--oracle-eps", type=float)
    lr.add_argument("--output", required=True)
    lr.add_argument("--ranking")
    lr.add_argument("--header", action="store_true")
    lr.add_argument("--r", type=int)
    lr.add_argument("--bits", action="store_true", help="report MI in bits")
    lr.set_defaults(func=cmd_learn)

    ex = sub.add_parser("exponents", help="rate functions and sample-complexity bounds")
    ex.add_argument("--which", required=True,
                    choices=["mu-star", "under", "over", "euclid", "converse", "counts"])
    ex.add_argument("--dist")
    ex.add_argument("--q")
    ex.add_argument("--a", type=float, default=0.0)
    ex.add_argument("--b", type=float)
    ex.add_argument("--d", type=int)
    ex.add_argument("--k", type=int)
    ex.add_argument("--r", type=int, default=2)
    ex.add_argument("--rho", type=float, default=1.0)
    ex.set_defaults(func=cmd_exponents)

    for name, func in (("mc-error", cmd_mc_error), ("kl-decay", cmd_kl_decay)):
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON file with ExperimentConfig keys")
        p.add_argument("--profile", choices=sorted(PROFILES))
        p.add_argument("--trials", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--n", help="comma-separated sample sizes")
        p.add_argument("--beta", help="comma-separated betas; 'oracle' allowed")
        p.add_argument("--out-dir", dest="out_dir")
        p.set_defaults(func=func)

    for name, func in (("loglik", cmd_loglik), ("cv-beta", cmd_cv_beta)):
        p = sub.add_parser(name)
        p.add_argument("--data", required=True)
        p.add_argument("--types", required=True,
                       help="comma-separated column tags: c/continuous or k/categorical")
        p.add_argument("--no-header", action="store_true")
        p.add_argument("--train-fraction", type=float, default=0.8)
        p.add_argument("--train-count", type=int)
        p.add_argument("--test-count", type=int)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--betas", default="0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")
        p.add_argument("--output")
        if name == "cv-beta":
            p.add_argument("--folds", type=int, default=5)
        p.set_defaults(func=func)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
