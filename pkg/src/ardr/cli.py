"""Command-line entry point: ``ardr run|generate|metrics|compare``."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .datasets import SYNTHETIC_KINDS, generate, read_csv, write_csv
from .experiment import compare, load_config, run_experiment
from .metrics import eq8_ratio, knn_accuracy, preservation_profile


def _cmd_run(args):
    cfg = load_config(args.config, args.override)
    if args.outputs is not None:
        cfg.outputs = args.outputs
    res = run_experiment(cfg)
    print(f"wrote {cfg.outputs} ({cfg.scheme}, n={res.embedding.shape[0]})")


def _cmd_generate(args):
    params = json.loads(args.params) if args.params else {}
    if not isinstance(params, dict):
        raise ValueError("--params must be a JSON object")
    X, labels = generate(args.kind, args.n, args.seed, **params)
    write_csv(args.out, X, labels)
    print(f"wrote {args.out} ({X.shape[0]}x{X.shape[1]}{', labels in last column' if labels is not None else ''})")


def _cmd_metrics(args):
    X, xl = read_csv(args.x, args.label_column)
    Y, _ = read_csv(args.y)
    labels = xl
    if args.labels is not None:
        labels, _ = read_csv(args.labels)
        labels = labels[:, 0].astype(np.int64) if labels.shape[1] == 1 else None
        if labels is None:
            raise ValueError("--labels file must have exactly one column")
    out = {}
    if labels is not None:
        out["knn_accuracy"] = knn_accuracy(Y, labels, args.k)
    P = preservation_profile(X, Y, args.kmax)
    out["preservation_by_k"] = {str(i + 1): float(b) for i, b in enumerate(P)}
    out["eq8_ratios"] = [[l, m, eq8_ratio(X, Y, l, m, profile=P)] for l, m in ((2, 5), (6, 10)) if m <= args.kmax]
    print(json.dumps(out, sort_keys=True, indent=2))


def _cmd_compare(args):
    a = load_config(args.config_a, args.override)
    b = load_config(args.config_b, args.override)
    print(json.dumps(compare(a, b), sort_keys=True, indent=2))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ardr", description="attraction/repulsion dimensionality reduction")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one experiment from a JSON config")
    r.add_argument("config")
    r.add_argument("--outputs", help="output directory (overrides the config)")
    r.add_argument("--override", action="append", default=[], metavar="KEY=JSON",
                   help="override a config key; dotted keys reach nested objects")
    r.set_defaults(func=_cmd_run)

    g = sub.add_parser("generate", help="write a synthetic dataset as CSV")
    g.add_argument("kind", choices=SYNTHETIC_KINDS)
    g.add_argument("--n", type=int, default=1000)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--params", help="generator parameters as a JSON object")
    g.set_defaults(func=_cmd_generate)

    m = sub.add_parser("metrics", help="score an embedding against its input")
    m.add_argument("--x", required=True, help="input data CSV")
    m.add_argument("--y", required=True, help="embedding CSV")
    m.add_argument("--labels", help="one-column CSV of integer labels")
    m.add_argument("--label-column", type=int, help="label column inside --x")
    m.add_argument("--k", type=int, default=15, help="neighbors for the k-NN classifier")
    m.add_argument("--kmax", type=int, default=10, help="largest neighbor rank for preservation")
    m.set_defaults(func=_cmd_metrics)

    c = sub.add_parser("compare", help="run two configs and compare their metrics")
    c.add_argument("config_a")
    c.add_argument("config_b")
    c.add_argument("--override", action="append", default=[], metavar="KEY=JSON",
                   help="override applied to both configs")
    c.set_defaults(func=_cmd_compare)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except Exception as exc:  # every failure becomes one diagnostic line
        msg = " ".join(str(exc).split()) or type(exc).__name__
        print(f"ardr {args.command}: error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
