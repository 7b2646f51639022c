"""Command line interface: ``ucode train|eval|oracle|synth``.

Exit codes: 0 on success, 1 for bad input, 2 for numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import logging
import os
import platform
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .assignment import hard_assign, overlap_assign, threshold_p1
from .data import (DataFormatError, DatasetBundle, SbmConfig, builtin, load_bundle,
                   read_cover, read_labels, sbm_generate, save_bundle, write_cover,
                   write_features, write_labels)
from .gcn import save_checkpoint
from .graph import GraphValidationError
from .loss import LossConfig, fixed_derangement
from .oracle import GridSpec, OracleBudgetError, bowtie_references, config_sweep, exhaustive_min, sweep_to_csv
from .partition import Cover, Partition
from .trainer import TrainConfig, TrainingError, evaluate, evaluate_assignment, predict_membership, train

logger = logging.getLogger("ucode")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2


class UsageError(ValueError):
    pass


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _write_manifest(out: Path, command: str, config: dict, inputs, outputs, started: float):
    manifest = {
        "command": command,
        "version": __version__,
        "config": config,
        "seed": config.get("seed"),
        "inputs": {str(p): _sha256(p) for p in inputs if p},
        "outputs": sorted(str(p) for p in outputs),
        "wall_time_seconds": round(time.perf_counter() - started, 6),
        "platform": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "cpu_count": os.cpu_count(),
            "threads": {k: os.environ.get(k) for k in
                        ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")},
        },
    }
    path = out / "manifest.json"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _load_graph(args):
    if args.builtin:
        return builtin(args.builtin), []
    if not args.edges:
        raise UsageError("one of --edges or --builtin is required")
    b = DatasetBundle(args.edges, getattr(args, "features", None),
                      getattr(args, "labels", None), getattr(args, "cover", None))
    return load_bundle(b), [b.edges, b.features, b.labels, b.cover]


def _add_graph_args(p):
    p.add_argument("--edges", help="edge list (u<TAB>v per line)")
    p.add_argument("--features", help="node features, one CSV row per node")
    p.add_argument("--builtin", choices=["bowtie", "triangle"], help="use a builtin graph")


def _str2bool(v):
    if isinstance(v, bool):
        return v
    if v.lower() in ("1", "true", "yes", "on"):
        return True
    if v.lower() in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {v!r}")


def _build_parser():
    parser = argparse.ArgumentParser(prog="ucode", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    d = TrainConfig()
    t = sub.add_parser("train", help="train on a graph and write assignments")
    _add_graph_args(t)
    t.add_argument("--labels", help="ground-truth labels, one per node")
    t.add_argument("--cover", help="ground-truth cover (community<TAB>node)")
    t.add_argument("--k", type=int, default=d.k)
    t.add_argument("--epochs", type=int, default=d.epochs)
    t.add_argument("--lr", type=float, default=d.lr)
    t.add_argument("--hidden", type=int, default=d.hidden)
    t.add_argument("--weight-decay", type=float, default=d.weight_decay)
    t.add_argument("--delta", type=float, default=d.delta)
    t.add_argument("--seed", type=int, default=d.seed)
    t.add_argument("--amplify", type=_str2bool, nargs="?", const=True, default=d.amplify)
    t.add_argument("--perm-policy", choices=["resample_each_epoch", "fixed_derangement"],
                   default=d.perm_policy)
    t.add_argument("--dropout", type=float, default=d.dropout)
    t.add_argument("--qm-norm", choices=["paper_quarter", "standard_half", "none"], default=d.qm_norm)
    t.add_argument("--overlap", type=_str2bool, nargs="?", const=True, default=False,
                   help="also write an overlapping cover")
    t.add_argument("--raw", action="store_true", help="report metrics in [0, 1] instead of percent")
    t.add_argument("--config", help="INI file of key = value defaults")
    t.add_argument("--manifest", help="re-run the configuration recorded in a manifest")
    t.add_argument("--out", required=False, help="output directory")

    e = sub.add_parser("eval", help="score predictions against ground truth")
    e.add_argument("--pred", required=True, help="labels.txt or cover.tsv")
    e.add_argument("--truth", required=True, help="labels.txt or cover.tsv")
    e.add_argument("--mode", choices=["hard", "overlap"], default="hard")
    _add_graph_args(e)
    e.add_argument("--json", help="also write the report as JSON to this path")
    e.add_argument("--raw", action="store_true")
    e.add_argument("--config", help="INI file of key = value defaults")

    o = sub.add_parser("oracle", help="exhaustive loss minimization on a tiny graph")
    _add_graph_args(o)
    o.add_argument("--k", type=int, default=2)
    o.add_argument("--levels", default="0,0.5,1")
    o.add_argument("--delta", type=float, default=0.0)
    o.add_argument("--amplify", type=_str2bool, nargs="?", const=True, default=False)
    o.add_argument("--qm-norm", choices=["none", "standard_half", "paper_quarter"], default="none")
    o.add_argument("--top", type=int, default=20)
    o.add_argument("--budget", type=int, default=GridSpec().budget)
    o.add_argument("--config", help="INI file of key = value defaults")
    o.add_argument("--out", help="directory for ranked.csv, sweep.csv and the manifest")

    s = sub.add_parser("synth", help="write a planted-partition dataset")
    ds = SbmConfig()
    s.add_argument("--n", type=int, default=ds.n)
    s.add_argument("--k", type=int, default=ds.k_planted)
    s.add_argument("--p-in", type=float, default=ds.p_in)
    s.add_argument("--p-out", type=float, default=ds.p_out)
    s.add_argument("--overlap", type=float, default=ds.overlap_fraction)
    s.add_argument("--feature-dim", type=int, default=ds.feature_dim)
    s.add_argument("--separation", type=float, default=ds.feature_separation)
    s.add_argument("--seed", type=int, default=ds.seed)
    s.add_argument("--config", help="INI file of key = value defaults")
    s.add_argument("--out", required=True)
    return parser


def _read_config(path) -> dict:
    parser = configparser.ConfigParser()
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if not text.lstrip().startswith("["):
        text = "[ucode]\n" + text
    parser.read_string(text)
    out = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            out[key.replace("-", "_")] = value
    return out


def _apply_defaults(parser, argv):
    """Layer defaults: builtin < manifest < config file < command-line flags."""
    args, _ = parser.parse_known_args(argv)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest: a for a in sub._actions}
    layered = {}
    manifest = getattr(args, "manifest", None)
    if manifest:
        with open(manifest, encoding="utf-8") as fh:
            layered.update(json.load(fh)["config"])
        layered.pop("manifest", None)
    if getattr(args, "config", None):
        layered.update(_read_config(args.config))
    defaults = {}
    for key, value in layered.items():
        action = known.get(key)
        if action is None:
            raise UsageError(f"unknown configuration key {key!r}")
        if isinstance(value, str) and action.type is not None:
            value = action.type(value)
        defaults[key] = value
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def _resolved(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("verbose", "config", "manifest", "command")}


def cmd_train(args) -> int:
    started = time.perf_counter()
    if not args.out:
        raise UsageError("--out is required")
    g, inputs = _load_graph(args)
    cfg = TrainConfig(epochs=args.epochs, lr=args.lr, hidden=args.hidden, k=args.k,
                      delta=args.delta, weight_decay=args.weight_decay, seed=args.seed,
                      amplify=args.amplify, perm_policy=args.perm_policy,
                      dropout=args.dropout, qm_norm=args.qm_norm)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    params, history = train(g, cfg)
    c = predict_membership(g, params)
    outputs = [out / n for n in ("membership.csv", "labels.txt", "checkpoint.json",
                                 "history.csv", "timings.csv")]
    write_features(outputs[0], c)
    labels = hard_assign(c)
    write_labels(outputs[1], labels)
    save_checkpoint(params, outputs[2], extra={"config": asdict(cfg)})
    history.to_csv(outputs[3])
    history.timings_to_csv(outputs[4])
    if args.overlap:
        cover = overlap_assign(c, threshold_p1(c))
        outputs.append(out / "cover.tsv")
        write_cover(outputs[-1], cover, g.node_labels)
    if g.ground_truth is not None:
        mode = "overlap" if isinstance(g.ground_truth, Cover) else "hard"
        report = evaluate(g, c, g.ground_truth, mode, 1.0 if args.raw else 100.0)
        outputs.append(out / "metrics.json")
        outputs[-1].write_text(report.to_json() + "\n", encoding="utf-8")
        print(report.to_table())
    first, last = history.records[0], history.records[-1]
    print(f"trained {cfg.epochs} epochs: loss {first.loss:.4f} -> {last.loss:.4f}, "
          f"modularity {last.modularity:.4f}", file=sys.stderr)
    _write_manifest(out, "train", _resolved(args), inputs, outputs, started)
    return EXIT_OK


def _read_assignment(path, n=None):
    """Labels file (one integer per line) or cover file (two columns)."""
    with open(path, encoding="utf-8") as fh:
        first = next((ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")), "")
    if len(first.split()) == 2:
        return read_cover(path, n)
    return read_labels(path)


def cmd_eval(args) -> int:
    g = None
    if args.builtin or args.edges:
        g, _ = _load_graph(args)
    truth = _read_assignment(args.truth, g.n if g else None)
    pred = _read_assignment(args.pred, truth.n)
    n_truth, n_pred = truth.n, pred.n
    if isinstance(pred, Cover) and isinstance(truth, Cover):
        n_pred = max(n_pred, truth.n)
    if n_truth != n_pred or (g is not None and g.n != n_truth):
        counts = f"prediction has {n_pred} nodes, truth has {n_truth}"
        if g is not None:
            counts += f", graph has {g.n}"
        raise UsageError(f"node count mismatch: {counts}")
    scale = 1.0 if args.raw else 100.0
    if args.mode == "hard":
        if isinstance(pred, Cover) or isinstance(truth, Cover):
            raise UsageError("hard mode needs label files for both --pred and --truth")
        report = evaluate_assignment(g, truth, labels=pred, mode="hard", scale=scale)
    else:
        cover = pred if isinstance(pred, Cover) else pred.to_cover()
        cover = Cover(cover.sets, truth.n)
        labels = pred if isinstance(pred, Partition) else None
        truth_cover = truth if isinstance(truth, Cover) else truth.to_cover()
        report = evaluate_assignment(g, truth_cover, labels=labels, cover=cover,
                                     mode="overlap", scale=scale)
    print(report.to_table())
    if args.json:
        Path(args.json).write_text(report.to_json() + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_oracle(args) -> int:
    started = time.perf_counter()
    g, inputs = _load_graph(args)
    try:
        levels = tuple(float(v) for v in args.levels.split(","))
    except ValueError:
        raise UsageError(f"--levels must be comma-separated numbers, got {args.levels!r}") from None
    grid = GridSpec(levels=levels, k=args.k, budget=args.budget)
    perm = fixed_derangement(args.k)
    cfg = LossConfig(delta=args.delta, amplify=args.amplify, qm_norm=args.qm_norm,
                     perm_policy="fixed_derangement")
    result = exhaustive_min(g, grid, cfg, perm, top=args.top)
    ranked = result.to_csv()
    sys.stdout.write(ranked)
    references = bowtie_references() if args.builtin == "bowtie" and args.k == 2 else None
    sweep = config_sweep(g, grid, perm, references, qm_norms=(args.qm_norm,))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "ranked.csv").write_text(ranked, encoding="utf-8")
        (out / "sweep.csv").write_text(sweep_to_csv(sweep), encoding="utf-8")
        _write_manifest(out, "oracle", _resolved(args), inputs,
                        [out / "ranked.csv", out / "sweep.csv"], started)
    else:
        sys.stderr.write(sweep_to_csv(sweep))
    return EXIT_OK


def cmd_synth(args) -> int:
    started = time.perf_counter()
    cfg = SbmConfig(n=args.n, k_planted=args.k, p_in=args.p_in, p_out=args.p_out,
                    overlap_fraction=args.overlap, feature_dim=args.feature_dim,
                    feature_separation=args.separation, seed=args.seed)
    g = sbm_generate(cfg)
    out = Path(args.out)
    b = save_bundle(g, out)
    truth = g.ground_truth
    labels = out / "labels.txt"
    cover = out / "cover.tsv"
    if isinstance(truth, Partition):
        write_cover(cover, truth.to_cover())
    else:
        # primary community per node: the lowest-indexed set containing it
        primary = hard_assign(truth.membership_matrix())
        write_labels(labels, primary)
    _write_manifest(out, "synth", _resolved(args), [],
                    [b.edges, b.features, labels, cover], started)
    print(f"wrote {g.n} nodes, {g.n_edges} edges to {out}", file=sys.stderr)
    return EXIT_OK


COMMANDS = {"train": cmd_train, "eval": cmd_eval, "oracle": cmd_oracle, "synth": cmd_synth}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = _apply_defaults(parser, argv)
    except (UsageError, OSError, ValueError, KeyError) as exc:
        print(f"ucode: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except TrainingError as exc:
        print(f"ucode: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except FloatingPointError as exc:
        print(f"ucode: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, DataFormatError, GraphValidationError, OracleBudgetError,
            OSError, ValueError) as exc:
        print(f"ucode: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
