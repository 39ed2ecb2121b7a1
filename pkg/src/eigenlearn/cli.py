"""Command-line interface.

One binary, subcommand style. Configuration comes from a JSON file (same
object syntax as a dataset record) with a handful of override flags so runs
stay reproducible; progress goes to stderr and data only to files, written
atomically.

Exit codes: 0 success, 1 domain error (bad record, bad config, missing file),
2 usage error.
"""

import argparse
import json
import logging
import sys

import numpy as np

from . import train as tr
from .data import atomic_write_text, dumps_graph, load_dataset
from .eigen import eigendecompose
from .errors import EigenlearnError, InvalidParams
from .graphs import GRAPH_KINDS, Graph, build_laplacian, generate_graph
from .invariants import run_all_checks
from .wavelets import FeatureConfig, augment_features

log = logging.getLogger("eigenlearn")


def _load_config(path: str | None, overrides: dict) -> tr.PretrainConfig:
    raw = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise InvalidParams("config file must hold a single JSON object")
    raw.update({k: v for k, v in overrides.items() if v is not None})
    return tr.config_from_dict(raw)


def _feature_config(path: str | None, seed: int | None) -> FeatureConfig:
    raw = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    allowed = {"use_wavelet_positional", "use_diffused_dirac", "scales_J",
               "dirac_seed", "keep_original_features"}
    unknown = set(raw) - allowed
    if unknown:
        raise InvalidParams(f"unknown feature config fields: {sorted(unknown)}")
    if seed is not None:
        raw["dirac_seed"] = seed
    return FeatureConfig(**raw)


def cmd_gen_data(args) -> int:
    rng = np.random.default_rng(args.seed)
    kinds = args.kinds.split(",")
    for kind in kinds:
        if kind not in GRAPH_KINDS:
            raise InvalidParams(f"unknown graph kind {kind!r}")
    lines = []
    for i in range(args.count):
        kind = kinds[int(rng.integers(len(kinds)))]
        n = int(rng.integers(args.n_min, args.n_max + 1))
        params = {"n": n}
        if kind == "erdos_renyi":
            params["p"] = args.p
        if kind == "grid":
            params = {"rows": max(2, n // 4), "cols": 4}
        g = generate_graph(kind, params, seed=args.seed + i + 1)
        s = eigendecompose(build_laplacian(g))
        targets = {"lambda_2": float(s.eigenvalues[1])} if g.num_nodes >= 2 else {}
        lines.append(dumps_graph(Graph(g.num_nodes, g.edges, g.node_features, targets)))
    atomic_write_text(args.output, "".join(line + "\n" for line in lines))
    log.info("wrote %d graphs to %s", args.count, args.output)
    return 0


def cmd_features(args) -> int:
    cfg = _feature_config(args.config, args.seed)
    graphs = load_dataset(args.input)
    lines = []
    for idx, g in enumerate(graphs, start=1):
        try:
            x = augment_features(g, cfg)
        except EigenlearnError as exc:
            raise EigenlearnError(f"graph at line {idx}: {exc}") from exc
        lines.append(dumps_graph(g.with_features(x)))
    atomic_write_text(args.output, "".join(line + "\n" for line in lines))
    log.info("augmented %d graphs -> %s", len(graphs), args.output)
    return 0


def cmd_spectrum(args) -> int:
    graphs = load_dataset(args.input)
    lines = []
    for g in graphs:
        s = eigendecompose(build_laplacian(g, args.norm))
        rec = {"num_nodes": g.num_nodes,
               "eigenvalues": [float(v) for v in s.eigenvalues]}
        if not args.values_only:
            rec["eigenvectors"] = [[float(v) for v in row] for row in s.eigenvectors]
        lines.append(json.dumps(rec, separators=(",", ":")))
    atomic_write_text(args.output, "".join(line + "\n" for line in lines))
    log.info("wrote spectra of %d graphs to %s", len(graphs), args.output)
    return 0


def cmd_pretrain(args) -> int:
    overrides = {"seed": args.seed, "epochs": args.epochs, "k": args.k}
    if args.resume:
        model, cfg, state, d_in, _, _ = tr.load_checkpoint(args.resume)
        if any(v is not None for v in overrides.values()):
            cfg = tr.config_from_dict({**tr.config_to_dict(cfg),
                                       **{k: v for k, v in overrides.items() if v is not None}})
        examples = tr.precompute_targets(load_dataset(args.input), cfg)
    else:
        cfg = _load_config(args.config, overrides)
        examples = tr.precompute_targets(load_dataset(args.input), cfg)
        model = tr.build_model(cfg, tr.feature_dim(examples))
        state = None
        d_in = tr.feature_dim(examples)
    record, state = tr.pretrain(examples, model, cfg, state)
    atomic_write_text(args.output, record.to_csv())
    if args.checkpoint_out:
        tr.save_checkpoint(args.checkpoint_out, model, cfg, state, d_in)
        log.info("checkpoint -> %s", args.checkpoint_out)
    if record.rows:
        log.info("pretrain done: %d epochs, final loss %.6f, %d skipped batches",
                 len(record.rows), record.rows[-1].loss_total, record.skipped_batches)
    return 0


def cmd_finetune(args) -> int:
    model, cfg, _, d_in, _, _ = tr.load_checkpoint(args.checkpoint)
    if args.seed is not None:
        cfg = tr.config_from_dict({**tr.config_to_dict(cfg), "seed": args.seed})
    examples = tr.precompute_targets(load_dataset(args.input), cfg)
    rng = np.random.default_rng([cfg.seed, 9])
    order = rng.permutation(len(examples))
    n_val = max(1, int(len(examples) * args.val_fraction)) if args.val_fraction else 0
    val = [examples[i] for i in order[:n_val]]
    tr_examples = [examples[i] for i in order[n_val:]]
    head = tr.build_downstream_head(cfg)
    record, state = tr.finetune(tr_examples, model, head, cfg, args.target,
                                epochs=args.epochs, val_examples=val or None)
    atomic_write_text(args.output, record.to_csv())
    if args.checkpoint_out:
        tr.save_checkpoint(args.checkpoint_out, model, cfg, state, d_in,
                           kind="finetune", downstream_head=head,
                           extra={"target": args.target})
    if val:
        mae = tr.evaluate_mae(model, head, val, cfg, args.target)
        train_mean = float(np.mean([ex.graph.graph_targets[args.target]
                                    for ex in tr_examples]))
        base = float(np.mean([abs(ex.graph.graph_targets[args.target] - train_mean)
                              for ex in val]))
        log.info("held-out MAE %.6f (predict-the-mean baseline %.6f)", mae, base)
    return 0


def cmd_compare_losses(args) -> int:
    cfg = _load_config(args.config, {"seed": args.seed, "epochs": args.epochs,
                                     "k": args.k})
    examples = tr.precompute_targets(load_dataset(args.input), cfg)
    results = tr.compare_losses(examples, cfg)
    rows = [row for arm in tr.COMPARISON_ARMS for row in results[arm]]
    atomic_write_text(args.output, tr.comparison_to_csv(rows))
    for arm in tr.COMPARISON_ARMS:
        final = results[arm][-1]
        log.info("%s: final eigvec %.6f, energy %.6f", arm,
                 final.loss_eigvec, final.loss_energy)
    return 0


def cmd_check_invariants(args) -> int:
    results = run_all_checks()
    width = max(len(r.name) for r in results)
    for r in results:
        marker = "PASS" if r.passed else "FAIL"
        print(f"{r.name:<{width}}  {marker}  {r.detail}")
    if args.output:
        lines = [json.dumps({"name": r.name, "passed": r.passed, "detail": r.detail},
                            separators=(",", ":")) for r in results]
        atomic_write_text(args.output, "".join(line + "\n" for line in lines))
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eigenlearn",
        description="Spectral pre-training toolkit: graph spectra, wavelet features, "
                    "eigenvector-learning models, and the training loops around them.")
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    parser.add_argument("--quiet", action="store_true", help="errors only")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="emit a synthetic line-delimited graph dataset")
    p.add_argument("--output", required=True)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--kinds", default="path,cycle,star,erdos_renyi")
    p.add_argument("--n-min", type=int, default=6)
    p.add_argument("--n-max", type=int, default=16)
    p.add_argument("--p", type=float, default=0.4, help="edge probability for erdos_renyi")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("features", help="write structure-based node features into a dataset")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--config", help="feature config JSON")
    p.add_argument("--seed", type=int, help="override dirac source seed")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("spectrum", help="export Laplacian spectra of every graph")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--norm", choices=["unnormalized", "symmetric"], default="unnormalized")
    p.add_argument("--values-only", action="store_true")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("pretrain", help="eigenvector-learning pre-training run")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True, help="run record CSV")
    p.add_argument("--config", help="PretrainConfig JSON")
    p.add_argument("--checkpoint-out")
    p.add_argument("--resume", help="continue from a checkpoint")
    p.add_argument("--seed", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--k", type=int)
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("finetune", help="fine-tune a pre-trained model on a scalar target")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True, help="run record CSV")
    p.add_argument("--checkpoint", required=True, help="pretrain checkpoint")
    p.add_argument("--target", default="lambda_2")
    p.add_argument("--checkpoint-out")
    p.add_argument("--epochs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--val-fraction", type=float, default=0.2)
    p.set_defaults(func=cmd_finetune)

    p = sub.add_parser("compare-losses", help="train the loss-comparison arms and export the series")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--k", type=int)
    p.set_defaults(func=cmd_compare_losses)

    p = sub.add_parser("check-invariants", help="run the executable property suite")
    p.add_argument("--output", help="machine-readable summary (line-delimited JSON)")
    p.set_defaults(func=cmd_check_invariants)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.INFO
    if args.verbose:
        level = logging.DEBUG
    if args.quiet:
        level = logging.ERROR
    logging.basicConfig(stream=sys.stderr, level=level,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except EigenlearnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
