"""Command-line entry point.

Subcommands: validate-data, split, train, eval, export-attention,
ablate, check-grad, gen-synthetic. Exit codes: 0 success, 1 usage error,
2 data error, 3 numerical-audit failure.

Every subcommand echoes its fully resolved configuration (defaults and
seed included) before executing so any run can be reproduced exactly.
`COLDDTI_THREADS` caps worker parallelism; 0 or 1 selects the default
deterministic single-worker mode (the only mode currently implemented).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import data, export, metrics, splits, synthetic, tokenizer, train
from .data import load_dataset
from .embeddings import PrecomputedEmbeddingProvider, ToyEmbeddingProvider
from .errors import AuditError, ColdDtiError, ConfigError, DataError
from .fusion import bce_loss
from .model import forward, init_model
from .train import TrainConfig, finite_diff_audit, load_config

TOY_DIM = 64


def _echo_config(args: argparse.Namespace) -> None:
    resolved = {k: (sorted(v) if isinstance(v, (set, frozenset)) else str(v) if isinstance(v, Path) else v)
                for k, v in sorted(vars(args).items()) if k != "func"}
    print("config\t" + json.dumps(resolved, sort_keys=True))


def _load_corpus(data_dir) -> data.Dataset:
    root = Path(data_dir)
    return load_dataset(root / "drugs.tsv", root / "proteins.tsv",
                        root / "structures.tsv", root / "interactions.tsv")


def _provider(ds: data.Dataset, embeddings_path, seed: int):
    if embeddings_path:
        return PrecomputedEmbeddingProvider(embeddings_path)
    vocab = tokenizer.build_vocabulary(ds)
    return ToyEmbeddingProvider(vocab, dim=TOY_DIM, seed=seed)


def _train_config(args) -> TrainConfig:
    if getattr(args, "config", None):
        cfg = load_config(args.config)
    else:
        cfg = TrainConfig(seed=args.seed)
    drop = getattr(args, "drop", None)
    if drop:
        cfg = TrainConfig(**{**cfg.__dict__, "ablation": frozenset(drop.split(","))})
    return cfg


def _run_training(args, ablation_override: str | None = None):
    ds = _load_corpus(args.data)
    manifest = splits.load_manifest(args.manifest)
    splits.check_manifest(manifest, ds)
    cfg = _train_config(args)
    provider = _provider(ds, args.embeddings, cfg.seed)
    ds_train = manifest.subset(ds, "train")
    ds_val = manifest.subset(ds, "val")
    params, logs = train.train(
        ds_train, ds_val, provider, cfg,
        progress=lambda log: print(
            f"epoch {log.epoch}\tlr {log.lr:.3g}\tloss {log.train_loss:.4f}"
            f"\tval_auc {log.val_auc:.4f}"))
    return ds, manifest, cfg, provider, params, logs


def _evaluate(ds, manifest, cfg, provider, params, threshold: float):
    ds_test = manifest.subset(ds, "test")
    scores = train.predict_scores(ds_test, ds_test.samples, provider, params,
                                  cfg.ablation)
    labels = np.array([s.label for s in ds_test.samples])
    return metrics.evaluate(scores, labels, dataset="test",
                            split_mode=manifest.mode, seed=cfg.seed,
                            threshold=threshold)


def cmd_validate_data(args) -> int:
    ds = _load_corpus(args.data)
    report = data.validate(ds)
    for key, value in report.as_dict().items():
        print(f"{key}\t{value}")
    return 0


def cmd_split(args) -> int:
    ds = _load_corpus(args.data)
    fn = {"cold-drug": splits.split_cold_drug,
          "cold-protein": splits.split_cold_protein,
          "cold-pair": splits.split_cold_pair}[args.mode]
    manifest = fn(ds, args.seed)
    manifest.source_checksum = splits.interactions_checksum(
        Path(args.data) / "interactions.tsv")
    splits.check_manifest(manifest, ds)
    manifest.write_json(args.out)
    print(f"wrote {args.out}\ttrain {len(manifest.train)}\tval {len(manifest.val)}"
          f"\ttest {len(manifest.test)}\tdiscarded {manifest.discarded_count}")
    return 0


def cmd_train(args) -> int:
    ds, manifest, cfg, provider, params, logs = _run_training(args)
    if args.out:
        named = dict(params.named_tensors(), **provider.trainable_params())
        train.save_checkpoint(args.out, named)
        print(f"wrote {args.out}")
    report = _evaluate(ds, manifest, cfg, provider, params, args.threshold)
    print(report.render())
    return 0


def cmd_eval(args) -> int:
    ds = _load_corpus(args.data)
    manifest = splits.load_manifest(args.manifest)
    splits.check_manifest(manifest, ds)
    cfg = _train_config(args)
    provider = _provider(ds, args.embeddings, cfg.seed)
    params = init_model(provider.drug_dim, provider.protein_dim, seed=cfg.seed)
    named = dict(params.named_tensors(), **provider.trainable_params())
    stored = train.load_checkpoint(args.checkpoint)
    for name, tensor in named.items():
        if name not in stored:
            raise ConfigError(f"checkpoint missing tensor {name!r}")
        tensor.data = stored[name]
    report = _evaluate(ds, manifest, cfg, provider, params, args.threshold)
    print(report.render())
    if args.out:
        report.write_json(args.out)
    return 0


def cmd_ablate(args) -> int:
    if not args.drop:
        raise ConfigError("--drop is required for ablate")
    ds, manifest, cfg, provider, params, logs = _run_training(args)
    report = _evaluate(ds, manifest, cfg, provider, params, args.threshold)
    print(report.render())
    return 0


def cmd_check_grad(args) -> int:
    rng = np.random.default_rng(args.seed)
    ds = synthetic.generate(n_drugs=4, n_proteins=4, n_samples=8, seed=args.seed)
    vocab = tokenizer.build_vocabulary(ds)
    provider = ToyEmbeddingProvider(vocab, dim=args.dim, seed=args.seed)
    params = init_model(args.dim, args.dim, k=args.dim, hidden=(16,), seed=args.seed)
    named = dict(params.named_tensors(), **provider.trainable_params())
    batch = ds.samples[:4]

    def loss_fn():
        total = None
        for s in batch:
            state = forward(ds.drugs[s.drug_id], ds.proteins[s.protein_id],
                            provider, params)
            term = bce_loss(state.y_hat, s.label)
            total = term if total is None else total + term
        return total * (1.0 / len(batch))

    report = finite_diff_audit(named, loss_fn, step=1e-4, tolerance=1e-4,
                               seed=args.seed)
    for name in sorted(report.max_rel_error):
        status = "ok" if report.max_rel_error[name] <= report.tolerance else "FAIL"
        print(f"{name}\t{report.max_rel_error[name]:.3e}\t{status}")
    if not report.passed:
        raise AuditError(f"gradient audit failed for groups: {report.failures}")
    return 0


def cmd_export_attention(args) -> int:
    ds = _load_corpus(args.data)
    cfg = _train_config(args)
    provider = _provider(ds, args.embeddings, cfg.seed)
    params = init_model(provider.drug_dim, provider.protein_dim, seed=cfg.seed)
    if args.checkpoint:
        named = dict(params.named_tensors(), **provider.trainable_params())
        stored = train.load_checkpoint(args.checkpoint)
        for name, tensor in named.items():
            if name in stored:
                tensor.data = stored[name]
    dump = export.export_attention(params, args.drug, args.protein, ds, provider,
                                   cfg.ablation)
    dump.write_json(args.out)
    print(f"wrote {args.out}\tprediction {dump.prediction:.6f}")
    return 0


def cmd_gen_synthetic(args) -> int:
    ds = synthetic.generate(n_drugs=args.drugs, n_proteins=args.proteins,
                            n_samples=args.samples, seed=args.seed)
    synthetic.write_corpus(ds, args.out)
    report = data.validate(ds)
    print(f"wrote {args.out}\tdrugs {report.drugs}\tproteins {report.proteins}"
          f"\tpositives {report.positives}\tnegatives {report.negatives}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="colddti")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(func=fn)
        return p

    p = add("validate-data", cmd_validate_data)
    p.add_argument("--data", required=True)

    p = add("split", cmd_split)
    p.add_argument("--data", required=True)
    p.add_argument("--mode", required=True,
                   choices=["cold-drug", "cold-protein", "cold-pair"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    for name, fn in (("train", cmd_train), ("ablate", cmd_ablate)):
        p = add(name, fn)
        p.add_argument("--data", required=True)
        p.add_argument("--manifest", required=True)
        p.add_argument("--config")
        p.add_argument("--embeddings")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--drop", default="" if name == "train" else None,
                       required=name == "ablate")
        p.add_argument("--threshold", type=float, default=0.5)
        p.add_argument("--out")

    p = add("eval", cmd_eval)
    p.add_argument("--data", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--config")
    p.add_argument("--embeddings")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--drop", default="")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--out")

    p = add("export-attention", cmd_export_attention)
    p.add_argument("--data", required=True)
    p.add_argument("--drug", required=True)
    p.add_argument("--protein", required=True)
    p.add_argument("--checkpoint")
    p.add_argument("--config")
    p.add_argument("--embeddings")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--drop", default="")
    p.add_argument("--out", required=True)

    p = add("check-grad", cmd_check_grad)
    p.add_argument("--dim", type=int, default=8)
    p.add_argument("--seed", type=int, default=1)

    p = add("gen-synthetic", cmd_gen_synthetic)
    p.add_argument("--drugs", type=int, default=400)
    p.add_argument("--proteins", type=int, default=200)
    p.add_argument("--samples", type=int, default=4000)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", required=True)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    workers = os.environ.get("COLDDTI_THREADS", "1")
    if workers not in ("", "0", "1"):
        print("COLDDTI_THREADS > 1 requested; running deterministic single-worker mode",
              file=sys.stderr)
    _echo_config(args)
    try:
        return args.func(args)
    except AuditError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (DataError, ColdDtiError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())
