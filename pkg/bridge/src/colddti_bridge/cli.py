"""Command-line wrapper: extract embeddings for a whole corpus directory."""

from __future__ import annotations

import argparse
import sys

from colddti.data import load_dataset

from .bridge import BridgeConfig, BridgeError, extract_corpus


def main() -> None:
    parser = argparse.ArgumentParser(prog="colddti-bridge")
    parser.add_argument("--data", required=True,
                        help="directory with the four corpus TSV files")
    parser.add_argument("--protein-model", required=True)
    parser.add_argument("--drug-model", required=True)
    parser.add_argument("--out", required=True)
    parser.add_argument("--max-length", type=int, default=1024)
    parser.add_argument("--device", default="cpu")
    args = parser.parse_args()

    ds = load_dataset(f"{args.data}/drugs.tsv", f"{args.data}/proteins.tsv",
                      f"{args.data}/structures.tsv",
                      f"{args.data}/interactions.tsv")
    cfg = BridgeConfig(args.protein_model, args.drug_model, args.out,
                       max_length=args.max_length, device=args.device)
    try:
        manifest = extract_corpus(
            ds, cfg, progress=lambda side, eid: print(f"{side}\t{eid}"))
    except BridgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        sys.exit(2)
    print(f"wrote {manifest}")
