"""Per-entity token embedding extraction.

For each drug or protein the core tokenizer produces the token sequence;
the transformer encodes it with `is_split_into_words` so each core token
maps to one or more subwords, whose final-layer hidden states are
averaged back to one vector per core token. Files go out in the binary
interchange format the core reads, with sha256 checksums in a manifest
and a run log recording model identifiers, truncations, and the
alignment mode.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from colddti.data import Dataset, DrugRecord, ProteinRecord
from colddti.embeddings import write_embedding_file
from colddti.tokenizer import SPECIAL_TOKENS, expand_protein_tags, tokenize_smiles

ALIGNMENT_MODE = "subword-mean"


class BridgeError(Exception):
    pass


@dataclass
class BridgeConfig:
    protein_model: str
    drug_model: str
    out_dir: str
    max_length: int = 1024  # cap in core tokens per entity
    device: str = "cpu"

    def __post_init__(self):
        if not self.protein_model or not self.drug_model:
            raise BridgeError("model identifiers must be non-empty")
        if self.max_length < 8:
            raise BridgeError("max_length must be >= 8")


class _Encoder:
    """One loaded checkpoint plus its tokenizer, inference-only."""

    def __init__(self, model_id: str, device: str, extra_tokens: list[str]):
        from transformers import AutoModel, AutoTokenizer

        try:
            self.tokenizer = AutoTokenizer.from_pretrained(model_id)
            self.model = AutoModel.from_pretrained(model_id)
        except Exception as exc:
            raise BridgeError(f"checkpoint {model_id!r} not resolvable: {exc}") from exc
        if extra_tokens:
            added = self.tokenizer.add_special_tokens(
                {"additional_special_tokens": extra_tokens})
            if added:
                # new rows are randomly initialized; seed so reruns are
                # byte-identical (the rows are frozen, never fine-tuned)
                torch.manual_seed(0)
                self.model.resize_token_embeddings(len(self.tokenizer))
        self.model.to(device)
        self.model.eval()
        self.device = device

    @property
    def dim(self) -> int:
        return int(self.model.config.hidden_size)

    def encode_words(self, words: list[str]) -> np.ndarray:
        """Final-layer hidden states averaged per input word."""
        enc = self.tokenizer(words, is_split_into_words=True,
                             return_tensors="pt", truncation=False)
        word_ids = enc.word_ids(0)
        with torch.no_grad():
            hidden = self.model(**{k: v.to(self.device) for k, v in enc.items()}
                                ).last_hidden_state[0]
        out = np.zeros((len(words), self.dim), dtype=np.float32)
        counts = np.zeros(len(words), dtype=np.int64)
        states = hidden.cpu().numpy()
        for pos, word in enumerate(word_ids):
            if word is None:  # [CLS]/[SEP] and friends
                continue
            out[word] += states[pos]
            counts[word] += 1
        if (counts == 0).any():
            missing = [words[i] for i in np.flatnonzero(counts == 0)]
            raise BridgeError(f"tokenizer dropped input words {missing!r}")
        return out / counts[:, None]


@dataclass
class _RunLog:
    protein_model: str
    drug_model: str
    alignment: str = ALIGNMENT_MODE
    truncations: list = field(default_factory=list)

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.__dict__, fh, indent=2)
            fh.write("\n")


def _atomic_write(path: Path, matrix: np.ndarray) -> str:
    tmp = path.with_suffix(path.suffix + ".tmp")
    digest = write_embedding_file(tmp, matrix)
    os.replace(tmp, path)
    return digest


def _extract(entity_id: str, side: str, tokens: list[str], encoder: _Encoder,
             cfg: BridgeConfig, log: _RunLog, reference: list[str] | None) -> dict:
    if reference is not None and tokens != reference:
        raise BridgeError(
            f"{side} {entity_id!r}: token sequence disagrees with the "
            f"supplied reference")
    truncated = len(tokens) > cfg.max_length
    if truncated:
        log.truncations.append({"id": entity_id, "side": side,
                                "original": len(tokens), "kept": cfg.max_length})
        tokens = tokens[:cfg.max_length]
    matrix = encoder.encode_words(tokens)
    path = Path(cfg.out_dir) / f"{side}_{entity_id}.cdti"
    digest = _atomic_write(path, matrix)
    entry = {"id": entity_id, "side": side, "file": path.name,
             "token_count": len(tokens), "sha256": digest}
    if truncated:
        entry["truncated"] = True
    return entry


def extract_protein(record: ProteinRecord, encoder: _Encoder, cfg: BridgeConfig,
                    log: _RunLog, reference: list[str] | None = None) -> dict:
    tokens = [t.text for t in expand_protein_tags(record)]
    return _extract(record.id, "protein", tokens, encoder, cfg, log, reference)


def extract_drug(record: DrugRecord, encoder: _Encoder, cfg: BridgeConfig,
                 log: _RunLog, reference: list[str] | None = None) -> dict:
    tokens = tokenize_smiles(record.smiles)
    return _extract(record.id, "drug", tokens, encoder, cfg, log, reference)


def extract_corpus(ds: Dataset, cfg: BridgeConfig,
                   progress=None) -> Path:
    """Extract every entity; returns the manifest path."""
    torch.set_num_threads(1)  # deterministic accumulation order
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    protein_enc = _Encoder(cfg.protein_model, cfg.device, list(SPECIAL_TOKENS))
    drug_enc = _Encoder(cfg.drug_model, cfg.device, [])
    if protein_enc.dim != drug_enc.dim:
        raise BridgeError(
            f"hidden widths differ ({protein_enc.dim} vs {drug_enc.dim}); "
            f"the interchange manifest holds a single dim")
    log = _RunLog(cfg.protein_model, cfg.drug_model)
    entities = []
    for drug in ds.drugs.values():
        entities.append(extract_drug(drug, drug_enc, cfg, log))
        if progress:
            progress("drug", drug.id)
    for prot in ds.proteins.values():
        entities.append(extract_protein(prot, protein_enc, cfg, log))
        if progress:
            progress("protein", prot.id)
    manifest = {"version": 1, "dim": drug_enc.dim, "entities": entities}
    manifest_path = out / "manifest.json"
    tmp = manifest_path.with_suffix(".json.tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    os.replace(tmp, manifest_path)
    log.write(out / "bridge.log.json")
    return manifest_path
