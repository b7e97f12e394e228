"""Level-embedding production: toy trainable encoder, span pooling, and
the precomputed-embedding interchange format.

The interchange contract (shared with the encoder bridge):
  manifest.json  {"version": 1, "dim": d, "entities": [{"id", "side",
                  "file", "token_count", "sha256"}, ...]}
  entity file    magic b"CDTI", version u16 LE, token_count u32 LE,
                 dim u32 LE, then token_count*dim float32 LE, row-major.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .autodiff import Tensor, concat
from .data import DrugRecord, ProteinRecord, SpanKind
from .errors import EmbeddingFormatError
from .tokenizer import (ProteinToken, Vocabulary, expand_protein_tags_with_spans,
                        tokenize_smiles)

MAGIC = b"CDTI"
FORMAT_VERSION = 1


@dataclass
class LevelEmbeddings:
    """Protein matrices: one row per residue (primary), per secondary
    span, per tertiary span, and a single quaternary row."""
    X_p: Tensor
    X_s: Tensor
    X_t: Tensor
    X_q: Tensor


@dataclass
class DrugEmbeddings:
    X_l: Tensor  # one row per drug token
    X_g: Tensor  # 1 x d global row


def make_embedding_table(vocab_size: int, dim: int, rng: np.random.Generator) -> Tensor:
    half_width = np.sqrt(6.0 / (vocab_size + dim))
    return Tensor(rng.uniform(-half_width, half_width, size=(vocab_size, dim)),
                  requires_grad=True)


def toy_encode(indices: list[int], table: Tensor) -> Tensor:
    """Row lookup into a trainable table; shape (len(indices), d)."""
    if not indices:
        return Tensor(np.zeros((0, table.shape[1])))
    return table.gather_rows(indices)


def pool_protein_levels(tokens: list[ProteinToken], emb: Tensor,
                        span_members: list[list[int]],
                        span_kinds: list[SpanKind]) -> LevelEmbeddings:
    """Pool token embeddings into the four protein level matrices.

    X_p keeps residue rows only; each span row is the mean over its tag,
    type, and residue rows; X_q is the mean over every token row.
    """
    n_tokens, dim = emb.shape
    if n_tokens != len(tokens):
        raise ValueError(f"embedding rows {n_tokens} != token count {len(tokens)}")
    residue_idx = [i for i, t in enumerate(tokens) if t.kind == "residue"]
    X_p = emb.gather_rows(residue_idx)

    sec_rows, ter_rows = [], []
    for members, kind in zip(span_members, span_kinds):
        row = emb.gather_rows(members).mean(axis=0).reshape(1, dim)
        (sec_rows if kind is SpanKind.SECONDARY else ter_rows).append(row)
    X_s = concat(sec_rows, axis=0) if sec_rows else Tensor(np.zeros((0, dim)))
    X_t = concat(ter_rows, axis=0) if ter_rows else Tensor(np.zeros((0, dim)))
    X_q = emb.mean(axis=0).reshape(1, dim)
    return LevelEmbeddings(X_p, X_s, X_t, X_q)


def pool_drug(emb: Tensor) -> DrugEmbeddings:
    """X_l is the token matrix itself; X_g its column-wise mean."""
    return DrugEmbeddings(X_l=emb, X_g=emb.mean(axis=0).reshape(1, emb.shape[1]))


class ToyEmbeddingProvider:
    """Trainable token-embedding tables standing in for the pretrained
    encoders. Tokenization and span alignment are cached per entity."""

    def __init__(self, vocab: Vocabulary, dim: int = 64, seed: int = 0):
        self.vocab = vocab
        self.dim = dim
        rng = np.random.default_rng(seed)
        self.drug_table = make_embedding_table(len(vocab.drug), dim, rng)
        self.protein_table = make_embedding_table(len(vocab.protein), dim, rng)
        self._drug_cache: dict[str, tuple[list[str], list[int]]] = {}
        self._protein_cache: dict[str, tuple] = {}

    @property
    def drug_dim(self) -> int:
        return self.dim

    @property
    def protein_dim(self) -> int:
        return self.dim

    def trainable_params(self) -> dict[str, Tensor]:
        return {"drug_table": self.drug_table, "protein_table": self.protein_table}

    def drug_tokens(self, drug: DrugRecord) -> list[str]:
        return self._drug_entry(drug)[0]

    def _drug_entry(self, drug: DrugRecord):
        entry = self._drug_cache.get(drug.id)
        if entry is None:
            tokens = tokenize_smiles(drug.smiles)
            indices = [self.vocab.drug_index(t) for t in tokens]
            entry = self._drug_cache[drug.id] = (tokens, indices)
        return entry

    def _protein_entry(self, prot: ProteinRecord):
        entry = self._protein_cache.get(prot.id)
        if entry is None:
            tokens, members = expand_protein_tags_with_spans(prot)
            indices = [self.vocab.protein_index(t.text) for t in tokens]
            kinds = [s.kind for s in prot.spans]
            entry = self._protein_cache[prot.id] = (tokens, indices, members, kinds)
        return entry

    def drug_embeddings(self, drug: DrugRecord) -> DrugEmbeddings:
        _, indices = self._drug_entry(drug)
        return pool_drug(toy_encode(indices, self.drug_table))

    def protein_embeddings(self, prot: ProteinRecord) -> LevelEmbeddings:
        tokens, indices, members, kinds = self._protein_entry(prot)
        emb = toy_encode(indices, self.protein_table)
        return pool_protein_levels(tokens, emb, members, kinds)


class PrecomputedEmbeddingProvider:
    """Serves frozen matrices written by the encoder bridge."""

    def __init__(self, manifest_path):
        self.manifest_path = Path(manifest_path)
        self.manifest = load_manifest(self.manifest_path)
        self._entities = {(e["side"], e["id"]): e for e in self.manifest["entities"]}
        self.dim = int(self.manifest["dim"])
        self._cache: dict[tuple[str, str], np.ndarray] = {}
        self._protein_align: dict[str, tuple] = {}

    drug_dim = protein_dim = property(lambda self: self.dim)

    def trainable_params(self) -> dict[str, Tensor]:
        return {}

    def _matrix(self, side: str, entity_id: str) -> np.ndarray:
        key = (side, entity_id)
        if key not in self._cache:
            entry = self._entities.get(key)
            if entry is None:
                raise EmbeddingFormatError(
                    f"entity {entity_id!r} (side {side!r}) missing from "
                    f"{self.manifest_path}")
            path = self.manifest_path.parent / entry["file"]
            mat = read_embedding_file(path, expected_sha256=entry["sha256"])
            if mat.shape[0] != entry["token_count"]:
                raise EmbeddingFormatError(
                    f"{path}: token count {mat.shape[0]} != manifest "
                    f"{entry['token_count']}")
            self._cache[key] = mat
        return self._cache[key]

    def drug_tokens(self, drug: DrugRecord) -> list[str]:
        return tokenize_smiles(drug.smiles)

    def drug_embeddings(self, drug: DrugRecord) -> DrugEmbeddings:
        mat = self._matrix("drug", drug.id)
        n_tokens = len(tokenize_smiles(drug.smiles))
        if mat.shape[0] != n_tokens:
            raise EmbeddingFormatError(
                f"drug {drug.id!r}: stored token count {mat.shape[0]} != "
                f"tokenizer count {n_tokens} (tokenizer drift?)")
        return pool_drug(Tensor(mat))

    def protein_embeddings(self, prot: ProteinRecord) -> LevelEmbeddings:
        entry = self._protein_align.get(prot.id)
        if entry is None:
            entry = self._protein_align[prot.id] = (
                *expand_protein_tags_with_spans(prot),
                [s.kind for s in prot.spans],
            )
        tokens, members, kinds = entry
        mat = self._matrix("protein", prot.id)
        if mat.shape[0] != len(tokens):
            raise EmbeddingFormatError(
                f"protein {prot.id!r}: stored token count {mat.shape[0]} != "
                f"tokenizer count {len(tokens)} (tokenizer drift?)")
        return pool_protein_levels(tokens, Tensor(mat), members, kinds)


# ----------------------------------------------------------------------
# interchange format
# ----------------------------------------------------------------------

def write_embedding_file(path, matrix: np.ndarray) -> str:
    """Write one entity file; returns the sha256 hex digest of the bytes."""
    mat = np.ascontiguousarray(matrix, dtype="<f4")
    header = MAGIC + struct.pack("<HII", FORMAT_VERSION, mat.shape[0], mat.shape[1])
    payload = header + mat.tobytes()
    Path(path).write_bytes(payload)
    return hashlib.sha256(payload).hexdigest()


def read_embedding_file(path, expected_sha256: str | None = None) -> np.ndarray:
    raw = Path(path).read_bytes()
    if expected_sha256 is not None:
        digest = hashlib.sha256(raw).hexdigest()
        if digest != expected_sha256:
            raise EmbeddingFormatError(f"{path}: checksum mismatch")
    if len(raw) < 14 or raw[:4] != MAGIC:
        raise EmbeddingFormatError(f"{path}: missing CDTI magic")
    version, token_count, dim = struct.unpack("<HII", raw[4:14])
    if version != FORMAT_VERSION:
        raise EmbeddingFormatError(f"{path}: unsupported version {version}")
    expected = 14 + token_count * dim * 4
    if len(raw) != expected:
        raise EmbeddingFormatError(
            f"{path}: payload is {len(raw)} bytes, expected {expected}")
    data = np.frombuffer(raw[14:], dtype="<f4").reshape(token_count, dim)
    return data.astype(np.float64)


def load_manifest(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    if manifest.get("version") != 1:
        raise EmbeddingFormatError(f"{path}: unsupported manifest version")
    return manifest


def load_precomputed(manifest_path, entity_id: str, side: str | None = None) -> np.ndarray:
    """Load one entity's stored token-embedding matrix bit-exactly."""
    manifest_path = Path(manifest_path)
    manifest = load_manifest(manifest_path)
    matches = [e for e in manifest["entities"]
               if e["id"] == entity_id and (side is None or e["side"] == side)]
    if not matches:
        raise EmbeddingFormatError(f"entity {entity_id!r} missing from {manifest_path}")
    entry = matches[0]
    mat = read_embedding_file(manifest_path.parent / entry["file"],
                              expected_sha256=entry["sha256"])
    if mat.shape[0] != entry["token_count"]:
        raise EmbeddingFormatError(
            f"{entry['file']}: token count {mat.shape[0]} != manifest "
            f"{entry['token_count']}")
    return mat
