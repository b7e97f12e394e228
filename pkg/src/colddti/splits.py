"""Deterministic cold-drug / cold-protein / cold-pair dataset splits.

Entity shuffling uses an explicit splitmix64 generator so manifests are
reproducible across machines and implementations, not just across runs
of this package. Val and test each receive floor(ratio * N) entities;
train takes the remainder.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .data import Dataset
from .errors import ConfigError, DataError

DEFAULT_RATIOS = (0.8, 0.1, 0.1)

_MASK = (1 << 64) - 1


class SplitMix64:
    """Portable 64-bit PRNG (splitmix64 stream)."""

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates driven by the splitmix stream."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next() % (i + 1)
            items[i], items[j] = items[j], items[i]


@dataclass
class SplitManifest:
    mode: str
    seed: int
    ratios: tuple[float, float, float]
    train: list[int]
    val: list[int]
    test: list[int]
    discarded_count: int = 0
    source_checksum: str | None = None

    def subset(self, ds: Dataset, bucket: str) -> Dataset:
        indices = getattr(self, bucket)
        return Dataset(ds.drugs, ds.proteins,
                       tuple(ds.samples[i] for i in indices))

    def write_json(self, path) -> None:
        payload = {
            "mode": self.mode,
            "seed": self.seed,
            "ratios": list(self.ratios),
            "train": self.train,
            "val": self.val,
            "test": self.test,
            "discarded_count": self.discarded_count,
            "source_checksum": self.source_checksum,
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh)
            fh.write("\n")


def load_manifest(path) -> SplitManifest:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    return SplitManifest(
        mode=raw["mode"], seed=raw["seed"], ratios=tuple(raw["ratios"]),
        train=raw["train"], val=raw["val"], test=raw["test"],
        discarded_count=raw["discarded_count"],
        source_checksum=raw.get("source_checksum"))


def interactions_checksum(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _check_ratios(ratios) -> tuple[float, float, float]:
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or abs(sum(ratios) - 1.0) > 1e-9 or min(ratios) <= 0:
        raise ConfigError(f"ratios must be three positive reals summing to 1: {ratios}")
    return ratios


def _bucket_entities(ids: list[str], seed: int, ratios) -> dict[str, str]:
    """Shuffle sorted ids and cut into train/val/test buckets."""
    if len(ids) < 3:
        raise DataError(f"need at least 3 entities to split, got {len(ids)}")
    ids = sorted(ids)
    SplitMix64(seed).shuffle(ids)
    n = len(ids)
    n_val = int(ratios[1] * n)
    n_test = int(ratios[2] * n)
    n_train = n - n_val - n_test
    assignment: dict[str, str] = {}
    for i, entity_id in enumerate(ids):
        if i < n_train:
            assignment[entity_id] = "train"
        elif i < n_train + n_val:
            assignment[entity_id] = "val"
        else:
            assignment[entity_id] = "test"
    return assignment


def _entity_split(ds: Dataset, seed: int, ratios, mode: str,
                  key: str) -> SplitManifest:
    ratios = _check_ratios(ratios)
    ids = list(ds.drugs if key == "drug_id" else ds.proteins)
    assignment = _bucket_entities(ids, seed, ratios)
    buckets = {"train": [], "val": [], "test": []}
    for i, sample in enumerate(ds.samples):
        buckets[assignment[getattr(sample, key)]].append(i)
    return SplitManifest(mode, seed, ratios, **buckets)


def split_cold_drug(ds: Dataset, seed: int, ratios=DEFAULT_RATIOS) -> SplitManifest:
    """No drug id appears in two buckets; proteins are unrestricted."""
    return _entity_split(ds, seed, ratios, "cold_drug", "drug_id")


def split_cold_protein(ds: Dataset, seed: int, ratios=DEFAULT_RATIOS) -> SplitManifest:
    """No protein id appears in two buckets; drugs are unrestricted."""
    return _entity_split(ds, seed, ratios, "cold_protein", "protein_id")


def split_cold_pair(ds: Dataset, seed: int, ratios=DEFAULT_RATIOS) -> SplitManifest:
    """Drugs and proteins are bucketed independently; a sample survives
    only when both sides land in the same bucket, otherwise it is
    discarded. Drug and protein streams get distinct sub-seeds."""
    ratios = _check_ratios(ratios)
    drug_assignment = _bucket_entities(list(ds.drugs), seed, ratios)
    protein_assignment = _bucket_entities(list(ds.proteins),
                                          SplitMix64(seed).next(), ratios)
    buckets = {"train": [], "val": [], "test": []}
    discarded = 0
    for i, sample in enumerate(ds.samples):
        db = drug_assignment[sample.drug_id]
        pb = protein_assignment[sample.protein_id]
        if db == pb:
            buckets[db].append(i)
        else:
            discarded += 1
    manifest = SplitManifest("cold_pair", seed, ratios, discarded_count=discarded,
                             **buckets)
    empty = [name for name in ("train", "val", "test")
             if not getattr(manifest, name)]
    if empty:
        raise DataError(f"cold_pair split left empty buckets: {empty}")
    return manifest


def check_manifest(manifest: SplitManifest, ds: Dataset) -> None:
    """Machine-check disjointness and conservation; raises on violation."""
    index_sets = [set(manifest.train), set(manifest.val), set(manifest.test)]
    total = sum(len(s) for s in index_sets)
    if len(set().union(*index_sets)) != total:
        raise DataError("bucket index lists overlap")
    if total + manifest.discarded_count != len(ds.samples):
        raise DataError("buckets + discarded do not account for all samples")

    def ids_of(indices, key):
        return {getattr(ds.samples[i], key) for i in indices}

    checks = {"cold_drug": ["drug_id"], "cold_protein": ["protein_id"],
              "cold_pair": ["drug_id", "protein_id"]}
    for key in checks[manifest.mode]:
        sets = [ids_of(getattr(manifest, b), key) for b in ("train", "val", "test")]
        for i in range(3):
            for j in range(i + 1, 3):
                shared = sets[i] & sets[j]
                if shared:
                    raise DataError(
                        f"{manifest.mode}: {key} values shared across buckets: "
                        f"{sorted(shared)[:5]}")
