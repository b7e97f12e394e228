"""Planted-rule synthetic corpus generator.

Label rule: a pair interacts iff the drug contains the token "N" and the
protein has a Helix span covering at least one histidine (H) residue.
Both properties are entity-level, so the rule stays learnable under any
cold-start split; separability is by construction.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .data import (Dataset, DrugRecord, InteractionSample, ProteinRecord, SpanKind,
                   StructureSpan)

_PLAIN_ATOMS = ["C", "C", "C", "O", "S", "F", "P", "Cl", "Br", "c", "o", "s"]
_AA_NO_H = "ACDEFGIKLMNPQRSTVWY"
_AA_ALL = _AA_NO_H + "H"
_SECONDARY_TYPES = ("Helix", "Sheet", "Turn", "Bend")


def _random_smiles(rng: np.random.Generator, with_n: bool) -> str:
    # short molecules keep the planted token a large share of the pooled
    # global feature, which keeps the rule separable at toy scale
    length = int(rng.integers(4, 9))
    tokens = [str(rng.choice(_PLAIN_ATOMS)) for _ in range(length)]
    if rng.random() < 0.4 and length >= 4:
        # wrap a short interior run in a branch
        lo = int(rng.integers(1, length - 2))
        hi = int(rng.integers(lo + 1, length))
        tokens.insert(hi, ")")
        tokens.insert(lo, "(")
    if with_n:
        for _ in range(int(rng.integers(2, 4))):
            tokens.insert(int(rng.integers(0, len(tokens) + 1)), "N")
    if tokens[0] in ("(", ")"):
        tokens.insert(0, "C")
    return "".join(tokens)


def drug_has_signal(smiles: str) -> bool:
    from .tokenizer import tokenize_smiles
    return "N" in tokenize_smiles(smiles)


def protein_has_signal(record: ProteinRecord) -> bool:
    for span in record.spans:
        if span.kind is SpanKind.SECONDARY and span.secondary_type == "Helix":
            if "H" in record.residues[span.start - 1:span.end]:
                return True
    return False


def _random_protein(rng: np.random.Generator, protein_id: str,
                    positive: bool) -> ProteinRecord:
    length = int(rng.integers(12, 21))
    # histidine is kept rare outside planted helices so the pooled
    # features track the rule instead of background coincidences
    residues = ["H" if rng.random() < 0.02 else str(rng.choice(list(_AA_NO_H)))
                for _ in range(length)]
    spans: list[StructureSpan] = []

    def random_span_bounds(max_len: int):
        start = int(rng.integers(1, length))
        end = min(length, start + int(rng.integers(1, max_len + 1)))
        return start, end

    n_secondary = int(rng.integers(1, 3))
    for i in range(n_secondary):
        # tight spans so a planted histidine dominates its span mean
        start, end = random_span_bounds(2)
        if positive and i == 0:
            sec_type = "Helix"
            for pos in range(start, end + 1):
                residues[pos - 1] = "H"
        else:
            sec_type = str(rng.choice(_SECONDARY_TYPES))
            if sec_type == "Helix":
                # keep the planted rule clean: no histidine inside
                for pos in range(start, end + 1):
                    if residues[pos - 1] == "H":
                        residues[pos - 1] = str(rng.choice(list(_AA_NO_H)))
        spans.append(StructureSpan(start, end, SpanKind.SECONDARY, sec_type))

    if rng.random() < 0.7:
        start, end = random_span_bounds(8)
        spans.append(StructureSpan(start, end, SpanKind.TERTIARY))

    record = ProteinRecord(protein_id, "".join(residues), tuple(spans))
    if positive and not protein_has_signal(record):
        # a later non-Helix span scrubbed the histidine; retry
        return _random_protein(rng, protein_id, positive)
    return record


def generate(n_drugs: int = 400, n_proteins: int = 200, n_samples: int = 4000,
             seed: int = 0) -> Dataset:
    rng = np.random.default_rng(seed)
    drugs: dict[str, DrugRecord] = {}
    for i in range(n_drugs):
        drug_id = f"D{i:04d}"
        smiles = _random_smiles(rng, with_n=i % 2 == 0)
        drugs[drug_id] = DrugRecord(drug_id, smiles)

    proteins: dict[str, ProteinRecord] = {}
    for i in range(n_proteins):
        protein_id = f"P{i:04d}"
        proteins[protein_id] = _random_protein(rng, protein_id, positive=i % 2 == 0)

    pos_drugs = [d for d in drugs.values() if drug_has_signal(d.smiles)]
    pos_proteins = [p for p in proteins.values() if protein_has_signal(p)]
    drug_list = list(drugs.values())
    protein_list = list(proteins.values())

    samples: list[InteractionSample] = []
    seen: set[tuple[str, str]] = set()
    target_pos = n_samples // 2
    limit = n_samples * 50
    attempts = 0
    while len(samples) < n_samples and attempts < limit:
        attempts += 1
        want_positive = sum(s.label for s in samples) < target_pos
        if want_positive:
            drug = pos_drugs[int(rng.integers(len(pos_drugs)))]
            protein = pos_proteins[int(rng.integers(len(pos_proteins)))]
        else:
            drug = drug_list[int(rng.integers(len(drug_list)))]
            protein = protein_list[int(rng.integers(len(protein_list)))]
        label = int(drug_has_signal(drug.smiles) and protein_has_signal(protein))
        if want_positive != bool(label):
            continue
        key = (drug.id, protein.id)
        if key in seen:
            continue
        seen.add(key)
        samples.append(InteractionSample(drug.id, protein.id, label))

    return Dataset(drugs, proteins, tuple(samples))


def write_corpus(ds: Dataset, out_dir) -> None:
    """Write the four TSV corpus files for a dataset."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "drugs.tsv", "w", encoding="utf-8") as fh:
        for drug in ds.drugs.values():
            fh.write(f"{drug.id}\t{drug.smiles}\n")
    with open(out / "proteins.tsv", "w", encoding="utf-8") as fh:
        for prot in ds.proteins.values():
            fh.write(f"{prot.id}\t{prot.residues}\n")
    with open(out / "structures.tsv", "w", encoding="utf-8") as fh:
        for prot in ds.proteins.values():
            for span in prot.spans:
                sec = span.secondary_type if span.kind is SpanKind.SECONDARY else "-"
                fh.write(f"{prot.id}\t{span.kind.value}\t{span.start}\t{span.end}\t{sec}\n")
    with open(out / "interactions.tsv", "w", encoding="utf-8") as fh:
        for s in ds.samples:
            fh.write(f"{s.drug_id}\t{s.protein_id}\t{s.label}\n")
