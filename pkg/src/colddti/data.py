"""Dataset domain types and TSV corpus loading.

On-disk layout (all UTF-8, tab-separated, no headers):
  drugs.tsv        drug_id <TAB> smiles
  proteins.tsv     protein_id <TAB> residue_sequence
  structures.tsv   protein_id <TAB> kind <TAB> start <TAB> end <TAB> secondary_type
  interactions.tsv drug_id <TAB> protein_id <TAB> label

Positions are 1-based inclusive. A loaded Dataset is immutable by
convention and safe for concurrent readers.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import DataError

SECONDARY_TYPES = ("Helix", "Sheet", "Turn", "Bend")


class SpanKind(str, Enum):
    SECONDARY = "secondary"
    TERTIARY = "tertiary"


@dataclass(frozen=True)
class DrugRecord:
    id: str
    smiles: str


@dataclass(frozen=True)
class StructureSpan:
    start: int  # 1-based inclusive
    end: int    # 1-based inclusive
    kind: SpanKind
    secondary_type: str | None = None  # Helix/Sheet/Turn/Bend, None for tertiary

    def check(self, protein_id: str, length: int) -> None:
        if not (1 <= self.start <= self.end <= length):
            raise DataError(
                f"protein {protein_id!r}: span {self.start}-{self.end} out of range "
                f"for length {length}")
        if self.kind is SpanKind.SECONDARY:
            if self.secondary_type not in SECONDARY_TYPES:
                raise DataError(
                    f"protein {protein_id!r}: secondary span needs a type in "
                    f"{SECONDARY_TYPES}, got {self.secondary_type!r}")
        elif self.secondary_type is not None:
            raise DataError(
                f"protein {protein_id!r}: tertiary span must not carry a secondary type")


@dataclass(frozen=True)
class ProteinRecord:
    id: str
    residues: str
    spans: tuple[StructureSpan, ...] = ()

    def spans_of(self, kind: SpanKind) -> list[StructureSpan]:
        return [s for s in self.spans if s.kind is kind]


@dataclass(frozen=True)
class InteractionSample:
    drug_id: str
    protein_id: str
    label: int


@dataclass(frozen=True)
class Dataset:
    drugs: dict[str, DrugRecord]
    proteins: dict[str, ProteinRecord]
    samples: tuple[InteractionSample, ...]


@dataclass
class ValidationReport:
    drugs: int = 0
    proteins: int = 0
    positives: int = 0
    negatives: int = 0
    proteins_without_secondary: int = 0
    proteins_without_tertiary: int = 0

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _read_rows(path: Path, n_fields: int) -> list[tuple[int, list[str]]]:
    rows = []
    if not path.is_file():
        raise DataError(f"{path}: file not found")
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != n_fields:
                raise DataError(
                    f"{path}:{lineno}: expected {n_fields} tab-separated fields, "
                    f"got {len(fields)}")
            rows.append((lineno, fields))
    return rows


def load_dataset(drugs_path, proteins_path, structures_path, interactions_path) -> Dataset:
    """Load and cross-validate the four corpus files."""
    drugs: dict[str, DrugRecord] = {}
    for lineno, (drug_id, smiles) in _iter(drugs_path, 2):
        if not drug_id or not smiles:
            raise DataError(f"{drugs_path}:{lineno}: empty drug id or SMILES")
        if drug_id in drugs:
            raise DataError(f"{drugs_path}:{lineno}: duplicate drug id {drug_id!r}")
        drugs[drug_id] = DrugRecord(drug_id, smiles)

    residues: dict[str, str] = {}
    protein_line: dict[str, int] = {}
    for lineno, (protein_id, seq) in _iter(proteins_path, 2):
        if not protein_id or not seq:
            raise DataError(f"{proteins_path}:{lineno}: empty protein id or sequence")
        if protein_id in residues:
            raise DataError(f"{proteins_path}:{lineno}: duplicate protein id {protein_id!r}")
        residues[protein_id] = seq
        protein_line[protein_id] = lineno

    spans: dict[str, list[StructureSpan]] = {pid: [] for pid in residues}
    for lineno, (protein_id, kind, start, end, sec_type) in _iter(structures_path, 5):
        if protein_id not in residues:
            raise DataError(
                f"{structures_path}:{lineno}: unknown protein id {protein_id!r}")
        try:
            kind_enum = SpanKind(kind)
        except ValueError:
            raise DataError(f"{structures_path}:{lineno}: bad kind {kind!r}") from None
        try:
            start_i, end_i = int(start), int(end)
        except ValueError:
            raise DataError(f"{structures_path}:{lineno}: non-integer positions") from None
        if kind_enum is SpanKind.TERTIARY:
            if sec_type != "-":
                raise DataError(
                    f"{structures_path}:{lineno}: tertiary spans require '-' type")
            span = StructureSpan(start_i, end_i, kind_enum)
        else:
            span = StructureSpan(start_i, end_i, kind_enum, sec_type)
        try:
            span.check(protein_id, len(residues[protein_id]))
        except DataError as exc:
            raise DataError(f"{structures_path}:{lineno}: {exc}") from None
        spans[protein_id].append(span)

    proteins = {
        pid: ProteinRecord(pid, seq, tuple(spans[pid])) for pid, seq in residues.items()
    }

    samples: list[InteractionSample] = []
    seen_pairs: dict[tuple[str, str], tuple[int, int]] = {}
    seen_triples: set[tuple[str, str, int]] = set()
    for lineno, (drug_id, protein_id, label) in _iter(interactions_path, 3):
        if drug_id not in drugs:
            raise DataError(
                f"{interactions_path}:{lineno}: interaction references unknown "
                f"drug id {drug_id!r}")
        if protein_id not in proteins:
            raise DataError(
                f"{interactions_path}:{lineno}: interaction references unknown "
                f"protein id {protein_id!r}")
        if label not in ("0", "1"):
            raise DataError(f"{interactions_path}:{lineno}: label must be 0 or 1")
        y = int(label)
        key = (drug_id, protein_id)
        if key in seen_pairs:
            prev_lineno, prev_y = seen_pairs[key]
            if prev_y != y:
                raise DataError(
                    f"{interactions_path}:{lineno}: pair {key} already labeled "
                    f"{prev_y} at line {prev_lineno}")
        seen_pairs[key] = (lineno, y)
        triple = (drug_id, protein_id, y)
        if triple in seen_triples:
            raise DataError(f"{interactions_path}:{lineno}: duplicate sample {triple}")
        seen_triples.add(triple)
        samples.append(InteractionSample(drug_id, protein_id, y))

    return Dataset(drugs, proteins, tuple(samples))


def _iter(path, n_fields):
    return _read_rows(Path(path), n_fields)


def validate(ds: Dataset) -> ValidationReport:
    """Summarize a dataset; pure counting, never raises."""
    report = ValidationReport(drugs=len(ds.drugs), proteins=len(ds.proteins))
    for s in ds.samples:
        if s.label == 1:
            report.positives += 1
        else:
            report.negatives += 1
    for p in ds.proteins.values():
        if not p.spans_of(SpanKind.SECONDARY):
            report.proteins_without_secondary += 1
        if not p.spans_of(SpanKind.TERTIARY):
            report.proteins_without_tertiary += 1
    return report
