"""SMILES tokenization, protein tag expansion, and vocabulary building.

SMILES strings are split with the standard regex over bracket atoms,
two-letter halogens, organic-subset atoms, bonds, branches, and ring
closures. Protein residue sequences are expanded with structure tags:
`[secondary_start]` + type token before the first residue of a secondary
span and `[secondary_end]` after its last, likewise `[tertiary_start]` /
`[tertiary_end]` for tertiary spans.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .data import Dataset, ProteinRecord, SpanKind, StructureSpan
from .errors import TokenizationError

SPECIAL_TOKENS = (
    "[secondary_start]", "[secondary_end]",
    "Helix", "Sheet", "Turn", "Bend",
    "[tertiary_start]", "[tertiary_end]",
)
UNK = "[UNK]"

_SMILES_RE = re.compile(
    r"(\[[^\]]*\]|Br|Cl|Si|Se|[BCNOPSFIbcnops]|\(|\)|\.|=|#|-|\+|\\|/|:|~|@|\?|>|\*|\$|%[0-9]{2}|[0-9])"
)


@dataclass(frozen=True)
class ProteinToken:
    text: str
    kind: str  # "residue" or "tag"
    residue_index: int | None = None  # 1-based, residues only


def tokenize_smiles(smiles: str) -> list[str]:
    """Split a SMILES string into local-structure tokens.

    Tokens concatenate back to the input exactly. Raises on unmatched
    brackets or characters outside the SMILES alphabet.
    """
    if not smiles:
        raise TokenizationError("empty SMILES string")
    depth = 0
    for ch in smiles:
        if ch == "[":
            depth += 1
            if depth > 1:
                raise TokenizationError(f"nested '[' in SMILES {smiles!r}")
        elif ch == "]":
            depth -= 1
            if depth < 0:
                raise TokenizationError(f"unmatched ']' in SMILES {smiles!r}")
    if depth != 0:
        raise TokenizationError(f"unmatched '[' in SMILES {smiles!r}")
    tokens = _SMILES_RE.findall(smiles)
    joined = "".join(tokens)
    if joined != smiles:
        # find the first character the regex could not consume
        pos = 0
        for tok in tokens:
            if smiles.startswith(tok, pos):
                pos += len(tok)
            else:
                break
        raise TokenizationError(
            f"character {smiles[pos]!r} at position {pos} is outside the SMILES alphabet")
    return tokens


def _span_events(record: ProteinRecord):
    """Deterministic tag-insertion schedule, independent of span order.

    At a shared boundary: start tags go before the residue with tertiary
    opening before secondary and longer spans opening first; end tags go
    after the residue with secondary closing before tertiary and shorter
    spans closing first (inner structure closes first).
    """
    starts: dict[int, list[StructureSpan]] = {}
    ends: dict[int, list[StructureSpan]] = {}
    for span in record.spans:
        span.check(record.id, len(record.residues))
        starts.setdefault(span.start, []).append(span)
        ends.setdefault(span.end, []).append(span)

    def start_key(s: StructureSpan):
        return (0 if s.kind is SpanKind.TERTIARY else 1, -s.end, s.secondary_type or "")

    def end_key(s: StructureSpan):
        return (0 if s.kind is SpanKind.SECONDARY else 1, -s.start, s.secondary_type or "")

    for pos in starts:
        starts[pos].sort(key=start_key)
    for pos in ends:
        ends[pos].sort(key=end_key)
    return starts, ends


def expand_protein_tags_with_spans(
    record: ProteinRecord,
) -> tuple[list[ProteinToken], list[list[int]]]:
    """Expand tags and report, per span (in record order), the token
    indices that pool into that span's representation: start tag, type
    token (secondary only), residues inside the span, end tag."""
    starts, ends = _span_events(record)
    tokens: list[ProteinToken] = []
    member_indices: dict[int, list[int]] = {id(s): [] for s in record.spans}
    open_spans: list[StructureSpan] = []

    def emit(token: ProteinToken, owner: StructureSpan | None = None):
        idx = len(tokens)
        tokens.append(token)
        if token.kind == "residue":
            for span in open_spans:
                if span.start <= token.residue_index <= span.end:
                    member_indices[id(span)].append(idx)
        elif owner is not None:
            member_indices[id(owner)].append(idx)

    for pos, residue in enumerate(record.residues, start=1):
        for span in starts.get(pos, ()):
            if span.kind is SpanKind.SECONDARY:
                emit(ProteinToken("[secondary_start]", "tag"), owner=span)
                emit(ProteinToken(span.secondary_type, "tag"), owner=span)
            else:
                emit(ProteinToken("[tertiary_start]", "tag"), owner=span)
            open_spans.append(span)
        emit(ProteinToken(residue, "residue", pos))
        for span in ends.get(pos, ()):
            tag = "[secondary_end]" if span.kind is SpanKind.SECONDARY else "[tertiary_end]"
            emit(ProteinToken(tag, "tag"), owner=span)
            open_spans.remove(span)

    return tokens, [member_indices[id(s)] for s in record.spans]


def expand_protein_tags(record: ProteinRecord) -> list[ProteinToken]:
    return expand_protein_tags_with_spans(record)[0]


@dataclass(frozen=True)
class Vocabulary:
    drug: dict[str, int]
    protein: dict[str, int]

    def drug_index(self, token: str) -> int:
        return self.drug.get(token, self.drug[UNK])

    def protein_index(self, token: str) -> int:
        return self.protein.get(token, self.protein[UNK])


def build_vocabulary(corpus: Dataset) -> Vocabulary:
    """Token -> index maps for both sides; indices are assigned in
    lexicographic token order so the result is deterministic."""
    drug_tokens: set[str] = set()
    for drug in corpus.drugs.values():
        drug_tokens.update(tokenize_smiles(drug.smiles))
    drug_tokens.add(UNK)

    protein_tokens: set[str] = set(SPECIAL_TOKENS)
    protein_tokens.add(UNK)
    for prot in corpus.proteins.values():
        protein_tokens.update(prot.residues)

    return Vocabulary(
        drug={tok: i for i, tok in enumerate(sorted(drug_tokens))},
        protein={tok: i for i, tok in enumerate(sorted(protein_tokens))},
    )
