"""Attention-map export for case-study inspection of trained models."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .autodiff import softmax as _softmax
from .data import Dataset, SpanKind
from .errors import DataError
from .model import ModelParams, forward
from .tokenizer import expand_protein_tags


@dataclass
class AttentionDump:
    drug_id: str
    protein_id: str
    prediction: float
    maps: dict          # name -> {rows, cols, values, normalized_values}
    weights: dict       # w_p/w_s/w_t/w_l lists, w_T/w_D vectors

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.__dict__, fh, indent=2)
            fh.write("\n")


def _span_label(span) -> str:
    if span.kind is SpanKind.SECONDARY:
        return f"secondary:{span.secondary_type}:{span.start}-{span.end}"
    return f"tertiary:-:{span.start}-{span.end}"


def export_attention(params: ModelParams, drug_id: str, protein_id: str,
                     ds: Dataset, provider,
                     ablation: frozenset[str] = frozenset()) -> AttentionDump:
    """One forward pass; the exported prediction and weights are exactly
    the values the evaluation path would produce for this pair."""
    if drug_id not in ds.drugs:
        raise DataError(f"unknown drug id {drug_id!r}")
    if protein_id not in ds.proteins:
        raise DataError(f"unknown protein id {protein_id!r}")
    drug = ds.drugs[drug_id]
    protein = ds.proteins[protein_id]
    state = forward(drug, protein, provider, params, ablation)

    drug_tokens = provider.drug_tokens(drug)
    drug_labels = [f"{i + 1}:{tok}" for i, tok in enumerate(drug_tokens)]
    residue_labels = [f"{t.residue_index}:{t.text}"
                      for t in expand_protein_tags(protein) if t.kind == "residue"]
    span_labels = {
        SpanKind.SECONDARY: [_span_label(s) for s in protein.spans
                             if s.kind is SpanKind.SECONDARY],
        SpanKind.TERTIARY: [_span_label(s) for s in protein.spans
                            if s.kind is SpanKind.TERTIARY],
    }
    col_labels = {
        "p": residue_labels,
        "s": span_labels[SpanKind.SECONDARY],
        "t": span_labels[SpanKind.TERTIARY],
        "q": ["quaternary"],
    }
    row_labels = {"l": drug_labels, "g": ["global"]}

    maps = {}
    for name, tensor in state.maps.items():
        values = tensor.data
        if values.size:
            flat = _softmax(np.asarray(values.reshape(-1))).data
            normalized = flat.reshape(values.shape)
        else:
            normalized = values
        maps["I_" + name] = {
            "rows": row_labels[name[0]],
            "cols": col_labels[name[1]],
            "values": values.reshape(-1).tolist(),
            "normalized_values": normalized.reshape(-1).tolist(),
        }

    weights = {name: w.tolist() for name, w in state.intra_weights.items()}
    weights["w_T"] = state.w_T.tolist()
    weights["w_D"] = state.w_D.tolist()
    return AttentionDump(drug_id, protein_id, float(state.y_hat.data), maps, weights)
