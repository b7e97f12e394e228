"""Model parameter container and the per-sample forward pass."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .attention import MAP_NAMES, BilinearProjection, compute_all, init_projection
from .autodiff import Tensor
from .data import DrugRecord, ProteinRecord
from .errors import ConfigError
from .fusion import FusionState, MlpParams, fuse, init_mlp

DEFAULT_HIDDEN = (256, 256)


@dataclass
class ModelParams:
    projections: dict[str, BilinearProjection]
    mlp: MlpParams

    def named_tensors(self) -> dict[str, Tensor]:
        named: dict[str, Tensor] = {}
        for name, proj in self.projections.items():
            named[f"W_{name}_drug"] = proj.w_drug
            named[f"W_{name}_protein"] = proj.w_protein
        for i, (w, b) in enumerate(zip(self.mlp.weights, self.mlp.biases)):
            named[f"mlp_w{i}"] = w
            named[f"mlp_b{i}"] = b
        return named


def init_model(d_drug: int, d_protein: int, k: int | None = None,
               hidden: tuple[int, ...] = DEFAULT_HIDDEN, seed: int = 0) -> ModelParams:
    """Fresh parameters; k defaults to the embedding width (square maps)."""
    rng = np.random.default_rng(seed)
    if k is None:
        k = max(d_drug, d_protein)
    projections = {name: init_projection(k, d_drug, d_protein, rng)
                   for name in MAP_NAMES}
    mlp = init_mlp(d_drug + d_protein, hidden, rng)
    return ModelParams(projections, mlp)


def validate_ablation(ablation: frozenset[str]) -> frozenset[str]:
    bad = ablation - {"p", "s", "t", "q"}
    if bad:
        raise ConfigError(f"unknown ablation levels {sorted(bad)}")
    if ablation == {"p", "s", "t", "q"}:
        raise ConfigError("cannot ablate all four protein levels")
    return frozenset(ablation)


def forward(drug: DrugRecord, protein: ProteinRecord, provider, params: ModelParams,
            ablation: frozenset[str] = frozenset()) -> FusionState:
    """Full forward pass for one drug-protein pair.

    Ablated levels are never touched: their maps are not computed, their
    level matrices are never read, and their inter-level weight is 0.
    """
    drug_emb = provider.drug_embeddings(drug)
    prot_emb = provider.protein_embeddings(protein)
    maps = compute_all(drug_emb, prot_emb, params.projections, skip_levels=ablation)
    state = fuse(maps, drug_emb, prot_emb, params.mlp)
    state.maps = maps
    return state
