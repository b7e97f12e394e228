"""Bilinear interaction attention maps between drug and protein levels.

Eight maps are computed, one per (drug level, protein level) pair:
local/global x primary/secondary/tertiary/quaternary. Structures are
stored as rows, so each map is (X_a W_a^T)(X_b W_b^T)^T. Maps are raw
intensities; normalization happens at fusion time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor
from .embeddings import DrugEmbeddings, LevelEmbeddings

MAP_NAMES = ("lp", "ls", "lt", "lq", "gp", "gs", "gt", "gq")
PROTEIN_LEVELS = ("p", "s", "t", "q")
DRUG_LEVELS = ("l", "g")


@dataclass
class BilinearProjection:
    """The pair of learnable matrices behind one interaction map.

    w_drug is k x d_drug, w_protein is k x d_protein.
    """
    w_drug: Tensor
    w_protein: Tensor

    @property
    def k(self) -> int:
        return self.w_drug.shape[0]


def init_projection(k: int, d_drug: int, d_protein: int,
                    rng: np.random.Generator) -> BilinearProjection:
    def uniform(rows, cols):
        half_width = np.sqrt(6.0 / (rows + cols))
        return Tensor(rng.uniform(-half_width, half_width, size=(rows, cols)),
                      requires_grad=True)

    return BilinearProjection(uniform(k, d_drug), uniform(k, d_protein))


def interaction_map(x_drug: Tensor, x_protein: Tensor,
                    proj: BilinearProjection) -> Tensor:
    """Raw intensity matrix; entry (i, j) couples drug structure i with
    protein structure j through the shared k-dimensional projection."""
    if x_drug.shape[1] != proj.w_drug.shape[1]:
        raise ValueError(
            f"drug width {x_drug.shape[1]} != projection width {proj.w_drug.shape[1]}")
    if x_protein.shape[1] != proj.w_protein.shape[1]:
        raise ValueError(
            f"protein width {x_protein.shape[1]} != projection width "
            f"{proj.w_protein.shape[1]}")
    return (x_drug @ proj.w_drug.T) @ (x_protein @ proj.w_protein.T).T


def compute_all(drug: DrugEmbeddings, prot: LevelEmbeddings,
                projections: dict[str, BilinearProjection],
                skip_levels: frozenset[str] = frozenset()) -> dict[str, Tensor]:
    """All eight maps keyed by name ("lp" ... "gq"). Protein levels in
    `skip_levels` (ablation) are omitted entirely."""
    drug_side = {"l": drug.X_l, "g": drug.X_g}
    protein_side = {"p": prot.X_p, "s": prot.X_s, "t": prot.X_t, "q": prot.X_q}
    maps: dict[str, Tensor] = {}
    for name in MAP_NAMES:
        d_level, p_level = name
        if p_level in skip_levels:
            continue
        try:
            maps[name] = interaction_map(drug_side[d_level], protein_side[p_level],
                                         projections[name])
        except ValueError as exc:
            raise ValueError(f"map I_{name}: {exc}") from None
    return maps
