"""Two-stage interaction-weighted fusion and the MLP classification head.

Stage one (intra-level) turns each level's intensity vector into softmax
weights and a convex combination of that level's rows; the quaternary
path is a literal scalar scaling without softmax. Stage two (inter-level)
softmaxes the per-level mean intensities, masking out absent levels, and
mixes the level representations into one vector per side. The joint
vector feeds a feed-forward classifier ending in a logistic unit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .attention import PROTEIN_LEVELS
from .autodiff import Tensor, as_tensor, concat, softmax
from .embeddings import DrugEmbeddings, LevelEmbeddings

PROB_CLAMP = 1e-7  # keeps log() finite in the loss


@dataclass
class IntensityVectors:
    S_p: Tensor | None
    S_s: Tensor | None
    S_t: Tensor | None
    S_q: Tensor | None  # scalar
    S_l: Tensor
    S_g: Tensor  # scalar

    def protein_level(self, level: str) -> Tensor | None:
        return getattr(self, f"S_{level}")


@dataclass
class FusionState:
    """Everything the forward pass produces past the attention maps."""
    intensities: IntensityVectors
    intra_weights: dict[str, np.ndarray] = field(default_factory=dict)
    level_repr: dict[str, Tensor] = field(default_factory=dict)
    w_T: np.ndarray | None = None
    w_D: np.ndarray | None = None
    r_T: Tensor | None = None
    r_D: Tensor | None = None
    z: Tensor | None = None
    y_hat: Tensor | None = None
    maps: dict[str, Tensor] | None = None


def intensity_vectors(maps: dict[str, Tensor]) -> IntensityVectors:
    """Per-structure interaction intensities from the raw maps.

    Protein level x: S_x = I_gx (row as vector) + per-column mean of I_lx
    over the drug-token axis. Drug side: S_l sums the row-wise means of
    the I_l* maps, S_g the means of the I_g* maps; empty or ablated
    levels contribute nothing.
    """
    protein_S: dict[str, Tensor | None] = {}
    S_l_terms: list[Tensor] = []
    S_g_terms: list[Tensor] = []
    for level in PROTEIN_LEVELS:
        local = maps.get("l" + level)
        glob = maps.get("g" + level)
        if local is None or glob is None or local.shape[1] == 0:
            protein_S[level] = None
            continue
        protein_S[level] = glob.reshape(glob.shape[1]) + local.mean(axis=0)
        S_l_terms.append(local.mean(axis=1))
        S_g_terms.append(glob.mean())
    if not S_l_terms:
        raise ValueError("no protein level available for drug intensities")
    S_l = S_l_terms[0]
    for term in S_l_terms[1:]:
        S_l = S_l + term
    S_g = S_g_terms[0]
    for term in S_g_terms[1:]:
        S_g = S_g + term
    S_q = protein_S["q"]
    if S_q is not None:
        S_q = S_q.reshape(())
    return IntensityVectors(protein_S["p"], protein_S["s"], protein_S["t"], S_q,
                            S_l, S_g)


def intra_fuse(X: Tensor, S: Tensor) -> tuple[Tensor, Tensor]:
    """Softmax the intensity vector and convex-combine the level's rows."""
    if X.shape[0] == 0:
        raise ValueError("intra_fuse called on an empty level")
    if X.shape[0] != S.shape[0]:
        raise ValueError(f"{X.shape[0]} rows vs {S.shape[0]} intensities")
    w = softmax(S)
    r = X.T @ w
    return w, r


def fuse_quaternary(X_q: Tensor, S_q: Tensor) -> Tensor:
    """r_q = S_q * x_q; the one path that scales instead of softmaxing."""
    return X_q.reshape(X_q.shape[1]) * as_tensor(S_q)


def inter_fuse_protein(S: IntensityVectors, level_repr: dict[str, Tensor],
                       present: list[str]) -> tuple[np.ndarray, Tensor]:
    """Softmax over present levels' mean intensities; absent levels get
    weight exactly 0. Returns the full 4-vector of weights and r_T."""
    if not present:
        raise ValueError("no protein level present")
    means = [S.protein_level(level).mean() for level in present]
    w_present = softmax(concat([m.reshape(1) for m in means]))
    w_full = np.zeros(len(PROTEIN_LEVELS))
    r_T = None
    for i, level in enumerate(present):
        w_full[PROTEIN_LEVELS.index(level)] = w_present.data[i]
        contrib = level_repr[level] * w_present.gather_rows([i]).reshape(())
        r_T = contrib if r_T is None else r_T + contrib
    return w_full, r_T


def inter_fuse_drug(S: IntensityVectors, r_l: Tensor,
                    r_g: Tensor) -> tuple[np.ndarray, Tensor]:
    w = softmax(concat([S.S_l.mean().reshape(1), S.S_g.reshape(1)]))
    r_D = r_l * w.gather_rows([0]).reshape(()) + r_g * w.gather_rows([1]).reshape(())
    return w.data.copy(), r_D


@dataclass
class MlpParams:
    weights: list[Tensor]  # layer i maps weights[i] (out x in)
    biases: list[Tensor]


def init_mlp(in_dim: int, hidden: tuple[int, ...], rng: np.random.Generator) -> MlpParams:
    dims = [in_dim, *hidden, 1]
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        half_width = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(Tensor(rng.uniform(-half_width, half_width, size=(fan_out, fan_in)),
                              requires_grad=True))
        biases.append(Tensor(np.zeros(fan_out), requires_grad=True))
    return MlpParams(weights, biases)


def classify(z: Tensor, params: MlpParams) -> Tensor:
    """Feed-forward with ReLU between hidden layers, logistic output."""
    h = z
    last = len(params.weights) - 1
    for i, (W, b) in enumerate(zip(params.weights, params.biases)):
        if h.shape[0] != W.shape[1]:
            raise ValueError(f"layer {i}: input size {h.shape[0]} != {W.shape[1]}")
        h = W @ h + b
        if i < last:
            h = h.relu()
    # saturated float64 sigmoid can hit exactly 0/1; keep output open-interval
    return h.reshape(()).sigmoid().clip(PROB_CLAMP, 1.0 - PROB_CLAMP)


def bce_loss(y_hat: Tensor, y: int) -> Tensor:
    """Binary cross-entropy for one sample; y_hat clamped away from 0/1."""
    p = as_tensor(y_hat).clip(PROB_CLAMP, 1.0 - PROB_CLAMP)
    if y == 1:
        return -p.log()
    return -(1.0 - p).log()


def fuse(maps: dict[str, Tensor], drug: DrugEmbeddings, prot: LevelEmbeddings,
         mlp: MlpParams) -> FusionState:
    """Run both fusion stages and the classifier for one pair."""
    S = intensity_vectors(maps)
    state = FusionState(intensities=S)

    level_matrix = {"p": prot.X_p, "s": prot.X_s, "t": prot.X_t}
    present: list[str] = []
    for level in ("p", "s", "t"):
        S_x = S.protein_level(level)
        if S_x is None:
            continue
        w, r = intra_fuse(level_matrix[level], S_x)
        state.intra_weights["w_" + level] = w.data.copy()
        state.level_repr[level] = r
        present.append(level)
    if S.S_q is not None:
        state.level_repr["q"] = fuse_quaternary(prot.X_q, S.S_q)
        present.append("q")

    w_l, r_l = intra_fuse(drug.X_l, S.S_l)
    state.intra_weights["w_l"] = w_l.data.copy()
    r_g = drug.X_g.reshape(drug.X_g.shape[1])  # single row: softmax of one is 1

    state.w_T, state.r_T = inter_fuse_protein(S, state.level_repr, present)
    state.w_D, state.r_D = inter_fuse_drug(S, r_l, r_g)
    state.z = concat([state.r_D, state.r_T])
    state.y_hat = classify(state.z, mlp)
    return state
