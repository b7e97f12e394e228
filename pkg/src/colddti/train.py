"""Training loop, Adam optimizer, schedule, early stopping, and the
finite-difference gradient auditor."""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .autodiff import Tensor
from .data import Dataset
from .errors import AuditError, ConfigError
from .fusion import bce_loss
from .metrics import roc_auc
from .model import ModelParams, forward, init_model, validate_ablation

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

CHECKPOINT_MAGIC = b"CDTP"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 5e-5
    weight_decay: float = 1e-4
    batch_size: int = 64
    max_epochs: int = 20
    lr_decay_factor: float = 0.5
    lr_decay_every: int = 5
    seed: int = 0
    early_stop_patience: int = 5
    ablation: frozenset = frozenset()

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if not (0 < self.lr_decay_factor <= 1):
            raise ConfigError("lr_decay_factor must be in (0, 1]")
        if self.max_epochs < 0:
            raise ConfigError("max_epochs must be >= 0")
        object.__setattr__(self, "ablation", validate_ablation(frozenset(self.ablation)))

    def as_dict(self) -> dict:
        d = dict(self.__dict__)
        d["ablation"] = sorted(self.ablation)
        return d


def load_config(path) -> TrainConfig:
    """Read a JSON config mirroring TrainConfig fields; unknown keys are
    rejected."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    known = set(TrainConfig.__dataclass_fields__)
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "ablation" in raw:
        raw["ablation"] = frozenset(raw["ablation"])
    return TrainConfig(**raw)


def lr_at_epoch(cfg: TrainConfig, epoch: int) -> float:
    if epoch < 0:
        raise ConfigError("epoch must be >= 0")
    return cfg.learning_rate * cfg.lr_decay_factor ** (epoch // cfg.lr_decay_every)


class AdamState:
    """First/second moment accumulators mirroring the parameter dict."""

    def __init__(self, params: dict[str, Tensor]):
        self.m = {name: np.zeros_like(p.data) for name, p in params.items()}
        self.v = {name: np.zeros_like(p.data) for name, p in params.items()}
        self.t = 0


def adam_step(params: dict[str, Tensor], grads: dict[str, np.ndarray],
              state: AdamState, lr: float, weight_decay: float = 0.0) -> None:
    """Bias-corrected Adam with classic L2-coupled weight decay."""
    state.t += 1
    t = state.t
    for name, p in params.items():
        g = grads[name]
        if not np.all(np.isfinite(g)):
            raise AuditError(f"non-finite gradient for parameter {name!r}")
        if weight_decay:
            g = g + weight_decay * p.data
        state.m[name] = ADAM_BETA1 * state.m[name] + (1 - ADAM_BETA1) * g
        state.v[name] = ADAM_BETA2 * state.v[name] + (1 - ADAM_BETA2) * g**2
        m_hat = state.m[name] / (1 - ADAM_BETA1**t)
        v_hat = state.v[name] / (1 - ADAM_BETA2**t)
        p.data -= lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)


@dataclass
class EpochLog:
    epoch: int
    lr: float
    train_loss: float
    val_auc: float


def _batch_grads(batch, ds: Dataset, provider, params: ModelParams,
                 ablation: frozenset[str]) -> tuple[float, dict[str, np.ndarray]]:
    """Mean loss and mean gradients over a batch, accumulated in fixed
    sample order for bit-determinism."""
    named = dict(params.named_tensors(), **provider.trainable_params())
    total = {name: np.zeros_like(p.data) for name, p in named.items()}
    loss_sum = 0.0
    for sample in batch:
        for p in named.values():
            p.grad = None
        state = forward(ds.drugs[sample.drug_id], ds.proteins[sample.protein_id],
                        provider, params, ablation)
        loss = bce_loss(state.y_hat, sample.label)
        loss.backward()
        loss_sum += float(loss.data)
        for name, p in named.items():
            if p.grad is not None:
                total[name] += p.grad
    scale = 1.0 / len(batch)
    return loss_sum * scale, {name: g * scale for name, g in total.items()}


def predict_scores(ds: Dataset, samples, provider, params: ModelParams,
                   ablation: frozenset[str] = frozenset()) -> np.ndarray:
    return np.array([
        float(forward(ds.drugs[s.drug_id], ds.proteins[s.protein_id],
                      provider, params, ablation).y_hat.data)
        for s in samples
    ])


def _snapshot(named: dict[str, Tensor]) -> dict[str, np.ndarray]:
    return {name: p.data.copy() for name, p in named.items()}


def _restore(named: dict[str, Tensor], snap: dict[str, np.ndarray]) -> None:
    for name, p in named.items():
        p.data = snap[name].copy()


def train(ds_train: Dataset, ds_val: Dataset, provider, cfg: TrainConfig,
          params: ModelParams | None = None,
          progress=None) -> tuple[ModelParams, list[EpochLog]]:
    """Mini-batch training with per-epoch validation AUC, early stopping,
    and best-epoch parameter restoration."""
    if not ds_train.samples:
        raise ConfigError("training set is empty")
    if params is None:
        params = init_model(provider.drug_dim, provider.protein_dim, seed=cfg.seed)
    named = dict(params.named_tensors(), **provider.trainable_params())
    opt = AdamState(named)
    rng = np.random.default_rng(cfg.seed)
    logs: list[EpochLog] = []
    best_auc = -np.inf
    best_snap = _snapshot(named)
    epochs_since_best = 0

    n = len(ds_train.samples)
    for epoch in range(cfg.max_epochs):
        lr = lr_at_epoch(cfg, epoch)
        order = rng.permutation(n)
        loss_acc = 0.0
        for lo in range(0, n, cfg.batch_size):
            batch = [ds_train.samples[i] for i in order[lo:lo + cfg.batch_size]]
            loss, grads = _batch_grads(batch, ds_train, provider, params, cfg.ablation)
            loss_acc += loss * len(batch)
            adam_step(named, grads, opt, lr, cfg.weight_decay)
        scores = predict_scores(ds_val, ds_val.samples, provider, params, cfg.ablation)
        labels = np.array([s.label for s in ds_val.samples])
        val_auc = roc_auc(scores, labels) if len(set(labels)) == 2 else 0.5
        log = EpochLog(epoch, lr, loss_acc / n, val_auc)
        logs.append(log)
        if progress is not None:
            progress(log)
        if val_auc > best_auc:
            best_auc = val_auc
            best_snap = _snapshot(named)
            epochs_since_best = 0
        else:
            epochs_since_best += 1
            if epochs_since_best >= cfg.early_stop_patience:
                break
    _restore(named, best_snap)
    return params, logs


# ----------------------------------------------------------------------
# gradient audit
# ----------------------------------------------------------------------

@dataclass
class AuditReport:
    max_rel_error: dict[str, float]
    tolerance: float

    @property
    def failures(self) -> list[str]:
        return [name for name, err in self.max_rel_error.items()
                if err > self.tolerance]

    @property
    def passed(self) -> bool:
        return not self.failures


def finite_diff_audit(named: dict[str, Tensor], loss_fn, step: float = 1e-4,
                      tolerance: float = 1e-4, samples_per_group: int = 5,
                      seed: int = 0) -> AuditReport:
    """Compare analytic gradients of `loss_fn()` against central finite
    differences on a random element sample of each parameter group.

    `loss_fn` must rebuild the graph from the current parameter values
    on every call and return a scalar Tensor.
    """
    if step <= 0:
        raise ConfigError("finite-difference step must be > 0")
    if not named:
        raise ConfigError("no parameters to audit")
    for p in named.values():
        p.grad = None
    loss = loss_fn()
    loss.backward()
    analytic = {name: (p.grad if p.grad is not None else np.zeros_like(p.data))
                for name, p in named.items()}

    rng = np.random.default_rng(seed)
    report: dict[str, float] = {}
    for name, p in named.items():
        flat = p.data.reshape(-1)
        size = flat.size
        picks = rng.choice(size, size=min(samples_per_group, size), replace=False)
        worst = 0.0
        for idx in picks:
            orig = flat[idx]
            flat[idx] = orig + step
            f_plus = float(loss_fn().data)
            flat[idx] = orig - step
            f_minus = float(loss_fn().data)
            flat[idx] = orig
            numeric = (f_plus - f_minus) / (2 * step)
            a = analytic[name].reshape(-1)[idx]
            denom = max(abs(a), abs(numeric))
            err = abs(a - numeric) if denom < 1e-6 else abs(a - numeric) / denom
            worst = max(worst, err)
        report[name] = worst
    return AuditReport(report, tolerance)


# ----------------------------------------------------------------------
# checkpoint serialization
# ----------------------------------------------------------------------

def save_checkpoint(path, named: dict[str, Tensor]) -> None:
    """Flat binary of named tensors (magic CDTP, little-endian f32)."""
    chunks = [CHECKPOINT_MAGIC, struct.pack("<HI", CHECKPOINT_VERSION, len(named))]
    for name in sorted(named):
        data = np.ascontiguousarray(named[name].data, dtype="<f4")
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<B", data.ndim))
        chunks.append(struct.pack(f"<{data.ndim}I", *data.shape))
        chunks.append(data.tobytes())
    Path(path).write_bytes(b"".join(chunks))


def load_checkpoint(path) -> dict[str, np.ndarray]:
    raw = Path(path).read_bytes()
    if raw[:4] != CHECKPOINT_MAGIC:
        raise ConfigError(f"{path}: not a checkpoint file")
    version, count = struct.unpack("<HI", raw[4:10])
    if version != CHECKPOINT_VERSION:
        raise ConfigError(f"{path}: unsupported checkpoint version {version}")
    offset = 10
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack("<H", raw[offset:offset + 2])
        offset += 2
        name = raw[offset:offset + name_len].decode("utf-8")
        offset += name_len
        rank = raw[offset]
        offset += 1
        shape = struct.unpack(f"<{rank}I", raw[offset:offset + 4 * rank])
        offset += 4 * rank
        size = int(np.prod(shape)) if rank else 1
        data = np.frombuffer(raw[offset:offset + 4 * size], dtype="<f4")
        offset += 4 * size
        tensors[name] = data.reshape(shape).astype(np.float64)
    return tensors
