import numpy as np
import pytest

from colddti import synthetic, tokenizer
from colddti.autodiff import Tensor
from colddti.embeddings import ToyEmbeddingProvider
from colddti.errors import AuditError, ConfigError
from colddti.fusion import bce_loss
from colddti.model import forward, init_model, validate_ablation
from colddti.train import (AdamState, TrainConfig, adam_step, finite_diff_audit,
                           load_checkpoint, load_config, lr_at_epoch,
                           save_checkpoint, train)


def small_setup(dim=8, seed=1, n_drugs=6, n_proteins=6, n_samples=16):
    ds = synthetic.generate(n_drugs=n_drugs, n_proteins=n_proteins,
                            n_samples=n_samples, seed=seed)
    vocab = tokenizer.build_vocabulary(ds)
    provider = ToyEmbeddingProvider(vocab, dim=dim, seed=seed)
    params = init_model(dim, dim, k=dim, hidden=(16,), seed=seed)
    return ds, provider, params


def batch_loss_fn(ds, samples, provider, params, ablation=frozenset()):
    def loss_fn():
        total = None
        for s in samples:
            state = forward(ds.drugs[s.drug_id], ds.proteins[s.protein_id],
                            provider, params, ablation)
            term = bce_loss(state.y_hat, s.label)
            total = term if total is None else total + term
        return total * (1.0 / len(samples))
    return loss_fn


# ----------------------------------------------------------------------
# schedule and optimizer
# ----------------------------------------------------------------------

def test_lr_schedule():
    cfg = TrainConfig()
    assert lr_at_epoch(cfg, 0) == 5e-5
    assert lr_at_epoch(cfg, 4) == 5e-5
    assert lr_at_epoch(cfg, 5) == 2.5e-5
    values = [lr_at_epoch(cfg, e) for e in range(40)]
    assert values == sorted(values, reverse=True)


def test_config_validation():
    with pytest.raises(ConfigError):
        TrainConfig(learning_rate=0)
    with pytest.raises(ConfigError):
        TrainConfig(batch_size=0)
    with pytest.raises(ConfigError):
        TrainConfig(ablation=frozenset("pstq"))
    with pytest.raises(ConfigError):
        validate_ablation(frozenset("x"))


def test_load_config_rejects_unknown_keys(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text('{"learning_rate": 0.001, "bogus": 1}')
    with pytest.raises(ConfigError, match="bogus"):
        load_config(path)
    path.write_text('{"learning_rate": 0.001, "ablation": ["q"]}')
    cfg = load_config(path)
    assert cfg.ablation == frozenset("q")


def test_adam_first_step_scalar():
    theta = Tensor(np.array(0.0), requires_grad=True)
    params = {"theta": theta}
    state = AdamState(params)
    lr = 0.01
    adam_step(params, {"theta": np.array(1.0)}, state, lr, weight_decay=0.0)
    np.testing.assert_allclose(theta.data, -lr / (1 + 1e-8), rtol=1e-12)


def test_adam_zero_gradient_no_move():
    theta = Tensor(np.ones(3), requires_grad=True)
    params = {"theta": theta}
    state = AdamState(params)
    adam_step(params, {"theta": np.zeros(3)}, state, 0.1, weight_decay=0.0)
    np.testing.assert_array_equal(theta.data, np.ones(3))


def test_adam_rejects_nonfinite():
    theta = Tensor(np.ones(2), requires_grad=True)
    params = {"theta": theta}
    with pytest.raises(AuditError, match="theta"):
        adam_step(params, {"theta": np.array([1.0, np.nan])}, AdamState(params), 0.1)


# ----------------------------------------------------------------------
# training loop
# ----------------------------------------------------------------------

def test_zero_epochs_returns_initial_params():
    ds, provider, params = small_setup()
    before = {n: t.data.copy() for n, t in params.named_tensors().items()}
    cfg = TrainConfig(max_epochs=0, seed=1)
    trained, logs = train(ds, ds, provider, cfg, params=params)
    assert logs == []
    for name, tensor in trained.named_tensors().items():
        np.testing.assert_array_equal(tensor.data, before[name])


def test_training_is_deterministic():
    results = []
    for _ in range(2):
        ds, provider, params = small_setup()
        cfg = TrainConfig(max_epochs=2, batch_size=4, learning_rate=1e-3, seed=1)
        trained, logs = train(ds, ds, provider, cfg, params=params)
        results.append({n: t.data.copy() for n, t in trained.named_tensors().items()})
    for name in results[0]:
        np.testing.assert_array_equal(results[0][name], results[1][name])


def test_memorization_loss_drops():
    ds, provider, params = small_setup(n_samples=16)
    cfg = TrainConfig(max_epochs=100, batch_size=16, learning_rate=1e-2,
                      weight_decay=0.0, lr_decay_every=100, seed=1,
                      early_stop_patience=100)
    trained, logs = train(ds, ds, provider, cfg, params=params)
    # 100 epochs x 1 full batch is plenty to memorize 16 samples
    assert logs[-1].train_loss < 0.1 * logs[0].train_loss
    assert logs[-1].val_auc == 1.0


def test_ablation_masks_quaternary():
    ds, provider, params = small_setup()
    sample = ds.samples[0]
    state = forward(ds.drugs[sample.drug_id], ds.proteins[sample.protein_id],
                    provider, params, ablation=frozenset("q"))
    assert state.w_T[3] == 0.0
    assert "lq" not in state.maps and "gq" not in state.maps


def test_ablation_never_reads_quaternary_tensors():
    ds, provider, params = small_setup()
    sample = ds.samples[0]
    prot = ds.proteins[sample.protein_id]
    drug = ds.drugs[sample.drug_id]
    base = forward(drug, prot, provider, params, ablation=frozenset("q"))

    real = provider.protein_embeddings

    class Poisoned:
        """Raises on any attribute access, including .data and .shape."""
        def __getattr__(self, name):
            raise AssertionError(f"quaternary tensor read via .{name}")

    def poisoned(record):
        levels = real(record)
        levels.X_q = Poisoned()
        return levels

    provider.protein_embeddings = poisoned
    try:
        state = forward(drug, prot, provider, params, ablation=frozenset("q"))
    finally:
        provider.protein_embeddings = real
    assert float(state.y_hat.data) == float(base.y_hat.data)


def test_early_stopping_restores_best():
    ds, provider, params = small_setup()
    cfg = TrainConfig(max_epochs=6, batch_size=8, learning_rate=1e-3, seed=2,
                      early_stop_patience=2)
    trained, logs = train(ds, ds, provider, cfg, params=params)
    assert len(logs) <= 6


# ----------------------------------------------------------------------
# gradient audit
# ----------------------------------------------------------------------

def test_finite_diff_audit_passes():
    ds, provider, params = small_setup()
    named = dict(params.named_tensors(), **provider.trainable_params())
    loss_fn = batch_loss_fn(ds, ds.samples[:4], provider, params)
    report = finite_diff_audit(named, loss_fn, step=1e-4, tolerance=1e-4, seed=1)
    assert report.passed, report.max_rel_error


def test_finite_diff_audit_flags_injected_fault():
    ds, provider, params = small_setup()
    named = dict(params.named_tensors(), **provider.trainable_params())
    honest = batch_loss_fn(ds, ds.samples[:4], provider, params)

    def faulty():
        loss = honest()
        # corrupt one projection's gradient by an extra decoupled term
        extra = (params.projections["gs"].w_drug * params.projections["gs"].w_drug).sum()
        return loss + extra * 0.05 - Tensor(float((params.projections["gs"].w_drug.data ** 2).sum()) * 0.05)

    report = finite_diff_audit(named, faulty, step=1e-4, tolerance=1e-4, seed=1)
    assert "W_gs_drug" in report.failures
    assert "W_gp_drug" not in report.failures


def test_finite_diff_audit_rejects_empty():
    with pytest.raises(ConfigError):
        finite_diff_audit({}, lambda: Tensor(0.0))


def test_finite_diff_audit_rejects_bad_step():
    ds, provider, params = small_setup()
    named = params.named_tensors()
    with pytest.raises(ConfigError):
        finite_diff_audit(named, lambda: Tensor(0.0), step=0.0)


# ----------------------------------------------------------------------
# checkpoints
# ----------------------------------------------------------------------

def test_checkpoint_round_trip(tmp_path):
    ds, provider, params = small_setup()
    named = dict(params.named_tensors(), **provider.trainable_params())
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, named)
    loaded = load_checkpoint(path)
    assert set(loaded) == set(named)
    for name, tensor in named.items():
        np.testing.assert_allclose(loaded[name], tensor.data, atol=1e-6)
    assert path.read_bytes()[:4] == b"CDTP"
