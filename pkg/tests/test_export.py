import json

import numpy as np
import pytest

from colddti import synthetic, tokenizer
from colddti.embeddings import ToyEmbeddingProvider
from colddti.errors import DataError
from colddti.export import export_attention
from colddti.model import forward, init_model


@pytest.fixture(scope="module")
def setup():
    ds = synthetic.generate(n_drugs=8, n_proteins=8, n_samples=20, seed=3)
    vocab = tokenizer.build_vocabulary(ds)
    provider = ToyEmbeddingProvider(vocab, dim=8, seed=3)
    params = init_model(8, 8, k=8, hidden=(16,), seed=3)
    return ds, provider, params


def test_unknown_ids_rejected(setup):
    ds, provider, params = setup
    with pytest.raises(DataError, match="drug"):
        export_attention(params, "nope", ds.samples[0].protein_id, ds, provider)
    with pytest.raises(DataError, match="protein"):
        export_attention(params, ds.samples[0].drug_id, "nope", ds, provider)


def test_dump_matches_forward_pass(setup):
    ds, provider, params = setup
    s = ds.samples[0]
    dump = export_attention(params, s.drug_id, s.protein_id, ds, provider)
    state = forward(ds.drugs[s.drug_id], ds.proteins[s.protein_id],
                    provider, params)
    assert dump.prediction == float(state.y_hat.data)
    np.testing.assert_array_equal(dump.weights["w_T"], state.w_T)
    np.testing.assert_array_equal(dump.weights["w_D"], state.w_D)


def test_dump_shapes_and_normalization(setup):
    ds, provider, params = setup
    s = ds.samples[0]
    drug = ds.drugs[s.drug_id]
    prot = ds.proteins[s.protein_id]
    dump = export_attention(params, s.drug_id, s.protein_id, ds, provider)
    n_tokens = len(provider.drug_tokens(drug))
    for name, entry in dump.maps.items():
        rows, cols = len(entry["rows"]), len(entry["cols"])
        assert len(entry["values"]) == rows * cols
        assert len(entry["normalized_values"]) == rows * cols
        if name[2] == "l":
            assert rows == n_tokens
        else:
            assert rows == 1
        if entry["normalized_values"]:
            total = sum(entry["normalized_values"])
            np.testing.assert_allclose(total, 1.0, atol=1e-9)
            assert min(entry["normalized_values"]) >= 0.0
    assert len(dump.maps["I_lp"]["cols"]) == len(prot.residues)
    assert dump.maps["I_lq"]["cols"] == ["quaternary"]


def test_intra_weights_sum_to_one(setup):
    ds, provider, params = setup
    s = ds.samples[1]
    dump = export_attention(params, s.drug_id, s.protein_id, ds, provider)
    for key, w in dump.weights.items():
        if key in ("w_T", "w_D") or not w:
            continue
        np.testing.assert_allclose(sum(w), 1.0, atol=1e-9)
    np.testing.assert_allclose(sum(dump.weights["w_T"]), 1.0, atol=1e-9)
    np.testing.assert_allclose(sum(dump.weights["w_D"]), 1.0, atol=1e-9)


def test_ablated_level_absent(setup):
    ds, provider, params = setup
    s = ds.samples[0]
    dump = export_attention(params, s.drug_id, s.protein_id, ds, provider,
                            ablation=frozenset("q"))
    assert "I_lq" not in dump.maps and "I_gq" not in dump.maps
    assert dump.weights["w_T"][3] == 0.0


def test_json_round_trip(setup, tmp_path):
    ds, provider, params = setup
    s = ds.samples[2]
    dump = export_attention(params, s.drug_id, s.protein_id, ds, provider)
    path = tmp_path / "dump.json"
    dump.write_json(path)
    raw = json.loads(path.read_text())
    assert raw["drug_id"] == s.drug_id
    assert raw["prediction"] == dump.prediction
    assert set(raw["maps"]) == set(dump.maps)
