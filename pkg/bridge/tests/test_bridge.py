import json

import numpy as np
import pytest

from colddti import synthetic
from colddti.data import DrugRecord, ProteinRecord, SpanKind, StructureSpan
from colddti.embeddings import (PrecomputedEmbeddingProvider, load_precomputed,
                                read_embedding_file)
from colddti.tokenizer import expand_protein_tags, tokenize_smiles

from colddti_bridge import BridgeConfig, BridgeError, extract_corpus
from colddti_bridge.bridge import _Encoder, _RunLog, extract_drug, extract_protein
from colddti_bridge.tiny import build_tiny_checkpoint


@pytest.fixture(scope="module")
def checkpoint(tmp_path_factory):
    return build_tiny_checkpoint(tmp_path_factory.mktemp("ckpt"), seed=3)


@pytest.fixture(scope="module")
def corpus():
    return synthetic.generate(n_drugs=5, n_proteins=5, n_samples=10, seed=4)


def extract(corpus, checkpoint, out_dir):
    cfg = BridgeConfig(checkpoint, checkpoint, str(out_dir))
    return extract_corpus(corpus, cfg)


def test_config_validation(checkpoint, tmp_path):
    with pytest.raises(BridgeError):
        BridgeConfig("", checkpoint, str(tmp_path))
    with pytest.raises(BridgeError):
        BridgeConfig(checkpoint, checkpoint, str(tmp_path), max_length=4)


def test_unresolvable_checkpoint(tmp_path):
    with pytest.raises(BridgeError, match="not resolvable"):
        _Encoder(str(tmp_path / "missing"), "cpu", [])


def test_round_trip_bit_exact(corpus, checkpoint, tmp_path):
    manifest_path = extract(corpus, checkpoint, tmp_path)
    manifest = json.loads(manifest_path.read_text())
    assert manifest["version"] == 1
    assert len(manifest["entities"]) == 10
    for entry in manifest["entities"]:
        stored = read_embedding_file(tmp_path / entry["file"],
                                     expected_sha256=entry["sha256"])
        via_core = load_precomputed(manifest_path, entry["id"],
                                    side=entry["side"])
        # both paths decode the same f32 payload; equality must be exact
        assert np.array_equal(stored, via_core)
        assert stored.shape == (entry["token_count"], manifest["dim"])
        assert np.isfinite(stored).all()


def test_token_counts_agree_with_core(corpus, checkpoint, tmp_path):
    manifest_path = extract(corpus, checkpoint, tmp_path)
    manifest = json.loads(manifest_path.read_text())
    counts = {(e["side"], e["id"]): e["token_count"]
              for e in manifest["entities"]}
    mismatches = 0
    for drug in corpus.drugs.values():
        if counts["drug", drug.id] != len(tokenize_smiles(drug.smiles)):
            mismatches += 1
    for prot in corpus.proteins.values():
        if counts["protein", prot.id] != len(expand_protein_tags(prot)):
            mismatches += 1
    assert mismatches == 0


def test_rerun_is_byte_identical(corpus, checkpoint, tmp_path):
    first = extract(corpus, checkpoint, tmp_path / "a")
    second = extract(corpus, checkpoint, tmp_path / "b")
    for entry in json.loads(first.read_text())["entities"]:
        assert ((tmp_path / "a" / entry["file"]).read_bytes()
                == (tmp_path / "b" / entry["file"]).read_bytes())
    assert first.read_bytes() == second.read_bytes()


def test_core_provider_consumes_bridge_output(corpus, checkpoint, tmp_path):
    manifest_path = extract(corpus, checkpoint, tmp_path)
    provider = PrecomputedEmbeddingProvider(manifest_path)
    drug = next(iter(corpus.drugs.values()))
    prot = next(iter(corpus.proteins.values()))
    demb = provider.drug_embeddings(drug)
    assert demb.X_l.shape == (len(tokenize_smiles(drug.smiles)), provider.dim)
    pemb = provider.protein_embeddings(prot)
    assert pemb.X_p.shape == (len(prot.residues), provider.dim)
    assert pemb.X_q.shape == (1, provider.dim)


def test_untagged_protein_token_count(checkpoint, tmp_path):
    enc = _Encoder(checkpoint, "cpu", [])
    cfg = BridgeConfig(checkpoint, checkpoint, str(tmp_path))
    log = _RunLog(checkpoint, checkpoint)
    entry = extract_protein(ProteinRecord("p0", "MKV"), enc, cfg, log)
    assert entry["token_count"] == 3


def test_helix_protein_token_count(checkpoint, tmp_path):
    from colddti.tokenizer import SPECIAL_TOKENS
    enc = _Encoder(checkpoint, "cpu", list(SPECIAL_TOKENS))
    cfg = BridgeConfig(checkpoint, checkpoint, str(tmp_path))
    log = _RunLog(checkpoint, checkpoint)
    prot = ProteinRecord("p1", "MKV",
                         (StructureSpan(1, 2, SpanKind.SECONDARY, "Helix"),))
    entry = extract_protein(prot, enc, cfg, log)
    assert entry["token_count"] == 6  # 3 residues + start tag + type + end tag


def test_multichar_smiles_subword_alignment(checkpoint, tmp_path):
    enc = _Encoder(checkpoint, "cpu", [])
    cfg = BridgeConfig(checkpoint, checkpoint, str(tmp_path))
    log = _RunLog(checkpoint, checkpoint)
    entry = extract_drug(DrugRecord("d0", "CClBr"), enc, cfg, log)
    assert entry["token_count"] == 3  # C, Cl, Br as core tokens


def test_truncation_recorded(checkpoint, tmp_path):
    enc = _Encoder(checkpoint, "cpu", [])
    cfg = BridgeConfig(checkpoint, checkpoint, str(tmp_path), max_length=8)
    log = _RunLog(checkpoint, checkpoint)
    entry = extract_drug(DrugRecord("d1", "C" * 20), enc, cfg, log)
    assert entry["token_count"] == 8
    assert entry["truncated"] is True
    assert log.truncations[0]["original"] == 20


def test_reference_token_mismatch_rejected(checkpoint, tmp_path):
    enc = _Encoder(checkpoint, "cpu", [])
    cfg = BridgeConfig(checkpoint, checkpoint, str(tmp_path))
    log = _RunLog(checkpoint, checkpoint)
    with pytest.raises(BridgeError, match="reference"):
        extract_drug(DrugRecord("d2", "CCO"), enc, cfg, log,
                     reference=["C", "C"])


def test_run_log_written(corpus, checkpoint, tmp_path):
    manifest_path = extract(corpus, checkpoint, tmp_path)
    log = json.loads((manifest_path.parent / "bridge.log.json").read_text())
    assert log["alignment"] == "subword-mean"
    assert log["protein_model"] == checkpoint
    assert log["truncations"] == []
