"""Builds small random BERT checkpoints on local disk.

The bridge accepts any hub identifier or local path; tests and offline
demos use these tiny checkpoints so extraction runs in seconds without
network access. The vocabulary covers single characters plus a few
multi-character SMILES tokens, so subword alignment is exercised.
"""

from __future__ import annotations

import string
from pathlib import Path

import torch
from transformers import BertConfig, BertModel, BertTokenizerFast

_BASE_VOCAB = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]


def build_tiny_checkpoint(out_dir, hidden_size: int = 32, seed: int = 0,
                          extra_words: tuple[str, ...] = ()) -> str:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    vocab = list(_BASE_VOCAB)
    vocab += list(string.ascii_uppercase) + list(string.ascii_lowercase)
    vocab += list(string.digits)
    vocab += ["(", ")", "=", "#", "-", "+", ".", "/", "\\", "@", "%"]
    vocab += ["Cl", "Br", "##l", "##r"]  # continuation pieces for Cl/Br
    vocab += list(extra_words)
    (out / "vocab.txt").write_text("\n".join(vocab) + "\n", encoding="utf-8")
    tokenizer = BertTokenizerFast(str(out / "vocab.txt"), do_lower_case=False)
    tokenizer.save_pretrained(out)

    torch.manual_seed(seed)
    config = BertConfig(vocab_size=len(vocab), hidden_size=hidden_size,
                        num_hidden_layers=2, num_attention_heads=2,
                        intermediate_size=2 * hidden_size,
                        max_position_embeddings=2048)
    BertModel(config).save_pretrained(out)
    return str(out)
