"""Embedding extraction from pretrained transformer checkpoints.

Tokenization is delegated to colddti so the token sequences written here
are byte-identical to what the core expects; only the vectors come from
the transformer.
"""

from .bridge import (BridgeConfig, BridgeError, extract_corpus, extract_drug,
                     extract_protein)

__all__ = ["BridgeConfig", "BridgeError", "extract_corpus", "extract_drug",
           "extract_protein"]

__version__ = "0.1.0"
