"""Cold-start drug-target interaction prediction with multi-level
protein structure attention."""

from .data import (Dataset, DrugRecord, InteractionSample, ProteinRecord,
                   SpanKind, StructureSpan, load_dataset, validate)
from .tokenizer import (SPECIAL_TOKENS, UNK, Vocabulary, build_vocabulary,
                        expand_protein_tags, tokenize_smiles)

__version__ = "0.1.0"

__all__ = [
    "Dataset", "DrugRecord", "InteractionSample", "ProteinRecord", "SpanKind",
    "StructureSpan", "load_dataset", "validate", "SPECIAL_TOKENS", "UNK",
    "Vocabulary", "build_vocabulary", "expand_protein_tags", "tokenize_smiles",
    "__version__",
]
