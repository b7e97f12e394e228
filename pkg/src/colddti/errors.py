"""Exception hierarchy shared across the package."""


class ColdDtiError(Exception):
    """Base class for all package errors."""


class DataError(ColdDtiError):
    """Malformed or inconsistent dataset files (CLI exit code 2)."""


class TokenizationError(ColdDtiError):
    """Structurally invalid SMILES or token stream."""


class EmbeddingFormatError(ColdDtiError):
    """Corrupt or mismatched precomputed-embedding files."""


class ConfigError(ColdDtiError):
    """Invalid training or split configuration."""


class AuditError(ColdDtiError):
    """Numerical audit failed (CLI exit code 3)."""
