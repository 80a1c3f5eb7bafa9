from __future__ import annotations

from typing import List, Tuple


class FratoolError(Exception):
    """Base class for every error the toolkit raises on purpose."""

    exit_code = 1
    kind = 'error'


class DomainError(FratoolError, ValueError):
    kind = 'domain'
    exit_code = 2


class ConfigError(FratoolError):
    kind = 'config'
    exit_code = 2


class LayoutError(ConfigError):
    kind = 'layout'


class IngestionError(FratoolError):
    kind = 'ingestion'
    exit_code = 2

    def __init__(self, message: str, rows: List[Tuple[int, str]] | None = None):
        self.rows = list(rows or [])
        if self.rows:
            detail = '; '.join(f'line {line}: {reason}' for line, reason in self.rows)
            message = f'{message} ({detail})'
        super().__init__(message)


class CoverageError(FratoolError):
    kind = 'coverage'
    exit_code = 3

    def __init__(self, message: str, achievable_span_deg: float | None = None):
        self.achievable_span_deg = achievable_span_deg
        if achievable_span_deg is not None:
            message = f'{message} (achievable span {achievable_span_deg:.1f} deg)'
        super().__init__(message)


class SynthesisError(CoverageError):
    kind = 'synthesis'


class BandError(FratoolError):
    kind = 'band'
    exit_code = 2


class PatternError(FratoolError):
    kind = 'pattern'
    exit_code = 3


class DesignFormatError(FratoolError):
    kind = 'design-format'
    exit_code = 2


class MeshError(FratoolError):
    kind = 'mesh'
    exit_code = 3


class AssemblyError(MeshError):
    kind = 'assembly'


class ToolkitIOError(FratoolError):
    kind = 'io'
    exit_code = 4
