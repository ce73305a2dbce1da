"""Exception hierarchy shared across the package."""


class VppError(Exception):
    """Base class for all package errors."""


class ConfigurationError(VppError):
    """Invalid camera, rig, or run configuration."""


class FormatError(VppError):
    """A file does not conform to its declared format."""


class MatcherError(VppError):
    """An external matcher failed or returned an unusable result."""


class PipelineError(VppError):
    """A pipeline stage failed; carries the stage name for diagnostics."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
