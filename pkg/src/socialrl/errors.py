"""Exception taxonomy. CLI exit codes: configuration problems -> 2, runtime
numeric problems -> 3 (see cli.py)."""


class SocialRLError(Exception):
    """Base class for all package errors."""


class ConfigurationError(SocialRLError):
    """Invalid or inconsistent configuration input."""


class TopologyError(SocialRLError):
    """Graph or combination-matrix requirement violated."""


class ModelError(SocialRLError):
    """Degenerate statistical model (e.g. an all-zero likelihood row)."""


class OffSupportError(SocialRLError):
    """An action was taken that the behavior policy assigns zero mass."""


class NumericError(SocialRLError):
    """Non-finite values or other numeric failure during a run."""
