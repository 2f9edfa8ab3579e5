"""Exception types shared across the toolkit."""


class DriftbenchError(Exception):
    """Base class for all toolkit errors."""


class ParameterError(DriftbenchError):
    """A configuration or generation parameter is out of range."""


class RootNotFoundError(DriftbenchError):
    """A workload was asked to start from an object that does not exist."""


class TraceError(DriftbenchError):
    """A trace references an object unknown to the page map."""


class PlacementError(DriftbenchError):
    """An object cannot be placed (e.g. larger than a disk page)."""


class DegenerateWeightsError(DriftbenchError):
    """All region probability weights are zero; selection is undefined."""


class ConfigError(DriftbenchError):
    """An experiment configuration combines incompatible settings."""
