"""Exception hierarchy shared by every stage of the pipeline."""


class DyGMambaError(Exception):
    """Base class; the CLI maps these to machine-readable error records."""

    kind = "error"


class ParseError(DyGMambaError, ValueError):
    kind = "parse"

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(DyGMambaError, ValueError):
    kind = "validation"


class DimensionError(DyGMambaError, ValueError):
    kind = "dimension"


class NodeIdError(DyGMambaError, IndexError):
    kind = "node_id"


class ConfigError(DyGMambaError, ValueError):
    kind = "config"


class DegenerateSplitError(DyGMambaError, ValueError):
    kind = "degenerate_split"


class StabilityError(DyGMambaError, ValueError):
    kind = "stability"


class NumericError(DyGMambaError, FloatingPointError):
    kind = "numeric"


class StateError(DyGMambaError, RuntimeError):
    kind = "state"


class BatchError(DyGMambaError, ValueError):
    kind = "batch"


class MetricError(DyGMambaError, ValueError):
    kind = "metric"


class SamplingError(DyGMambaError, ValueError):
    kind = "sampling"


class OrderError(DyGMambaError, ValueError):
    kind = "order"


class CheckpointError(DyGMambaError, OSError):
    kind = "checkpoint"
