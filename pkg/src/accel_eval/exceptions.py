"""Exception types raised by the evaluation pipeline."""


class TrainingError(RuntimeError):
    """The classifier cannot be trained (e.g. a single-class training set)."""


class FittingError(RuntimeError):
    """EM fitting failed, typically after repeated component collapse."""


class OracleError(RuntimeError):
    """Quadrature oracle did not converge."""


class EstimationError(RuntimeError):
    """Too many non-finite likelihood ratios during importance sampling."""


class ConfigError(ValueError):
    """Malformed configuration; ``field`` holds the dotted path of the culprit."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class PipelineError(RuntimeError):
    """Wraps a failure in one pipeline stage, naming that stage."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")
