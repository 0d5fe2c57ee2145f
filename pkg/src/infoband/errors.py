"""Exception types shared across the package."""


class InfobandError(Exception):
    """Base class for all errors raised by this package."""


class CorpusError(InfobandError):
    """A corpus or ratings file is malformed or violates a precondition."""


class SequenceError(InfobandError):
    """A token sequence is structurally invalid for a model."""


class ModelError(InfobandError):
    """A model cannot produce a well-defined conditional distribution."""


class SupportCapExceeded(InfobandError):
    """Support enumeration hit its size guard.

    Carries ``count`` with the number of sequences already produced.
    """

    def __init__(self, cap: int, count: int):
        super().__init__(f"model support exceeds cap={cap} ({count} sequences enumerated)")
        self.cap = cap
        self.count = count


class DegenerateSamplesError(InfobandError):
    """Both samples of a two-sample test have zero variance; no p-value exists."""


class PipelineError(InfobandError):
    """Experiment configuration or report joining failed."""
