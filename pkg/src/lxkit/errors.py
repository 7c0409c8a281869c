"""Shared exception types for the toolkit.

Every contract-level failure mode has a named class so callers (and tests)
can catch exactly the condition they care about instead of string-matching
ValueError messages.
"""


class LxError(Exception):
    """Base class for all toolkit errors."""


# -- taxonomy / labels --------------------------------------------------------

class UnknownPerception(LxError, KeyError):
    """Perception id not present in the taxonomy."""


class WrongKind(LxError, ValueError):
    """Perception has the wrong kind for the requested operation."""


# -- scale scoring ------------------------------------------------------------

class OutOfRange(LxError, ValueError):
    """A scalar input falls outside its declared range."""


class MismatchedDefinition(LxError, ValueError):
    """Responses do not conform to the scale definition they were scored against."""


# -- instruction building -----------------------------------------------------

class DegenerateClass(LxError, ValueError):
    """A label class that balancing needs has zero records."""


class Unparseable(LxError, ValueError):
    """No option letter could be extracted from a model output."""


class EmptyStratumWarning(UserWarning):
    """A stratification cell has too few records to split meaningfully."""


# -- inference backend --------------------------------------------------------

class BackendError(LxError):
    """Base class for remote-backend failures."""


class HttpError(BackendError):
    def __init__(self, status: int, detail: str = ""):
        self.status = status
        super().__init__(f"HTTP {status}" + (f": {detail}" if detail else ""))


class BackendTimeout(BackendError):
    """The request exceeded the configured timeout."""


class RetriesExhausted(BackendError):
    """All retry attempts failed."""


# -- toy fine-tuning ----------------------------------------------------------

class ShapeMismatch(LxError, ValueError):
    """Array shapes are incompatible for the requested operation."""


class ZeroProbability(LxError, ValueError):
    """Cross-entropy encountered a true-token probability of exactly zero."""


class EmptyDataset(LxError, ValueError):
    """Training requires at least one example."""


# -- metrics ------------------------------------------------------------------

class LengthMismatch(LxError, ValueError):
    """Paired sequences have different lengths."""


class EmptyInput(LxError, ValueError):
    """An aggregate was requested over zero items."""


# -- SUR / mediation ----------------------------------------------------------

class RankDeficient(LxError, ValueError):
    """Design matrix does not have full column rank."""


class Underdetermined(LxError, ValueError):
    """Fewer observations than the estimation requires."""


class SingularSigma(LxError, ValueError):
    """The residual covariance estimate is not invertible."""


class NonPositiveControl(LxError, ValueError):
    """A control variable must be strictly positive before taking logs."""


class NegativeVariance(LxError, ValueError):
    """A variance input (or the delta-method radicand) is negative."""


class BootstrapError(LxError, RuntimeError):
    """Too many bootstrap replicates failed to estimate."""


# -- CSV ingestion / pipeline -------------------------------------------------

class NotUtf8(LxError, ValueError):
    """Uploaded bytes are not valid UTF-8."""


class MissingColumn(LxError, ValueError):
    """A configured column is absent from the CSV header."""


class SizeExceeded(LxError, ValueError):
    """Upload exceeds the configured size limit."""


class EmptyFile(LxError, ValueError):
    """Upload contains no header row."""


class ConfigError(LxError, ValueError):
    """Analysis configuration failed validation."""


class JobStateError(LxError, RuntimeError):
    """Illegal job state transition."""
