"""Exception types raised across the toolkit."""


class DiarkitError(Exception):
    """Base class for all diarkit errors."""


# --- audio I/O ---

class NotWavError(DiarkitError):
    """File is not a RIFF/WAVE container."""


class UnsupportedEncodingError(DiarkitError):
    """WAV encoding other than PCM-16 or IEEE float-32."""


class TruncatedFileError(DiarkitError):
    """Declared chunk length exceeds the bytes actually present."""


class EmptyInputError(DiarkitError):
    """No samples / no channels where at least one is required."""


class LengthMismatchError(DiarkitError):
    """Parallel sequences differ in length."""


class RateMismatchError(DiarkitError):
    """Sample rate differs from the configured rate (no implicit resampling)."""

    def __init__(self, actual: int, expected: int):
        super().__init__(f"sample rate {actual} Hz does not match expected {expected} Hz")
        self.actual = actual
        self.expected = expected


# --- features ---

class DegenerateFilterError(DiarkitError):
    """A mel filter would be all-zero at the given FFT resolution."""


class TooShortError(DiarkitError):
    """Signal shorter than one analysis window/frame."""


# --- VAD ---

class BadLevelError(DiarkitError):
    """Aggressiveness level outside the supported 0..3 range."""


# --- segmentation / CLI ---

class BadParamsError(DiarkitError):
    """Parameter combination violates a precondition."""


# --- embeddings ---

class EmptySubsegmentError(DiarkitError):
    """Subsegment covers no feature frames."""


class DimensionMismatchError(DiarkitError):
    """Embedding store contains vectors of inconsistent dimension."""


class MissingEntryError(DiarkitError):
    """No store entry matches the requested subsegment key."""


class ZeroVectorError(DiarkitError):
    """Cannot normalize a zero-norm vector."""


# --- clustering ---

class NoConvergenceError(DiarkitError):
    """Eigensolver failed to converge within the sweep cap."""

    def __init__(self, sweeps: int, residual: float):
        super().__init__(f"no convergence after {sweeps} sweeps (residual {residual:.3e})")
        self.sweeps = sweeps
        self.residual = residual


class BadKError(DiarkitError):
    """Requested more clusters than points."""


# --- parsing / scoring ---

class ParseError(DiarkitError):
    """Malformed text input; carries the 1-based line number when known."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class EmptyReferenceError(DiarkitError):
    """Reference contains no scored speaker time (DER denominator is zero)."""


class FileSetMismatchError(DiarkitError):
    """Hypothesis contains files absent from the reference."""

    def __init__(self, files):
        super().__init__("hypothesis-only files cannot be scored: " + ", ".join(sorted(files)))
        self.files = sorted(files)
