"""Exception hierarchy shared across the pipeline."""


class RvosError(Exception):
    """Base class for every error raised by this package."""


# --- mask algebra ---

class DimensionMismatch(RvosError):
    pass


class MalformedRle(RvosError):
    pass


class LengthMismatch(RvosError):
    pass


# --- video store ---

class EmptyClip(RvosError):
    pass


class InconsistentDimensions(RvosError):
    pass


class UnreadableFrame(RvosError):
    pass


class ShapeOutOfCanvas(RvosError):
    pass


class SceneSpecError(RvosError):
    pass


# --- backends ---

class BackendFailure(RvosError):
    """Base for failures attributable to an external model service."""


class Timeout(BackendFailure):
    pass


class Transport(BackendFailure):
    pass


class SchemaViolation(BackendFailure):
    """Structured response requested but the text did not validate.

    Carries the raw model text so callers can include it in a repair re-ask.
    """

    def __init__(self, message: str, raw_text: str = ""):
        super().__init__(message)
        self.raw_text = raw_text


class BadImage(BackendFailure):
    pass


class OutOfRange(BackendFailure):
    pass


class EmptySeed(BackendFailure):
    pass


class UnknownSession(BackendFailure):
    pass


class FixtureExhausted(RvosError):
    """A scripted chat fixture ran out of matching entries.

    Deliberately not a BackendFailure: fixtures failing means the test setup
    drifted from the prompts actually sent, which must surface loudly instead
    of triggering fallback behavior.
    """


# --- pipeline semantics ---

class ProtocolViolation(RvosError):
    pass


class InvariantViolation(RvosError):
    pass


class Unrefinable(RvosError):
    pass


# --- file formats ---

class ManifestParse(RvosError):
    pass


class ConfigError(RvosError):
    """A run cannot start: endpoint or option wiring is wrong."""


class PredictionParse(RvosError):
    pass
