"""Exception hierarchy shared across the engine."""


class EngineError(Exception):
    """Base class for all engine failures."""


class ValidationError(EngineError):
    """Input rejected before any processing happened."""


class DimensionMismatch(ValidationError):
    def __init__(self, field, expected, actual):
        super().__init__(f"{field}: expected {expected}, got {actual}")
        self.field = field
        self.expected = expected
        self.actual = actual


class NonFiniteValue(ValidationError):
    def __init__(self, field, index):
        super().__init__(f"{field}: non-finite value at {index}")
        self.field = field
        self.index = index


class MissingCamera(ValidationError):
    def __init__(self, role):
        super().__init__(f"camera '{role}' missing from frame")
        self.role = role


class IndivisibleGrid(ValidationError):
    def __init__(self, image_dims, grid_dims):
        super().__init__(f"image {image_dims} not divisible by grid {grid_dims}")


class BadConfig(ValidationError):
    def __init__(self, key, reason=""):
        msg = f"bad config key '{key}'"
        if reason:
            msg += f": {reason}"
        super().__init__(msg)
        self.key = key


class LengthMismatch(ValidationError):
    pass


class NegativeAttention(ValidationError):
    pass


class WarmupComplete(EngineError):
    pass


class WarmupIncomplete(EngineError):
    pass


class IndexOutOfRange(ValidationError):
    pass


class TooLarge(EngineError):
    pass


class PlanStale(EngineError):
    pass


class EmptyChunk(ValidationError):
    pass


class NonMonotonicFrame(ValidationError):
    pass


class InvalidSpec(ValidationError):
    pass


class TraceIOError(EngineError):
    """Trace directory unreadable or malformed."""
