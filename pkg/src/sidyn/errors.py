"""Exception hierarchy shared by every sidyn module."""


class SIDynError(Exception):
    """Base class for all errors raised by sidyn."""


class ValidationError(SIDynError, ValueError):
    """A parameter or input failed its bounds check.

    ``field`` names the offending input and ``bound`` states the violated
    constraint, so callers can report the rejection without parsing text.
    """

    def __init__(self, field, value, bound):
        self.field = field
        self.value = value
        self.bound = bound
        super().__init__(f"{field}={value!r} violates {bound}")


class AlphaOutOfRange(ValidationError):
    pass


class FieldOutOfRange(ValidationError):
    pass


class NonFinite(ValidationError):
    pass


class DegeneratePopulation(SIDynError, ZeroDivisionError):
    """Portfolio at risk requested for a state with s + i == 0."""


class InvalidSpan(SIDynError, ValueError):
    pass


class NotAnEquilibrium(SIDynError, ValueError):
    pass


class NonConvergence(SIDynError, RuntimeError):
    pass


class AllDiverged(SIDynError, RuntimeError):
    """Every objective evaluation in a fit hit the divergence sentinel."""


class ScenarioSyntaxError(SIDynError, ValueError):
    def __init__(self, msg, offset):
        self.offset = offset
        super().__init__(f"{msg} (byte offset {offset})")


class SchemaError(SIDynError, ValueError):
    def __init__(self, path, expectation):
        self.path = path
        self.expectation = expectation
        super().__init__(f"{path}: {expectation}")
