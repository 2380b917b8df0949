"""Exception hierarchy shared across the pipeline."""


class IcsFusionError(Exception):
    """Base class for all toolkit errors."""


# ingest
class ParseError(IcsFusionError):
    pass


class MissingDirective(ParseError):
    pass


class SchemaMismatch(ParseError):
    pass


class MissingField(ParseError):
    pass


class FieldCountError(ParseError):
    def __init__(self, lineno, expected, got):
        super().__init__(f"line {lineno}: expected {expected} fields, got {got}")
        self.lineno = lineno


class FieldTypeError(ParseError):
    def __init__(self, lineno, field, value, zeek_type):
        super().__init__(f"line {lineno}: field {field!r} value {value!r} is not a valid {zeek_type}")
        self.lineno = lineno
        self.field = field


class HeaderMissing(ParseError):
    pass


class UnknownTag(ParseError):
    pass


# fusion
class EmptySeries(IcsFusionError):
    pass


class NoOverlap(IcsFusionError):
    pass


class OverlapError(IcsFusionError):
    pass


# features
class EmptySelection(IcsFusionError):
    pass


# balance
class TooFewMinority(IcsFusionError):
    pass


class NotTrainingSplit(IcsFusionError):
    pass


# reduce
class DegenerateInput(IcsFusionError):
    pass


class DimensionMismatch(IcsFusionError):
    pass


# models
class EmptyTrainingSet(IcsFusionError):
    pass


class NonFiniteLoss(IcsFusionError):
    pass


class ShapeMismatch(IcsFusionError):
    pass


class BadFuzziness(IcsFusionError):
    pass


# eval
class TooFewRows(IcsFusionError):
    pass


class FoldTooSmall(IcsFusionError):
    pass


# simulate
class OverlappingWindows(OverlapError):
    pass


class ConfigError(IcsFusionError):
    """Invalid configuration; ``key`` names the offending dotted path."""

    def __init__(self, key, message, path=None):
        where = f"{path}: " if path else ""
        super().__init__(f"{where}{key}: {message}")
        self.key = key
        self.path = path


class StageError(IcsFusionError):
    """Wraps an error raised inside a named pipeline stage."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause
