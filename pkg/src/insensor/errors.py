"""Exception hierarchy shared by all modules.

Each exception carries the CLI exit code that reports it, so the command
front end can map failures without knowing which module raised them.
"""


class InSensorError(Exception):
    exit_code = 1


class ParseError(InSensorError):
    exit_code = 2

    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class ValidationError(ParseError):
    pass


class ShapeError(InSensorError):
    exit_code = 2


# -- data errors (exit 3) --

class DataError(InSensorError):
    exit_code = 3


class DegenerateRange(DataError):
    pass


class SymbolOutOfRange(DataError):
    pass


class EmptyBatch(DataError):
    pass


class EmptyInput(DataError):
    pass


class ShapeMismatch(DataError):
    pass


class NonFiniteInput(DataError):
    pass


class EmptyHistogram(DataError):
    pass


class UnknownSymbol(DataError):
    pass


class CorruptStream(DataError):
    pass


class SupportMismatch(DataError):
    pass


class InvalidBits(DataError):
    pass


class BadMagic(DataError):
    pass


class TruncatedPayload(DataError):
    pass


class DimOverflow(DataError):
    pass


# -- scenario errors (exit 4) --

class TopologyError(InSensorError):
    exit_code = 4
