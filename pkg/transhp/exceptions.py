"""
Domain exceptions shared by every app of the workbench
"""


class TransHPError(Exception):
    """Base class for all workbench errors"""


class DimensionError(TransHPError, ValueError):
    """Operand shapes do not agree"""

    def __init__(self, message: str, *shapes):
        if shapes:
            message = f"{message}: " + ' vs '.join(str(tuple(s)) for s in shapes)
        super().__init__(message)
        self.shapes = tuple(tuple(s) for s in shapes)


class NumericError(TransHPError, ArithmeticError):
    """Non-finite values where finite ones are required"""


class ContractError(TransHPError, RuntimeError):
    """A caller violated an operation's precondition"""


class HierarchyParseError(TransHPError, ValueError):
    """Malformed hierarchy file"""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class RecordLengthError(TransHPError, ValueError):
    """Binary dataset file has the wrong number of bytes"""

    def __init__(self, path, expected: int, actual: int):
        super().__init__(f"{path}: expected {expected} bytes, found {actual}")
        self.expected = expected
        self.actual = actual


class ConsistencyError(TransHPError, ValueError):
    """A stored label disagrees with the label hierarchy"""

    def __init__(self, message: str, record_index: int):
        super().__init__(f"record {record_index}: {message}")
        self.record_index = record_index


class DivergenceError(TransHPError, ArithmeticError):
    """Training produced a non-finite loss"""

    def __init__(self, epoch: int, batch: int, value: float):
        super().__init__(f"non-finite loss {value} at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch
        self.value = value


class CheckpointError(TransHPError, ValueError):
    """Unreadable or incompatible checkpoint"""
