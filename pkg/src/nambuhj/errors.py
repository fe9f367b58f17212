"""Exception hierarchy shared by every module."""


class NambuError(Exception):
    """Base class for all errors raised by nambuhj."""


class InvalidInputError(NambuError, ValueError):
    pass


class DomainError(NambuError, ArithmeticError):
    """An operation was evaluated outside its domain (log of a negative, pole, ...)."""

    def __init__(self, operation, message=None):
        self.operation = operation
        super().__init__(message or f"domain error in {operation}")


class DegeneratePointError(DomainError):
    pass


class ParseError(NambuError, ValueError):
    """Syntax error in an expression; ``offset`` is the byte offset of the failure."""

    def __init__(self, message, offset=None, text=None):
        self.offset = offset
        self.text = text
        if offset is not None:
            message = f"{message} at offset {offset}"
        super().__init__(message)


class UnknownIdentifierError(ParseError):
    def __init__(self, name, offset=None, text=None):
        self.name = name
        super().__init__(f"unknown identifier {name!r}", offset, text)


class ArityError(ParseError):
    pass


class UnboundParameterError(NambuError, KeyError):
    def __init__(self, name):
        self.name = name
        super().__init__(name)

    def __str__(self):
        return f"parameter {self.name!r} has no binding"


class DivergenceError(NambuError, RuntimeError):
    """Integration produced a non-finite or runaway state."""

    def __init__(self, time, message=None):
        self.time = time
        super().__init__(message or f"trajectory diverged at t={time!r}")


class ConfigError(NambuError, ValueError):
    """Aggregated configuration problems; ``problems`` lists every (line, message)."""

    def __init__(self, problems):
        self.problems = list(problems)
        lines = []
        for line, msg in self.problems:
            lines.append(f"line {line}: {msg}" if line is not None else msg)
        super().__init__("invalid configuration:\n  " + "\n  ".join(lines))
