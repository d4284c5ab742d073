"""Exception types shared across the package.

Each error carries enough context (offsets, names, line numbers) for the CLI
to print a position-annotated message.
"""


class HDFormulaError(Exception):
    """Base class for all package errors."""


class LatexError(HDFormulaError):
    pass


class IncompleteEscape(LatexError):
    def __init__(self, position):
        self.position = position
        super().__init__(f"trailing lone backslash at offset {position}")


class UnterminatedEnvironmentName(LatexError):
    def __init__(self, position):
        self.position = position
        super().__init__(f"unterminated environment name at offset {position}")


class UnbalancedBraces(LatexError):
    def __init__(self, position):
        self.position = position
        super().__init__(f"UnbalancedBraces at offset {position}")


class MismatchedEnvironment(LatexError):
    def __init__(self, expected, found, position=None):
        self.expected = expected
        self.found = found
        self.position = position
        where = "" if position is None else f" at offset {position}"
        super().__init__(
            f"MismatchedEnvironment: expected {expected!r}, found {found!r}{where}"
        )


class TooShort(HDFormulaError):
    pass


class InfeasibleCoverage(HDFormulaError):
    pass


class InfeasibleSpec(HDFormulaError):
    pass


class SchemaError(HDFormulaError):
    def __init__(self, line, field, message=""):
        self.line = line
        self.field = field
        self.message = message
        super().__init__(f"line {line}: field {field!r}: {message}".rstrip(": "))


class EmptyCorpus(HDFormulaError):
    pass


class EmptyLabel(HDFormulaError):
    pass


class NonTerminatingRule(HDFormulaError):
    pass


class EmptyInput(HDFormulaError):
    pass


class DimensionMismatch(HDFormulaError):
    pass


class TokenOutOfVocab(HDFormulaError):
    def __init__(self, token):
        self.token = token
        super().__init__(f"token {token!r} is not in the vocabulary")


class NonFiniteLoss(HDFormulaError):
    pass
