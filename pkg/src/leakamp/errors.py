"""Exception hierarchy.

Every error carries an ``exit_code`` so the command-line driver can map
library failures onto its documented process exit codes.
"""


class LeakampError(Exception):
    exit_code = 2


class ValidationError(LeakampError, ValueError):
    """Malformed input: bad weights, broken functional dependency, bad file."""


class DomainError(LeakampError, ValueError):
    """A parameter lies outside the range an operation is defined on."""


class EnumerationCapError(LeakampError):
    exit_code = 3

    def __init__(self, required, cap):
        self.required = required
        self.cap = cap
        super().__init__(
            f"exact enumeration needs {required} atoms, above the cap of {cap}"
        )


class DegenerateError(LeakampError, ArithmeticError):
    """The quantity asked for is undefined (conditioning on a null event, ...)."""

    exit_code = 4


class DegenerateConditioningError(DegenerateError):
    pass


class DegenerateAgreementError(DegenerateError):
    pass


class DegenerateOutputError(DegenerateError):
    pass


class SupportError(DegenerateError):
    """p puts mass where q has none."""


class InfeasibleProjectionError(DegenerateError):
    pass


class NotSymmetricError(DegenerateError):
    pass


class NegativeAgreementError(DomainError):
    pass


class ParameterWindowError(DomainError):
    pass


class UndefinedSymbolError(ValidationError, KeyError):
    pass


class ImperfectAgreementError(ValidationError):
    pass


class NoWitnessError(LeakampError):
    pass
