"""Exception hierarchy shared by the library and the CLI."""


class DPAgnosticError(Exception):
    """Base class for all library errors."""


class ParameterError(DPAgnosticError, ValueError):
    """An argument is outside its valid range."""


class BudgetError(DPAgnosticError):
    """A mechanism asked for more privacy budget than remains."""


class InfeasibleError(DPAgnosticError):
    """No binomial tail cut reaches the required separation gap."""

    def __init__(self, message, achieved=None, required=None):
        super().__init__(message)
        self.achieved = achieved
        self.required = required


class ConfigError(DPAgnosticError):
    """An experiment configuration is malformed."""
