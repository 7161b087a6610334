"""Error hierarchy shared by every app.

Each error carries the process exit code the CLI reports for it.
"""


class MorlNpgError(Exception):
    """Base class for errors raised by the morl_npg apps."""

    exit_code = 1
    kind = 'error'

    def __init__(self, message, **context):
        super().__init__(message)
        self.message = message
        self.context = context

    def as_record(self):
        """
        Build the structured error record written by the CLI.

        Returns:
            dict: success flag, error kind, message, exit code and context
        """
        record = {
            'success': False,
            'error': self.kind,
            'message': self.message,
            'exit_code': self.exit_code,
        }
        record.update(self.context)
        return record


class ConfigurationError(MorlNpgError):
    """Invalid config, MDP file, dimensions or schedule parameters."""

    exit_code = 2
    kind = 'config'


class ScalarizationDomainError(ConfigurationError):
    """Return vector outside the domain of the scalarization."""

    kind = 'domain'


class NumericDivergenceError(MorlNpgError):
    """Non-finite values appeared in an iterate."""

    exit_code = 3
    kind = 'divergence'

    def __init__(self, message, iteration=None, **context):
        super().__init__(message, iteration=iteration, **context)
        self.iteration = iteration


class OracleError(MorlNpgError):
    """A linear solve failed its residual check."""

    exit_code = 3
    kind = 'oracle'


class RefusalError(MorlNpgError):
    """The request is well formed but outside what can be computed."""

    exit_code = 4
    kind = 'refusal'


class BudgetExceededError(RefusalError):
    """Enumeration would need more terms than the configured budget."""

    kind = 'budget'

    def __init__(self, message, required=None, budget=None, **context):
        super().__init__(
            message, required=required, budget=budget, **context
        )
        self.required = required
        self.budget = budget


class UnsupportedShapeError(RefusalError):
    """The grid oracle does not support this MDP shape."""

    kind = 'unsupported_shape'


class InsufficientReplicationsError(RefusalError):
    """Monte Carlo campaign asked for too few replications."""

    kind = 'replications'
