"""
Workbench failures and the exit codes the CLI reports for them.
"""

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_AUDIT_FAILURE = 2
EXIT_SOLVER_FAILURE = 3


class WorkbenchError(Exception):
    """Base failure carrying a user-facing detail and an exit code."""
    exit_code = EXIT_USAGE

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class ConfigError(WorkbenchError):
    """Invalid or inconsistent configuration."""


class DatasetError(WorkbenchError, ValueError):
    """Unreadable or malformed dataset input."""


class EnumerationCapExceeded(WorkbenchError, ValueError):
    """A brute-force audit would enumerate more outcomes than allowed."""


class SolverError(WorkbenchError, RuntimeError):
    """No feasible profile could be produced."""
    exit_code = EXIT_SOLVER_FAILURE


class AuditFailure(WorkbenchError):
    """At least one privacy check failed."""
    exit_code = EXIT_AUDIT_FAILURE
