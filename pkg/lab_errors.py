"""
Lab Errors
Exception hierarchy shared by every lab module.

Each error carries the process exit code the CLI reports for it:
    1 - configuration problems (file, schema, field values)
    2 - a mathematical precondition failed (invalid system, bad level, bad word)
    3 - a verification ran and found a counterexample
"""

from typing import Any, Optional


class MoranLabError(Exception):
    """Base class for all lab errors"""

    exit_code = 1

    def __init__(self, message: str, witness: Optional[Any] = None):
        super().__init__(message)
        self.witness = witness


class ConfigError(MoranLabError):
    """Invalid or unreadable configuration"""

    exit_code = 1

    def __init__(self, message: str, field_path: str = ""):
        if field_path:
            message = f"{field_path}: {message}"
        super().__init__(message)
        self.field_path = field_path


class ValidationError(MoranLabError):
    """A precondition of a mathematical operation does not hold"""

    exit_code = 2


class VerificationFailure(MoranLabError):
    """A check completed and found a counterexample"""

    exit_code = 3
