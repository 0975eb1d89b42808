"""Exception types shared across the package, mapped to CLI exit codes."""


class UsageError(ValueError):
    """Bad arguments to an API call or CLI invocation (exit code 1)."""


class ConfigError(UsageError):
    """Invalid training configuration, e.g. a step size violating eta < 1/lambda."""


class ParseError(ValueError):
    """Malformed data, model, or metrics file (exit code 2)."""

    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc += f"{path}"
        if line is not None:
            loc += f":{line}"
        super().__init__(f"{loc}: {message}" if loc else message)
        self.path = path
        self.line = line


class CapacityError(RuntimeError):
    """Model order exceeded the configured cap (exit code 3)."""


class DiagnosticFailure(RuntimeError):
    """A theory check failed on a live run (exit code 4)."""
