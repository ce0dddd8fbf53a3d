"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid user input: bad measure parameters, spec strings or run options."""


class NumericalError(RuntimeError):
    """Quadrature or root-finding failed to reach the requested tolerance."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics

    def __str__(self):
        base = super().__str__()
        if not self.diagnostics:
            return base
        extra = ", ".join(f"{k}={v!r}" for k, v in sorted(self.diagnostics.items()))
        return f"{base} ({extra})"
