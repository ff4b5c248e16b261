"""Exception types raised across the simulator."""


class ParameterError(ValueError):
    """A physical parameter or function argument is out of its valid range."""


class ConfigError(ValueError):
    """Configuration file is malformed, has unknown keys, or invalid values."""


class InitError(RuntimeError):
    """Steady-state initialization failed to converge."""


class TransferCapabilityError(InitError):
    """Requested power exceeds the static transfer capability of an AC link."""


class SimulationAbort(RuntimeError):
    """Integration produced a non-finite state or violated a hard invariant."""

    def __init__(self, message: str, channel: str = "", time: float = float("nan")):
        super().__init__(message)
        self.channel = channel
        self.time = time


class FormulaDomainError(ValueError):
    """Closed-form steady-state expression evaluated outside its domain."""


class SingularFormulaError(FormulaDomainError):
    """Closed form is singular for the given inputs (zero DC resistance)."""


class OracleError(RuntimeError):
    """Numerical steady-state oracle could not bracket a root."""
