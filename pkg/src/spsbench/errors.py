"""Exception types shared across the workbench."""


class ConfigError(ValueError):
    """Invalid scheduler or scenario configuration."""


class ModelError(Exception):
    """Base class for analytical-model validity violations."""


class OverloadError(ModelError):
    """The expected number of available RBGs is non-positive: the network is
    loaded beyond the model's validity domain."""


class DomainError(ModelError):
    """An input lies outside the domain a formula is derived for."""


class IterationError(ModelError):
    """Fixed-point iteration failed to converge."""

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(f"{message} (residual {residual:.3e})" if residual == residual else message)
        self.residual = residual
