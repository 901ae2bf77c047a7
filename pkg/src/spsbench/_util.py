"""Small shared helpers."""

from .errors import ConfigError

INT_TOL = 1e-9


def as_int(x: float, what: str) -> int:
    """Coerce a derived quantity that must be a whole number."""
    n = round(x)
    if abs(x - n) > INT_TOL:
        raise ConfigError(f"{what} must be an integer, got {x!r}")
    return int(n)
