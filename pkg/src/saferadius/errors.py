"""Exception types shared across the toolkit."""


class InputError(ValueError):
    """Malformed or out-of-contract input data (shapes, ranges, file syntax)."""


class ConfigError(ValueError):
    """Inconsistent run configuration (bad metric, missing constants, bad mode)."""


class NumericError(ArithmeticError):
    """Non-finite value produced during inference; usually corrupt weights."""


class NonterminationError(RuntimeError):
    """A strategy replay exceeded its depth cap without reaching a terminal state."""


class OracleTooLargeError(RuntimeError):
    """An exhaustive reference computation exceeded its state budget."""
