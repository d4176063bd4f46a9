"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A scenario, schedule, stack or material definition is invalid."""


class NumericalError(RuntimeError):
    """An integration produced an invalid state (NaN/Inf, bound violation).

    Usually signals a too-large step size or inconsistent coefficient tables.
    """
