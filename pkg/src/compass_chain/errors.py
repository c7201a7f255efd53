"""Exception hierarchy shared by the library and the CLI (exit codes live here)."""


class CompassError(Exception):
    exit_code = 1


class ConfigError(CompassError, ValueError):
    exit_code = 2


class NumericalConsistencyError(CompassError, ArithmeticError):
    exit_code = 3


class SizeLimitError(CompassError, ValueError):
    exit_code = 4
