"""Exception hierarchy shared by the solvers and the command line driver."""


class MfgError(Exception):
    """Base class for all errors raised by :mod:`mfgpi`."""


class SingularSystem(MfgError):
    """A square linear system could not be solved to the requested accuracy."""


class RankDeficient(MfgError):
    """A least-squares system has no unique minimizer."""


class MaxIterationsExceeded(MfgError):
    """An outer iteration hit its iteration cap before meeting the tolerance.

    The last iterate and the convergence log are attached so callers can
    still inspect or serialize them.
    """

    def __init__(self, message, state=None, log=None):
        super().__init__(message)
        self.state = state
        self.log = log


class ConfigError(MfgError):
    """Invalid or inconsistent run configuration."""


class UnknownId(ConfigError):
    """A named built-in (potential, coupling, initial data) does not exist."""
