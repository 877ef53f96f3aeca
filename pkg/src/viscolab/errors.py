"""Exception and warning types raised by viscolab."""


class ViscolabError(Exception):
    """Base class for all solver errors."""


class BracketFailure(ViscolabError):
    """A scalar root could not be bracketed by a sign change."""

    def __init__(self, message, interval=None):
        super().__init__(message)
        self.interval = interval


class NonconvergedODE(ViscolabError):
    pass


class QuadratureUnderflow(ViscolabError):
    pass


class BandEscape(ViscolabError):
    """A shock trajectory left the band between its two periodic states."""


class AsymptoteUnresolved(ViscolabError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class RateUnresolved(ViscolabError):
    """Residuals hit the floating floor before enough periods were seen.

    ``lower_bound`` is the rate implied by the decay observed before the
    floor was reached (0 if nothing could be measured).
    """

    def __init__(self, message, lower_bound=0.0):
        super().__init__(message)
        self.lower_bound = lower_bound


class TailUnresolved(ViscolabError):
    pass


class CFLViolation(ViscolabError):
    pass


class SolverFailure(ViscolabError):
    pass


class GridMismatch(ViscolabError):
    pass


class InsufficientRoom(ViscolabError):
    pass


class ConfigError(ViscolabError):
    pass


class DegenerateFitWarning(UserWarning):
    """Fitted series spans less than one decade."""


class BandClampWarning(UserWarning):
    pass
