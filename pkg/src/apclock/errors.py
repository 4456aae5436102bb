"""Exception hierarchy for apclock."""


class APClockError(Exception):
    """Base class for all library errors."""


class EmptySpectrum(APClockError):
    pass


class DuplicateLevel(APClockError):
    pass


class CommensurateFrequencies(APClockError):
    pass


class ModuleMismatch(APClockError):
    pass


class TermBudgetExceeded(APClockError):
    pass


class NotNormalized(APClockError):
    pass


class PositivityCheckFailed(APClockError):
    pass


class SharedResonances(APClockError):
    """A closed form that assumes no shared resonances was applied where some exist."""


class BackendInapplicable(APClockError):
    pass


class NonConvergent(APClockError):
    pass


class NotPositive(APClockError):
    pass


class DiagonalViolation(APClockError):
    pass


class RevivalUndefined(APClockError):
    pass
