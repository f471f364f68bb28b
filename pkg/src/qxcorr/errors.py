"""Exception types raised by the package."""


class QXCorrError(ValueError):
    """Base class for all errors raised by qxcorr."""


class BadDimension(QXCorrError):
    pass


class DegenerateState(QXCorrError):
    pass


class InvalidDensity(QXCorrError):
    pass


class OracleScaleExceeded(QXCorrError):
    pass


class ImpossiblePostselection(QXCorrError):
    """Post-selection onto the reference has (numerically) zero probability."""


class NoiseAnnihilatesState(QXCorrError):
    pass


class LatticeTooCoarse(QXCorrError):
    pass


class ShiftOutOfRange(QXCorrError):
    pass


class BoundaryArtifact(QXCorrError):
    """The finite pointer lattice cannot represent the cyclic coupling."""


class ConfigError(QXCorrError):
    pass
