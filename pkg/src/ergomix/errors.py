"""Exception types shared across the package."""


class ErgomixError(Exception):
    """Base class for all package-specific errors."""


class InvalidCovarianceError(ErgomixError):
    """Covariance matrix is not symmetric positive definite."""


class DimensionError(ErgomixError):
    """Grid or mask shapes do not match."""


class OutOfDomainError(ErgomixError):
    """A point lies outside the domain."""


class DegenerateDepositError(ErgomixError):
    """A deposit has zero or negative total mass and cannot be normalized."""


class InvalidMixtureError(ErgomixError):
    """Mixture weights or covariances violate their constraints."""


class DegenerateMassError(ErgomixError):
    """All distribution mass sits inside the hole region (a >= 1)."""


class ZeroDirectionError(ErgomixError):
    """Nearest-point target coincides with the agent position."""


class InvalidDensityError(ErgomixError):
    """Negative density value passed where a density is required."""


class ScenarioError(ErgomixError):
    """Scenario or sweep file failed to parse or validate."""


class SnapshotFormatError(ErgomixError):
    """A field snapshot file has a corrupt or unrecognized header."""


class StallError(ErgomixError):
    """A travel segment exceeded its step budget without arriving.

    The partial run result accumulated so far is attached as ``result``.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
