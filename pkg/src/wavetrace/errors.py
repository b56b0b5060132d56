"""Exception and warning types shared across the package."""


class GeometryError(ValueError):
    """Invalid or degenerate geometric input (elliptic element, bad disks)."""


class CertificationError(RuntimeError):
    """A request reaches beyond what the available data certifies."""

    def __init__(self, message, complete_below=None):
        super().__init__(message)
        self.complete_below = complete_below


class RegionError(ValueError):
    """Evaluation point outside the region where a method is valid."""


class ConditioningWarning(UserWarning):
    """A linear system was solved with a large condition number."""


class CoarseMethodWarning(UserWarning):
    """A low-accuracy fallback method was used."""
