"""Exception types shared across the package.

The CLI maps these onto exit codes (see ``fcskit.cli``): parse/validation
problems exit 2, size-guard violations 3, unsupported state classes 4 and
numerical failures 5.
"""


class FcskitError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(FcskitError):
    """Incompatible shapes, unbalanced occupations, or mismatched mode counts."""


class ParseError(FcskitError):
    """Malformed input file or JSON payload."""


class GuardExceededError(FcskitError):
    """An input is larger than a brute-force or memory guard allows."""


class UnsupportedStateError(FcskitError):
    """A state class the requested fast path does not cover."""


class ParityError(UnsupportedStateError):
    """A fermionic factor without definite particle-number parity."""


class NumericalError(FcskitError):
    """Ill-conditioned or otherwise numerically unusable input."""
