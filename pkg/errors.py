"""
Exceptions raised by the dalat toolkit.
"""
from typing import Iterable


class DalatError(Exception):
    """Base class for every error raised by the library."""


class InvalidParameter(DalatError, ValueError):
    """A numeric or structural parameter is outside its admissible range."""


class ParseError(DalatError, ValueError):
    """A file does not follow the expected JSON schema."""


class ValidationError(DalatError, ValueError):
    """A lattice violates one or more of its invariants."""

    def __init__(self, failed: Iterable[str], message: str = ""):
        self.failed = list(failed)
        text = message or f"lattice invariants violated: {', '.join(self.failed)}"
        super().__init__(text)


class Disconnected(DalatError):
    """No path joins the requested vertices."""


class NoLeash(DalatError):
    """The vertex has no leash inside the patch."""


class InvalidPath(DalatError, ValueError):
    """A path uses vertices or edges that are not in the lattice."""


class NotAnalytic(DalatError, ValueError):
    """A function fails the discrete Cauchy-Riemann equation."""


class ConsistencyError(DalatError):
    """Edge-relation propagation disagrees with itself on some edge."""


class ForbiddenParameter(DalatError, ValueError):
    """The parameter t lies on (or too close to) the forbidden set S."""


class ShapeError(DalatError, ValueError):
    """Matrix shapes are not composable."""


class ForbiddenSpectrum(DalatError, ValueError):
    """A state matrix has an eigenvalue in the forbidden set S."""


class SingularD(DalatError, ValueError):
    """The feedthrough matrix D is not invertible."""


class PoleError(DalatError, ValueError):
    """The rational function has a pole at the requested point."""


class NotRealizable(DalatError, ValueError):
    """A rational function has a pole in P and has no rational DA preimage."""


class RankError(DalatError):
    """Markov data are inconsistent or too short for a realization."""


class IoError(DalatError, OSError):
    """A file could not be read or written."""
