# -----------------------------------------------------------------------------
# MIT License
#
# Copyright (c) 2024 OpRouting Team
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to deal
# in the Software without restriction, including without limitation the rights
# to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
# copies of the Software, and to permit persons to whom the Software is
# furnished to do so, subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included in all
# copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
# SOFTWARE.
# -----------------------------------------------------------------------------

"""Errors raised by the routing library."""
from typing import Optional, Sequence


# Model validation
class ProbSumError(ValueError):
    """A per-node broadcast distribution does not sum to one (or has a negative entry)."""


class SelfNotInSet(ValueError):
    """A support set with positive probability lacks its transmitter."""


class BadSubset(ValueError):
    """A support set names a node outside of {0,...,N}, or the destination was given a broadcast list."""


class NoPositiveEntry(ValueError):
    """A node has no support set with positive probability."""


class DegreeTooLarge(ValueError):
    """Product-form expansion would enumerate too many outcome subsets."""


# Rank orderings
class NotAPartition(ValueError):
    """Classes of a rank ordering are not a partition of the relays."""


class EmptyClass(ValueError):
    """A rank ordering contains an empty class."""


class IdenticalOrderings(ValueError):
    """Mismatch is undefined for two equal rank orderings."""


class BadPrefixLength(ValueError):
    """Penalty prefix length is outside of 1..M."""


class DomainError(ValueError):
    """A weight function was evaluated outside of its domain."""


class TooLarge(ValueError):
    """An exponential enumeration was requested beyond its size guard."""


class LengthMismatch(ValueError):
    """Two sequences that must align have different lengths."""


class NotConnected(ValueError):
    """Some relay has no path of reaches-edges to the destination."""


class NotPathConnected(ValueError):
    """A rank ordering is not path-connected for the model at hand."""


class ConfigError(ValueError):
    """Configuration file or command-line input could not be interpreted."""


# Algorithmic failures
class NoCone(RuntimeError):
    """No rank ordering satisfies the cone definition at a backlog vector."""

    def __init__(self, message: str, q: Optional[Sequence[float]] = None):
        super().__init__(message)
        self.q = None if q is None else [float(x) for x in q]


class MultipleCones(RuntimeError):
    """More than one rank ordering satisfies the cone definition at a backlog vector."""

    def __init__(self, message: str, q: Optional[Sequence[float]] = None, candidates: Sequence = ()):
        super().__init__(message)
        self.q = None if q is None else [float(x) for x in q]
        self.candidates = list(candidates)


class NoProgress(RuntimeError):
    """ORCD finalization stalled: no unfinalized node can reach the finalized set."""


class LPNumericalFailure(RuntimeError):
    """The simplex solver failed to reach a trustworthy optimum."""
