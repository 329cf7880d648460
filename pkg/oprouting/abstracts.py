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

"""The main abstract classes."""

import logging
from abc import ABCMeta, abstractmethod
from typing import ClassVar, Dict, Optional, TYPE_CHECKING

import numpy as np

from .exceptions import DomainError

if TYPE_CHECKING:  # pragma: no cover
    from .ranking import RankOrdering

logger = logging.getLogger(__name__)


class AbstractWeightFunction(metaclass=ABCMeta):
    """Bivariate weight ``f(m, n)`` used by the penalty and the Lyapunov function.

    ``m`` is the number of relays ranked strictly below a class and ``n`` the size of the class. Implementations only
    provide :meth:`value`; domain checks and the memoized lookup table live here.

    Attributes:
        name: Family name, e.g. ``geometric``.
        n_max: Optional number of relays N; when set, ``m + n <= N`` is enforced.
    """
    __slots__ = ('n_max', '_tables')

    name: ClassVar[str]

    def __init__(self, n_max: Optional[int] = None):
        self.n_max = n_max
        self._tables: Dict[int, np.ndarray] = dict()

    @abstractmethod
    def value(self, m: int, n: int) -> float:
        """Raw evaluation without domain checks."""
        pass

    def eval(self, m: int, n: int) -> float:
        """Evaluate ``f(m, n)``.

        Raises:
            DomainError: ``m < 0``, ``n < 1`` or ``m + n > n_max``.
        """
        if m < 0 or n < 1:
            raise DomainError(f"{self.name}: f({m},{n}) needs m >= 0 and n >= 1")
        if self.n_max is not None and m + n > self.n_max:
            raise DomainError(f"{self.name}: f({m},{n}) needs m + n <= {self.n_max}")
        return self.value(m, n)

    def __call__(self, m: int, n: int) -> float:
        return self.eval(m, n)

    def tabulate(self, n_max: int) -> np.ndarray:
        """Table ``T[m, n] = f(m, n)`` for ``m + n <= n_max`` (``nan`` elsewhere), computed once per size."""
        table = self._tables.get(n_max)
        if table is None:
            table = np.full((n_max + 1, n_max + 1), np.nan)
            for m in range(n_max):
                for n in range(1, n_max - m + 1):
                    table[m, n] = self.value(m, n)
            table.setflags(write=False)
            self._tables[n_max] = table
        return table

    def describe(self) -> dict:
        """Configuration-style description."""
        return {"family": self.name}

    def __repr__(self):
        return f"{self.__class__.__name__}({self.describe()})"


class AbstractRoutingPolicy(metaclass=ABCMeta):
    """Priority-based routing policy: a rank ordering per slot plus the lowest-rank forwarder rule.

    Attributes:
        name: Policy spec string, as accepted by :func:`oprouting.policies.policy_from_spec`.
        tie: Cross-transmitter tie rule inside the lowest-rank class, ``lowest-index`` or ``random``.
    """
    __slots__ = ('tie',)

    name: ClassVar[str]

    def __init__(self, tie: str = 'lowest-index'):
        assert tie in ('lowest-index', 'random'), f"Unknown tie rule {tie}"
        self.tie = tie

    @abstractmethod
    def rank(self, q: np.ndarray) -> 'RankOrdering':
        """Rank ordering ``R(t)`` for backlog vector ``q`` (entry ``k-1`` is relay ``k``)."""
        pass

    def __repr__(self):
        return f"{self.__class__.__name__}(tie={self.tie})"
