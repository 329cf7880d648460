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

"""Bivariate weight functions and checks of the conditions they must satisfy."""
import logging
import math
from itertools import product
from typing import Callable, Dict, Iterable, Iterator, Mapping, Optional, Sequence, Tuple

from .abstracts import AbstractWeightFunction
from .exceptions import ConfigError, DomainError

logger = logging.getLogger(__name__)

#: Relative tolerance of the additivity check.
C1_RTOL = 1e-9
#: Smallest admissible geometric parameter accepted from configuration files.
MIN_GEOMETRIC_K = 1.0 + 1e-9


class GeometricWeight(AbstractWeightFunction):
    """``f(m, n) = 1 / (K^m (K^n - 1))``.

    Satisfies additivity and monotonicity for every ``K > 1`` and the ratio bound against ``p_min`` whenever
    ``K >= 1 + 1/p_min``. Values of ``K`` in ``(0, 1)`` are accepted for diagnostics only (``f`` is then negative).
    """
    __slots__ = ('K',)

    name = 'geometric'

    def __init__(self, K: float = 3.0, n_max: Optional[int] = None):
        super().__init__(n_max)
        if not K > 0 or K == 1.0:
            raise DomainError(f"Geometric weight needs K > 0 and K != 1, got K={K}")
        if K < MIN_GEOMETRIC_K:
            logger.warning("Geometric weight with K=%s < 1: f is negative, use for diagnostics only", K)
        self.K = float(K)

    def value(self, m: int, n: int) -> float:
        return 1.0 / (self.K ** m * (self.K ** n - 1.0))

    def describe(self) -> dict:
        return {"family": self.name, "K": self.K}


class TableWeight(AbstractWeightFunction):
    """Explicit ``(m, n) -> value`` table; evaluating a missing entry raises :class:`DomainError`."""
    __slots__ = ('values',)

    name = 'table'

    def __init__(self, values: Mapping[Tuple[int, int], float], n_max: Optional[int] = None):
        super().__init__(n_max)
        self.values: Dict[Tuple[int, int], float] = {(int(m), int(n)): float(v) for (m, n), v in values.items()}

    @classmethod
    def from_triples(cls, triples: Iterable[Sequence], n_max: Optional[int] = None) -> 'TableWeight':
        return cls({(t[0], t[1]): t[2] for t in triples}, n_max)

    @classmethod
    def from_function(cls, f: AbstractWeightFunction, n_max: int) -> 'TableWeight':
        """Materialize ``f`` on ``m + n <= n_max``; a starting point for perturbed tables."""
        return cls({(m, n): f.value(m, n) for m, n in domain(n_max)}, n_max)

    def value(self, m: int, n: int) -> float:
        try:
            return self.values[(m, n)]
        except KeyError:
            raise DomainError(f"Weight table has no entry for f({m},{n})")

    def describe(self) -> dict:
        return {"family": self.name, "values": [[m, n, v] for (m, n), v in sorted(self.values.items())]}


class CallableWeight(AbstractWeightFunction):
    """Wraps a plain Python callable ``f(m, n)``, e.g. ``lambda m, n: 1 / n``."""
    __slots__ = ('func', 'label')

    name = 'callable'

    def __init__(self, func: Callable[[int, int], float], label: str = 'callable', n_max: Optional[int] = None):
        super().__init__(n_max)
        self.func = func
        self.label = label

    def value(self, m: int, n: int) -> float:
        return float(self.func(m, n))

    def describe(self) -> dict:
        return {"family": self.name, "label": self.label}


def domain(n_max: int) -> Iterator[Tuple[int, int]]:
    """All ``(m, n)`` with ``m >= 0``, ``n >= 1`` and ``m + n <= n_max``."""
    for m in range(n_max):
        for n in range(1, n_max - m + 1):
            yield m, n


def triples(n_max: int) -> Iterator[Tuple[int, int, int]]:
    """All ``(m, n1, n2)`` with ``n1, n2 >= 1`` and ``m + n1 + n2 <= n_max``."""
    for m, n1, n2 in product(range(n_max), range(1, n_max), range(1, n_max)):
        if m + n1 + n2 <= n_max:
            yield m, n1, n2


def _positive(f: AbstractWeightFunction, n_max: int) -> bool:
    for m, n in domain(n_max):
        v = f.value(m, n)
        if not (v > 0 and math.isfinite(v)):
            logger.debug("%r is not positive at f(%d,%d)=%s", f, m, n, v)
            return False
    return True


def check_c1(f: AbstractWeightFunction, n_max: int, rel_tol: float = C1_RTOL) -> bool:
    """Additivity ``1/f(m, n1+n2) = 1/f(m, n1) + 1/f(m+n1, n2)`` on every valid triple (and ``f > 0``)."""
    assert n_max >= 2, f"n_max must be at least 2, got {n_max}"
    if not _positive(f, n_max):
        return False
    for m, n1, n2 in triples(n_max):
        lhs = 1.0 / f.value(m, n1 + n2)
        rhs = 1.0 / f.value(m, n1) + 1.0 / f.value(m + n1, n2)
        if abs(lhs - rhs) > rel_tol * max(abs(lhs), abs(rhs)):
            logger.debug("Additivity fails at (m,n1,n2)=(%d,%d,%d): %s != %s", m, n1, n2, lhs, rhs)
            return False
    return True


def check_c2(f: AbstractWeightFunction, n_max: int) -> bool:
    """Monotonicity ``f(m, n1) >= f(m+n1, n2)`` on every valid triple (and ``f > 0``)."""
    assert n_max >= 2, f"n_max must be at least 2, got {n_max}"
    if not _positive(f, n_max):
        return False
    for m, n1, n2 in triples(n_max):
        if f.value(m, n1) < f.value(m + n1, n2):
            logger.debug("Monotonicity fails at (m,n1,n2)=(%d,%d,%d)", m, n1, n2)
            return False
    return True


def check_c3(f: AbstractWeightFunction, p_min: float, n_max: int) -> bool:
    """Ratio bound ``f(m, n1) / f(m+n1, n2) >= 1/p_min`` on every valid triple (and ``f > 0``)."""
    assert 0 < p_min <= 1, f"p_min must be in (0, 1], got {p_min}"
    assert n_max >= 2, f"n_max must be at least 2, got {n_max}"
    if not _positive(f, n_max):
        return False
    bound = 1.0 / p_min
    for m, n1, n2 in triples(n_max):
        ratio = f.value(m, n1) / f.value(m + n1, n2)
        if ratio < bound * (1.0 - 1e-12):
            logger.debug("Ratio bound fails at (m,n1,n2)=(%d,%d,%d): %s < %s", m, n1, n2, ratio, bound)
            return False
    return True


def k_for_ratio_bound(p_min: float) -> float:
    """Smallest integer geometric parameter satisfying the ratio bound, ``ceil(1 + 1/p_min)``."""
    return float(math.ceil(1.0 + 1.0 / p_min - 1e-12))


def broken_weight(f: AbstractWeightFunction, n_max: int, factor: float = 3.2) -> TableWeight:
    """Copy of ``f`` with every ``f(m, n >= 2)`` multiplied by ``factor``; violates additivity.

    Used as a negative control: with ``factor = 3.2`` and the default geometric ``K = 3`` the two-relay cones
    overlap, so the uniqueness oracle reports multiple satisfying orderings.
    """
    table = TableWeight.from_function(f, n_max)
    for key in list(table.values):
        if key[1] >= 2:
            table.values[key] *= factor
    return table


weights = {'geometric': GeometricWeight,
           'table': TableWeight}


def weight_from_config(cfg: Optional[Mapping], n_max: Optional[int] = None) -> AbstractWeightFunction:
    """Build a weight from ``{family: geometric, K: 3.0}`` or ``{family: table, values: [[m, n, v], ...]}``.

    Raises:
        ConfigError: Unknown family, or a geometric ``K`` below ``1 + 1e-9``.
    """
    cfg = dict(cfg or {"family": "geometric", "K": 3.0})
    family = cfg.get("family", "geometric")
    if family == "geometric":
        K = float(cfg.get("K", 3.0))
        if K < MIN_GEOMETRIC_K:
            raise ConfigError(f"Geometric weight needs K >= 1 + 1e-9, got K={K}")
        return GeometricWeight(K, n_max)
    if family == "table":
        if "values" not in cfg:
            raise ConfigError("Table weight needs 'values' as [m, n, value] triples")
        return TableWeight.from_triples(cfg["values"], n_max)
    raise ConfigError(f"Unknown weight family '{family}', expected one of {sorted(weights)}")
