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

"""Rank orderings: ordered partitions of the relays, their adjacency and the penalty function."""
import json
import logging
from functools import lru_cache
from typing import FrozenSet, Iterable, Iterator, List, Sequence, Tuple, Union

import numpy as np

from .abstracts import AbstractWeightFunction
from .exceptions import BadPrefixLength, EmptyClass, IdenticalOrderings, LengthMismatch, NotAPartition, \
    NotPathConnected
from .model import NetworkModel
from .utils.static_funcs import mask_of, members, nearly_equal, popcount

logger = logging.getLogger(__name__)


class RankOrdering:
    """Ordered partition ``(C_1, ..., C_M)`` of the relays; lower-indexed classes have lower rank.

    Classes are stored as bitmasks so that equality and hashing are structural. The constructor does not check the
    partition property, use :func:`validate_rank_ordering` for that.

    Args:
        classes: Node collections, lowest rank first.
    """
    __slots__ = ('_masks', '_rank')

    def __init__(self, classes: Iterable[Iterable[int]]):
        self._masks: Tuple[int, ...] = tuple(mask_of(c) for c in classes)
        self._rank = None

    @classmethod
    def from_masks(cls, masks: Iterable[int]) -> 'RankOrdering':
        obj = cls.__new__(cls)
        obj._masks = tuple(int(x) for x in masks)
        obj._rank = None
        return obj

    @classmethod
    def from_json(cls, obj: Union[str, Sequence[Sequence[int]]]) -> 'RankOrdering':
        """Parse ``[[2],[1,3]]`` (a string or an already decoded list)."""
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(obj)

    @classmethod
    def single_class(cls, n_relays: int) -> 'RankOrdering':
        return cls([range(1, n_relays + 1)])

    @property
    def masks(self) -> Tuple[int, ...]:
        return self._masks

    @property
    def classes(self) -> Tuple[FrozenSet[int], ...]:
        return tuple(frozenset(members(c)) for c in self._masks)

    @property
    def nodes_mask(self) -> int:
        out = 0
        for c in self._masks:
            out |= c
        return out

    @property
    def class_sizes(self) -> Tuple[int, ...]:
        return tuple(popcount(c) for c in self._masks)

    @property
    def prefix_sizes(self) -> Tuple[int, ...]:
        """``|C^{i-1}|``, the number of relays ranked strictly below class ``i``, for every class."""
        out, acc = [], 0
        for size in self.class_sizes:
            out.append(acc)
            acc += size
        return tuple(out)

    def rank_of(self, node: int) -> int:
        """Zero-based index of the class holding ``node``."""
        if self._rank is None:
            self._rank = {j: idx for idx, c in enumerate(self._masks) for j in members(c)}
        return self._rank[node]

    def to_json(self) -> List[List[int]]:
        return [list(members(c)) for c in self._masks]

    def key(self) -> str:
        """Compact JSON text, used as a dictionary key in reports."""
        return json.dumps(self.to_json(), separators=(',', ':'))

    def __len__(self):
        return len(self._masks)

    def __iter__(self) -> Iterator[FrozenSet[int]]:
        return iter(self.classes)

    def __eq__(self, other):
        if not isinstance(other, RankOrdering):
            return NotImplemented
        return self._masks == other._masks

    def __hash__(self):
        return hash(self._masks)

    def __repr__(self):
        return "(" + ",".join("{" + ",".join(map(str, members(c))) + "}" for c in self._masks) + ")"


def validate_rank_ordering(r: RankOrdering, n_relays: int) -> None:
    """Check that ``r`` partitions ``{1, ..., N}`` into nonempty classes.

    Raises:
        EmptyClass: Some class is empty.
        NotAPartition: A relay is missing or duplicated, or a class holds a node outside of ``1..N``.
    """
    if any(c == 0 for c in r.masks):
        raise EmptyClass(f"{r} contains an empty class")
    seen = 0
    for c in r.masks:
        if seen & c:
            raise NotAPartition(f"{r}: node(s) {list(members(seen & c))} appear in more than one class")
        seen |= c
    expected = ((1 << (n_relays + 1)) - 1) & ~1
    if seen != expected:
        missing = list(members(expected & ~seen))
        extra = list(members(seen & ~expected))
        raise NotAPartition(f"{r} is not a partition of 1..{n_relays}: missing {missing}, unexpected {extra}")


def mismatch(r: RankOrdering, r2: RankOrdering) -> int:
    """One-based index of the first class in which two orderings differ.

    Raises:
        IdenticalOrderings: ``r == r2``.
    """
    for idx, (a, b) in enumerate(zip(r.masks, r2.masks)):
        if a != b:
            return idx + 1
    if len(r) == len(r2):
        raise IdenticalOrderings(f"Mismatch is undefined for identical orderings {r}")
    # one ordering is a strict prefix of the other; cannot happen for two partitions of the same set
    return min(len(r), len(r2)) + 1


def is_refinement(fine: RankOrdering, coarse: RankOrdering) -> bool:
    """Whether ``i`` ranked below ``j`` in ``coarse`` implies the same in ``fine``; reflexive.

    Equivalently, every class of ``fine`` lies inside one class of ``coarse`` and these coarse classes appear in
    nondecreasing order along ``fine``.
    """
    last = -1
    for c in fine.masks:
        owner = -1
        for idx, d in enumerate(coarse.masks):
            if c & d:
                if c & ~d:
                    return False
                owner = idx
                break
        if owner < last or owner == -1:
            return False
        last = owner
    return True


def is_one_step_refinement(fine: RankOrdering, coarse: RankOrdering) -> bool:
    """Whether merging two adjacent classes of ``fine`` yields ``coarse``."""
    if len(fine) != len(coarse) + 1:
        return False
    f, c = fine.masks, coarse.masks
    for i in range(len(c)):
        if f[i] != c[i]:
            return f[i] | f[i + 1] == c[i] and f[i + 2:] == c[i + 1:]
    return False


def _proper_submasks(mask: int) -> List[int]:
    out = []
    sub = (mask - 1) & mask
    while sub:
        out.append(sub)
        sub = (sub - 1) & mask
    return sorted(out)


@lru_cache(maxsize=None)
def _refinements(masks: Tuple[int, ...]) -> Tuple[Tuple[int, ...], ...]:
    out = []
    for i, c in enumerate(masks):
        for low in _proper_submasks(c):
            out.append(masks[:i] + (low, c & ~low) + masks[i + 1:])
    return tuple(out)


@lru_cache(maxsize=None)
def _confinements(masks: Tuple[int, ...]) -> Tuple[Tuple[int, ...], ...]:
    return tuple(masks[:i] + (masks[i] | masks[i + 1],) + masks[i + 2:] for i in range(len(masks) - 1))


def one_step_refinements(r: RankOrdering) -> List[RankOrdering]:
    """All orderings obtained by splitting one class into an ordered pair of nonempty sets."""
    return [RankOrdering.from_masks(m) for m in _refinements(r.masks)]


def one_step_confinements(r: RankOrdering) -> List[RankOrdering]:
    """All ``M - 1`` orderings obtained by merging two adjacent classes."""
    return [RankOrdering.from_masks(m) for m in _confinements(r.masks)]


def adjacency(r: RankOrdering) -> List[RankOrdering]:
    """One-step refinements followed by one-step confinements (the two never overlap)."""
    return one_step_refinements(r) + one_step_confinements(r)


def is_path_connected(r: RankOrdering, m: NetworkModel) -> bool:
    """Whether every relay reaches the destination through relays of rank no higher than its own.

    For each class, the relays of the class must drain to node 0 inside the subgraph induced on the class, the lower
    classes and the destination.
    """
    allowed = 0
    for c in r.masks:
        allowed |= c
        if c & ~m.drains_to_destination(allowed):
            return False
    return True


def path_connected_adjacency(r: RankOrdering, m: NetworkModel) -> List[RankOrdering]:
    """Adjacency of ``r`` restricted to path-connected orderings.

    Confinements of a path-connected ordering are always path-connected and are included without a check.

    Raises:
        NotPathConnected: ``r`` itself is not path-connected.
    """
    if not is_path_connected(r, m):
        raise NotPathConnected(f"{r} is not path-connected")
    return [x for x in one_step_refinements(r) if is_path_connected(x, m)] + one_step_confinements(r)


def _as_backlog(q, r: RankOrdering) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if r.nodes_mask >> (len(q) + 1):
        raise LengthMismatch(f"Backlog vector of length {len(q)} does not cover the relays of {r}")
    return q


def class_backlogs(q, r: RankOrdering) -> np.ndarray:
    """``Q_{C_i}`` for every class of ``r``."""
    q = _as_backlog(q, r)
    return np.array([q[np.array(members(c)) - 1].sum() for c in r.masks])


def weighted_class_backlogs(q, r: RankOrdering, f: AbstractWeightFunction) -> np.ndarray:
    """``f(|C^{i-1}|, |C_i|) * Q_{C_i}`` for every class of ``r``."""
    table = f.tabulate(popcount(r.nodes_mask))
    weights = np.array([table[p, s] for p, s in zip(r.prefix_sizes, r.class_sizes)])
    return weights * class_backlogs(q, r)


def penalty(q, r: RankOrdering, n: int, f: AbstractWeightFunction) -> float:
    """Partial weighted sum ``sum_{i<=n} f(|C^{i-1}|, |C_i|) Q_{C_i}``.

    Raises:
        BadPrefixLength: ``n`` is not in ``1..M``.
    """
    if not 1 <= n <= len(r):
        raise BadPrefixLength(f"Prefix length {n} outside of 1..{len(r)} for {r}")
    return float(weighted_class_backlogs(q, r, f)[:n].sum())


def compare_penalties(r: RankOrdering, r2: RankOrdering, q, f: AbstractWeightFunction) -> Tuple[bool, bool]:
    """Evaluate ``r <_q r2``.

    Returns:
        ``(less, tie)`` where ``tie`` reports that the two penalties were equal within the relative tolerance and
        the refinement clause decided the outcome.
    """
    n = mismatch(r, r2)
    a = penalty(q, r, n, f)
    b = penalty(q, r2, n, f)
    if nearly_equal(a, b):
        return is_one_step_refinement(r, r2), True
    return a < b, False


def less_penalizes(r: RankOrdering, r2: RankOrdering, q, f: AbstractWeightFunction) -> bool:
    """Whether ``r`` penalizes ``q`` less than ``r2``; equal penalties favour a one-step refinement of ``r2``.

    Raises:
        IdenticalOrderings: ``r == r2``.
    """
    return compare_penalties(r, r2, q, f)[0]
