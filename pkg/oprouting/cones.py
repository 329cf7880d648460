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

"""Cone resolution of backlog space and the piecewise-quadratic Lyapunov function.

A rank ordering ``R`` owns the cone of backlog vectors at which it penalizes less than every adjacent ordering.
:func:`resolve_cone` finds that ordering constructively: split off the smallest top-backlog class that beats the
single-class ordering, resolve the remaining relays recursively, then merge trailing classes while merging lowers the
penalty. :func:`resolve_cone_pc` does the same over path-connected orderings. The ``*_oracle`` functions scan all
orderings and check the definition literally; they are exponential and exist for verification.
"""
import logging
from functools import lru_cache
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .abstracts import AbstractWeightFunction
from .exceptions import MultipleCones, NoCone, NotConnected, TooLarge
from .model import NetworkModel, is_connected
from .ranking import RankOrdering, adjacency, class_backlogs, is_one_step_refinement, is_path_connected, \
    path_connected_adjacency, _proper_submasks
from .utils.oplogging import TRACE
from .utils.static_funcs import mask_of, members, nearly_equal, popcount

logger = logging.getLogger(__name__)

#: Size guard of the exhaustive oracles and of the ordering enumeration.
MAX_ORACLE_RELAYS = 8
#: Size guard of the path-connected resolver, whose split search enumerates subsets.
MAX_PC_RELAYS = 16


class ConeResolution:
    """Result of a cone lookup.

    Attributes:
        ordering: The rank ordering whose cone holds the backlog vector.
        on_boundary: Some comparison was decided by the tie clause; the vector lies on a cone boundary.
        checked_adjacency_count: Number of adjacent orderings compared against in the final check (0 if skipped).
    """
    __slots__ = ('ordering', 'on_boundary', 'checked_adjacency_count')

    def __init__(self, ordering: RankOrdering, on_boundary: bool = False, checked_adjacency_count: int = 0):
        self.ordering = ordering
        self.on_boundary = on_boundary
        self.checked_adjacency_count = checked_adjacency_count

    def to_dict(self) -> dict:
        return {"ordering": self.ordering.to_json(),
                "on_boundary": self.on_boundary,
                "checked_adjacency_count": self.checked_adjacency_count}

    def __repr__(self):
        return f"ConeResolution({self.ordering}, on_boundary={self.on_boundary}, " \
               f"checked={self.checked_adjacency_count})"


@lru_cache(maxsize=None)
def _ordered_partitions(mask: int) -> Tuple[Tuple[int, ...], ...]:
    if mask == 0:
        return ((),)
    out = []
    for first in _proper_submasks(mask) + [mask]:
        for rest in _ordered_partitions(mask & ~first):
            out.append((first,) + rest)
    return tuple(out)


def enumerate_rank_orderings(n_relays: int) -> List[RankOrdering]:
    """All ordered set partitions of ``{1, ..., N}`` in a fixed order (ordered Bell many).

    Raises:
        TooLarge: ``n_relays > 8``.
    """
    if n_relays > MAX_ORACLE_RELAYS:
        raise TooLarge(f"Enumerating rank orderings is limited to {MAX_ORACLE_RELAYS} relays, got {n_relays}")
    full = ((1 << (n_relays + 1)) - 1) & ~1
    return [RankOrdering.from_masks(p) for p in _ordered_partitions(full)]


class _PenaltyComparator:
    """Penalty comparisons on raw class masks with cached class backlogs."""

    def __init__(self, q, f: AbstractWeightFunction):
        self.q = np.asarray(q, dtype=float)
        assert self.q.ndim == 1 and len(self.q) >= 1, "Backlog vector must be one-dimensional and nonempty"
        assert (self.q >= 0).all(), f"Backlogs must be non-negative, got {self.q.tolist()}"
        self.table = f.tabulate(len(self.q))
        self._backlog: Dict[int, float] = dict()

    def backlog(self, mask: int) -> float:
        value = self._backlog.get(mask)
        if value is None:
            value = float(self.q[np.array(members(mask)) - 1].sum())
            self._backlog[mask] = value
        return value

    def prefix_penalty(self, masks: Sequence[int], n: int) -> float:
        total, prefix = 0.0, 0
        for c in masks[:n]:
            size = popcount(c)
            total += self.table[prefix, size] * self.backlog(c)
            prefix += size
        return total

    def compare(self, r: Sequence[int], r2: Sequence[int]) -> Tuple[bool, bool]:
        """``(r <_q r2, decided_by_tie)`` for two mask tuples over the same relays."""
        n = 1
        for a, b in zip(r, r2):
            if a != b:
                break
            n += 1
        a = self.prefix_penalty(r, n)
        b = self.prefix_penalty(r2, n)
        if nearly_equal(a, b):
            return is_one_step_refinement(RankOrdering.from_masks(r), RankOrdering.from_masks(r2)), True
        return a < b, False

    def closure_check(self, r: Sequence[int], r2: Sequence[int]) -> Tuple[bool, bool]:
        """``(penalty(r) <= penalty(r2) within tolerance, equal)`` at their mismatch index."""
        n = 1
        for a, b in zip(r, r2):
            if a != b:
                break
            n += 1
        a = self.prefix_penalty(r, n)
        b = self.prefix_penalty(r2, n)
        if nearly_equal(a, b):
            return True, True
        return a < b, False


class _ConeResolver(_PenaltyComparator):
    """Constructive cone resolution over all orderings or, given a model, over path-connected ones."""

    def __init__(self, q, f: AbstractWeightFunction, model: Optional[NetworkModel] = None):
        super().__init__(q, f)
        self.model = model
        self.on_boundary = False

    def solve(self, nodes: int) -> Tuple[int, ...]:
        n = popcount(nodes)
        if n == 1:
            return (nodes,)
        total = self.backlog(nodes)
        if total <= 0.0:
            # every ordering ties at the origin; zero-backlog relays share one class
            self.on_boundary = True
            return (nodes,)
        split = None
        for size in range(1, n):
            split = self._find_split(nodes, n, size, total)
            if split is not None:
                break
        if split is None:
            return (nodes,)
        low, high = split
        logger.log(TRACE, "Split %s | %s", members(low), members(high))
        return self._merge_suffix(self.solve(low) + (high,))

    def _split_beats_single_class(self, low: int, n: int, size: int, total: float) -> Tuple[bool, bool]:
        a = self.table[0, n - size] * self.backlog(low)
        b = self.table[0, n] * total
        if nearly_equal(a, b):
            return True, True
        return a < b, False

    def _find_split(self, nodes: int, n: int, size: int, total: float) -> Optional[Tuple[int, int]]:
        if self.model is None:
            order = sorted(members(nodes), key=lambda k: (-self.q[k - 1], k))
            high = mask_of(order[:size])
            low = nodes & ~high
            ok, tie = self._split_beats_single_class(low, n, size, total)
            if not ok:
                return None
            self.on_boundary |= tie
            return low, high

        candidates = sorted(((float(self.q[np.array(c) - 1].sum()), c) for c in combinations(members(nodes), size)),
                            key=lambda x: (-x[0], x[1]))
        for _, combo in candidates:
            high = mask_of(combo)
            low = nodes & ~high
            ok, tie = self._split_beats_single_class(low, n, size, total)
            if not ok:
                # the condition only weakens as the upper class backlog decreases
                return None
            drained = self.model.drains_to_destination(low)
            if drained == low and not high & ~self.model.drains_to_destination(nodes):
                self.on_boundary |= tie
                return low, high
        return None

    def _merge_suffix(self, classes: Tuple[int, ...]) -> Tuple[int, ...]:
        count = len(classes)
        current = classes
        merged_suffix = 0
        while merged_suffix + 1 <= count - 1:
            start = count - 2 - merged_suffix
            suffix = 0
            for c in classes[start:]:
                suffix |= c
            candidate = classes[:start] + (suffix,)
            less, tie = self.compare(candidate, current)
            self.on_boundary |= tie
            if not less:
                break
            current = candidate
            merged_suffix += 1
        return current


def _checked(resolver: _ConeResolver, ordering: RankOrdering, adjacent: List[RankOrdering]) -> int:
    for other in adjacent:
        ok, tie = resolver.closure_check(ordering.masks, other.masks)
        resolver.on_boundary |= tie
        if not ok:
            raise NoCone(f"Resolved ordering {ordering} penalizes q more than its neighbour {other}; the weight "
                         f"function likely violates additivity or monotonicity", resolver.q)
    return len(adjacent)


def resolve_cone(q, f: AbstractWeightFunction, validate: bool = True) -> ConeResolution:
    """Rank ordering of the f-policy at backlog ``q``.

    Args:
        q: Backlog vector; entry ``k-1`` belongs to relay ``k``.
        f: Weight function.
        validate: Compare the result against its whole adjacency (fills ``checked_adjacency_count``).

    Returns:
        The resolution; ``on_boundary`` is set when a tie decided any comparison.
    """
    resolver = _ConeResolver(q, f)
    full = ((1 << (len(resolver.q) + 1)) - 1) & ~1
    ordering = RankOrdering.from_masks(resolver.solve(full))
    checked = _checked(resolver, ordering, adjacency(ordering)) if validate else 0
    return ConeResolution(ordering, resolver.on_boundary, checked)


def resolve_cone_pc(q, f: AbstractWeightFunction, m: NetworkModel, validate: bool = True) -> ConeResolution:
    """Rank ordering of the path-connected f-policy at backlog ``q``.

    Raises:
        NotConnected: Some relay of ``m`` cannot reach the destination.
        TooLarge: More than 16 relays.
    """
    if m.n_relays > MAX_PC_RELAYS:
        raise TooLarge(f"Path-connected cone resolution is limited to {MAX_PC_RELAYS} relays, got {m.n_relays}")
    if not is_connected(m):
        raise NotConnected("Path-connected cones need every relay to reach the destination")
    resolver = _ConeResolver(q, f, m)
    assert len(resolver.q) == m.n_relays, f"Backlog vector has length {len(resolver.q)}, model has {m.n_relays} relays"
    ordering = RankOrdering.from_masks(resolver.solve(m.all_nodes_mask))
    checked = _checked(resolver, ordering, path_connected_adjacency(ordering, m)) if validate else 0
    return ConeResolution(ordering, resolver.on_boundary, checked)


def _scan(q, f: AbstractWeightFunction, candidates: List[RankOrdering], neighbours) -> ConeResolution:
    comparator = _PenaltyComparator(q, f)
    found = []
    for r in candidates:
        tie_seen = False
        adjacent = neighbours(r)
        for other in adjacent:
            less, tie = comparator.compare(r.masks, other.masks)
            tie_seen |= tie
            if not less:
                break
        else:
            found.append(ConeResolution(r, tie_seen, len(adjacent)))
    if not found:
        raise NoCone(f"No rank ordering satisfies the cone definition at q={comparator.q.tolist()}", comparator.q)
    if len(found) > 1:
        raise MultipleCones(f"{len(found)} rank orderings satisfy the cone definition at q={comparator.q.tolist()}: "
                            f"{[x.ordering for x in found]}", comparator.q, [x.ordering.to_json() for x in found])
    return found[0]


def resolve_cone_oracle(q, f: AbstractWeightFunction) -> ConeResolution:
    """Scan every rank ordering and return the unique one satisfying the cone definition.

    Raises:
        NoCone: No ordering satisfies the definition.
        MultipleCones: More than one does (boundary points, or a weight violating additivity/monotonicity).
        TooLarge: More than 8 relays.
    """
    q = np.asarray(q, dtype=float)
    return _scan(q, f, enumerate_rank_orderings(len(q)), adjacency)


def resolve_cone_pc_oracle(q, f: AbstractWeightFunction, m: NetworkModel) -> ConeResolution:
    """Scan every path-connected rank ordering and return the unique one satisfying the cone definition."""
    q = np.asarray(q, dtype=float)
    candidates = [r for r in enumerate_rank_orderings(m.n_relays) if is_path_connected(r, m)]
    return _scan(q, f, candidates, lambda r: path_connected_adjacency(r, m))


def lyapunov_value(q, f: AbstractWeightFunction, r: RankOrdering) -> float:
    """``sum_i f(|C^{i-1}|, |C_i|) * Q_{C_i}^2``."""
    table = f.tabulate(popcount(r.nodes_mask))
    backlogs = class_backlogs(q, r)
    weights = np.array([table[p, s] for p, s in zip(r.prefix_sizes, r.class_sizes)])
    return float((weights * backlogs ** 2).sum())


def lyapunov_gradient(q, f: AbstractWeightFunction, r: RankOrdering) -> np.ndarray:
    """Partial derivatives: relay ``k`` in class ``C_j`` gets ``2 f(|C^{j-1}|, |C_j|) Q_{C_j}``."""
    q = np.asarray(q, dtype=float)
    table = f.tabulate(popcount(r.nodes_mask))
    backlogs = class_backlogs(q, r)
    grad = np.zeros(len(q))
    for c, p, s, total in zip(r.masks, r.prefix_sizes, r.class_sizes, backlogs):
        grad[np.array(members(c)) - 1] = 2.0 * table[p, s] * total
    return grad


def optimal_lyapunov(q, f: AbstractWeightFunction, m: Optional[NetworkModel] = None) -> float:
    """The Lyapunov function evaluated on the cone holding ``q`` (path-connected cones when ``m`` is given)."""
    if m is None:
        r = resolve_cone(q, f, validate=False).ordering
    else:
        r = resolve_cone_pc(q, f, m, validate=False).ordering
    return lyapunov_value(q, f, r)


def hyperplane_point(q, fine: RankOrdering, coarse: RankOrdering, f: AbstractWeightFunction) -> np.ndarray:
    """Move ``q`` onto the hyperplane separating the cones of ``fine`` and its confinement ``coarse``.

    With ``fine`` splitting a class of ``coarse`` into ``(A, B)`` above ``p`` lower relays, the backlogs of ``B`` are
    rescaled so that ``Q_B = Q_A * f(p, |A|) / f(p + |A|, |B|)``, where both orderings have equal penalty.
    """
    if not is_one_step_refinement(fine, coarse):
        raise ValueError(f"{fine} is not a one-step refinement of {coarse}")
    q = np.array(q, dtype=float)
    idx = next(i for i, (a, b) in enumerate(zip(fine.masks, coarse.masks)) if a != b)
    low, high = fine.masks[idx], fine.masks[idx + 1]
    p = fine.prefix_sizes[idx]
    table = f.tabulate(len(q))
    low_nodes = np.array(members(low)) - 1
    high_nodes = np.array(members(high)) - 1
    target = q[low_nodes].sum() * table[p, popcount(low)] / table[p + popcount(low), popcount(high)]
    current = q[high_nodes].sum()
    if current > 0:
        q[high_nodes] *= target / current
    else:
        q[high_nodes] = target / len(high_nodes)
    return q


__all__ = ['ConeResolution', 'enumerate_rank_orderings', 'resolve_cone', 'resolve_cone_pc', 'resolve_cone_oracle',
           'resolve_cone_pc_oracle', 'lyapunov_value', 'lyapunov_gradient', 'optimal_lyapunov', 'hyperplane_point',
           'MAX_ORACLE_RELAYS', 'MAX_PC_RELAYS']
