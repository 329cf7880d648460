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

"""Priority-based routing policies and the lowest-rank forwarder rule."""
import json
import logging
from collections import defaultdict
from itertools import product
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from sortedcontainers import SortedList

from .abstracts import AbstractRoutingPolicy, AbstractWeightFunction
from .cones import ConeResolution, resolve_cone, resolve_cone_pc
from .exceptions import ConfigError, LengthMismatch, NoProgress, NotConnected
from .model import NetworkModel, is_connected, transmitter_entries
from .ranking import RankOrdering, is_refinement, validate_rank_ordering
from .utils.static_funcs import mask_of, members, nearly_equal

logger = logging.getLogger(__name__)

#: Stopping threshold of the value-iteration cross-check.
VALUE_ITERATION_TOL = 1e-10


class RoutingDecision:
    """Forwarder choices of one slot.

    Attributes:
        sets: Realized forwarder set ``S_i(t)`` (bitmask) of every transmitting relay.
        forwarders: Chosen forwarder of every transmitting relay; ``i`` means retain, ``0`` means delivery.
    """
    __slots__ = ('sets', 'forwarders')

    def __init__(self, sets: Optional[Dict[int, int]] = None, forwarders: Optional[Dict[int, int]] = None):
        self.sets: Dict[int, int] = dict() if sets is None else sets
        self.forwarders: Dict[int, int] = dict() if forwarders is None else forwarders

    def is_feasible(self) -> bool:
        """One forwarder per transmitter, chosen inside its set, forced delivery whenever ``0`` was reached."""
        if self.sets.keys() != self.forwarders.keys():
            return False
        for i, j in self.forwarders.items():
            s = self.sets[i]
            if not s >> i & 1 or not s >> j & 1:
                return False
            if s & 1 and j != 0:
                return False
        return True

    def moves(self) -> Iterator[Tuple[int, int]]:
        """``(transmitter, forwarder)`` pairs that hand their packet to another node."""
        return ((i, j) for i, j in sorted(self.forwarders.items()) if j != i)

    def __repr__(self):
        return f"RoutingDecision({dict(sorted(self.forwarders.items()))})"


def select_forwarder(r: RankOrdering, i: int, s: Union[int, Iterable[int]], tie: str = 'lowest-index',
                     rng: Optional[np.random.Generator] = None) -> int:
    """Lowest-rank member of the realized forwarder set ``s`` of transmitter ``i``.

    Delivery is forced when ``0`` is in ``s``. The transmitter keeps the packet when it is itself of lowest rank;
    otherwise the lowest-rank class member is picked by node index or uniformly at random.

    Args:
        r: Rank ordering of the slot.
        i: Transmitting relay.
        s: Forwarder set, as a bitmask or a node collection; must contain ``i``.
        tie: ``lowest-index`` or ``random``.
        rng: Generator for ``tie='random'``.

    Returns:
        The chosen forwarder.
    """
    mask = s if isinstance(s, int) else mask_of(s)
    assert mask >> i & 1, f"Forwarder set {list(members(mask))} must contain its transmitter {i}"
    if mask & 1:
        return 0
    ranked = [(r.rank_of(j), j) for j in members(mask)]
    best = min(rank for rank, _ in ranked)
    lowest = [j for rank, j in ranked if rank == best]
    if i in lowest:
        return i
    if tie == 'random':
        assert rng is not None, "Random tie breaking needs a generator"
        return int(lowest[int(rng.integers(len(lowest)))])
    return lowest[0]


def _group_by_value(values: Sequence[float], n_relays: int) -> RankOrdering:
    """Relays sorted by ``values[k]`` ascending; values equal within the tie tolerance share a class."""
    order = sorted(range(1, n_relays + 1), key=lambda k: (values[k], k))
    classes: List[List[int]] = []
    anchor = None
    for k in order:
        if classes and nearly_equal(values[k], anchor):
            classes[-1].append(k)
        else:
            classes.append([k])
            anchor = values[k]
    return RankOrdering(classes)


def rank_backpressure(q) -> RankOrdering:
    """Smaller backlog means lower rank; equal backlogs share a class.

    Examples:
        >>> rank_backpressure([5, 2, 2])
        ({2,3},{1})
    """
    q = np.asarray(q, dtype=float)
    return _group_by_value(np.concatenate(([0.0], q)), len(q))


class OrcdCosts:
    """Congestion costs ``V`` of the ORCD fixed point.

    Attributes:
        v: Costs indexed by node; ``v[0] = 0``.
        order: Relays in finalization order (value iteration reports them sorted by cost).
        iterations: Finalization steps or value-iteration sweeps.
    """
    __slots__ = ('v', 'order', 'iterations')

    def __init__(self, v: np.ndarray, order: Tuple[int, ...], iterations: int):
        self.v = v
        self.order = order
        self.iterations = iterations

    def residual(self, q, m: NetworkModel) -> float:
        """Largest violation of ``V_i = Q_i + sum_S P(S|i) min_{j in S} V_j`` over the relays."""
        q = np.asarray(q, dtype=float)
        worst = 0.0
        for i in m.relays:
            rhs = q[i - 1] + sum(p * self.v[list(members(mask))].min() for mask, p in m.entries(i))
            worst = max(worst, abs(self.v[i] - rhs))
        return worst

    def __repr__(self):
        return f"OrcdCosts(v={self.v.tolist()}, order={self.order}, iterations={self.iterations})"


def _check_orcd_inputs(q, m: NetworkModel, check_connected: bool) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if len(q) != m.n_relays:
        raise LengthMismatch(f"Backlog vector has length {len(q)}, model has {m.n_relays} relays")
    assert (q >= 0).all(), f"Backlogs must be non-negative, got {q.tolist()}"
    if check_connected and not is_connected(m):
        raise NotConnected("ORCD costs are undefined when a relay cannot reach the destination")
    return q


def orcd_costs(q, m: NetworkModel, check_connected: bool = True) -> OrcdCosts:
    """Solve ``V_0 = 0, V_i = Q_i + sum_S P(S|i) min_{j in S} V_j`` by Dijkstra-style finalization.

    Nodes are finalized in nondecreasing cost. A support set of ``i`` becomes active once its first member other than
    ``i`` is finalized; that member holds the minimum cost of the set. Until then the set contributes retention, which
    gives the candidate ``(Q_i + sum_active p V_first) / sum_active p``.

    Raises:
        NotConnected: Some relay cannot reach node 0 (checked up front unless ``check_connected`` is false).
        NoProgress: No unfinalized relay has an active set; only reachable with ``check_connected=False``.
    """
    q = _check_orcd_inputs(q, m, check_connected)
    n = m.n_relays
    watchers: Dict[int, List[Tuple[int, int, float]]] = defaultdict(list)
    for i, k, mask, p in transmitter_entries(m):
        for u in members(mask & ~(1 << i)):
            watchers[u].append((i, k, p))

    v = np.zeros(n + 1)
    num = np.zeros(n + 1)
    den = np.zeros(n + 1)
    finalized = np.zeros(n + 1, dtype=bool)
    active = set()
    frontier = SortedList()
    keys: Dict[int, Tuple[float, int]] = dict()
    order: List[int] = []

    def finalize(u: int):
        finalized[u] = True
        for i, k, p in watchers[u]:
            if finalized[i] or (i, k) in active:
                continue
            active.add((i, k))
            num[i] += p * v[u]
            den[i] += p
            old = keys.pop(i, None)
            if old is not None:
                frontier.remove(old)
            keys[i] = ((q[i - 1] + num[i]) / den[i], i)
            frontier.add(keys[i])

    finalize(0)
    while len(order) < n:
        if not frontier:
            stuck = [i for i in m.relays if not finalized[i]]
            raise NoProgress(f"Relays {stuck} cannot reach any finalized node")
        value, u = frontier.pop(0)
        del keys[u]
        v[u] = value
        order.append(u)
        finalize(u)
    return OrcdCosts(v, tuple(order), len(order))


def orcd_costs_value_iteration(q, m: NetworkModel, tol: float = VALUE_ITERATION_TOL,
                               max_iter: int = 10_000_000) -> OrcdCosts:
    """Fixed point by monotone value iteration from ``V = 0``; a cross-check for :func:`orcd_costs`."""
    q = _check_orcd_inputs(q, m, True)
    n = m.n_relays
    owners, probs, member_rows = [], [], []
    for i, _, mask, p in transmitter_entries(m):
        row = np.zeros(n + 1, dtype=bool)
        row[list(members(mask))] = True
        owners.append(i)
        probs.append(p)
        member_rows.append(row)
    owners = np.array(owners)
    probs = np.array(probs)
    membership = np.array(member_rows)

    v = np.zeros(n + 1)
    for sweep in range(1, max_iter + 1):
        mins = np.where(membership, v, np.inf).min(axis=1)
        new = np.zeros(n + 1)
        new[1:] = q + np.bincount(owners, weights=probs * mins, minlength=n + 1)[1:]
        change = np.abs(new - v).max()
        v = new
        if change < tol:
            break
    else:
        logger.warning("Value iteration stopped after %d sweeps without reaching tolerance %g", max_iter, tol)
    order = tuple(sorted(m.relays, key=lambda k: (v[k], k)))
    return OrcdCosts(v, order, sweep)


def rank_orcd(q, m: NetworkModel, tie: str = 'lowest-index') -> RankOrdering:
    """Relays ordered by congestion cost; costs equal within the tie tolerance share a class.

    The ordering does not depend on ``tie``: the rule only picks a forwarder inside a shared class, see
    :func:`select_forwarder`. An unknown rule raises ``AssertionError``.
    """
    assert tie in ('lowest-index', 'random'), f"Unknown tie rule {tie}"
    return _group_by_value(orcd_costs(q, m).v, m.n_relays)


def etx_costs(m: NetworkModel) -> np.ndarray:
    """Anypath expected transmission counts to the destination: the ORCD costs of a unit backlog everywhere."""
    return orcd_costs(np.ones(m.n_relays), m).v


def rank_etx(m: NetworkModel) -> RankOrdering:
    return _group_by_value(etx_costs(m), m.n_relays)


def rank_fpolicy(q, f: AbstractWeightFunction) -> RankOrdering:
    return resolve_cone(q, f, validate=False).ordering


def rank_pc_fpolicy(q, f: AbstractWeightFunction, m: NetworkModel) -> RankOrdering:
    return resolve_cone_pc(q, f, m, validate=False).ordering


def respects_check(fine_stream: Sequence[RankOrdering], coarse_stream: Sequence[RankOrdering]) -> bool:
    """Whether the first stream refines the second at every slot.

    Raises:
        LengthMismatch: The streams differ in length.
    """
    if len(fine_stream) != len(coarse_stream):
        raise LengthMismatch(f"Streams of length {len(fine_stream)} and {len(coarse_stream)} cannot be compared")
    for t, (fine, coarse) in enumerate(zip(fine_stream, coarse_stream)):
        if not is_refinement(fine, coarse):
            logger.debug("Refinement fails at slot %d: %s vs %s", t, fine, coarse)
            return False
    return True


def weighted_flow(q, r: RankOrdering, f: AbstractWeightFunction, decision: RoutingDecision) -> float:
    """``sum_i f(|C^{i-1}|, |C_i|) Q_{C_i} (out_i - in_i)`` for the packets moved by ``decision``.

    ``out_i`` counts packets leaving class ``C_i`` (deliveries included) and ``in_i`` packets entering it.
    """
    q = np.asarray(q, dtype=float)
    table = f.tabulate(len(q))
    scores = {}
    for c, p, s in zip(r.masks, r.prefix_sizes, r.class_sizes):
        scores[c] = table[p, s] * q[np.array(members(c)) - 1].sum()
    class_of = {j: c for c in r.masks for j in members(c)}
    total = 0.0
    for i, j in decision.moves():
        source = class_of[i]
        target = class_of.get(j)
        if source == target:
            continue
        total += scores[source]
        if target is not None:
            total -= scores[target]
    return total


def enumerate_routing_decisions(sets: Mapping[int, int]) -> Iterator[RoutingDecision]:
    """Every feasible decision for the realized forwarder sets (delivery forced whenever ``0`` is reached)."""
    transmitters = sorted(sets)
    choices = [(0,) if sets[i] & 1 else members(sets[i]) for i in transmitters]
    for combo in product(*choices):
        yield RoutingDecision(dict(sets), dict(zip(transmitters, combo)))


class Backpressure(AbstractRoutingPolicy):
    """Ranks relays by backlog (DIVBAR-style)."""
    __slots__ = ()

    name = 'backpressure'

    def rank(self, q: np.ndarray) -> RankOrdering:
        return rank_backpressure(q)


class Orcd(AbstractRoutingPolicy):
    """Ranks relays by the congestion costs of :func:`orcd_costs`."""
    __slots__ = ('model',)

    name = 'orcd'

    def __init__(self, model: NetworkModel, tie: str = 'lowest-index'):
        super().__init__(tie)
        if not is_connected(model):
            raise NotConnected("ORCD needs every relay to reach the destination")
        self.model = model

    def rank(self, q: np.ndarray) -> RankOrdering:
        return _group_by_value(orcd_costs(q, self.model, check_connected=False).v, self.model.n_relays)


class FPolicy(AbstractRoutingPolicy):
    """Ranks by the cone holding the current backlog."""
    __slots__ = ('f',)

    name = 'fpolicy'

    def __init__(self, f: AbstractWeightFunction, tie: str = 'lowest-index'):
        super().__init__(tie)
        self.f = f

    def resolve(self, q: np.ndarray) -> ConeResolution:
        return resolve_cone(q, self.f, validate=False)

    def rank(self, q: np.ndarray) -> RankOrdering:
        return self.resolve(q).ordering

    def __repr__(self):
        return f"FPolicy({self.f!r}, tie={self.tie})"


class PathConnectedFPolicy(FPolicy):
    """Ranks by the path-connected cone holding the current backlog."""
    __slots__ = ('model',)

    name = 'pc-fpolicy'

    def __init__(self, f: AbstractWeightFunction, model: NetworkModel, tie: str = 'lowest-index'):
        super().__init__(f, tie)
        if not is_connected(model):
            raise NotConnected("The path-connected f-policy needs every relay to reach the destination")
        self.model = model

    def resolve(self, q: np.ndarray) -> ConeResolution:
        return resolve_cone_pc(q, self.f, self.model, validate=False)


class StaticPriority(AbstractRoutingPolicy):
    """The same rank ordering in every slot."""
    __slots__ = ('ordering',)

    name = 'static-priority'

    def __init__(self, ordering: RankOrdering, tie: str = 'lowest-index'):
        super().__init__(tie)
        self.ordering = ordering

    def rank(self, q: np.ndarray) -> RankOrdering:
        return self.ordering

    def __repr__(self):
        return f"StaticPriority({self.ordering}, tie={self.tie})"


class Etx(StaticPriority):
    """Opportunistic routing by anypath transmission counts; ignores backlogs."""
    __slots__ = ()

    name = 'etx'

    def __init__(self, model: NetworkModel, tie: str = 'lowest-index'):
        super().__init__(rank_etx(model), tie)


policies = {'backpressure': Backpressure,
            'orcd': Orcd,
            'fpolicy': FPolicy,
            'pc-fpolicy': PathConnectedFPolicy,
            'static-priority': StaticPriority,
            'etx': Etx}


def policy_from_spec(spec: str, m: NetworkModel, f: AbstractWeightFunction,
                     tie: str = 'lowest-index') -> AbstractRoutingPolicy:
    """Build a policy from ``backpressure``, ``orcd``, ``fpolicy``, ``pc-fpolicy``, ``etx`` or
    ``static-priority:<ordering-json>``.

    Raises:
        ConfigError: Unknown policy name or malformed static ordering.
    """
    name, _, arg = spec.partition(':')
    name = name.strip()
    if name not in policies:
        raise ConfigError(f"Unknown policy '{spec}', expected one of {sorted(policies)}")
    if name == 'backpressure':
        return Backpressure(tie)
    if name == 'fpolicy':
        return FPolicy(f, tie)
    if name == 'pc-fpolicy':
        return PathConnectedFPolicy(f, m, tie)
    if name == 'orcd':
        return Orcd(m, tie)
    if name == 'etx':
        return Etx(m, tie)
    try:
        ordering = RankOrdering.from_json(arg)
        validate_rank_ordering(ordering, m.n_relays)
    except (json.JSONDecodeError, TypeError, ValueError) as exc:
        raise ConfigError(f"Bad static ordering '{arg}': {exc}") from exc
    return StaticPriority(ordering, tie)


def route(policy: AbstractRoutingPolicy, q: np.ndarray, sets: Mapping[int, int],
          rng: Optional[np.random.Generator] = None,
          r: Optional[RankOrdering] = None) -> Tuple[RankOrdering, RoutingDecision]:
    """Rank ordering for ``q`` (unless given) and the forwarder of every transmitter in ``sets``."""
    if r is None:
        r = policy.rank(q)
    decision = RoutingDecision(dict(sets))
    for i in sorted(sets):
        decision.forwarders[i] = select_forwarder(r, i, sets[i], policy.tie, rng)
    return r, decision


__all__ = ['RoutingDecision', 'OrcdCosts', 'select_forwarder', 'rank_backpressure', 'orcd_costs',
           'orcd_costs_value_iteration', 'rank_orcd', 'etx_costs', 'rank_etx', 'rank_fpolicy', 'rank_pc_fpolicy',
           'respects_check', 'weighted_flow', 'enumerate_routing_decisions', 'Backpressure', 'Orcd', 'FPolicy',
           'PathConnectedFPolicy', 'StaticPriority', 'Etx', 'policies', 'policy_from_spec', 'route']
