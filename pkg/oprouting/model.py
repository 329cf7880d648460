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

"""Network topology and the probabilistic local broadcast channel."""
import logging
from collections import defaultdict
from itertools import product
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np

from .exceptions import BadSubset, DegreeTooLarge, NoPositiveEntry, ProbSumError, SelfNotInSet, TooLarge
from .utils.static_funcs import mask_of, members

logger = logging.getLogger(__name__)

#: Absolute tolerance on the per-node probability sum.
PROB_SUM_ATOL = 1e-9
#: Bitmask representation bound on the number of relays.
MAX_RELAYS = 63
#: Subset-explosion guard of the product-form constructor.
MAX_OUT_DEGREE = 20

_BroadcastSpec = Union[Mapping[int, Iterable[Tuple[Iterable[int], float]]], Iterable[Tuple[int, Iterable]]]


class NetworkModel:
    """Relays ``1..N``, destination ``0`` and the local broadcast distributions ``P(S|i)``.

    Each support set is stored as a bitmask over the node set; entries with zero probability are dropped and
    duplicate subsets are merged at construction. After validation the probabilities of every relay are rescaled to
    sum to one exactly. Instances are treated as immutable and are safe to share between simulation runs.

    Args:
        n_relays: Number of non-destination nodes N.
        broadcast: For each relay ``i`` a list of ``(subset, probability)`` pairs.
        validate: Run :func:`validate_model` (and renormalize) on construction.

    Attributes:
        n_relays (int): Number of relays.
    """
    __slots__ = ('n_relays', '_entries', '_cdf', '_out_mask')

    def __init__(self, n_relays: int, broadcast: _BroadcastSpec, validate: bool = True):
        if n_relays < 1:
            raise BadSubset(f"A network needs at least one relay, got n_relays={n_relays}")
        if n_relays > MAX_RELAYS:
            raise TooLarge(f"At most {MAX_RELAYS} relays are supported, got {n_relays}")
        self.n_relays = int(n_relays)

        items = broadcast.items() if isinstance(broadcast, Mapping) else broadcast
        merged: Dict[int, Dict[int, float]] = defaultdict(dict)
        for node, entries in items:
            node = int(node)
            merged.setdefault(node, {})
            for subset, p in entries:
                subset = list(subset)
                if any(int(j) < 0 for j in subset):
                    raise BadSubset(f"Node {node}: support set {subset} contains a negative index")
                p = float(p)
                if p == 0.0:
                    continue
                mask = mask_of(subset)
                merged[node][mask] = merged[node].get(mask, 0.0) + p
        self._entries: Dict[int, Tuple[Tuple[int, float], ...]] = {
            node: tuple(sorted(sets.items())) for node, sets in merged.items()}
        self._cdf: Dict[int, np.ndarray] = dict()
        self._out_mask: Dict[int, int] = dict()

        if validate:
            validate_model(self)
            self._renormalize()
        self._index()

    def _renormalize(self):
        for node, entries in self._entries.items():
            total = sum(p for _, p in entries)
            self._entries[node] = tuple((mask, p / total) for mask, p in entries)

    def _index(self):
        for node, entries in self._entries.items():
            probs = np.array([p for _, p in entries], dtype=float)
            self._cdf[node] = np.cumsum(probs) if len(probs) else probs
            out = 0
            for mask, _ in entries:
                out |= mask
            self._out_mask[node] = out & ~(1 << node)

    @property
    def relays(self) -> range:
        return range(1, self.n_relays + 1)

    @property
    def all_nodes_mask(self) -> int:
        """Bitmask of the relays ``1..N``."""
        return ((1 << (self.n_relays + 1)) - 1) & ~1

    def listed_nodes(self) -> List[int]:
        """Nodes that were given a broadcast list, including invalid ones."""
        return sorted(self._entries)

    def entries(self, i: int) -> Tuple[Tuple[int, float], ...]:
        """``(subset bitmask, probability)`` pairs of relay ``i``."""
        return self._entries.get(i, ())

    def support(self, i: int) -> List[Tuple[FrozenSet[int], float]]:
        """``(subset, probability)`` pairs of relay ``i`` with subsets as frozensets."""
        return [(frozenset(members(mask)), p) for mask, p in self.entries(i)]

    def out_mask(self, i: int) -> int:
        """Bitmask of the nodes that relay ``i`` reaches."""
        return self._out_mask.get(i, 0)

    def forwarder_mask(self, i: int, u: float) -> int:
        """Support set of ``i`` selected by the uniform draw ``u`` in [0, 1) through the cumulative distribution."""
        cdf = self._cdf[i]
        k = int(np.searchsorted(cdf, u, side='right'))
        if k >= len(cdf):
            k = len(cdf) - 1
        return self._entries[i][k][0]

    def drains_to_destination(self, allowed: int) -> int:
        """Nodes of ``allowed`` with a reaches-path to ``0`` that only visits ``allowed``.

        Args:
            allowed: Bitmask of relays that may be used.

        Returns:
            Bitmask of relays in ``allowed`` that reach the destination within ``allowed | {0}``.
        """
        good = 1
        pending = allowed & ~1
        changed = True
        while changed and pending:
            changed = False
            for j in members(pending):
                if self._out_mask.get(j, 0) & good:
                    good |= 1 << j
                    pending &= ~(1 << j)
                    changed = True
        return good & ~1

    def __eq__(self, other):
        if not isinstance(other, NetworkModel):
            return NotImplemented
        return self.n_relays == other.n_relays and self._entries == other._entries

    def __hash__(self):
        return hash((self.n_relays, tuple(sorted(self._entries.items()))))

    def __repr__(self):
        return f"NetworkModel(n_relays={self.n_relays}, entries={sum(len(e) for e in self._entries.values())})"


def validate_model(m: NetworkModel) -> None:
    """Check the broadcast lists of a model.

    Raises:
        BadSubset: The destination has a broadcast list, a listed node is not a relay, or a set names a node > N.
        SelfNotInSet: Some set with positive probability lacks its transmitter.
        ProbSumError: A distribution has a negative entry or does not sum to one within ``1e-9``.
    """
    n = m.n_relays
    for node in m.listed_nodes():
        if node == 0:
            raise BadSubset("The destination never transmits; node 0 must not have a broadcast list")
        if not 1 <= node <= n:
            raise BadSubset(f"Broadcast list given for node {node}, but relays are 1..{n}")
    limit = 1 << (n + 1)
    for i in m.relays:
        total = 0.0
        for mask, p in m.entries(i):
            if mask >= limit:
                raise BadSubset(f"Node {i}: support set {list(members(mask))} contains an index > {n}")
            if p < 0:
                raise ProbSumError(f"Node {i}: negative probability {p}")
            if not mask >> i & 1:
                raise SelfNotInSet(f"Node {i}: support set {list(members(mask))} does not contain the transmitter")
            total += p
        if abs(total - 1.0) > PROB_SUM_ATOL:
            raise ProbSumError(f"Node {i}: probabilities sum to {total}, expected 1")


def reaches(m: NetworkModel, i: int, j: int) -> bool:
    """Whether some support set of ``i`` contains ``j``; ``reaches(m, i, i)`` is always false."""
    assert 1 <= i <= m.n_relays, f"Transmitter must be a relay, got {i}"
    if i == j:
        return False
    return bool(m.out_mask(i) >> j & 1)


def reaches_graph(m: NetworkModel) -> nx.DiGraph:
    """Directed graph on ``0..N`` with an edge ``i -> j`` whenever ``i`` reaches ``j``."""
    graph = nx.DiGraph()
    graph.add_nodes_from(range(m.n_relays + 1))
    for i in m.relays:
        graph.add_edges_from((i, j) for j in members(m.out_mask(i)))
    return graph


def connected_relays(m: NetworkModel) -> List[int]:
    """Relays with a directed path of reaches-edges to the destination."""
    return sorted(nx.ancestors(reaches_graph(m), 0))


def is_connected(m: NetworkModel) -> bool:
    """Whether every relay has a directed path of reaches-edges to node 0."""
    return len(connected_relays(m)) == m.n_relays


def p_min(m: NetworkModel) -> float:
    """Smallest positive ``P(S|i)`` over all relays and listed sets.

    Raises:
        NoPositiveEntry: Some relay has an empty broadcast list.
    """
    smallest = 1.0
    for i in m.relays:
        probs = [p for _, p in m.entries(i) if p > 0]
        if not probs:
            raise NoPositiveEntry(f"Node {i} has no support set with positive probability")
        smallest = min(smallest, min(probs))
    return smallest


def sample_forwarder_set(m: NetworkModel, i: int, rng: np.random.Generator) -> FrozenSet[int]:
    """Draw the potential forwarders ``S_i(t)`` with probability ``P(S|i)``; deterministic given ``rng``."""
    assert 1 <= i <= m.n_relays, f"Transmitter must be a relay, got {i}"
    return frozenset(members(m.forwarder_mask(i, float(rng.random()))))


def from_link_probabilities(n_relays: int, links: Iterable[Sequence]) -> NetworkModel:
    """Product-form model: each listed link ``i -> j`` succeeds independently with probability ``q_ij``.

    Every relay is added to each of its outcome subsets; relays without links always keep their packet.

    Args:
        n_relays: Number of relays N.
        links: ``(i, j, q_ij)`` triples with ``i`` a relay, ``j != i`` any node and ``0 <= q_ij <= 1``.

    Returns:
        The induced :class:`NetworkModel`.

    Raises:
        DegreeTooLarge: Some relay has more than 20 outgoing links.
    """
    out_links: Dict[int, List[Tuple[int, float]]] = {i: [] for i in range(1, n_relays + 1)}
    for link in links:
        i, j, q = int(link[0]), int(link[1]), float(link[2])
        if not 1 <= i <= n_relays:
            raise BadSubset(f"Link source {i} is not a relay in 1..{n_relays}")
        if not 0 <= j <= n_relays or j == i:
            raise BadSubset(f"Link {i}->{j}: target must be a node other than the source")
        if not 0.0 <= q <= 1.0:
            raise ProbSumError(f"Link {i}->{j}: success probability {q} outside of [0, 1]")
        if any(k == j for k, _ in out_links[i]):
            raise ValueError(f"Link {i}->{j} is listed twice")
        out_links[i].append((j, q))

    broadcast: Dict[int, List[Tuple[List[int], float]]] = dict()
    for i, targets in out_links.items():
        if len(targets) > MAX_OUT_DEGREE:
            raise DegreeTooLarge(f"Node {i} has out-degree {len(targets)} > {MAX_OUT_DEGREE}")
        entries = []
        for outcome in product((True, False), repeat=len(targets)):
            prob = 1.0
            subset = [i]
            for (j, q), ok in zip(targets, outcome):
                prob *= q if ok else 1.0 - q
                if ok:
                    subset.append(j)
            if prob > 0.0:
                entries.append((subset, prob))
        broadcast[i] = entries
    logger.debug("Product-form model with %d relays and %d links", n_relays, sum(map(len, out_links.values())))
    return NetworkModel(n_relays, broadcast)


def network_from_config(cfg: Mapping) -> NetworkModel:
    """Build a model from the ``network`` section of an experiment configuration.

    Accepted shapes::

        {n_relays: 2, links: [[1, 0, 0.5], [2, 1, 0.5]]}
        {n_relays: 1, broadcast: [{node: 1, sets: [{set: [0, 1], p: 0.5}, {set: [1], p: 0.5}]}]}
        {builtin: example-four-node}
    """
    if "builtin" in cfg:
        from .network_generator import builtin_network
        options = {k: v for k, v in cfg.items() if k != "builtin"}
        return builtin_network(cfg["builtin"], **options)
    if "n_relays" not in cfg:
        raise ValueError("Network configuration needs 'n_relays' (or 'builtin')")
    n = int(cfg["n_relays"])
    if "links" in cfg:
        return from_link_probabilities(n, cfg["links"])
    if "broadcast" in cfg:
        broadcast = [(block["node"], [(entry["set"], entry["p"]) for entry in block["sets"]])
                     for block in cfg["broadcast"]]
        return NetworkModel(n, broadcast)
    raise ValueError("Network configuration needs either 'links' or 'broadcast'")


def model_to_config(m: NetworkModel) -> Dict:
    """Inverse of :func:`network_from_config` using explicit broadcast blocks."""
    return {"n_relays": m.n_relays,
            "broadcast": [{"node": i,
                           "sets": [{"set": list(members(mask)), "p": p} for mask, p in m.entries(i)]}
                          for i in m.relays]}


def transmitter_entries(m: NetworkModel, relays: Optional[Iterable[int]] = None):
    """Flatten ``(i, entry index, mask, p)`` over the given relays, used by the ORCD and LP builders."""
    for i in (m.relays if relays is None else relays):
        for k, (mask, p) in enumerate(m.entries(i)):
            yield i, k, mask, p
