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

"""Example and random network generators."""
import logging
from typing import List, Optional, Tuple

import numpy as np

from .model import NetworkModel, from_link_probabilities, is_connected

logger = logging.getLogger(__name__)


def single_relay(p: float = 0.5) -> NetworkModel:
    """One relay that delivers with probability ``p`` and keeps the packet otherwise."""
    return from_link_probabilities(1, [(1, 0, p)])


def chain(n_relays: int = 2, p: float = 0.5) -> NetworkModel:
    """Line ``n -> n-1 -> ... -> 1 -> 0`` with success probability ``p`` on every hop."""
    return from_link_probabilities(n_relays, [(i, i - 1, p) for i in range(1, n_relays + 1)])


def symmetric_pair(p: float = 0.5) -> NetworkModel:
    """Two relays that both deliver directly with probability ``p`` and hear each other with probability ``p``."""
    return from_link_probabilities(2, [(1, 0, p), (1, 2, p), (2, 0, p), (2, 1, p)])


def example_four_node(p: float = 0.5) -> NetworkModel:
    """Destination plus three relays: 1 and 3 reach the destination, 2 reaches only 1 and 3.

    Every path-connected ordering must rank 1 or 3 no higher than 2, so ({2},{1},{3}), ({2},{3},{1}) and
    ({2},{1,3}) are not path-connected.
    """
    return from_link_probabilities(3, [(1, 0, p), (3, 0, p), (2, 1, p), (2, 3, p)])


def line_network(hops: int = 4, forward: float = 0.6, skip: float = 0.2, backward: float = 0.5) -> NetworkModel:
    """Line of ``hops`` relays with forward, two-hop skip and backward receptions.

    Relay ``i`` reaches ``i-1`` with probability ``forward``, ``i-2`` with ``skip`` and ``i+1`` with ``backward``.
    Backward receptions give backlog-driven policies the opportunity to move packets away from the destination.
    """
    links = []
    for i in range(1, hops + 1):
        links.append((i, i - 1, forward))
        if i >= 2 and skip > 0:
            links.append((i, i - 2, skip))
        if i < hops and backward > 0:
            links.append((i, i + 1, backward))
    return from_link_probabilities(hops, links)


class NetworkGenerator:
    """Random connected local-broadcast models for property tests and verification suites.

    Every relay ``i`` gets ``min_sets..max_sets`` support sets. The first one always contains a backbone parent drawn
    from ``{0, ..., i-1}``, so the reaches-graph is connected. Set probabilities are ``prob_floor`` plus a Dirichlet
    share of the remaining mass, which bounds ``p_min`` from below by ``prob_floor``.
    """

    def __init__(self, min_sets: int = 2, max_sets: int = 3, prob_floor: float = 0.1, extra_member_prob: float = 0.3):
        assert 1 <= min_sets <= max_sets, f"Need 1 <= min_sets <= max_sets, got {min_sets}, {max_sets}"
        assert 0 < prob_floor * max_sets <= 1, f"prob_floor={prob_floor} too large for {max_sets} sets"
        self.min_sets = min_sets
        self.max_sets = max_sets
        self.prob_floor = prob_floor
        self.extra_member_prob = extra_member_prob

    def _random_subset(self, rng: np.random.Generator, n_relays: int, i: int) -> List[int]:
        others = [j for j in range(n_relays + 1) if j != i]
        keep = rng.random(len(others)) < self.extra_member_prob
        return [j for j, k in zip(others, keep) if k]

    def generate(self, n_relays: int, rng: np.random.Generator) -> NetworkModel:
        broadcast = dict()
        for i in range(1, n_relays + 1):
            n_sets = int(rng.integers(self.min_sets, self.max_sets + 1))
            parent = int(rng.integers(0, i))
            sets: List[List[int]] = [sorted({i, parent, *self._random_subset(rng, n_relays, i)})]
            for _ in range(n_sets - 1):
                sets.append(sorted({i, *self._random_subset(rng, n_relays, i)}))
            share = rng.dirichlet(np.ones(n_sets)) * (1.0 - self.prob_floor * n_sets)
            probs = self.prob_floor + share
            broadcast[i] = list(zip(sets, probs.tolist()))
        model = NetworkModel(n_relays, broadcast)
        assert is_connected(model), "Backbone construction must yield a connected model"
        return model

    def generate_many(self, n_relays: int, count: int, rng: np.random.Generator) -> List[NetworkModel]:
        return [self.generate(n_relays, rng) for _ in range(count)]


def random_connected_model(n_relays: int, rng: np.random.Generator, **kwargs) -> NetworkModel:
    """Shortcut for ``NetworkGenerator(**kwargs).generate(n_relays, rng)``."""
    return NetworkGenerator(**kwargs).generate(n_relays, rng)


_BUILTINS = {'single-relay': single_relay,
             'chain': chain,
             'symmetric-pair': symmetric_pair,
             'example-four-node': example_four_node,
             'line': line_network}


def builtin_network(name: str, seed: Optional[int] = None, n_relays: Optional[int] = None, **options) -> NetworkModel:
    """Named network for configuration files; ``random`` needs ``n_relays`` and ``seed``."""
    if name == 'random':
        assert n_relays is not None, "The random network needs n_relays"
        return random_connected_model(int(n_relays), np.random.default_rng(0 if seed is None else seed), **options)
    try:
        factory = _BUILTINS[name]
    except KeyError:
        raise ValueError(f"Unknown builtin network '{name}', expected one of {sorted(_BUILTINS) + ['random']}")
    if n_relays is not None:
        key = 'hops' if name == 'line' else 'n_relays'
        options[key] = int(n_relays)
    return factory(**options)


def builtin_names() -> Tuple[str, ...]:
    return tuple(sorted(_BUILTINS)) + ('random',)
