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

"""Slotted queue simulation of a local-broadcast network under a priority routing policy."""
import logging
import time
from collections import Counter, deque
from typing import Callable, Deque, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .abstracts import AbstractRoutingPolicy, AbstractWeightFunction
from .cones import optimal_lyapunov
from .exceptions import ConfigError, LengthMismatch
from .model import NetworkModel
from .policies import RoutingDecision, route
from .ranking import RankOrdering
from .utils.oplogging import TRACE, trace_enabled
from .utils.rng import RandomStreams, SimulationStreams
from .utils.static_funcs import make_iterable_verbose

logger = logging.getLogger(__name__)

#: Size of the per-run memo of rank orderings keyed by the backlog vector.
RANK_CACHE_SIZE = 1 << 16


class ArrivalProcess:
    """I.i.d. exogenous arrivals, at most ``a_max`` packets per relay and slot.

    ``bernoulli`` delivers one packet with probability ``rate``. ``batch-uniform`` keeps a batch of
    ``Uniform{0, ..., a_max}`` packets with probability ``rate / (a_max / 2)``. Both draw a fixed number of variates
    per slot, so the arrival stream never depends on the routing policy.

    Args:
        kind: ``bernoulli`` or ``batch-uniform``.
        rates: Mean arrivals per slot of relays ``1..N``.
        a_max: Largest batch.
    """
    __slots__ = ('kind', 'rates', 'a_max', '_keep')

    kinds = ('bernoulli', 'batch-uniform')

    def __init__(self, kind: str, rates: Sequence[float], a_max: int = 1):
        if kind not in self.kinds:
            raise ConfigError(f"Unknown arrival kind '{kind}', expected one of {self.kinds}")
        self.kind = kind
        self.rates = np.asarray(rates, dtype=float)
        self.a_max = int(a_max)
        if (self.rates < 0).any():
            raise ValueError(f"Arrival rates must be non-negative, got {self.rates.tolist()}")
        if kind == 'bernoulli':
            if (self.rates > 1).any():
                raise ValueError(f"Bernoulli arrival rates must not exceed 1, got {self.rates.tolist()}")
            self.a_max = 1
            self._keep = self.rates
        else:
            if self.a_max < 1 or (self.rates > self.a_max / 2).any():
                raise ValueError(f"Batch-uniform arrivals need 0 <= rate <= a_max/2 = {self.a_max / 2}")
            self._keep = self.rates / (self.a_max / 2)

    @classmethod
    def zero(cls, n_relays: int) -> 'ArrivalProcess':
        return cls('bernoulli', np.zeros(n_relays))

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """Arrival counts of one slot for relays ``1..N``."""
        keep = rng.random(len(self.rates)) < self._keep
        if self.kind == 'bernoulli':
            return keep.astype(np.int64)
        sizes = rng.integers(0, self.a_max + 1, size=len(self.rates))
        return np.where(keep, sizes, 0).astype(np.int64)

    def scaled(self, factor: float) -> 'ArrivalProcess':
        return ArrivalProcess(self.kind, self.rates * factor, self.a_max)

    def __repr__(self):
        return f"ArrivalProcess({self.kind}, rates={self.rates.tolist()}, a_max={self.a_max})"


class QueueState:
    """FIFO packet records of every relay plus cumulative delivery counters.

    Each record is the slot in which the packet arrived from outside the network; it travels with the packet from
    relay to relay. Queue ``0`` does not exist, the destination absorbs packets.
    """
    __slots__ = ('queues', 'slot', 'arrivals_total', 'delivered_total', 'delay_total', 'last_delays',
                 'last_arrivals')

    def __init__(self, n_relays: int):
        self.queues: List[Deque[int]] = [deque() for _ in range(n_relays + 1)]
        self.slot = 0
        self.arrivals_total = 0
        self.delivered_total = 0
        self.delay_total = 0
        self.last_delays: List[int] = []
        self.last_arrivals = np.zeros(n_relays, dtype=np.int64)

    @classmethod
    def from_backlog(cls, q: Sequence[int]) -> 'QueueState':
        """State holding ``q[k-1]`` packets at relay ``k``, each born in slot ``-1`` and counted as an arrival."""
        state = cls(len(q))
        for k, count in enumerate(q, start=1):
            assert count >= 0 and int(count) == count, f"Initial backlog must be a non-negative integer, got {count}"
            state.queues[k].extend([-1] * int(count))
            state.arrivals_total += int(count)
        return state

    @property
    def n_relays(self) -> int:
        return len(self.queues) - 1

    def backlog(self) -> np.ndarray:
        return np.array([len(x) for x in self.queues[1:]], dtype=np.int64)

    def total_backlog(self) -> int:
        return sum(len(x) for x in self.queues[1:])

    def __repr__(self):
        return f"QueueState(slot={self.slot}, backlog={self.backlog().tolist()}, delivered={self.delivered_total})"


def step(state: QueueState, m: NetworkModel, policy: AbstractRoutingPolicy, arrivals: ArrivalProcess,
         streams: SimulationStreams,
         ranker: Optional[Callable[[np.ndarray], RankOrdering]] = None) -> Tuple[QueueState, RoutingDecision,
                                                                                 RankOrdering]:
    """Advance ``state`` by one slot in place.

    Decisions are fixed against the slot-start backlog before any queue changes: every nonempty relay draws its
    forwarder set and picks a forwarder, then all head-of-line packets move at once, then exogenous arrivals join
    with the current slot as birth slot.

    Args:
        state: Queue state, mutated.
        m: Network model.
        policy: Routing policy.
        arrivals: Arrival process.
        streams: Channel, arrival and tie generators.
        ranker: Optional replacement of ``policy.rank`` (e.g. memoized).

    Returns:
        The state, the slot's routing decision and its rank ordering.
    """
    t = state.slot
    q = state.backlog()
    u = streams.channel.random(m.n_relays)
    sets = {i: m.forwarder_mask(i, u[i - 1]) for i in m.relays if state.queues[i]}
    r = (ranker or policy.rank)(q)
    r, decision = route(policy, q, sets, streams.tie, r)

    moved = [(j, state.queues[i].popleft()) for i, j in decision.moves()]
    state.last_delays = []
    for j, birth in moved:
        if j == 0:
            delay = t - birth
            state.last_delays.append(delay)
            state.delivered_total += 1
            state.delay_total += delay
        else:
            state.queues[j].append(birth)

    a = arrivals.sample(streams.arrivals)
    for k in np.flatnonzero(a):
        state.queues[k + 1].extend([t] * int(a[k]))
    state.arrivals_total += int(a.sum())
    state.last_arrivals = a
    state.slot = t + 1
    return state, decision, r


class SimConfig:
    """Description of one simulation run.

    Args:
        model: Network model.
        policy: Policy object (see :func:`oprouting.policies.policy_from_spec`).
        arrivals: Arrival process.
        horizon: Number of slots T.
        warmup: Slots excluded from statistics; defaults to 10% of the horizon.
        seed: Root seed of the random streams.
        trace: Keep the long-form backlog trace.
        initial_backlog: Optional starting backlog vector.
        verbose: Show a progress bar when positive.
    """
    __slots__ = ('model', 'policy', 'arrivals', 'horizon', 'warmup', 'seed', 'trace', 'initial_backlog', 'verbose')

    def __init__(self, model: NetworkModel, policy: AbstractRoutingPolicy, arrivals: ArrivalProcess,
                 horizon: int, warmup: Optional[int] = None, seed: int = 0, trace: bool = False,
                 initial_backlog: Optional[Sequence[int]] = None, verbose: int = 0):
        if warmup is None:
            warmup = horizon // 10
        if not horizon > warmup >= 0:
            raise ConfigError(f"Need horizon > warmup >= 0, got horizon={horizon}, warmup={warmup}")
        if len(arrivals.rates) != model.n_relays:
            raise LengthMismatch(f"{len(arrivals.rates)} arrival rates for {model.n_relays} relays")
        self.model = model
        self.policy = policy
        self.arrivals = arrivals
        self.horizon = int(horizon)
        self.warmup = int(warmup)
        self.seed = int(seed)
        self.trace = trace
        self.initial_backlog = initial_backlog
        self.verbose = verbose


class SimStats:
    """Post-warmup statistics of a run.

    Attributes:
        avg_total_backlog: Time average of the total backlog over slots ``warmup..T-1``.
        avg_backlog: Per-relay time averages over the same slots.
        mean_delay: Mean delay of the packets delivered after warmup (``nan`` when none).
        delivered: Packets delivered in slots ``>= warmup``.
        throughput: ``delivered`` per post-warmup slot.
        max_total_backlog: Largest total backlog observed at a slot start.
        arrivals_total: Packets that entered the network, initial backlog included.
        final_total_backlog: Total backlog after the last slot.
        total_backlog: Total backlog at the start of every slot, ``T`` entries.
        cone_occupancy: Post-warmup slot count per rank ordering, keyed by its JSON text.
        trace: Long-form ``slot, node, backlog, arrivals`` frame (only when requested).
    """

    def __init__(self, policy: str, seed: int, horizon: int, warmup: int):
        self.policy = policy
        self.seed = seed
        self.horizon = horizon
        self.warmup = warmup
        self.avg_total_backlog = 0.0
        self.avg_backlog = np.zeros(0)
        self.mean_delay = float('nan')
        self.delivered = 0
        self.throughput = 0.0
        self.max_total_backlog = 0
        self.arrivals_total = 0
        self.final_total_backlog = 0
        self.total_backlog = np.zeros(0, dtype=np.int64)
        self.cone_occupancy: Dict[str, int] = dict()
        self.trace: Optional[pd.DataFrame] = None

    def running_average(self, start: int) -> float:
        """Average total backlog over the slots ``start..T-1``."""
        return float(self.total_backlog[start:].sum() / (self.horizon - start))

    def to_summary(self) -> dict:
        return {"policy": self.policy,
                "seed": self.seed,
                "horizon": self.horizon,
                "warmup": self.warmup,
                "avg_total_backlog": self.avg_total_backlog,
                "avg_backlog": [float(x) for x in self.avg_backlog],
                "mean_delay": None if np.isnan(self.mean_delay) else self.mean_delay,
                "delivered": self.delivered,
                "throughput": self.throughput,
                "max_total_backlog": self.max_total_backlog,
                "arrivals_total": self.arrivals_total,
                "final_total_backlog": self.final_total_backlog,
                "cone_occupancy": dict(sorted(self.cone_occupancy.items()))}

    def __repr__(self):
        return f"SimStats(policy={self.policy}, avg_total_backlog={self.avg_total_backlog}, " \
               f"delivered={self.delivered}, mean_delay={self.mean_delay})"


def _memoized(rank: Callable[[np.ndarray], RankOrdering]) -> Callable[[np.ndarray], RankOrdering]:
    cache: Dict[bytes, RankOrdering] = dict()

    def ranker(q: np.ndarray) -> RankOrdering:
        key = q.tobytes()
        r = cache.get(key)
        if r is None:
            if len(cache) >= RANK_CACHE_SIZE:
                cache.clear()
            r = rank(q)
            cache[key] = r
        return r
    return ranker


def run(cfg: SimConfig) -> SimStats:
    """Simulate ``cfg.horizon`` slots; deterministic given ``cfg.seed``."""
    m, n, horizon, warmup = cfg.model, cfg.model.n_relays, cfg.horizon, cfg.warmup
    streams = SimulationStreams(RandomStreams(cfg.seed))
    if cfg.initial_backlog is None:
        state = QueueState(n)
    else:
        state = QueueState.from_backlog(cfg.initial_backlog)
    # rank orderings depend on the backlog vector only
    ranker = _memoized(cfg.policy.rank)
    tracing = trace_enabled(logger)

    totals = np.zeros(horizon, dtype=np.int64)
    node_sums = np.zeros(n, dtype=np.int64)
    backlog_rows = np.zeros((horizon + 1, n), dtype=np.int64) if cfg.trace else None
    arrival_rows = np.zeros((horizon + 1, n), dtype=np.int64) if cfg.trace else None
    occupancy: Counter = Counter()
    delivered, delay_sum = 0, 0

    logger.info("Simulating %r for %d slots (warmup %d, seed %d)", cfg.policy, horizon, warmup, cfg.seed)
    started = time.time()
    for t in make_iterable_verbose(range(horizon), cfg.verbose, desc="Slots"):
        q = state.backlog()
        totals[t] = q.sum()
        if cfg.trace:
            backlog_rows[t] = q
        _, decision, r = step(state, m, cfg.policy, cfg.arrivals, streams, ranker)
        if cfg.trace:
            arrival_rows[t] = state.last_arrivals
        if t >= warmup:
            node_sums += q
            occupancy[r.key()] += 1
            delivered += len(state.last_delays)
            delay_sum += sum(state.last_delays)
        if tracing:
            logger.log(TRACE, "slot %d Q=%s R=%s moves=%s", t, q.tolist(), r, list(decision.moves()))

    stats = SimStats(cfg.policy.name, cfg.seed, horizon, warmup)
    count = horizon - warmup
    stats.total_backlog = totals
    stats.avg_total_backlog = float(totals[warmup:].sum() / count)
    stats.avg_backlog = node_sums / count
    stats.delivered = delivered
    stats.mean_delay = delay_sum / delivered if delivered else float('nan')
    stats.throughput = delivered / count
    stats.max_total_backlog = int(totals.max())
    stats.arrivals_total = state.arrivals_total
    stats.final_total_backlog = state.total_backlog()
    stats.cone_occupancy = dict(occupancy)
    if cfg.trace:
        backlog_rows[horizon] = state.backlog()
        stats.trace = trace_frame(backlog_rows, arrival_rows)
    logger.info("Finished %s in %.2fs: avg total backlog %.4f, delivered %d",
                cfg.policy.name, time.time() - started, stats.avg_total_backlog, delivered)
    return stats


def trace_frame(backlogs: np.ndarray, arrivals: np.ndarray) -> pd.DataFrame:
    """Long-form trace; row ``slot = T`` holds the backlog after the last slot and no arrivals."""
    slots, n = backlogs.shape
    return pd.DataFrame({"slot": np.repeat(np.arange(slots), n),
                         "node": np.tile(np.arange(1, n + 1), slots),
                         "backlog": backlogs.reshape(-1),
                         "arrivals": arrivals.reshape(-1)})


def stats_from_trace(trace: pd.DataFrame, warmup: int) -> Dict[str, object]:
    """Recompute the backlog and delivery statistics of a run from its long-form trace.

    Deliveries follow from conservation: ``Q(t) + A(t) - Q(t+1)`` packets leave the network in slot ``t``.
    """
    backlog = trace.pivot(index="slot", columns="node", values="backlog").to_numpy(dtype=np.int64)
    arrivals = trace.pivot(index="slot", columns="node", values="arrivals").to_numpy(dtype=np.int64)
    horizon = backlog.shape[0] - 1
    count = horizon - warmup
    totals = backlog[:horizon].sum(axis=1)
    departures = totals + arrivals[:horizon].sum(axis=1) - backlog[1:].sum(axis=1)
    delivered = int(departures[warmup:].sum())
    return {"avg_total_backlog": float(totals[warmup:].sum() / count),
            "avg_backlog": [float(x) for x in backlog[warmup:horizon].sum(axis=0) / count],
            "delivered": delivered,
            "throughput": delivered / count,
            "max_total_backlog": int(totals.max()),
            "final_total_backlog": int(backlog[horizon].sum())}


def drift_samples(q: Sequence[int], m: NetworkModel, policy: AbstractRoutingPolicy, f: AbstractWeightFunction,
                  arrivals: ArrivalProcess, n_samples: int, streams: RandomStreams,
                  path_connected: bool = False) -> np.ndarray:
    """One-slot changes ``L*(Q(t+1)) - L*(q)`` of the optimal Lyapunov function from ``n_samples`` transitions.

    Args:
        q: Integer backlog vector of the starting state.
        m: Network model.
        policy: Routing policy applied in the sampled slot.
        f: Weight function of the Lyapunov function.
        arrivals: Arrival process.
        n_samples: Number of independent transitions.
        streams: Root streams; the samples consume one channel, arrival and tie stream in sequence.
        path_connected: Evaluate the Lyapunov function over path-connected cones.
    """
    assert n_samples >= 1, f"n_samples must be positive, got {n_samples}"
    q = np.asarray(q, dtype=np.int64)
    model = m if path_connected else None
    base = optimal_lyapunov(q, f, model)
    r = policy.rank(q)
    sim_streams = SimulationStreams(streams)
    values: Dict[bytes, float] = dict()
    out = np.empty(n_samples)
    for k in range(n_samples):
        state = QueueState.from_backlog(q)
        step(state, m, policy, arrivals, sim_streams, lambda _: r)
        nxt = state.backlog()
        key = nxt.tobytes()
        value = values.get(key)
        if value is None:
            value = optimal_lyapunov(nxt, f, model)
            values[key] = value
        out[k] = value - base
    return out


def drift_estimate(q: Sequence[int], m: NetworkModel, policy: AbstractRoutingPolicy, f: AbstractWeightFunction,
                   arrivals: ArrivalProcess, n_samples: int, streams: Optional[RandomStreams] = None,
                   path_connected: bool = False) -> float:
    """Monte Carlo estimate of ``E[L*(Q(t+1)) - L*(Q(t)) | Q(t) = q]``."""
    if streams is None:
        streams = RandomStreams(0)
    return float(drift_samples(q, m, policy, f, arrivals, n_samples, streams, path_connected).mean())


def arrivals_from_config(cfg: Optional[Mapping], n_relays: int) -> ArrivalProcess:
    """Build an arrival process from ``{kind, rates | direction + scale, a_max}``."""
    cfg = dict(cfg or {})
    kind = cfg.get("kind", "bernoulli")
    if "rates" in cfg:
        rates = np.asarray(cfg["rates"], dtype=float)
    elif "direction" in cfg:
        rates = np.asarray(cfg["direction"], dtype=float) * float(cfg.get("scale", 1.0))
    else:
        rates = np.zeros(n_relays)
    if len(rates) != n_relays:
        raise ConfigError(f"Arrival configuration lists {len(rates)} rates for {n_relays} relays")
    try:
        return ArrivalProcess(kind, rates, int(cfg.get("a_max", 1)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


__all__ = ['ArrivalProcess', 'QueueState', 'SimConfig', 'SimStats', 'step', 'run', 'trace_frame',
           'stats_from_trace', 'drift_samples', 'drift_estimate', 'arrivals_from_config']
