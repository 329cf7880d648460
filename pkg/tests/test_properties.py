from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oprouting.cones import enumerate_rank_orderings, resolve_cone
from oprouting.model import p_min
from oprouting.network_generator import NetworkGenerator, example_four_node
from oprouting.policies import Backpressure, orcd_costs, orcd_costs_value_iteration, rank_backpressure, \
    rank_fpolicy, rank_orcd, rank_pc_fpolicy, select_forwarder
from oprouting.ranking import is_refinement
from oprouting.sim import ArrivalProcess, QueueState, step
from oprouting.utils.log_config import setup_logging
from oprouting.utils.rng import SimulationStreams
from oprouting.utils.static_funcs import members
from oprouting.weights import GeometricWeight, check_c3, k_for_ratio_bound

setup_logging("oprouting/logging_test.conf")

ORDERINGS = enumerate_rank_orderings(4)


class TestForwarderProperties:

    @given(index=st.integers(min_value=0, max_value=len(ORDERINGS) - 1), i=st.integers(min_value=1, max_value=4),
           extra=st.integers(min_value=0, max_value=31))
    @settings(max_examples=200, deadline=None)
    def test_forwarder_is_in_set_and_never_ranks_higher(self, index, i, extra):
        r = ORDERINGS[index]
        s = extra | (1 << i)
        j = select_forwarder(r, i, s)
        assert s >> j & 1
        if s & 1:
            assert j == 0
        else:
            assert r.rank_of(j) == min(r.rank_of(k) for k in members(s))
            assert r.rank_of(j) <= r.rank_of(i)


class TestSimulationProperties:

    @given(seed=st.integers(min_value=0, max_value=2 ** 32),
           backlog=st.lists(st.integers(0, 5), min_size=3, max_size=3))
    @settings(max_examples=50, deadline=None)
    def test_step_conserves_packets(self, seed, backlog):
        m = example_four_node()
        streams = SimulationStreams.from_seed(seed)
        state = QueueState.from_backlog(backlog)
        arrivals = ArrivalProcess('batch-uniform', [0.5, 0.2, 1.0], a_max=2)
        arrived = 0
        for _ in range(10):
            before, delivered = state.total_backlog(), state.delivered_total
            step(state, m, Backpressure(), arrivals, streams)
            assert (state.backlog() >= 0).all()
            arrived += int(state.last_arrivals.sum())
            assert state.total_backlog() == before + int(state.last_arrivals.sum()) - \
                (state.delivered_total - delivered)
        assert state.arrivals_total == sum(backlog) + arrived


class TestOrcdProperties:

    @given(seed=st.integers(min_value=0, max_value=10_000), n=st.integers(min_value=1, max_value=6))
    @settings(max_examples=50, deadline=None)
    def test_dijkstra_matches_value_iteration(self, seed, n):
        rng = np.random.default_rng(seed)
        m = NetworkGenerator().generate(n, rng)
        q = rng.uniform(0.0, 10.0, n)
        exact = orcd_costs(q, m)
        np.testing.assert_allclose(exact.v, orcd_costs_value_iteration(q, m).v, rtol=1e-7, atol=1e-7)
        assert exact.v[0] == 0.0
        assert (np.diff(exact.v[list(exact.order)]) >= -1e-9).all()


class TestRefinementProperties:

    @given(q=st.lists(st.integers(min_value=1, max_value=10_000), min_size=2, max_size=5, unique=True)
           .map(lambda xs: [x / 100 for x in xs]),
           K=st.sampled_from([2.0, 3.0, 10.0]))
    @settings(max_examples=200, deadline=None)
    def test_backpressure_refines_fpolicy(self, q, K):
        assert is_refinement(rank_backpressure(q), resolve_cone(q, GeometricWeight(K), validate=False).ordering)


class TestIntegerBacklogRefinement:

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    @pytest.mark.parametrize("K", [2.0, 3.0, 10.0])
    def test_backpressure_refines_fpolicy_on_integer_grid(self, n, K):
        f = GeometricWeight(K)
        for q in product(range(4), repeat=n):
            fpolicy = resolve_cone(q, f, validate=True).ordering
            assert fpolicy == rank_fpolicy(q, f)
            assert is_refinement(rank_backpressure(q), fpolicy), q

    @pytest.mark.parametrize("extra", [0.0, 5.0])
    def test_orcd_refines_pc_fpolicy_on_integer_grid(self, extra):
        m = example_four_node()
        K = k_for_ratio_bound(p_min(m)) + extra
        f = GeometricWeight(K)
        assert check_c3(f, p_min(m), m.n_relays)
        for q in product(range(4), repeat=m.n_relays):
            assert is_refinement(rank_orcd(q, m), rank_pc_fpolicy(q, f, m)), q
