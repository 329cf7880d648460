import unittest

import numpy as np
import pytest

from oprouting.cones import resolve_cone
from oprouting.exceptions import ConfigError, LengthMismatch, NoProgress, NotConnected
from oprouting.model import NetworkModel, sample_forwarder_set
from oprouting.network_generator import chain, example_four_node, line_network, single_relay, symmetric_pair
from oprouting.policies import Backpressure, Etx, FPolicy, Orcd, PathConnectedFPolicy, RoutingDecision, \
    StaticPriority, enumerate_routing_decisions, etx_costs, orcd_costs, orcd_costs_value_iteration, \
    policy_from_spec, rank_backpressure, rank_etx, rank_orcd, respects_check, route, select_forwarder, weighted_flow
from oprouting.ranking import RankOrdering as R
from oprouting.utils.log_config import setup_logging
from oprouting.utils.static_funcs import mask_of
from oprouting.weights import GeometricWeight

setup_logging("oprouting/logging_test.conf")


class ForwarderSelectionTest(unittest.TestCase):

    def test_lowest_rank_wins(self):
        r = R([[1], [2]])
        self.assertEqual(select_forwarder(r, 2, [1, 2]), 1)
        self.assertEqual(select_forwarder(r, 1, [1, 2]), 1)
        self.assertEqual(select_forwarder(r, 2, mask_of([0, 2])), 0)
        self.assertEqual(select_forwarder(r, 2, [2]), 2)

    def test_delivery_is_forced(self):
        r = R([[1], [2]])
        self.assertEqual(select_forwarder(r, 1, [0, 1, 2]), 0)

    def test_ties_inside_lowest_class(self):
        r = R([[1, 2], [3]])
        self.assertEqual(select_forwarder(r, 3, [1, 2, 3]), 1)
        self.assertEqual(select_forwarder(r, 2, [1, 2, 3]), 2)
        rng = np.random.default_rng(0)
        picks = {select_forwarder(r, 3, [1, 2, 3], tie='random', rng=rng) for _ in range(50)}
        self.assertEqual(picks, {1, 2})

    def test_transmitter_must_be_in_set(self):
        with self.assertRaises(AssertionError):
            select_forwarder(R([[1], [2]]), 2, [0, 1])

    def test_decision_feasibility(self):
        sets = {1: mask_of([0, 1]), 2: mask_of([1, 2])}
        decisions = list(enumerate_routing_decisions(sets))
        self.assertEqual(len(decisions), 2)
        self.assertTrue(all(d.is_feasible() for d in decisions))
        self.assertFalse(RoutingDecision(dict(sets), {1: 1, 2: 1}).is_feasible())
        self.assertFalse(RoutingDecision(dict(sets), {1: 0}).is_feasible())


class RankingPolicyTest(unittest.TestCase):

    def test_backpressure(self):
        self.assertEqual(repr(rank_backpressure([5, 2, 2])), "({2,3},{1})")
        self.assertEqual(rank_backpressure([0, 0]), R([[1, 2]]))
        self.assertEqual(Backpressure().rank(np.array([3.0, 1.0])), R([[2], [1]]))

    def test_orcd_chain(self):
        costs = orcd_costs([1.0, 1.0], chain(2, 0.5))
        np.testing.assert_allclose(costs.v, [0.0, 2.0, 4.0])
        self.assertEqual(costs.order, (1, 2))
        self.assertEqual(rank_orcd([1.0, 1.0], chain(2, 0.5)), R([[1], [2]]))
        self.assertLess(costs.residual([1.0, 1.0], chain(2, 0.5)), 1e-12)

    def test_orcd_tie_rule(self):
        m = symmetric_pair(0.5)
        for tie in ('lowest-index', 'random'):
            self.assertEqual(rank_orcd([2.0, 2.0], m, tie=tie), R([[1, 2]]))
            self.assertEqual(Orcd(m, tie=tie).rank(np.array([2.0, 2.0])), rank_orcd([2.0, 2.0], m, tie))
        self.assertEqual(rank_orcd([0.0, 0.0], m), R([[1, 2]]))
        with self.assertRaises(AssertionError):
            rank_orcd([1.0, 1.0], m, tie='nearest')

    def test_orcd_single_relay_and_etx(self):
        np.testing.assert_allclose(orcd_costs([2.0], single_relay(0.5)).v, [0.0, 4.0])
        np.testing.assert_allclose(etx_costs(single_relay(0.5)), [0.0, 2.0])
        self.assertEqual(rank_etx(chain(3)), R([[1], [2], [3]]))
        self.assertEqual(Etx(chain(3)).rank(np.array([9.0, 0.0, 0.0])), R([[1], [2], [3]]))

    def test_orcd_errors(self):
        disconnected = NetworkModel(2, {1: [([0, 1], 1.0)], 2: [([2], 1.0)]})
        with self.assertRaises(NotConnected):
            orcd_costs([1.0, 1.0], disconnected)
        with self.assertRaises(NoProgress):
            orcd_costs([1.0, 1.0], disconnected, check_connected=False)
        with self.assertRaises(NotConnected):
            Orcd(disconnected)
        with self.assertRaises(LengthMismatch):
            orcd_costs([1.0], chain(2))

    def test_value_iteration_agrees(self):
        rng = np.random.default_rng(3)
        for m in (chain(3, 0.5), example_four_node(), line_network(4)):
            for _ in range(10):
                q = rng.uniform(0.0, 10.0, m.n_relays)
                exact = orcd_costs(q, m)
                approx = orcd_costs_value_iteration(q, m)
                np.testing.assert_allclose(exact.v, approx.v, rtol=1e-6, atol=1e-6)
                self.assertLess(exact.residual(q, m), 1e-9)

    def test_fpolicies(self):
        f = GeometricWeight(3.0)
        self.assertEqual(FPolicy(f).rank(np.array([0.2, 1.0])), R([[1], [2]]))
        policy = PathConnectedFPolicy(f, chain(2))
        self.assertEqual(policy.rank(np.array([5.0, 0.1])).rank_of(1), 0)

    def test_respects_check(self):
        fine, coarse = [R([[1], [2]])], [R([[1, 2]])]
        self.assertTrue(respects_check(fine, coarse))
        self.assertFalse(respects_check(coarse, fine))
        with self.assertRaises(LengthMismatch):
            respects_check(fine, fine + coarse)

    def test_route(self):
        r, decision = route(Backpressure(), np.array([3.0, 1.0]), {1: mask_of([1, 2]), 2: mask_of([0, 2])})
        self.assertEqual(r, R([[2], [1]]))
        self.assertEqual(decision.forwarders, {1: 2, 2: 0})
        self.assertEqual(list(decision.moves()), [(1, 2), (2, 0)])


class TestPolicySpec:

    def test_known_specs(self):
        m, f = example_four_node(), GeometricWeight(3.0)
        assert isinstance(policy_from_spec('backpressure', m, f), Backpressure)
        assert isinstance(policy_from_spec('orcd', m, f), Orcd)
        assert isinstance(policy_from_spec('pc-fpolicy', m, f), PathConnectedFPolicy)
        assert policy_from_spec('fpolicy', m, f, tie='random').tie == 'random'
        static = policy_from_spec('static-priority:[[1,3],[2]]', m, f)
        assert isinstance(static, StaticPriority)
        assert static.ordering == R([[1, 3], [2]])

    @pytest.mark.parametrize("spec", ['nope', 'static-priority:[[1]]', 'static-priority:oops',
                                      'static-priority:[[1],[1,2,3]]'])
    def test_bad_specs(self, spec):
        with pytest.raises(ConfigError):
            policy_from_spec(spec, example_four_node(), GeometricWeight(3.0))


class TestFlowOptimality:

    def test_fpolicy_decision_maximizes_weighted_flow(self):
        f = GeometricWeight(3.0)
        m = example_four_node()
        rng = np.random.default_rng(17)
        for _ in range(100):
            q = rng.uniform(0.0, 10.0, 3)
            r = resolve_cone(q, f).ordering
            transmitters = [i for i in m.relays if rng.random() < 0.8]
            sets = {i: mask_of(sample_forwarder_set(m, i, rng)) for i in transmitters}
            _, chosen = route(FPolicy(f), q, sets, r=r)
            best = max(weighted_flow(q, r, f, d) for d in enumerate_routing_decisions(sets))
            assert weighted_flow(q, r, f, chosen) >= best - 1e-9 * max(1.0, abs(best))
