import unittest
from itertools import product

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from oprouting.cones import enumerate_rank_orderings, hyperplane_point, lyapunov_gradient, lyapunov_value, \
    optimal_lyapunov, resolve_cone, resolve_cone_oracle, resolve_cone_pc, resolve_cone_pc_oracle
from oprouting.exceptions import MultipleCones, NotConnected, TooLarge
from oprouting.model import NetworkModel
from oprouting.network_generator import NetworkGenerator, chain, example_four_node
from oprouting.ranking import RankOrdering, is_path_connected, one_step_confinements
from oprouting.utils.log_config import setup_logging
from oprouting.weights import GeometricWeight, broken_weight

setup_logging("oprouting/logging_test.conf")


class ConeResolutionTest(unittest.TestCase):

    def setUp(self):
        self.f = GeometricWeight(3.0)

    def test_two_relay_examples(self):
        r = resolve_cone([1.0, 1.0], self.f)
        self.assertEqual(r.ordering.to_json(), [[1, 2]])
        self.assertFalse(r.on_boundary)
        r = resolve_cone([0.2, 1.0], self.f)
        self.assertEqual(r.ordering.to_json(), [[1], [2]])
        self.assertFalse(r.on_boundary)
        self.assertEqual(r.checked_adjacency_count, 1)

    def test_tie_resolves_to_refinement(self):
        r = resolve_cone([1.0, 3.0], self.f)
        self.assertEqual(r.ordering.to_json(), [[1], [2]])
        self.assertTrue(r.on_boundary)
        oracle = resolve_cone_oracle([1.0, 3.0], self.f)
        self.assertEqual(oracle.ordering, r.ordering)
        self.assertTrue(oracle.on_boundary)

    def test_zero_backlog(self):
        r = resolve_cone([0.0, 0.0, 0.0], self.f)
        self.assertEqual(r.ordering, RankOrdering.single_class(3))
        self.assertTrue(r.on_boundary)
        self.assertEqual(resolve_cone([7.0], self.f).ordering, RankOrdering.single_class(1))

    def test_large_backlog_ranks_high(self):
        r = resolve_cone([0.1, 0.1, 50.0], self.f).ordering
        self.assertEqual(r.masks[-1], 1 << 3)

    def test_matches_oracle_on_random_backlogs(self):
        rng = np.random.default_rng(11)
        for n in (2, 3, 4):
            for K in (2.0, 3.0, 10.0):
                f = GeometricWeight(K)
                for _ in range(150):
                    q = rng.uniform(0.0, 10.0, n)
                    self.assertEqual(resolve_cone(q, f).ordering, resolve_cone_oracle(q, f).ordering)

    def test_matches_oracle_on_larger_networks(self):
        rng = np.random.default_rng(12)
        f = GeometricWeight(3.0)
        for n in (5, 6):
            for _ in range(5):
                q = rng.uniform(0.0, 10.0, n)
                self.assertEqual(resolve_cone(q, f).ordering, resolve_cone_oracle(q, f).ordering)

    def test_broken_weight_has_overlapping_cones(self):
        f = broken_weight(GeometricWeight(3.0), 2)
        with self.assertRaises(MultipleCones) as ctx:
            resolve_cone_oracle([1.0, 1.0], f)
        self.assertGreaterEqual(len(ctx.exception.candidates), 2)
        self.assertEqual(ctx.exception.q, [1.0, 1.0])

    def test_ordered_bell_numbers(self):
        self.assertEqual([len(enumerate_rank_orderings(n)) for n in (1, 2, 3, 4)], [1, 3, 13, 75])
        self.assertEqual(len(set(enumerate_rank_orderings(4))), 75)
        with self.assertRaises(TooLarge):
            enumerate_rank_orderings(9)


class PathConnectedConeTest(unittest.TestCase):

    def setUp(self):
        self.f = GeometricWeight(3.0)
        self.m = example_four_node()

    def test_relay_two_is_never_alone_lowest(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            q = rng.uniform(0.0, 10.0, 3)
            q[1] *= 0.01
            r = resolve_cone_pc(q, self.f, self.m).ordering
            self.assertNotEqual(r.masks[0], 1 << 2)
            self.assertTrue(is_path_connected(r, self.m))

    def test_matches_oracle_on_random_models(self):
        rng = np.random.default_rng(21)
        generator = NetworkGenerator()
        for n in (2, 3, 4):
            for _ in range(4):
                m = generator.generate(n, rng)
                for _ in range(25):
                    q = rng.uniform(0.0, 10.0, n)
                    self.assertEqual(resolve_cone_pc(q, self.f, m).ordering,
                                     resolve_cone_pc_oracle(q, self.f, m).ordering)

    def test_guards(self):
        with self.assertRaises(TooLarge):
            resolve_cone_pc(np.ones(17), self.f, chain(17))
        disconnected = NetworkModel(2, {1: [([0, 1], 1.0)], 2: [([2], 1.0)]})
        with self.assertRaises(NotConnected):
            resolve_cone_pc([1.0, 1.0], self.f, disconnected)

    def test_chain_is_forced_upward(self):
        # relay 2 only reaches relay 1, so it can never rank below it
        r = resolve_cone_pc([5.0, 0.1], self.f, chain(2)).ordering
        self.assertEqual(r.rank_of(1), 0)


class LyapunovTest(unittest.TestCase):

    def setUp(self):
        self.f = GeometricWeight(3.0)

    def test_value_and_gradient(self):
        r = RankOrdering([[1], [2]])
        self.assertAlmostEqual(lyapunov_value([1.0, 3.0], self.f, r), 0.5 + 9.0 / 6.0)
        np.testing.assert_allclose(lyapunov_gradient([1.0, 3.0], self.f, r), [1.0, 1.0])
        self.assertAlmostEqual(optimal_lyapunov([1.0, 3.0], self.f), 2.0)
        self.assertAlmostEqual(optimal_lyapunov([1.0, 3.0], self.f, chain(2)), 2.0)

    def test_hyperplane_point_rejects_non_adjacent(self):
        with self.assertRaises(ValueError):
            hyperplane_point([1.0, 1.0, 1.0], RankOrdering([[1], [2], [3]]), RankOrdering([[1, 2, 3]]), self.f)

    def test_finite_differences(self):
        rng = np.random.default_rng(8)
        h = 1e-5
        for _ in range(30):
            q = rng.uniform(1.0, 10.0, 3)
            grad = lyapunov_gradient(q, self.f, resolve_cone(q, self.f).ordering)
            numeric = [(optimal_lyapunov(q + h * e, self.f) - optimal_lyapunov(q - h * e, self.f)) / (2 * h)
                       for e in np.eye(3)]
            np.testing.assert_allclose(grad, numeric, rtol=1e-5, atol=1e-6)


class TestLyapunovContinuity:

    @given(q=st.lists(st.floats(min_value=0.1, max_value=10.0), min_size=3, max_size=3),
           index=st.integers(min_value=0, max_value=200), K=st.sampled_from([2.0, 3.0, 10.0]))
    @settings(max_examples=100, deadline=None)
    def test_value_and_gradient_agree_on_boundaries(self, q, index, K):
        f = GeometricWeight(K)
        orderings = [r for r in enumerate_rank_orderings(3) if len(r) >= 2]
        fine = orderings[index % len(orderings)]
        coarse = one_step_confinements(fine)[index % (len(fine) - 1)]
        point = hyperplane_point(q, fine, coarse, f)
        a, b = lyapunov_value(point, f, fine), lyapunov_value(point, f, coarse)
        assert abs(a - b) <= 1e-9 * max(1.0, abs(a))
        np.testing.assert_allclose(lyapunov_gradient(point, f, fine), lyapunov_gradient(point, f, coarse),
                                   rtol=1e-9, atol=1e-12)


class TestConeScaling:

    @given(q=st.lists(st.floats(min_value=0.01, max_value=100.0), min_size=2, max_size=5),
           K=st.sampled_from([1.5, 2.0, 3.0, 10.0]), eta=st.sampled_from([0.5, 2.0, 10.0]))
    @settings(max_examples=200, deadline=None)
    def test_rescaled_backlog_keeps_its_cone(self, q, K, eta):
        f = GeometricWeight(K)
        base = resolve_cone(q, f)
        assume(not base.on_boundary)
        assert resolve_cone(eta * np.asarray(q), f).ordering == base.ordering

    @given(q=st.lists(st.floats(min_value=0.01, max_value=100.0), min_size=3, max_size=3),
           K=st.sampled_from([1.5, 2.0, 3.0, 10.0]), eta=st.sampled_from([0.5, 2.0, 10.0]),
           which=st.sampled_from(['four-node', 'chain']))
    @settings(max_examples=200, deadline=None)
    def test_rescaled_backlog_keeps_its_path_connected_cone(self, q, K, eta, which):
        f = GeometricWeight(K)
        m = example_four_node() if which == 'four-node' else chain(3)
        base = resolve_cone_pc(q, f, m)
        assume(not base.on_boundary)
        assert resolve_cone_pc(eta * np.asarray(q), f, m).ordering == base.ordering

    @pytest.mark.parametrize("n", [2, 3, 4])
    @pytest.mark.parametrize("K", [2.0, 3.0, 10.0])
    def test_integer_grid_is_scale_invariant(self, n, K):
        f = GeometricWeight(K)
        for q in product(range(4), repeat=n):
            base = resolve_cone(q, f)
            if base.on_boundary:
                continue
            for eta in (0.5, 2.0, 10.0):
                assert resolve_cone(eta * np.asarray(q, dtype=float), f).ordering == base.ordering, (q, eta)
