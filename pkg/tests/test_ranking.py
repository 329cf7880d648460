import math
import unittest

import numpy as np

from oprouting.cones import enumerate_rank_orderings
from oprouting.exceptions import BadPrefixLength, EmptyClass, IdenticalOrderings, NotAPartition, NotPathConnected
from oprouting.network_generator import example_four_node
from oprouting.ranking import RankOrdering, adjacency, class_backlogs, compare_penalties, is_one_step_refinement, \
    is_path_connected, is_refinement, less_penalizes, mismatch, one_step_confinements, one_step_refinements, \
    path_connected_adjacency, penalty, validate_rank_ordering, weighted_class_backlogs
from oprouting.utils.log_config import setup_logging
from oprouting.weights import GeometricWeight

setup_logging("oprouting/logging_test.conf")


def R(*classes):
    return RankOrdering(classes)


class RankOrderingTest(unittest.TestCase):

    def test_structure(self):
        r = R([1], [2, 3])
        self.assertEqual(repr(r), "({1},{2,3})")
        self.assertEqual(r.class_sizes, (1, 2))
        self.assertEqual(r.prefix_sizes, (0, 1))
        self.assertEqual(r.rank_of(3), 1)
        self.assertEqual(r.to_json(), [[1], [2, 3]])
        self.assertEqual(RankOrdering.from_json("[[1],[3,2]]"), r)
        self.assertEqual(r.key(), "[[1],[2,3]]")
        self.assertEqual(RankOrdering.single_class(3), R([1, 2, 3]))

    def test_validation(self):
        validate_rank_ordering(R([2], [1, 3]), 3)
        with self.assertRaises(EmptyClass):
            validate_rank_ordering(R([1], []), 1)
        with self.assertRaises(NotAPartition):
            validate_rank_ordering(R([1], [1, 2]), 2)
        with self.assertRaises(NotAPartition):
            validate_rank_ordering(R([1]), 2)
        with self.assertRaises(NotAPartition):
            validate_rank_ordering(R([1], [2, 4]), 3)

    def test_mismatch(self):
        self.assertEqual(mismatch(R([1], [2, 3]), R([1], [2], [3])), 2)
        self.assertEqual(mismatch(R([1, 2]), R([2], [1])), 1)
        with self.assertRaises(IdenticalOrderings):
            mismatch(R([1], [2]), R([1], [2]))

    def test_refinement(self):
        self.assertTrue(is_refinement(R([1], [2], [3]), R([1], [2, 3])))
        self.assertTrue(is_refinement(R([2], [1], [3]), R([1, 2], [3])))
        self.assertTrue(is_refinement(R([1], [2]), R([1], [2])))
        self.assertFalse(is_refinement(R([1], [2, 3]), R([1], [2], [3])))
        self.assertFalse(is_refinement(R([3], [1, 2]), R([1, 2], [3])))
        self.assertTrue(is_one_step_refinement(R([1], [2], [3]), R([1, 2], [3])))
        self.assertFalse(is_one_step_refinement(R([1], [2], [3]), R([1, 2, 3])))

    def test_adjacency_counts(self):
        single = RankOrdering.single_class(3)
        self.assertEqual(len(one_step_refinements(single)), 6)
        self.assertEqual(one_step_confinements(single), [])
        chain = R([1], [2], [3])
        self.assertEqual(one_step_refinements(chain), [])
        self.assertEqual(one_step_confinements(chain), [R([1, 2], [3]), R([1], [2, 3])])
        self.assertEqual(len(adjacency(R([1], [2, 3]))), 3)

    def test_every_adjacent_ordering_is_a_partition(self):
        for r in enumerate_rank_orderings(4):
            for other in adjacency(r):
                validate_rank_ordering(other, 4)
                self.assertNotEqual(other, r)


class OrderingInvariantTest(unittest.TestCase):

    def test_mismatch_is_symmetric(self):
        for n in range(1, 6):
            orderings = enumerate_rank_orderings(n)
            for a in orderings:
                for b in orderings:
                    if a != b:
                        self.assertEqual(mismatch(a, b), mismatch(b, a), msg=f"{a} vs {b}")

    def test_adjacency_is_symmetric(self):
        for n in range(1, 6):
            neighbours = {r: set(adjacency(r)) for r in enumerate_rank_orderings(n)}
            for r, adjacent in neighbours.items():
                for other in adjacent:
                    self.assertIn(r, neighbours[other], msg=f"{r} is adjacent to {other} but not back")

    def test_refinements_split_exactly_one_class(self):
        for n in range(1, 6):
            for r in enumerate_rank_orderings(n):
                for x in one_step_refinements(r):
                    self.assertEqual(len(x), len(r) + 1)
                    self.assertTrue(is_refinement(x, r), msg=f"{x} should refine {r}")
                    self.assertTrue(is_one_step_refinement(x, r), msg=f"{x} should refine {r} in one step")

    def test_penalty_is_positively_homogeneous(self):
        rng = np.random.default_rng(4)
        for n in range(1, 6):
            for K in (2.0, 3.0, 10.0):
                f = GeometricWeight(K)
                for r in enumerate_rank_orderings(n):
                    q = rng.uniform(0.0, 10.0, n)
                    for prefix in range(1, len(r) + 1):
                        base = penalty(q, r, prefix, f)
                        for eta in (0.5, 2.0, 10.0):
                            self.assertTrue(math.isclose(penalty(eta * q, r, prefix, f), eta * base,
                                                         rel_tol=1e-12, abs_tol=1e-300))


class PenaltyTest(unittest.TestCase):

    def setUp(self):
        self.f = GeometricWeight(3.0)

    def test_class_backlogs(self):
        r = R([2], [1, 3])
        np.testing.assert_allclose(class_backlogs([1.0, 2.0, 4.0], r), [2.0, 5.0])
        np.testing.assert_allclose(weighted_class_backlogs([1.0, 2.0, 4.0], r, self.f),
                                   [2.0 * self.f.value(0, 1), 5.0 * self.f.value(1, 2)])

    def test_penalty_prefixes(self):
        r = R([1], [2])
        self.assertAlmostEqual(penalty([1.0, 3.0], r, 1, self.f), 0.5)
        self.assertAlmostEqual(penalty([1.0, 3.0], r, 2, self.f), 1.0)
        with self.assertRaises(BadPrefixLength):
            penalty([1.0, 3.0], r, 3, self.f)
        with self.assertRaises(BadPrefixLength):
            penalty([1.0, 3.0], r, 0, self.f)

    def test_tie_favours_refinement(self):
        fine, coarse = R([1], [2]), R([1, 2])
        self.assertEqual(compare_penalties(fine, coarse, [1.0, 3.0], self.f), (True, True))
        self.assertEqual(compare_penalties(coarse, fine, [1.0, 3.0], self.f), (False, True))

    def test_strict_comparison(self):
        fine, coarse = R([1], [2]), R([1, 2])
        self.assertTrue(less_penalizes(fine, coarse, [0.2, 1.0], self.f))
        self.assertFalse(less_penalizes(coarse, fine, [0.2, 1.0], self.f))
        self.assertTrue(less_penalizes(coarse, fine, [1.0, 1.0], self.f))
        with self.assertRaises(IdenticalOrderings):
            less_penalizes(fine, fine, [1.0, 1.0], self.f)


class TestPathConnected:

    def test_four_node_example(self):
        m = example_four_node()
        assert is_path_connected(R([1, 3], [2]), m)
        assert is_path_connected(R([1], [3], [2]), m)
        assert is_path_connected(R([1, 2, 3]), m)
        assert not is_path_connected(R([2], [1, 3]), m)
        assert not is_path_connected(R([2], [1], [3]), m)
        assert is_path_connected(R([1], [2], [3]), m)

    def test_relay_two_never_alone_lowest(self):
        m = example_four_node()
        for r in enumerate_rank_orderings(3):
            if r.masks[0] == 1 << 2:
                assert not is_path_connected(r, m)

    def test_adjacency_of_non_path_connected(self):
        m = example_four_node()
        try:
            path_connected_adjacency(R([2], [1, 3]), m)
        except NotPathConnected:
            pass
        else:
            raise AssertionError("expected NotPathConnected")

    def test_adjacency_is_path_connected(self):
        m = example_four_node()
        for r in enumerate_rank_orderings(3):
            if is_path_connected(r, m):
                for other in path_connected_adjacency(r, m):
                    assert is_path_connected(other, m)
