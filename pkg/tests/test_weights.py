import unittest

import numpy as np
from hypothesis import given, settings, strategies as st

from oprouting.exceptions import ConfigError, DomainError
from oprouting.weights import CallableWeight, GeometricWeight, TableWeight, broken_weight, check_c1, check_c2, \
    check_c3, domain, k_for_ratio_bound, triples, weight_from_config
from oprouting.utils.log_config import setup_logging

setup_logging("oprouting/logging_test.conf")


class WeightFunctionTest(unittest.TestCase):

    def test_geometric_values(self):
        f = GeometricWeight(3.0)
        self.assertAlmostEqual(f(0, 1), 0.5)
        self.assertAlmostEqual(f(1, 1), 1.0 / 6.0)
        self.assertAlmostEqual(f(0, 2), 1.0 / 8.0)
        self.assertAlmostEqual(1.0 / f(0, 2), 1.0 / f(0, 1) + 1.0 / f(1, 1))

    def test_domain_checks(self):
        f = GeometricWeight(3.0, n_max=3)
        with self.assertRaises(DomainError):
            f(0, 0)
        with self.assertRaises(DomainError):
            f(-1, 1)
        with self.assertRaises(DomainError):
            f(2, 2)
        with self.assertRaises(DomainError):
            GeometricWeight(1.0)
        with self.assertRaises(DomainError):
            TableWeight({(0, 1): 1.0}).value(0, 2)

    def test_domain_and_triples(self):
        self.assertEqual(list(domain(2)), [(0, 1), (0, 2), (1, 1)])
        self.assertEqual(list(triples(2)), [(0, 1, 1)])

    def test_tabulate(self):
        table = GeometricWeight(2.0).tabulate(3)
        self.assertEqual(table.shape, (4, 4))
        self.assertAlmostEqual(table[1, 2], 1.0 / (2.0 * 3.0))
        self.assertFalse(table.flags.writeable)

    def test_additivity_and_monotonicity(self):
        self.assertTrue(check_c1(GeometricWeight(3.0), 6))
        self.assertTrue(check_c2(GeometricWeight(3.0), 6))
        one_over_n = CallableWeight(lambda m, n: 1.0 / n, "1/n")
        self.assertTrue(check_c1(one_over_n, 4))
        self.assertFalse(check_c2(one_over_n, 4))
        one_over_sum = CallableWeight(lambda m, n: 1.0 / (m + n), "1/(m+n)")
        self.assertTrue(check_c2(one_over_sum, 4))
        self.assertFalse(check_c1(one_over_sum, 4))

    def test_negative_weight_fails_checks(self):
        f = GeometricWeight(0.5)
        self.assertFalse(check_c2(f, 4))
        self.assertFalse(check_c1(f, 4))

    def test_ratio_bound(self):
        self.assertFalse(check_c3(GeometricWeight(2.0), 0.5, 4))
        self.assertTrue(check_c3(GeometricWeight(3.0), 0.5, 4))
        self.assertEqual(k_for_ratio_bound(0.5), 3.0)
        self.assertEqual(k_for_ratio_bound(0.25), 5.0)
        self.assertTrue(check_c3(GeometricWeight(k_for_ratio_bound(0.3)), 0.3, 5))

    def test_broken_weight(self):
        f = broken_weight(GeometricWeight(3.0), 3)
        self.assertAlmostEqual(f.value(0, 1), 0.5)
        self.assertAlmostEqual(f.value(0, 2), 3.2 / 8.0)
        self.assertFalse(check_c1(f, 3))

    def test_from_config(self):
        self.assertEqual(weight_from_config(None).describe(), {"family": "geometric", "K": 3.0})
        table = weight_from_config({"family": "table", "values": [[0, 1, 0.5], [0, 2, 0.125], [1, 1, 0.25]]})
        self.assertEqual(table.value(1, 1), 0.25)
        self.assertEqual(weight_from_config(table.describe()).values, table.values)
        with self.assertRaises(ConfigError):
            weight_from_config({"family": "geometric", "K": 0.5})
        with self.assertRaises(ConfigError):
            weight_from_config({"family": "table"})
        with self.assertRaises(ConfigError):
            weight_from_config({"family": "harmonic"})


class TestGeometricFamily:

    @given(K=st.floats(min_value=1.5, max_value=20.0))
    @settings(max_examples=50, deadline=None)
    def test_geometric_is_additive_and_monotone(self, K):
        f = GeometricWeight(K)
        assert check_c1(f, 5)
        assert check_c2(f, 5)

    @given(p=st.floats(min_value=0.05, max_value=1.0))
    @settings(max_examples=50, deadline=None)
    def test_ratio_bound_parameter(self, p):
        assert check_c3(GeometricWeight(k_for_ratio_bound(p)), p, 4)

    @given(m=st.integers(min_value=0, max_value=4), parts=st.lists(st.integers(min_value=1, max_value=3),
                                                                   min_size=1, max_size=5),
           K=st.sampled_from([2.0, 3.0, 10.0]))
    @settings(max_examples=200, deadline=None)
    def test_split_class_telescopes(self, m, parts, K):
        f = GeometricWeight(K)
        offsets = np.cumsum([0] + parts[:-1])
        split = sum(1.0 / f.value(m + int(before), n) for before, n in zip(offsets, parts))
        whole = 1.0 / f.value(m, sum(parts))
        assert abs(split - whole) <= 1e-12 * whole

    @given(sizes=st.lists(st.integers(min_value=1, max_value=3), min_size=2, max_size=5),
           K=st.sampled_from([2.0, 3.0, 10.0]))
    @settings(max_examples=100, deadline=None)
    def test_prefix_weights_telescope(self, sizes, K):
        f = GeometricWeight(K)
        prefix = np.cumsum([0] + sizes)
        for i in range(2, len(sizes) + 1):
            total = sum(1.0 / f.value(int(prefix[j - 1]), sizes[j - 1]) for j in range(1, i))
            expected = 1.0 / f.value(0, int(prefix[i - 1]))
            assert abs(total - expected) <= 1e-12 * expected
