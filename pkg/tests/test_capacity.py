import unittest

import numpy as np
import pytest

from oprouting.capacity import expected_flows, scale_to_boundary, stability_lp_feasible
from oprouting.exceptions import NotConnected
from oprouting.model import NetworkModel
from oprouting.network_generator import chain, example_four_node, line_network, single_relay
from oprouting.utils.log_config import setup_logging
from oprouting.utils.static_funcs import mask_of

setup_logging("oprouting/logging_test.conf")


class StabilityProgramTest(unittest.TestCase):

    def test_single_relay_slack(self):
        inside = stability_lp_feasible(single_relay(0.5), [0.4])
        self.assertTrue(inside.feasible)
        self.assertAlmostEqual(inside.slack, 0.1)
        outside = stability_lp_feasible(single_relay(0.5), [0.6])
        self.assertFalse(outside.feasible)
        self.assertAlmostEqual(outside.slack, -0.1)

    def test_delivery_is_forced_in_witness(self):
        result = stability_lp_feasible(single_relay(0.5), [0.1])
        self.assertEqual(result.witness[(1, mask_of([0, 1]))], {0: 1.0})
        as_dict = result.to_dict()
        self.assertEqual(as_dict["witness"][-1]["forwarders"], {"0": 1.0})

    def test_witness_supports_rates(self):
        m = example_four_node()
        lam = np.array([0.1, 0.05, 0.1])
        result = stability_lp_feasible(m, lam)
        self.assertTrue(result.feasible)
        net = expected_flows(m, result.witness)
        self.assertTrue((net - lam >= result.slack - 1e-8).all())

    def test_scipy_agrees(self):
        m = line_network(4)
        for lam in ([0.05, 0.05, 0.05, 0.05], [0.1, 0.0, 0.2, 0.1]):
            ours = stability_lp_feasible(m, lam)
            reference = stability_lp_feasible(m, lam, solver='scipy')
            self.assertAlmostEqual(ours.slack, reference.slack, places=7)

    def test_unknown_solver(self):
        with self.assertRaises(ValueError):
            stability_lp_feasible(single_relay(), [0.1], solver='glpk')

    def test_stranded_traffic(self):
        disconnected = NetworkModel(2, {1: [([0, 1], 1.0)], 2: [([2], 1.0)]})
        with self.assertRaises(NotConnected):
            stability_lp_feasible(disconnected, [0.1, 0.1])
        self.assertTrue(stability_lp_feasible(disconnected, [0.1, 0.0]).feasible)
        self.assertEqual(scale_to_boundary(disconnected, [1.0, 1.0]), 0.0)


class TestBoundaryScaling:

    @pytest.mark.parametrize("model, direction, expected", [
        (single_relay(0.5), [1.0], 0.5),
        (chain(2, 0.5), [0.0, 1.0], 0.5),
        (chain(2, 0.5), [1.0, 1.0], 0.25),
        (example_four_node(), [1.0, 1.0, 1.0], 1.0 / 3.0),
    ])
    def test_theta_star(self, model, direction, expected):
        assert scale_to_boundary(model, direction) == pytest.approx(expected, abs=1e-6)

    def test_monotone_in_scale(self):
        m = example_four_node()
        d = np.array([1.0, 2.0, 1.0])
        slacks = [stability_lp_feasible(m, s * d).slack for s in (0.0, 0.05, 0.1, 0.15)]
        assert all(a >= b - 1e-12 for a, b in zip(slacks, slacks[1:]))
