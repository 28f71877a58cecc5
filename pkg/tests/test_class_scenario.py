import unittest

import numpy as np

import PyMultiRAT.helper_radio as rad
from PyMultiRAT.class_distortion_model import Distortion_Model
from PyMultiRAT.class_profiles import Channel_Params, Pen_Profile, Ran_Profile
from PyMultiRAT.class_scenario import (
    TAG_RESOURCE_SHARE,
    TAG_ZERO_BANDWIDTH,
    Scenario,
)


def _scenario(n_pens=2, n_rans=2, **kwargs):
    rans = [
        Ran_Profile(j, 20e6, 6e-6 / (j + 1), 0.001 * (j + 1))
        for j in range(n_rans)
    ]
    pens = [Pen_Profile(i, 1e6, 0.2, 0.0) for i in range(n_pens)]
    channel = Channel_Params(0.1, 3.98e-21, 3.6e-6, ber=1e-3)
    return Scenario(rans, pens, channel, Distortion_Model(), **kwargs)


class Test_Class_Scenario(unittest.TestCase):
    def test_init__dimensions_and_properties(self):
        sc = _scenario(3, 2)
        self.assertEqual(sc.n_pens, 3)
        self.assertEqual(sc.n_rans, 2)
        self.assertEqual(sc.kappa_max, 0.99)
        self.assertTrue(np.allclose(sc.raw_bits, 1e6))
        self.assertTrue(np.allclose(sc.battery_capacity_j, 0.2))
        self.assertEqual(sc.n_obs_clamped, 0)

    def test_init__invalid_arguments(self):
        channel = Channel_Params(0.1, 3.98e-21, 3.6e-6)
        pens = [Pen_Profile(0, 1e6, 0.2, 0.0)]
        rans = [Ran_Profile(0, 20e6, 1e-6, 0.0)]
        with self.assertRaisesRegex(ValueError, '`rans` must be a non-empty'):
            Scenario([], pens, channel, Distortion_Model())

        with self.assertRaisesRegex(ValueError, '`pens` must be a non-empty'):
            Scenario(rans, [], channel, Distortion_Model())

        with self.assertRaisesRegex(TypeError, '`Pen_Profile`'):
            Scenario(rans, [1.0], channel, Distortion_Model())

        with self.assertRaisesRegex(TypeError, '`channel`'):
            Scenario(rans, pens, None, Distortion_Model())

        with self.assertRaisesRegex(ValueError, '`kappa_init`'):
            Scenario(rans, pens, channel, Distortion_Model(), kappa_init=0.995)

        with self.assertRaisesRegex(ValueError, '`seizure_mean_duration`'):
            Scenario(
                rans, pens, channel, Distortion_Model(), seizure_mean_duration=0
            )

    def test_derive_normalization__positive_and_worst_case(self):
        sc = _scenario()
        energy_max, cost_max, latency_max = sc.derive_normalization()
        self.assertGreater(energy_max, 0)
        self.assertAlmostEqual(cost_max, 6.0)
        self.assertGreater(latency_max, 0.002)
        self.assertEqual(sc.energy_max_j, energy_max)

        # A typical link is far from the worst case.
        links = sc.evaluate_links(
            np.zeros(2),
            np.array([[1.0, 0.0], [0.0, 1.0]]),
            np.full((2, 2), 0.5),
            np.ones((2, 2)),
        )
        self.assertTrue(np.all(links.norm_energy < 1))
        self.assertTrue(np.all(links.norm_latency < 1))

    def test_init__explicit_normalization_constants(self):
        sc = _scenario(energy_max_j=1.0, cost_max=10.0, latency_max_s=2.0)
        self.assertEqual(
            (sc.energy_max_j, sc.cost_max, sc.latency_max_s), (1.0, 10.0, 2.0)
        )
        with self.assertRaisesRegex(ValueError, 'Normalization constants'):
            _scenario(cost_max=0.0)

    def test_rates__matches_link_rate(self):
        sc = _scenario()
        theta = np.array([[0.25, 0.5], [0.75, 0.5]])
        fading = np.array([[1.0, 0.5], [2.0, 0.0]])
        rates = sc.rates(theta, fading)
        gain = rad.channel_gain(sc.channel, 1.0)
        self.assertAlmostEqual(
            rates[0, 0] / rad.link_rate(sc.rans[0], sc.channel, 0.25, gain),
            1.0,
            places=12,
        )
        self.assertEqual(rates[1, 1], 0.0)

    def test_evaluate_links__unused_links_carry_zeros(self):
        sc = _scenario(energy_max_j=1.0, cost_max=10.0, latency_max_s=1.0)
        utilization = np.array([[1.0, 0.0], [0.0005, 0.9995]])
        links = sc.evaluate_links(
            np.array([0.5, 0.0]),
            utilization,
            np.full((2, 2), 0.5),
            np.ones((2, 2)),
        )
        self.assertTrue(
            np.array_equal(links.used, [[True, False], [False, True]])
        )
        for matrix in [links.bits, links.energy_j, links.latency_s, links.cost]:
            self.assertEqual(matrix[0, 1], 0.0)
            self.assertEqual(matrix[1, 0], 0.0)

        self.assertAlmostEqual(links.bits[0, 0], 5e5)
        self.assertAlmostEqual(links.bits[1, 1], 1e6 * 0.9995)
        self.assertEqual(links.violation_tags, [[], []])

    def test_evaluate_links__matches_radio_formulas(self):
        sc = _scenario(
            1, 1, energy_max_j=1.0, cost_max=10.0, latency_max_s=1.0
        )
        links = sc.evaluate_links(
            np.array([0.2]), np.ones((1, 1)), np.ones((1, 1)), np.ones((1, 1))
        )
        ran = sc.rans[0]
        gain = rad.channel_gain(sc.channel, 1.0)
        rate = rad.link_rate(ran, sc.channel, 1.0, gain)
        bits = 8e5
        energy = rad.link_energy(ran, sc.channel, bits, 1.0, gain, rate)
        self.assertAlmostEqual(links.rate_bps[0, 0] / rate, 1.0, places=12)
        self.assertAlmostEqual(links.energy_j[0, 0] / energy, 1.0, places=12)
        self.assertAlmostEqual(
            links.latency_s[0, 0], rad.link_latency(ran, bits, rate), places=12
        )
        self.assertAlmostEqual(links.cost[0, 0], 6e-6 * bits, places=9)
        self.assertAlmostEqual(links.norm_cost[0, 0], 0.48, places=9)
        self.assertAlmostEqual(
            links.distortion[0],
            float(sc.distortion_model.raw_distortion(0.2)),
            places=12,
        )
        self.assertAlmostEqual(links.pen_energy_j[0], energy, places=15)

    def test_evaluate_links__zero_bandwidth_link(self):
        sc = _scenario(latency_max_s=1.0)
        links = sc.evaluate_links(
            np.zeros(2),
            np.array([[1.0, 0.0], [1.0, 0.0]]),
            np.array([[1.0, 0.5], [0.0, 0.5]]),
            np.ones((2, 2)),
        )
        self.assertEqual(links.violation_tags[0], [])
        self.assertEqual(links.violation_tags[1], [TAG_ZERO_BANDWIDTH])
        self.assertTrue(links.link_violated[1, 0])
        self.assertEqual(links.latency_s[1, 0], 1.0)
        self.assertEqual(links.cost[1, 0], 0.0)
        # Only the connection offset is charged.
        self.assertEqual(links.energy_j[1, 0], sc.rans[0].energy_offset_j)
        self.assertTrue(np.array_equal(links.pen_violated, [False, True]))

    def test_evaluate_links__resource_share_violation(self):
        sc = _scenario(1, 1, resource_share_s=1e-6)
        links = sc.evaluate_links(
            np.zeros(1), np.ones((1, 1)), np.ones((1, 1)), np.ones((1, 1))
        )
        self.assertEqual(links.violation_tags, [[TAG_RESOURCE_SHARE]])
        transfer = 1e6 / links.rate_bps[0, 0]
        self.assertAlmostEqual(
            links.overtime_s[0, 0], transfer - 1e-6, places=12
        )

    def test_evaluate_links__inactive_pens_send_nothing(self):
        sc = _scenario()
        links = sc.evaluate_links(
            np.full(2, 0.5),
            np.full((2, 2), 0.5),
            np.full((2, 2), 0.5),
            np.ones((2, 2)),
            active=np.array([True, False]),
        )
        self.assertFalse(np.any(links.used[1]))
        self.assertEqual(links.pen_energy_j[1], 0.0)
        self.assertEqual(links.distortion[1], 0.0)

    def test_evaluate_links__clamped_metrics_are_counted(self):
        sc = _scenario(1, 1, energy_max_j=1e-9)
        sc.evaluate_links(
            np.zeros(1), np.ones((1, 1)), np.ones((1, 1)), np.ones((1, 1))
        )
        self.assertEqual(sc.n_obs_clamped, 1)

    def test_evaluate_links__wrong_shapes(self):
        sc = _scenario()
        with self.assertRaisesRegex(ValueError, '`utilization` must have shape'):
            sc.evaluate_links(
                np.zeros(2), np.ones((2, 3)), np.ones((2, 2)), np.ones((2, 2))
            )

        with self.assertRaisesRegex(ValueError, '`ratios` must have length'):
            sc.evaluate_links(
                np.zeros(3), np.ones((2, 2)), np.ones((2, 2)), np.ones((2, 2))
            )


if __name__ == '__main__':
    SUITE = unittest.TestLoader().loadTestsFromTestCase(Test_Class_Scenario)
    unittest.TextTestRunner(verbosity=2).run(SUITE)
