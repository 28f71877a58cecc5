import unittest

import numpy as np

import PyMultiRAT.helper_baselines as bsl
from PyMultiRAT.class_distortion_model import Distortion_Model
from PyMultiRAT.class_environment import Multi_RAT_Env
from PyMultiRAT.class_profiles import Channel_Params, Pen_Profile, Ran_Profile
from PyMultiRAT.class_scenario import Scenario

COSTS = [6e-6, 3e-6, 0.1e-6]
DELAYS = [0.001, 0.01, 0.025]
CAPS = [40e6, 25e6, 15e6]


def _scenario(n_pens=2, n_rans=2, weights=(0.25, 0.25, 0.25, 0.25), **kwargs):
    rans = [
        Ran_Profile(
            j, 20e6, COSTS[j], DELAYS[j], nominal_rate_cap_bps=CAPS[j]
        )
        for j in range(n_rans)
    ]
    pens = [
        Pen_Profile(i, 1e5, 0.2, 0.0, weights_normal=weights)
        for i in range(n_pens)
    ]
    channel = Channel_Params(0.1, 3.98e-21, 3.6e-6)
    kwargs.setdefault('resource_share_s', 1.0)
    return Scenario(rans, pens, channel, Distortion_Model(), **kwargs)


def _fading(sc, seed=0):
    rng = np.random.default_rng(seed)
    return rng.exponential(2.0, size=(sc.n_pens, sc.n_rans)) + 0.1


def _pen_objective(sc, decision, fading, seizure, i):
    return bsl.penalized_objectives(sc, decision, fading, seizure)[i]


class Test_Helper_Baselines(unittest.TestCase):
    def test_grid_spec__ratio_grid_and_invalid_values(self):
        grid = bsl.Grid_Spec(11, 21)
        ratios = grid.ratio_grid(0.99)
        self.assertEqual(len(ratios), 21)
        self.assertEqual(ratios[0], 0.0)
        self.assertAlmostEqual(ratios[-1], 0.99)
        with self.assertRaisesRegex(ValueError, '`ratio_resolution`'):
            bsl.Grid_Spec(11, 1)

        with self.assertRaisesRegex(ValueError, '`utilization_resolution`'):
            bsl.Grid_Spec(2.5, 21)

    def test_simplex_grid__compositions_in_lexicographic_order(self):
        points = bsl.simplex_grid(3, 3)
        self.assertEqual(points.shape, (6, 3))
        self.assertTrue(np.allclose(points.sum(axis=1), 1.0))
        self.assertTrue(np.array_equal(points[0], [0.0, 0.0, 1.0]))
        self.assertTrue(np.array_equal(points[-1], [1.0, 0.0, 0.0]))
        self.assertEqual(len(bsl.simplex_grid(3, 11)), 66)
        self.assertEqual(len(bsl.simplex_grid(1, 5)), 1)
        with self.assertRaisesRegex(ValueError, '`resolution`'):
            bsl.simplex_grid(3, 1)

    def test_baseline_decision__actions_are_executable(self):
        sc = _scenario(3, 2)
        decision = bsl.heuristic_policy(sc, _fading(sc))
        pen_actions, ran_actions = decision.to_actions()
        self.assertEqual(len(pen_actions), 3)
        self.assertEqual(len(ran_actions), 2)
        self.assertEqual(pen_actions[0].shape, (3,))
        env = Multi_RAT_Env(sc)
        env.reset(seed=0)
        result = env.step(pen_actions, ran_actions)
        self.assertEqual(result.violations, [[], [], []])

        other = decision.copy()
        other.ratios[0] = 0.5
        self.assertNotEqual(decision.ratios[0], 0.5)

    def test_heuristic_policy__equal_shares(self):
        sc = _scenario(5, 3)
        decision = bsl.heuristic_policy(sc, _fading(sc))
        self.assertTrue(np.allclose(decision.bw_fractions, 0.2))
        self.assertTrue(np.allclose(decision.utilization, 1.0 / 3))
        self.assertTrue(np.array_equal(decision.ratios, np.zeros(5)))
        self.assertFalse(np.any(decision.flagged))

    def test_heuristic_policy__smallest_feasible_ratio(self):
        sc = _scenario(2, 2, resource_share_s=0.002)
        fading = _fading(sc)
        grid = bsl.Grid_Spec(11, 21)
        decision = bsl.heuristic_policy(sc, fading, grid)
        rate = sc.rates(decision.bw_fractions, fading)
        step = 0.99 / 20
        for i in range(2):
            kappa = decision.ratios[i]
            self.assertGreater(kappa, 0.0)
            self.assertFalse(decision.flagged[i])
            bits = 1e5 * (1 - kappa) / 2
            self.assertTrue(np.all(bits / rate[i] <= 0.002))
            bits_lower = 1e5 * (1 - (kappa - step)) / 2
            self.assertTrue(np.any(bits_lower / rate[i] > 0.002))

    def test_heuristic_policy__infeasible_falls_back_to_kappa_max(self):
        sc = _scenario(2, 2, resource_share_s=1e-9)
        decision = bsl.heuristic_policy(sc, _fading(sc))
        self.assertTrue(np.allclose(decision.ratios, 0.99))
        self.assertTrue(np.all(decision.flagged))

    def test_best_pen_response__scan_matches_scenario_evaluation(self):
        sc = _scenario(2, 3)
        fading = _fading(sc, seed=1)
        seizure = np.array([False, True])
        base = bsl.heuristic_policy(sc, fading)
        for i in range(2):
            util, ratio, objective, infeasible = bsl.best_pen_response(
                sc, i, base.bw_fractions[i], fading[i], seizure[i], bsl.Grid_Spec()
            )
            self.assertFalse(infeasible)
            self.assertAlmostEqual(util.sum(), 1.0)
            decision = base.copy()
            decision.utilization[i] = util
            decision.ratios[i] = ratio
            expected = _pen_objective(sc, decision, fading, seizure, i)
            self.assertAlmostEqual(objective / expected, 1.0, places=9)

    def test_aansc_policy__cost_only_uses_the_cheapest_ran(self):
        sc = _scenario(2, 3, weights=(0.0, 1.0, 0.0, 0.0))
        decision = bsl.aansc_policy(sc, _fading(sc), np.zeros(2, dtype=bool))
        for i in range(2):
            self.assertTrue(np.array_equal(decision.utilization[i], [0, 0, 1]))
            self.assertAlmostEqual(decision.ratios[i], 0.99)

        self.assertTrue(np.allclose(decision.bw_fractions, 0.5))

    def test_aansc_policy__matches_independent_brute_force(self):
        sc = _scenario(2, 2)
        fading = _fading(sc, seed=2)
        seizure = np.array([True, False])
        grid = bsl.Grid_Spec(11, 21)
        decision = bsl.aansc_policy(sc, fading, seizure, grid)
        for i in range(2):
            best = np.inf
            for util in bsl.simplex_grid(2, 11):
                for kappa in grid.ratio_grid(0.99):
                    trial = decision.copy()
                    trial.utilization[i] = util
                    trial.ratios[i] = kappa
                    best = min(
                        best, _pen_objective(sc, trial, fading, seizure, i)
                    )

            found = _pen_objective(sc, decision, fading, seizure, i)
            self.assertAlmostEqual(found / best, 1.0, places=9)

    def test_aansc_policy__finer_grid_is_never_worse(self):
        sc = _scenario(2, 2)
        for seed in range(3):
            fading = _fading(sc, seed=seed)
            seizure = np.array([seed == 1, False])
            coarse = bsl.aansc_policy(
                sc, fading, seizure, bsl.Grid_Spec(6, 11)
            )
            fine = bsl.aansc_policy(sc, fading, seizure, bsl.Grid_Spec(11, 21))
            coarse_values = bsl.penalized_objectives(sc, coarse, fading, seizure)
            fine_values = bsl.penalized_objectives(sc, fine, fading, seizure)
            self.assertTrue(np.all(fine_values <= coarse_values + 1e-12))

    def test_aansc_policy__not_worse_than_heuristic(self):
        sc = _scenario(3, 2)
        fading = _fading(sc, seed=4)
        seizure = np.array([False, True, False])
        heuristic = bsl.heuristic_policy(sc, fading)
        aansc = bsl.aansc_policy(sc, fading, seizure)
        self.assertTrue(
            np.all(
                bsl.penalized_objectives(sc, aansc, fading, seizure)
                <= bsl.penalized_objectives(sc, heuristic, fading, seizure)
                + 1e-12
            )
        )

    def test_penalized_objectives__overtime_is_penalized(self):
        sc = _scenario(1, 1, resource_share_s=1e-6)
        fading = np.ones((1, 1))
        decision = bsl.Baseline_Decision(np.ones((1, 1)), np.ones((1, 1)), [0.0])
        value = bsl.penalized_objectives(sc, decision, fading, [False])[0]
        self.assertGreater(value, 1.0)
        cheap = bsl.penalized_objectives(
            sc, decision, fading, [False], penalty=0.0
        )[0]
        self.assertLess(cheap, 1.0 + 0.25)

    def test_penalized_objectives__zero_rate_link(self):
        sc = _scenario(2, 1)
        decision = bsl.Baseline_Decision(
            np.array([[1.0], [0.0]]), np.ones((2, 1)), [0.0, 0.0]
        )
        values = bsl.penalized_objectives(
            sc, decision, np.ones((2, 1)), [False, False]
        )
        self.assertGreaterEqual(
            values[1], bsl.DEFAULT_VIOLATION_PENALTY * bsl.ZERO_RATE_OVERTIME_S
        )
        self.assertLess(values[0], 2.0)

    def test_onsra_policy__single_link_reduces_to_aansc(self):
        sc = _scenario(1, 1)
        fading = np.ones((1, 1))
        decision, trace = bsl.onsra_policy(sc, fading, [False])
        reference = bsl.aansc_policy(sc, fading, [False])
        self.assertEqual(decision.bw_fractions[0, 0], 1.0)
        self.assertAlmostEqual(decision.ratios[0], reference.ratios[0])
        self.assertLessEqual(len(trace), 3)

    def test_onsra_policy__objective_trace_is_nonincreasing(self):
        sc = _scenario(2, 2)
        for seed in range(4):
            fading = _fading(sc, seed=seed)
            seizure = np.array([seed % 2 == 0, seed == 3])
            decision, trace = bsl.onsra_policy(
                sc, fading, seizure, bsl.Grid_Spec(6, 11), max_rounds=5, pg_steps=5
            )
            self.assertTrue(np.all(np.diff(trace) <= 1e-9))
            self.assertTrue(np.allclose(decision.bw_fractions.sum(axis=0), 1.0))
            self.assertTrue(np.allclose(decision.utilization.sum(axis=1), 1.0))

    def test_onsra_policy__close_to_joint_brute_force(self):
        sc = _scenario(2, 2)
        fading = _fading(sc, seed=5)
        seizure = np.array([False, False])
        grid = bsl.Grid_Spec(5, 6)
        _, trace = bsl.onsra_policy(sc, fading, seizure, grid)
        _, brute = bsl.joint_brute_force(
            sc, fading, seizure, grid, bw_resolution=5
        )
        self.assertLessEqual(trace[-1], 1.05 * brute)

    def test_onsra_policy__invalid_rounds(self):
        sc = _scenario(1, 1)
        with self.assertRaisesRegex(ValueError, '`max_rounds`'):
            bsl.onsra_policy(sc, np.ones((1, 1)), [False], max_rounds=0)

    def test_policies__depleted_pens_get_no_bandwidth(self):
        sc = _scenario(3, 2)
        fading = _fading(sc, seed=2)
        seizure = np.array([False, True, False])
        alive = np.array([True, False, True])
        grid = bsl.Grid_Spec(6, 11)
        decisions = [
            bsl.heuristic_policy(sc, fading, grid, alive),
            bsl.aansc_policy(sc, fading, seizure, grid, alive=alive),
            bsl.onsra_policy(
                sc, fading, seizure, grid, max_rounds=2, pg_steps=3, alive=alive
            )[0],
        ]
        for decision in decisions:
            self.assertTrue(np.all(decision.bw_fractions[1] == 0.0))
            self.assertTrue(np.allclose(decision.bw_fractions.sum(axis=0), 1.0))
            self.assertFalse(decision.flagged[1])

        self.assertTrue(np.allclose(decisions[0].bw_fractions[0], 0.5))

    def test_policies__alive_flags_are_validated(self):
        sc = _scenario(2, 2)
        nobody = bsl.heuristic_policy(sc, np.ones((2, 2)), alive=[False, False])
        self.assertTrue(np.allclose(nobody.bw_fractions, 0.5))
        with self.assertRaisesRegex(ValueError, 'one flag per PEN'):
            bsl.aansc_policy(sc, np.ones((2, 2)), [False, False], alive=[True])


if __name__ == '__main__':
    SUITE = unittest.TestLoader().loadTestsFromTestCase(Test_Helper_Baselines)
    unittest.TextTestRunner(verbosity=2).run(SUITE)
