import os
import tempfile
import unittest

import numpy as np

import PyMultiRAT.helper_checkpoint as ckp
import PyMultiRAT.helper_training as trn
from PyMultiRAT.class_distortion_model import Distortion_Model
from PyMultiRAT.class_exceptions import Training_Error
from PyMultiRAT.class_profiles import Channel_Params, Pen_Profile, Ran_Profile
from PyMultiRAT.class_scenario import Scenario
from PyMultiRAT.class_team import Network_Config, build_teams


def _scenario():
    rans = [
        Ran_Profile(j, 20e6, 1e-6 * (j + 1), 0.001, nominal_rate_cap_bps=40e6)
        for j in range(2)
    ]
    pens = [Pen_Profile(i, 1e5, 0.2, 0.2) for i in range(2)]
    channel = Channel_Params(0.1, 3.98e-21, 3.6e-6)
    return Scenario(rans, pens, channel, Distortion_Model(), resource_share_s=1.0)


def _config(**kwargs):
    settings = dict(
        episodes=4,
        steps_per_episode=6,
        batch_size=4,
        buffer_capacity=50,
        warmup_episodes=1,
        noise_decay_episodes=2,
        seed=0,
    )
    settings.update(kwargs)
    return trn.Train_Config(**settings)


NETWORK = Network_Config(hidden_sizes=[8])


class Test_Helper_Training(unittest.TestCase):
    def test_train_config__invalid_values(self):
        with self.assertRaisesRegex(ValueError, 'discount factor must be < 1'):
            trn.Train_Config(gamma=1.0)

        with self.assertRaisesRegex(ValueError, '`episodes` must be an integer >= 1'):
            trn.Train_Config(episodes=0)

        with self.assertRaisesRegex(ValueError, 'must not exceed `buffer_capacity`'):
            trn.Train_Config(batch_size=64, buffer_capacity=32)

        with self.assertRaisesRegex(ValueError, '`soft_epsilon`'):
            trn.Train_Config(soft_epsilon=1.5)

        with self.assertRaisesRegex(ValueError, 'Noise scales'):
            trn.Train_Config(noise_final=-0.1)

    def test_noise_scale__warmup_then_linear_decay(self):
        cfg = trn.Train_Config(
            warmup_episodes=2,
            noise_initial=1.0,
            noise_final=0.1,
            noise_decay_episodes=4,
        )
        self.assertEqual(trn.noise_scale(0, cfg), 1.0)
        self.assertEqual(trn.noise_scale(1, cfg), 1.0)
        self.assertAlmostEqual(trn.noise_scale(2, cfg), 1.0)
        self.assertAlmostEqual(trn.noise_scale(4, cfg), 0.55)
        self.assertAlmostEqual(trn.noise_scale(6, cfg), 0.1)
        self.assertAlmostEqual(trn.noise_scale(100, cfg), 0.1)

        abrupt = trn.Train_Config(warmup_episodes=1, noise_decay_episodes=0)
        self.assertEqual(trn.noise_scale(1, abrupt), abrupt.noise_final)

    def test_train__log_has_one_row_per_episode_and_agent(self):
        pen_team, ran_team, log = trn.train(_scenario(), _config(), NETWORK)
        self.assertEqual(list(log.columns), trn.TRAINING_LOG_COLUMNS)
        self.assertEqual(len(log), 4 * (2 + 2))
        self.assertEqual(sorted(set(log['team'])), ['pen', 'ran'])
        self.assertTrue(np.all(np.isfinite(log['reward'])))
        self.assertTrue(np.all(np.isfinite(log['critic_loss'])))
        first = log[log['episode'] == 0]['noise_scale']
        self.assertTrue(np.allclose(first, 1.0))
        self.assertIn('rng_state', log.attrs)
        self.assertGreater(pen_team.agents[0].actor.adam_step_count, 0)
        self.assertGreater(len(ran_team.buffer), 0)

    def test_train__no_updates_before_a_batch_is_stored(self):
        cfg = _config(episodes=1, steps_per_episode=3, batch_size=10)
        pen_team, _, log = trn.train(_scenario(), cfg, NETWORK)
        self.assertTrue(np.all(np.isnan(log['critic_loss'])))
        self.assertEqual(pen_team.agents[0].critic.adam_step_count, 0)

    def test_train__same_seed_same_log(self):
        _, _, log_1 = trn.train(_scenario(), _config(seed=7), NETWORK)
        _, _, log_2 = trn.train(_scenario(), _config(seed=7), NETWORK)
        _, _, log_3 = trn.train(_scenario(), _config(seed=8), NETWORK)
        self.assertTrue(log_1.equals(log_2))
        self.assertEqual(log_1.attrs['rng_state'], log_2.attrs['rng_state'])
        self.assertFalse(log_1.equals(log_3))

    def test_train__continues_given_teams(self):
        sc = _scenario()
        teams = build_teams(
            2, 2, NETWORK, buffer_capacity=50, seed=3, kappa_max=sc.kappa_max
        )
        before = teams[0].agents[1].actor.params.copy()
        pen_team, _, _ = trn.train(sc, _config(episodes=2), teams=teams)
        self.assertIs(pen_team, teams[0])
        self.assertFalse(np.array_equal(pen_team.agents[1].actor.params, before))

    def test_train__resume_from_checkpoint_state_continues_exactly(self):
        sc = _scenario()
        pen_full, _, full = trn.train(sc, _config(seed=5), NETWORK)
        teams = trn.train(sc, _config(seed=5, episodes=2), NETWORK)
        first = teams[2]
        self.assertEqual(first.attrs['rng_state']['episode'], 2)
        self.assertTrue(
            first.equals(full[full['episode'] < 2].reset_index(drop=True))
        )
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'run.ckpt')
            ckp.save_checkpoint(
                path, list(teams[:2]), 'abc', rng_state=first.attrs['rng_state']
            )
            header = ckp.load_checkpoint(path, list(teams[:2]), 'abc')

        pen_team, _, rest = trn.train(
            sc,
            _config(seed=5),
            teams=teams[:2],
            resume_state=header['rng_state'],
        )
        self.assertEqual(sorted(set(rest['episode'])), [2, 3])
        later = full[full['episode'] >= 2].reset_index(drop=True)
        self.assertTrue(rest.equals(later))
        self.assertEqual(rest.attrs['rng_state'], full.attrs['rng_state'])
        self.assertTrue(
            np.array_equal(
                pen_team.agents[0].actor.params, pen_full.agents[0].actor.params
            )
        )

    def test_train__malformed_resume_state(self):
        sc = _scenario()
        _, _, log = trn.train(sc, _config(episodes=1), NETWORK)
        state = dict(log.attrs['rng_state'])
        del state['noise']
        with self.assertRaisesRegex(ValueError, 'lacks the entries'):
            trn.train(sc, _config(), NETWORK, resume_state=state)

        state = dict(log.attrs['rng_state'], episode=9)
        with self.assertRaisesRegex(ValueError, r'within \[0, 4\]'):
            trn.train(sc, _config(), NETWORK, resume_state=state)

    def test_train__errors_are_tagged_with_the_episode(self):
        sc = _scenario()
        teams = build_teams(
            3, 2, NETWORK, buffer_capacity=50, seed=0, kappa_max=sc.kappa_max
        )
        with self.assertRaisesRegex(Training_Error, 'at episode 0') as cm:
            trn.train(sc, _config(), teams=teams)

        self.assertEqual(cm.exception.episode, 0)
        self.assertIsInstance(cm.exception.__cause__, ValueError)


if __name__ == '__main__':
    SUITE = unittest.TestLoader().loadTestsFromTestCase(Test_Helper_Training)
    unittest.TextTestRunner(verbosity=2).run(SUITE)
