import unittest

import numpy as np

from PyMultiRAT.class_mlp import Adam_Config
from PyMultiRAT.class_replay_buffer import Experience_Batch
from PyMultiRAT.class_team import Network_Config, Team, build_teams


def _teams(n_pens=2, n_rans=3, **kwargs):
    network = Network_Config(hidden_sizes=[8, 8], **kwargs)
    return build_teams(
        n_pens, n_rans, network, buffer_capacity=50, seed=0, kappa_max=0.99
    )


def _random_batch(team, rng, size=16, dones=0.0):
    return Experience_Batch(
        rng.uniform(0, 1, size=(size, team.joint_obs_width)),
        rng.uniform(0, 1, size=(size, team.joint_action_width)),
        rng.uniform(0, 1, size=(size, team.joint_obs_width)),
        rng.uniform(-1, 1, size=(size, team.n_agents)),
        np.full((size, team.n_agents), dones),
    )


def _snapshot(nets):
    return [
        (
            net.params.tobytes(),
            net.target_params.tobytes(),
            net.adam_m.tobytes(),
            net.adam_v.tobytes(),
            net.adam_step_count,
        )
        for net in nets
    ]


class _Quadratic_Critic:
    """Q = -||a - optimum||^2 over the given input columns."""

    def __init__(self, columns, optimum):
        self.columns = columns
        self.optimum = optimum

    def forward(self, x):
        diff = x[:, self.columns] - self.optimum
        return -np.sum(diff**2, axis=1, keepdims=True)

    def gradient(self, x, upstream):
        dq_dx = np.zeros_like(x)
        dq_dx[:, self.columns] = -2.0 * (x[:, self.columns] - self.optimum) * upstream
        return np.zeros(0), dq_dx


class Test_Class_Team(unittest.TestCase):
    def test_build_teams__shapes(self):
        pen_team, ran_team = _teams(2, 3)
        self.assertEqual(pen_team.n_agents, 2)
        self.assertEqual(ran_team.n_agents, 3)
        self.assertEqual(pen_team.joint_obs_width, 2 * 12)
        self.assertEqual(pen_team.joint_action_width, 2 * 4)
        self.assertEqual(ran_team.joint_obs_width, 3 * 2)
        self.assertEqual(ran_team.joint_action_width, 3 * 2)

        actor = pen_team.agents[0].actor
        critic = pen_team.agents[0].critic
        self.assertEqual(actor.spec.layer_sizes, [12, 8, 8, 4])
        self.assertEqual(critic.spec.layer_sizes, [24 + 8, 8, 8, 1])
        self.assertEqual(ran_team.agents[1].actor.spec.layer_sizes, [2, 8, 8, 2])
        self.assertEqual(len(pen_team.networks()), 4)
        self.assertEqual(pen_team.buffer.capacity, 50)

    def test_build_teams__same_seed_same_networks(self):
        team_a, _ = _teams()
        team_b, _ = _teams()
        for (_, _, net_a), (_, _, net_b) in zip(
            team_a.networks(), team_b.networks()
        ):
            self.assertTrue(np.array_equal(net_a.params, net_b.params))

        actors = [net.params for _, role, net in team_a.networks() if role == 'actor']
        self.assertFalse(np.array_equal(actors[0], actors[1]))

    def test_init__mismatched_lengths(self):
        with self.assertRaisesRegex(ValueError, 'the same length'):
            Team(
                'x',
                [3, 3],
                [[(2, 'simplex')]],
                hidden_sizes=[4],
                actor_adam=Adam_Config(1e-3),
                critic_adam=Adam_Config(1e-3),
                buffer_capacity=5,
            )

    def test_act__deterministic_and_feasible(self):
        pen_team, ran_team = _teams(2, 3)
        rng = np.random.default_rng(0)
        obs = [rng.uniform(0, 1, 12) for _ in range(2)]
        actions_1 = pen_team.act(obs)
        actions_2 = pen_team.act(obs)
        for a, b in zip(actions_1, actions_2):
            self.assertTrue(np.array_equal(a, b))
            self.assertAlmostEqual(a[:3].sum(), 1.0)
            self.assertTrue(0 <= a[3] <= 0.99)

        noisy = ran_team.act([np.ones(2)] * 3, noise_scale=2.0, rng=rng)
        for action in noisy:
            self.assertAlmostEqual(action.sum(), 1.0)
            self.assertTrue(np.all(action >= 0))

    def test_act__invalid_arguments(self):
        pen_team, _ = _teams(2, 3)
        obs = [np.zeros(12)] * 2
        with self.assertRaisesRegex(ValueError, '`per_agent_obs` must have 2'):
            pen_team.act(obs[:1])

        with self.assertRaisesRegex(ValueError, '`rng` is required'):
            pen_team.act(obs, noise_scale=0.1)

        with self.assertRaisesRegex(ValueError, 'observation must have length 12'):
            pen_team.act([np.zeros(11)] * 2)

    def test_join__concatenates(self):
        pen_team, _ = _teams()
        joint = pen_team.join([np.array([1.0, 2.0]), np.array([3.0])])
        self.assertTrue(np.array_equal(joint, [1.0, 2.0, 3.0]))

    def test_td_target__terminal_masking_and_discount(self):
        _, ran_team = _teams(2, 1)
        critic = ran_team.agents[0].critic
        critic.target_params[:] = 0.0
        critic.target_params[-1] = 1.0
        rng = np.random.default_rng(0)
        batch = _random_batch(ran_team, rng, size=4, dones=1.0)
        batch.rewards[:] = 0.5
        y = ran_team.td_target(0, batch, 0.95)
        self.assertTrue(np.allclose(y, 0.5))

        batch = _random_batch(ran_team, rng, size=4, dones=0.0)
        batch.rewards[:] = 0.0
        y = ran_team.td_target(0, batch, 0.95)
        self.assertTrue(np.allclose(y, 0.95))

    def test_td_target__single_transition_by_hand(self):
        _, ran_team = _teams(2, 2)
        rng = np.random.default_rng(5)
        batch = _random_batch(ran_team, rng, size=1)
        for _, _, net in ran_team.networks():
            net.target_params[:] = rng.normal(0.0, 0.5, net.n_params)

        next_actions = np.concatenate(
            [
                agent.actor.forward(batch.next_obs[0, sl], target=True)
                for agent, sl in zip(ran_team.agents, ran_team.obs_slices)
            ],
        )
        critic = ran_team.agents[1].critic
        layers = critic.layers(target=True)
        a = np.concatenate([batch.next_obs[0], next_actions])
        for k, (W, b) in enumerate(layers):
            a = a @ W + b
            if k < len(layers) - 1:
                a = np.maximum(a, 0.0)

        expected = batch.rewards[0, 1] + 0.9 * a[0]
        for _, _, net in ran_team.networks():
            net.params[:] = 0.0

        y = ran_team.td_target(1, batch, 0.9)
        self.assertEqual(y.shape, (1,))
        self.assertAlmostEqual(y[0], expected, places=10)

        batch.dones[0, 1] = 1.0
        y = ran_team.td_target(1, batch, 0.9)
        self.assertAlmostEqual(y[0], batch.rewards[0, 1], places=12)

    def test_update_critic__loss_decreases_on_a_fixed_batch(self):
        _, ran_team = _teams(2, 2, critic_lr=1e-2)
        rng = np.random.default_rng(1)
        batch = _random_batch(ran_team, rng)
        targets = ran_team.td_target(0, batch, 0.0)
        self.assertTrue(np.array_equal(targets, batch.rewards[:, 0]))
        initial = ran_team.critic_loss(0, batch, targets)
        for _ in range(1000):
            ran_team.update_critic(0, batch, targets)

        self.assertLess(ran_team.critic_loss(0, batch, targets), 0.5 * initial)

    def test_update_critic__fits_a_fixed_batch(self):
        network = Network_Config(
            hidden_sizes=[16, 16], critic_lr=1e-2, grad_clip_norm=None
        )
        _, ran_team = build_teams(
            2, 2, network, buffer_capacity=10, seed=0, kappa_max=0.99
        )
        batch = _random_batch(ran_team, np.random.default_rng(6), size=8)
        targets = 0.5 * batch.rewards[:, 0]
        for _ in range(2000):
            loss = ran_team.update_critic(0, batch, targets)
            if loss < 1e-3:
                break

        self.assertLess(loss, 1e-3)

    def test_update_actor__climbs_a_concave_critic(self):
        _, ran_team = _teams(2, 2, actor_lr=1e-2)
        optimum = np.array([0.8, 0.2])
        offset = ran_team.joint_obs_width
        sl = ran_team.action_slices[0]
        ran_team.agents[0].critic = _Quadratic_Critic(
            slice(offset + sl.start, offset + sl.stop), optimum
        )
        batch = _random_batch(ran_team, np.random.default_rng(4), size=8)
        first = ran_team.update_actor(0, batch)
        for _ in range(2000):
            mean_q = ran_team.update_actor(0, batch)

        self.assertGreater(mean_q, first)
        self.assertGreater(mean_q, -1e-3)
        actions = ran_team.agents[0].actor.forward(
            batch.obs[:, ran_team.obs_slices[0]]
        )
        self.assertTrue(np.allclose(actions, optimum, atol=0.05))

    def test_updates__touch_only_their_own_network(self):
        pen_team, _ = _teams(2, 2)
        batch = _random_batch(pen_team, np.random.default_rng(7))
        actors = [agent.actor for agent in pen_team.agents]
        critics = [agent.critic for agent in pen_team.agents]

        actors_before = _snapshot(actors)
        others_before = _snapshot(critics[1:])
        targets = pen_team.td_target(0, batch, 0.95)
        pen_team.update_critic(0, batch, targets)
        self.assertEqual(_snapshot(actors), actors_before)
        self.assertEqual(_snapshot(critics[1:]), others_before)
        self.assertEqual(critics[0].adam_step_count, 1)

        critics_before = _snapshot(critics)
        others_before = _snapshot(actors[1:])
        pen_team.update_actor(0, batch)
        self.assertEqual(_snapshot(critics), critics_before)
        self.assertEqual(_snapshot(actors[1:]), others_before)
        self.assertEqual(actors[0].adam_step_count, 1)

    def test_soft_update__gap_shrinks_geometrically(self):
        pen_team, _ = _teams(2, 2)
        rng = np.random.default_rng(8)
        nets = [net for _, _, net in pen_team.networks()]
        for net in nets:
            net.params += rng.normal(0.0, 1.0, net.n_params)

        initial = [np.linalg.norm(net.target_params - net.params) for net in nets]
        self.assertTrue(all(gap > 0 for gap in initial))
        tau = 0.1
        for k in range(1, 21):
            pen_team.soft_update(tau)
            for net, gap in zip(nets, initial):
                bound = (1.0 - tau) ** k * gap
                self.assertLessEqual(
                    np.linalg.norm(net.target_params - net.params),
                    bound * (1.0 + 1e-9),
                )

        pen_team.soft_update(1.0)
        for net in nets:
            self.assertTrue(np.array_equal(net.target_params, net.params))

    def test_actor_gradient__matches_finite_differences(self):
        pen_team, _ = _teams(2, 2, hidden_activation='tanh')
        rng = np.random.default_rng(2)
        batch = _random_batch(pen_team, rng, size=8)
        actor = pen_team.agents[1].actor
        grad, mean_q = pen_team.actor_gradient(1, batch)
        theta_0 = actor.params.copy()
        eps = 1e-6
        numeric = np.zeros_like(theta_0)
        for k in range(len(theta_0)):
            actor.params[:] = theta_0
            actor.params[k] += eps
            q_plus = pen_team.actor_gradient(1, batch)[1]
            actor.params[:] = theta_0
            actor.params[k] -= eps
            q_minus = pen_team.actor_gradient(1, batch)[1]
            numeric[k] = (q_plus - q_minus) / (2 * eps)

        actor.params[:] = theta_0
        self.assertTrue(np.allclose(grad, numeric, rtol=1e-4, atol=1e-8))
        self.assertAlmostEqual(pen_team.actor_gradient(1, batch)[1], mean_q)

    def test_update__steps_every_network_once(self):
        pen_team, _ = _teams(2, 2)
        rng = np.random.default_rng(3)
        batch = _random_batch(pen_team, rng)
        before = [net.target_params.copy() for _, _, net in pen_team.networks()]
        losses = pen_team.update(batch, 0.95, 0.5)
        self.assertEqual(losses.shape, (2,))
        self.assertTrue(np.all(np.isfinite(losses)))
        for (_, _, net), target_before in zip(pen_team.networks(), before):
            self.assertEqual(net.adam_step_count, 1)
            self.assertFalse(np.array_equal(net.target_params, target_before))

    def test_network_config__invalid_clip(self):
        with self.assertRaisesRegex(ValueError, '`grad_clip_norm`'):
            Network_Config(grad_clip_norm=0.0)


if __name__ == '__main__':
    SUITE = unittest.TestLoader().loadTestsFromTestCase(Test_Class_Team)
    unittest.TextTestRunner(verbosity=2).run(SUITE)
