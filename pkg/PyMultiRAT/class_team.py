from __future__ import annotations

import numpy as np

from PyMultiRAT import helper_generic as hlp
from PyMultiRAT.class_mlp import (
    Adam_Config,
    MLP_Net,
    MLP_Spec,
    clip_by_global_norm,
)
from PyMultiRAT.class_replay_buffer import Experience_Batch, Replay_Buffer

logger = hlp.get_logger(__name__)


def _slices(widths: list[int]) -> list[slice]:
    result, start = [], 0
    for width in widths:
        result.append(slice(start, start + width))
        start += width

    return result


class Agent:
    """
    One learning agent: a decentralized actor and a centralized critic.

    Parameters
    ----------
    actor : MLP_Net
        Maps the agent's own observation to its action.
    critic : MLP_Net
        Maps the team-joint observation and action to a scalar value.

    Attributes
    ----------
    Same as the input parameters.
    """

    def __init__(self, actor: MLP_Net, critic: MLP_Net) -> None:
        self.actor = actor
        self.critic = critic


class Team:
    """
    A team of agents of one kind (PENs or RANs) trained with centralized
    critics and decentralized actors, sharing one replay buffer.

    Parameters
    ----------
    name : str
        Team label, such as "pen" or "ran".
    obs_widths : list[int]
        Observation width of each agent.
    action_heads : list[list[tuple[int, str]]]
        Output heads of each agent's actor (see ``MLP_Spec``).
    hidden_sizes : list[int]
        Hidden-layer widths of every actor and critic.
    hidden_activation : str
        Nonlinearity of the hidden layers.
    actor_adam : Adam_Config
        Optimizer settings of the actors.
    critic_adam : Adam_Config
        Optimizer settings of the critics.
    buffer_capacity : int
        Capacity of the shared replay buffer.
    seed : int
        Seed of the network initializations.
    kappa_max : float
        Upper end of the 'unit_interval' heads.
    grad_clip_norm : float | None
        Global-norm clip applied to every gradient before Adam.

    Attributes
    ----------
    name : str
        Same as the input parameter.
    agents : list[Agent]
        The agents.
    buffer : Replay_Buffer
        The shared replay buffer.
    obs_slices : list[slice]
        Slice of each agent's observation in the joint observation.
    action_slices : list[slice]
        Slice of each agent's action in the joint action.

    Raises
    ------
    ValueError
        When ``obs_widths`` and ``action_heads`` have different lengths
    """

    def __init__(
            self,
            name: str,
            obs_widths: list[int],
            action_heads: list[list[tuple[int, str]]],
            *,
            hidden_sizes: list[int],
            hidden_activation: str = 'relu',
            actor_adam: Adam_Config,
            critic_adam: Adam_Config,
            buffer_capacity: int,
            seed: int = 0,
            kappa_max: float = 0.99,
            grad_clip_norm: float | None = 1.0,
    ) -> None:
        if len(obs_widths) != len(action_heads) or len(obs_widths) == 0:
            raise ValueError(
                '`obs_widths` and `action_heads` must be non-empty and have '
                'the same length.',
            )

        action_widths = [sum(w for w, _ in heads) for heads in action_heads]
        joint_obs = sum(obs_widths)
        joint_action = sum(action_widths)
        seeds = np.random.SeedSequence(seed).generate_state(2 * len(obs_widths))

        self.name = name
        self.obs_slices = _slices(obs_widths)
        self.action_slices = _slices(action_widths)
        self.actor_adam = actor_adam
        self.critic_adam = critic_adam
        self.grad_clip_norm = grad_clip_norm
        self.agents = []
        for i, (width, heads) in enumerate(zip(obs_widths, action_heads)):
            actor_spec = MLP_Spec(
                [width, *hidden_sizes, action_widths[i]],
                hidden_activation=hidden_activation,
                output_heads=heads,
                kappa_max=kappa_max,
            )
            critic_spec = MLP_Spec(
                [joint_obs + joint_action, *hidden_sizes, 1],
                hidden_activation=hidden_activation,
            )
            self.agents.append(
                Agent(
                    MLP_Net(actor_spec, seed=int(seeds[2 * i])),
                    MLP_Net(critic_spec, seed=int(seeds[2 * i + 1])),
                ),
            )

        self.buffer = Replay_Buffer(
            buffer_capacity, joint_obs, joint_action, len(self.agents)
        )

    def __repr__(self) -> str:
        return 'Team(%s, %d agents)' % (self.name, self.n_agents)

    @property
    def n_agents(self) -> int:
        """Number of agents."""
        return len(self.agents)

    @property
    def joint_obs_width(self) -> int:
        """Width of the joint observation."""
        return self.obs_slices[-1].stop

    @property
    def joint_action_width(self) -> int:
        """Width of the joint action."""
        return self.action_slices[-1].stop

    def networks(self) -> list[tuple[int, str, MLP_Net]]:
        """
        All networks of the team.

        Returns
        -------
        list[tuple[int, str, MLP_Net]]
            (agent index, role, network) with role 'actor' or 'critic'.
        """
        result = []
        for i, agent in enumerate(self.agents):
            result.append((i, 'actor', agent.actor))
            result.append((i, 'critic', agent.critic))

        return result

    def join(self, per_agent: list[np.ndarray]) -> np.ndarray:
        """
        Concatenate per-agent vectors into the joint vector.

        Parameters
        ----------
        per_agent : list[np.ndarray]
            One vector per agent.

        Returns
        -------
        np.ndarray
            The joint vector.
        """
        return np.concatenate([np.asarray(_, dtype=float) for _ in per_agent])

    def act(
            self,
            per_agent_obs: list[np.ndarray],
            noise_scale: float = 0.0,
            rng: np.random.Generator | None = None,
    ) -> list[np.ndarray]:
        """
        Actions of every agent from its own observation only. Gaussian noise
        of the given scale perturbs the pre-activations of the output heads,
        so the actions stay feasible.

        Parameters
        ----------
        per_agent_obs : list[np.ndarray]
            One observation per agent.
        noise_scale : float
            Standard deviation of the exploration noise. 0 disables it.
        rng : np.random.Generator | None
            Source of the noise. Required when ``noise_scale`` > 0.

        Returns
        -------
        list[np.ndarray]
            One action per agent.

        Raises
        ------
        ValueError
            When the number or widths of the observations are wrong, or when
            noise is requested without ``rng``
        """
        if len(per_agent_obs) != self.n_agents:
            raise ValueError(
                '`per_agent_obs` must have %d elements.' % self.n_agents
            )

        if noise_scale < 0:
            raise ValueError('`noise_scale` must be non-negative.')

        if noise_scale > 0 and rng is None:
            raise ValueError('`rng` is required when `noise_scale` > 0.')

        actions = []
        for agent, obs, sl in zip(self.agents, per_agent_obs, self.obs_slices):
            obs = np.asarray(obs, dtype=float)
            hlp.assert_array_length(obs, sl.stop - sl.start, name='observation')
            noise = None
            if noise_scale > 0:
                noise = rng.normal(0.0, noise_scale, agent.actor.spec.n_outputs)

            actions.append(agent.actor.forward(obs, noise=noise))

        return actions

    def target_joint_actions(self, next_obs: np.ndarray) -> np.ndarray:
        """
        Joint actions of the target actors on a batch of joint observations.

        Parameters
        ----------
        next_obs : np.ndarray
            Joint observations, (B, joint_obs_width).

        Returns
        -------
        np.ndarray
            Joint actions, (B, joint_action_width).
        """
        return np.hstack(
            [
                agent.actor.forward(next_obs[:, sl], target=True)
                for agent, sl in zip(self.agents, self.obs_slices)
            ],
        )

    def td_target(
            self,
            agent_index: int,
            batch: Experience_Batch,
            gamma: float,
            next_actions: np.ndarray | None = None,
    ) -> np.ndarray:
        """
        Bootstrapped regression targets of one agent's critic:
        y = r + gamma * (1 - d) * Q_target(o', a'), with a' from the target
        actors.

        Parameters
        ----------
        agent_index : int
            Index of the agent.
        batch : Experience_Batch
            Sampled transitions.
        gamma : float
            Discount factor, in [0, 1).
        next_actions : np.ndarray | None
            Precomputed ``target_joint_actions(batch.next_obs)``.

        Returns
        -------
        np.ndarray
            Targets, shape (B,).
        """
        if next_actions is None:
            next_actions = self.target_joint_actions(batch.next_obs)

        critic = self.agents[agent_index].critic
        q_next = critic.forward(
            np.hstack([batch.next_obs, next_actions]), target=True
        )[:, 0]
        r = batch.rewards[:, agent_index]
        d = batch.dones[:, agent_index]
        return r + gamma * (1.0 - d) * q_next

    def critic_loss(
            self,
            agent_index: int,
            batch: Experience_Batch,
            targets: np.ndarray,
    ) -> float:
        """
        Mean-squared Bellman error of one agent's critic.

        Parameters
        ----------
        agent_index : int
            Index of the agent.
        batch : Experience_Batch
            Sampled transitions.
        targets : np.ndarray
            Output of ``td_target()``.

        Returns
        -------
        float
            mean((Q(o, a) - y)^2)
        """
        critic = self.agents[agent_index].critic
        q = critic.forward(np.hstack([batch.obs, batch.actions]))[:, 0]
        return float(np.mean((q - targets) ** 2))

    def update_critic(
            self,
            agent_index: int,
            batch: Experience_Batch,
            targets: np.ndarray,
    ) -> float:
        """
        One Adam descent step of one agent's critic on the MSBE.

        Parameters
        ----------
        agent_index : int
            Index of the agent.
        batch : Experience_Batch
            Sampled transitions.
        targets : np.ndarray
            Output of ``td_target()``.

        Returns
        -------
        float
            The MSBE before the step.
        """
        critic = self.agents[agent_index].critic
        x = np.hstack([batch.obs, batch.actions])
        q = critic.forward(x)[:, 0]
        residual = q - targets
        upstream = (2.0 / len(batch)) * residual[:, None]
        grad, _ = critic.gradient(x, upstream)
        grad = clip_by_global_norm(grad, self.grad_clip_norm)
        critic.adam_step(grad, self.critic_adam, sign='descend')
        return float(np.mean(residual**2))

    def actor_gradient(
            self,
            agent_index: int,
            batch: Experience_Batch,
    ) -> tuple[np.ndarray, float]:
        """
        Gradient of the batch-mean critic value with respect to one agent's
        actor parameters. The joint action fed to the critic holds this
        agent's current actor output in its own slice and the stored actions
        of the other agents elsewhere.

        Parameters
        ----------
        agent_index : int
            Index of the agent.
        batch : Experience_Batch
            Sampled transitions.

        Returns
        -------
        grad : np.ndarray
            Flat gradient of the actor parameters.
        mean_q : float
            The batch-mean critic value.
        """
        agent = self.agents[agent_index]
        o_sl = self.obs_slices[agent_index]
        a_sl = self.action_slices[agent_index]
        own_obs = batch.obs[:, o_sl]
        joint_actions = batch.actions.copy()
        joint_actions[:, a_sl] = agent.actor.forward(own_obs)
        x = np.hstack([batch.obs, joint_actions])
        q = agent.critic.forward(x)[:, 0]
        upstream = np.full((len(batch), 1), 1.0 / len(batch))
        _, dq_dx = agent.critic.gradient(x, upstream)
        offset = self.joint_obs_width
        dq_da = dq_dx[:, offset + a_sl.start:offset + a_sl.stop]
        grad, _ = agent.actor.gradient(own_obs, dq_da)
        return grad, float(np.mean(q))

    def update_actor(self, agent_index: int, batch: Experience_Batch) -> float:
        """
        One Adam ascent step of one agent's actor on the critic value.

        Parameters
        ----------
        agent_index : int
            Index of the agent.
        batch : Experience_Batch
            Sampled transitions.

        Returns
        -------
        float
            Batch-mean critic value before the step.
        """
        grad, mean_q = self.actor_gradient(agent_index, batch)
        grad = clip_by_global_norm(grad, self.grad_clip_norm)
        self.agents[agent_index].actor.adam_step(
            grad, self.actor_adam, sign='ascend'
        )
        return mean_q

    def soft_update(self, epsilon: float) -> None:
        """
        Soft-update the targets of every actor and critic.

        Parameters
        ----------
        epsilon : float
            Mixing factor, in [0, 1].
        """
        for agent in self.agents:
            agent.actor.soft_update(epsilon)
            agent.critic.soft_update(epsilon)

    def update(
            self,
            batch: Experience_Batch,
            gamma: float,
            soft_epsilon: float,
    ) -> np.ndarray:
        """
        One training iteration: for every agent, a critic step then an actor
        step; afterwards, soft target updates of all networks.

        Parameters
        ----------
        batch : Experience_Batch
            Sampled transitions.
        gamma : float
            Discount factor.
        soft_epsilon : float
            Mixing factor of the target updates.

        Returns
        -------
        np.ndarray
            Critic loss of every agent.
        """
        next_actions = self.target_joint_actions(batch.next_obs)
        losses = np.zeros(self.n_agents)
        for i in range(self.n_agents):
            targets = self.td_target(i, batch, gamma, next_actions)
            losses[i] = self.update_critic(i, batch, targets)
            self.update_actor(i, batch)

        self.soft_update(soft_epsilon)
        logger.debug('Team %s critic losses: %s', self.name, losses)
        return losses


class Network_Config:
    """
    Architecture and optimizer settings shared by every actor and critic.

    Parameters
    ----------
    hidden_sizes : list[int]
        Hidden-layer widths.
    hidden_activation : {'relu', 'tanh'}
        Hidden nonlinearity.
    actor_lr : float
        Adam learning rate of the actors.
    critic_lr : float
        Adam learning rate of the critics.
    adam_beta1 : float
        Adam first-moment decay.
    adam_beta2 : float
        Adam second-moment decay.
    adam_epsilon : float
        Adam denominator constant.
    grad_clip_norm : float | None
        Global-norm gradient clip (``None`` disables it).

    Attributes
    ----------
    Same as the input parameters, plus ``actor_adam`` and ``critic_adam``
    (``Adam_Config`` objects).
    """

    def __init__(
            self,
            hidden_sizes: list[int] = (64, 64),
            hidden_activation: str = 'relu',
            actor_lr: float = 1e-4,
            critic_lr: float = 3e-4,
            adam_beta1: float = 0.9,
            adam_beta2: float = 0.999,
            adam_epsilon: float = 1e-8,
            grad_clip_norm: float | None = 1.0,
    ) -> None:
        if grad_clip_norm is not None and grad_clip_norm <= 0:
            raise ValueError('`grad_clip_norm` must be positive or None.')

        self.hidden_sizes = [int(_) for _ in hidden_sizes]
        self.hidden_activation = hidden_activation
        self.actor_adam = Adam_Config(
            actor_lr, adam_beta1, adam_beta2, adam_epsilon
        )
        self.critic_adam = Adam_Config(
            critic_lr, adam_beta1, adam_beta2, adam_epsilon
        )
        self.grad_clip_norm = grad_clip_norm

    def team_kwargs(self) -> dict:
        """
        Keyword arguments for ``Team``.

        Returns
        -------
        dict
            ``hidden_sizes``, ``hidden_activation``, ``actor_adam``,
            ``critic_adam`` and ``grad_clip_norm``.
        """
        return {
            'hidden_sizes': self.hidden_sizes,
            'hidden_activation': self.hidden_activation,
            'actor_adam': self.actor_adam,
            'critic_adam': self.critic_adam,
            'grad_clip_norm': self.grad_clip_norm,
        }


def build_teams(
        n_pens: int,
        n_rans: int,
        network: Network_Config,
        *,
        buffer_capacity: int,
        seed: int,
        kappa_max: float,
) -> tuple[Team, Team]:
    """
    Build the PEN and RAN teams of a scenario.

    Parameters
    ----------
    n_pens : int
        N.
    n_rans : int
        M.
    network : Network_Config
        Architecture and optimizer settings.
    buffer_capacity : int
        Capacity of each team's replay buffer.
    seed : int
        Seed of the initializations (the two teams get distinct streams).
    kappa_max : float
        Upper end of the compression-ratio heads.

    Returns
    -------
    pen_team : Team
        The PEN team.
    ran_team : Team
        The RAN team.
    """
    pen_seed, ran_seed = np.random.SeedSequence(seed).generate_state(2)
    pen_team = make_pen_team(
        n_pens,
        n_rans,
        buffer_capacity=buffer_capacity,
        seed=int(pen_seed),
        kappa_max=kappa_max,
        **network.team_kwargs(),
    )
    ran_team = make_ran_team(
        n_pens,
        n_rans,
        buffer_capacity=buffer_capacity,
        seed=int(ran_seed),
        kappa_max=kappa_max,
        **network.team_kwargs(),
    )
    return pen_team, ran_team


def make_pen_team(
        n_pens: int,
        n_rans: int,
        **kwargs,
) -> Team:
    """
    Build the PEN team: each actor sees 3M + 3 observations and outputs a
    utilization simplex over the M RANs plus a compression ratio.

    Parameters
    ----------
    n_pens : int
        N.
    n_rans : int
        M.
    **kwargs
        Keyword arguments of ``Team`` (``hidden_sizes``, ``actor_adam``, ...).

    Returns
    -------
    Team
        The team.
    """
    return Team(
        'pen',
        [3 * n_rans + 3] * n_pens,
        [[(n_rans, 'simplex'), (1, 'unit_interval')]] * n_pens,
        **kwargs,
    )


def make_ran_team(
        n_pens: int,
        n_rans: int,
        **kwargs,
) -> Team:
    """
    Build the RAN team: each actor sees the N connection indicators and
    outputs a bandwidth-fraction simplex over the N PENs.

    Parameters
    ----------
    n_pens : int
        N.
    n_rans : int
        M.
    **kwargs
        Keyword arguments of ``Team``.

    Returns
    -------
    Team
        The team.
    """
    return Team(
        'ran',
        [n_pens] * n_rans,
        [[(n_pens, 'simplex')]] * n_rans,
        **kwargs,
    )
