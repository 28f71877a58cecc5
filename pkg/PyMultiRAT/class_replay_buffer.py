from __future__ import annotations

import numpy as np

from PyMultiRAT import helper_generic as hlp


class Experience_Batch:
    """
    A batch of team-joint transitions (o, a, o', r, d), one per row.

    Attributes
    ----------
    obs : np.ndarray
        Joint observations, (B, obs_width).
    actions : np.ndarray
        Joint actions, (B, action_width).
    next_obs : np.ndarray
        Joint next observations, (B, obs_width).
    rewards : np.ndarray
        Per-agent rewards, (B, n_agents).
    dones : np.ndarray
        Per-agent 0/1 terminal flags, (B, n_agents).
    """

    def __init__(
            self,
            obs: np.ndarray,
            actions: np.ndarray,
            next_obs: np.ndarray,
            rewards: np.ndarray,
            dones: np.ndarray,
    ) -> None:
        self.obs = obs
        self.actions = actions
        self.next_obs = next_obs
        self.rewards = rewards
        self.dones = dones

    def __len__(self) -> int:
        return len(self.obs)


class Replay_Buffer:
    """
    Fixed-capacity ring buffer of team-joint experiences shared by all the
    agents of a team.

    Parameters
    ----------
    capacity : int
        Maximum number of stored experiences.
    obs_width : int
        Width of the joint observation.
    action_width : int
        Width of the joint action.
    n_agents : int
        Number of agents in the team.

    Attributes
    ----------
    capacity : int
        Same as the input parameter.
    size : int
        Number of stored experiences (never exceeds ``capacity``).
    cursor : int
        Index of the next slot to be written.

    Raises
    ------
    ValueError
        When any of the sizes is not a positive integer
    """

    def __init__(
            self,
            capacity: int,
            obs_width: int,
            action_width: int,
            n_agents: int,
    ) -> None:
        for name, value in [
            ('capacity', capacity),
            ('obs_width', obs_width),
            ('action_width', action_width),
            ('n_agents', n_agents),
        ]:
            if not hlp.is_int(value) or value < 1:
                raise ValueError('`%s` must be a positive integer.' % name)

        self.capacity = int(capacity)
        self.obs_width = int(obs_width)
        self.action_width = int(action_width)
        self.n_agents = int(n_agents)
        self._obs = np.zeros((self.capacity, self.obs_width))
        self._actions = np.zeros((self.capacity, self.action_width))
        self._next_obs = np.zeros((self.capacity, self.obs_width))
        self._rewards = np.zeros((self.capacity, self.n_agents))
        self._dones = np.zeros((self.capacity, self.n_agents))
        self.size = 0
        self.cursor = 0

    def __len__(self) -> int:
        return self.size

    def add(
            self,
            obs: np.ndarray,
            actions: np.ndarray,
            next_obs: np.ndarray,
            rewards: np.ndarray,
            dones: np.ndarray,
    ) -> None:
        """
        Store one joint transition, overwriting the oldest one when full.

        Parameters
        ----------
        obs : np.ndarray
            Joint observation.
        actions : np.ndarray
            Joint action.
        next_obs : np.ndarray
            Joint next observation.
        rewards : np.ndarray
            Per-agent rewards.
        dones : np.ndarray
            Per-agent terminal flags.

        Raises
        ------
        ValueError
            When the widths are inconsistent with the buffer
        """
        hlp.assert_array_length(obs, self.obs_width, name='`obs`')
        hlp.assert_array_length(actions, self.action_width, name='`actions`')
        hlp.assert_array_length(next_obs, self.obs_width, name='`next_obs`')
        hlp.assert_array_length(rewards, self.n_agents, name='`rewards`')
        hlp.assert_array_length(dones, self.n_agents, name='`dones`')

        k = self.cursor
        self._obs[k] = obs
        self._actions[k] = actions
        self._next_obs[k] = next_obs
        self._rewards[k] = rewards
        self._dones[k] = dones
        self.cursor = (k + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(
            self,
            batch_size: int,
            rng: np.random.Generator,
    ) -> Experience_Batch:
        """
        Draw a batch uniformly without replacement among the stored slots.

        Parameters
        ----------
        batch_size : int
            Number of experiences.
        rng : np.random.Generator
            Random number generator.

        Returns
        -------
        Experience_Batch
            Copies of the sampled experiences.

        Raises
        ------
        ValueError
            When fewer than ``batch_size`` experiences are stored
        """
        if batch_size < 1 or batch_size > self.size:
            raise ValueError(
                '`batch_size` (%d) must be within [1, %d] (stored experiences).'
                % (batch_size, self.size),
            )

        idx = rng.choice(self.size, size=batch_size, replace=False)
        return Experience_Batch(
            self._obs[idx],
            self._actions[idx],
            self._next_obs[idx],
            self._rewards[idx],
            self._dones[idx],
        )
