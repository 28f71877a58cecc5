from __future__ import annotations

from typing import Any

import numpy as np
import pandas as pd

from PyMultiRAT import helper_generic as hlp
from PyMultiRAT.class_environment import Multi_RAT_Env
from PyMultiRAT.class_exceptions import Training_Error
from PyMultiRAT.class_scenario import Scenario
from PyMultiRAT.class_team import Network_Config, Team, build_teams

logger = hlp.get_logger(__name__)

TRAINING_LOG_COLUMNS = [
    'episode',
    'team',
    'agent',
    'reward',
    'critic_loss',
    'noise_scale',
]


class Train_Config:
    """
    Settings of the training loop.

    Parameters
    ----------
    episodes : int
        Number of training episodes.
    steps_per_episode : int
        Step limit of a training episode.
    batch_size : int
        Number of sampled experiences per update.
    gamma : float
        Discount factor, in [0, 1).
    buffer_capacity : int
        Replay buffer capacity of each team. Must be >= ``batch_size``.
    train_interval : int
        Train every ``train_interval`` steps once a batch is available.
    updates_per_train : int
        Number of updates of every agent per training occasion.
    soft_epsilon : float
        Mixing factor of the target updates, in [0, 1].
    warmup_episodes : int
        Episodes of full-scale exploration noise before the decay.
    noise_initial : float
        Noise scale during the warmup.
    noise_final : float
        Noise scale at the end of the decay (and afterwards).
    noise_decay_episodes : int
        Length of the linear decay after the warmup.
    seed : int
        Master seed of the run.
    log_interval : int
        Episodes between progress lines when ``verbose`` is on.

    Attributes
    ----------
    Same as the input parameters.

    Raises
    ------
    ValueError
        When any setting is out of range
    """

    def __init__(
            self,
            episodes: int = 6000,
            steps_per_episode: int = 200,
            batch_size: int = 128,
            gamma: float = 0.95,
            buffer_capacity: int = 10000,
            train_interval: int = 1,
            updates_per_train: int = 1,
            soft_epsilon: float = 0.01,
            warmup_episodes: int = 500,
            noise_initial: float = 1.0,
            noise_final: float = 0.05,
            noise_decay_episodes: int = 2000,
            seed: int = 0,
            log_interval: int = 100,
    ) -> None:
        for name, value, low in [
            ('episodes', episodes, 1),
            ('steps_per_episode', steps_per_episode, 1),
            ('batch_size', batch_size, 1),
            ('buffer_capacity', buffer_capacity, 1),
            ('train_interval', train_interval, 1),
            ('updates_per_train', updates_per_train, 1),
            ('warmup_episodes', warmup_episodes, 0),
            ('noise_decay_episodes', noise_decay_episodes, 0),
            ('seed', seed, 0),
            ('log_interval', log_interval, 1),
        ]:
            if not hlp.is_int(value) or value < low:
                raise ValueError(
                    '`%s` must be an integer >= %d.' % (name, low)
                )

        if not 0 <= gamma < 1:
            raise ValueError('discount factor must be < 1 (and >= 0).')

        if batch_size > buffer_capacity:
            raise ValueError('`batch_size` must not exceed `buffer_capacity`.')

        if not 0 <= soft_epsilon <= 1:
            raise ValueError('`soft_epsilon` must be within [0, 1].')

        if noise_initial < 0 or noise_final < 0:
            raise ValueError('Noise scales must be non-negative.')

        self.episodes = int(episodes)
        self.steps_per_episode = int(steps_per_episode)
        self.batch_size = int(batch_size)
        self.gamma = float(gamma)
        self.buffer_capacity = int(buffer_capacity)
        self.train_interval = int(train_interval)
        self.updates_per_train = int(updates_per_train)
        self.soft_epsilon = float(soft_epsilon)
        self.warmup_episodes = int(warmup_episodes)
        self.noise_initial = float(noise_initial)
        self.noise_final = float(noise_final)
        self.noise_decay_episodes = int(noise_decay_episodes)
        self.seed = int(seed)
        self.log_interval = int(log_interval)


def noise_scale(episode: int, cfg: Train_Config) -> float:
    """
    Exploration noise scale of an episode: ``noise_initial`` during the
    warmup, then a linear decay to ``noise_final`` over
    ``noise_decay_episodes`` episodes.

    Parameters
    ----------
    episode : int
        0-based episode index.
    cfg : Train_Config
        Training settings.

    Returns
    -------
    float
        The noise scale.
    """
    if episode < cfg.warmup_episodes:
        return cfg.noise_initial

    if cfg.noise_decay_episodes == 0:
        return cfg.noise_final

    progress = min(
        1.0, (episode - cfg.warmup_episodes) / cfg.noise_decay_episodes
    )
    return cfg.noise_initial + progress * (cfg.noise_final - cfg.noise_initial)


def _train_episode(
        env: Multi_RAT_Env,
        env_seed: int,
        pen_team: Team,
        ran_team: Team,
        cfg: Train_Config,
        noise: float,
        noise_rng: np.random.Generator,
        sample_rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray, list[np.ndarray], list[np.ndarray]]:
    _, pen_obs, ran_obs = env.reset(seed=env_seed)
    pen_sum = np.zeros(pen_team.n_agents)
    ran_sum = np.zeros(ran_team.n_agents)
    pen_losses, ran_losses = [], []
    for t in range(cfg.steps_per_episode):
        pen_actions = pen_team.act(pen_obs, noise, noise_rng)
        ran_actions = ran_team.act(ran_obs, noise, noise_rng)
        result = env.step(pen_actions, ran_actions)
        pen_team.buffer.add(
            pen_team.join(pen_obs),
            pen_team.join(pen_actions),
            pen_team.join(result.pen_obs),
            result.pen_rewards,
            result.pen_dones,
        )
        ran_team.buffer.add(
            ran_team.join(ran_obs),
            ran_team.join(ran_actions),
            ran_team.join(result.ran_obs),
            result.ran_rewards,
            np.full(ran_team.n_agents, float(result.done)),
        )
        pen_sum += result.pen_rewards
        ran_sum += result.ran_rewards

        if t % cfg.train_interval == 0:
            for team, losses in [(pen_team, pen_losses), (ran_team, ran_losses)]:
                if len(team.buffer) < cfg.batch_size:
                    continue

                for _ in range(cfg.updates_per_train):
                    batch = team.buffer.sample(cfg.batch_size, sample_rng)
                    losses.append(
                        team.update(batch, cfg.gamma, cfg.soft_epsilon)
                    )

        pen_obs, ran_obs = result.pen_obs, result.ran_obs
        if result.done:
            break

    return pen_sum, ran_sum, pen_losses, ran_losses


def _restore_generators(
        resume_state: dict[str, Any],
        generators: dict[str, np.random.Generator],
        n_episodes: int,
) -> int:
    missing = ({'episode'} | set(generators)) - set(resume_state)
    if missing:
        raise ValueError(
            '`resume_state` lacks the entries %s.' % sorted(missing)
        )

    start = resume_state['episode']
    if not hlp.is_int(start) or not 0 <= start <= n_episodes:
        raise ValueError(
            '`resume_state["episode"]` must be an integer within [0, %d].'
            % n_episodes,
        )

    for name, rng in generators.items():
        rng.bit_generator.state = resume_state[name]

    return int(start)


def train(
        scenario: Scenario,
        cfg: Train_Config,
        network: Network_Config | None = None,
        *,
        teams: tuple[Team, Team] | None = None,
        resume_state: dict[str, Any] | None = None,
        verbose: bool = False,
) -> tuple[Team, Team, pd.DataFrame]:
    """
    Train the PEN and RAN teams jointly. In every step both teams act with
    exploration noise, the environment steps, each team stores its joint
    experience, and once a team's buffer holds a batch every one of its
    agents gets a critic update, an actor update and the soft target update.

    Parameters
    ----------
    scenario : Scenario
        The scenario.
    cfg : Train_Config
        Training settings.
    network : Network_Config | None
        Architecture and optimizer settings. ``None`` means the defaults.
    teams : tuple[Team, Team] | None
        (pen_team, ran_team) to continue training. If ``None``, fresh teams
        are built from ``network`` and ``cfg.seed``.
    resume_state : dict[str, Any] | None
        The ``training_log.attrs["rng_state"]`` of an earlier run (or the
        ``rng_state`` of its checkpoint). Training continues at its
        ``episode`` with the environment, noise and sampling generators
        restored, so the schedule and the random streams pick up where
        that run stopped. Pass the same ``teams`` for an exact
        continuation.
    verbose : bool
        Whether to log progress every ``cfg.log_interval`` episodes.

    Returns
    -------
    pen_team : Team
        The trained PEN team.
    ran_team : Team
        The trained RAN team.
    training_log : pd.DataFrame
        One row per (episode, agent) with the columns episode, team, agent,
        reward (episode total), critic_loss (mean over the episode's updates,
        NaN if none) and noise_scale. ``training_log.attrs["rng_state"]``
        holds the episode count and the final generator states, in the form
        accepted by ``resume_state``.

    Raises
    ------
    ValueError
        When ``resume_state`` is malformed or past ``cfg.episodes``
    Training_Error
        Wrapping any exception raised during an episode
    """
    network = Network_Config() if network is None else network
    env_ss, noise_ss, sample_ss, init_ss = np.random.SeedSequence(
        cfg.seed
    ).spawn(4)
    if teams is None:
        teams = build_teams(
            scenario.n_pens,
            scenario.n_rans,
            network,
            buffer_capacity=cfg.buffer_capacity,
            seed=int(init_ss.generate_state(1)[0]),
            kappa_max=scenario.kappa_max,
        )

    pen_team, ran_team = teams
    env_rng = np.random.default_rng(env_ss)
    noise_rng = np.random.default_rng(noise_ss)
    sample_rng = np.random.default_rng(sample_ss)
    generators = {'env': env_rng, 'noise': noise_rng, 'sample': sample_rng}
    start = 0
    if resume_state is not None:
        start = _restore_generators(resume_state, generators, cfg.episodes)

    env = Multi_RAT_Env(scenario)

    rows = []
    for episode in range(start, cfg.episodes):
        noise = noise_scale(episode, cfg)
        env_seed = int(env_rng.integers(0, 2**32 - 1))
        try:
            pen_sum, ran_sum, pen_losses, ran_losses = _train_episode(
                env,
                env_seed,
                pen_team,
                ran_team,
                cfg,
                noise,
                noise_rng,
                sample_rng,
            )
        except Exception as exc:
            raise Training_Error(episode, exc) from exc

        for team, sums, losses in [
            (pen_team, pen_sum, pen_losses),
            (ran_team, ran_sum, ran_losses),
        ]:
            mean_losses = (
                np.mean(losses, axis=0)
                if losses
                else np.full(team.n_agents, np.nan)
            )
            for i in range(team.n_agents):
                rows.append(
                    (
                        episode,
                        team.name,
                        i,
                        float(sums[i]),
                        float(mean_losses[i]),
                        noise,
                    ),
                )

        if verbose and (episode + 1) % cfg.log_interval == 0:
            logger.info(
                'Episode %d/%d: mean PEN reward %.4f, mean RAN reward %.4f, '
                'noise %.3f',
                episode + 1,
                cfg.episodes,
                float(np.mean(pen_sum)),
                float(np.mean(ran_sum)),
                noise,
            )

    training_log = pd.DataFrame(rows, columns=TRAINING_LOG_COLUMNS)
    training_log.attrs['rng_state'] = {
        'episode': cfg.episodes,
        **{name: rng.bit_generator.state for name, rng in generators.items()},
    }
    return pen_team, ran_team, training_log
